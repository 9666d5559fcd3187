#include "vusc/vusc.h"

#include <algorithm>
#include <cmath>
#include <exception>
#include <memory>
#include <new>
#include <set>
#include <string>
#include <vector>

#include "core/checkpoint.hpp"
#include "core/checks.hpp"
#include "core/corpus.hpp"
#include "core/error.hpp"
#include "core/evaluation.hpp"
#include "core/extraction.hpp"
#include "core/log.hpp"
#include "core/synth.hpp"
#include "core/training.hpp"

struct vusc_corpus {
  std::vector<vusc::Document> docs;
};

struct vusc_embeddings {
  vusc::Embeddings value;
};

struct vusc_pairs {
  vusc::PairSet set;
  std::size_t unassigned = 0;
};

struct vusc_train_config {
  vusc::TrainConfig value;
};

struct vusc_model {
  vusc::TrainedModel value;
  std::vector<vusc::HistoryEntry> history;
};

struct vusc_report {
  std::vector<vusc::AspectScore> scores;
  double mean = 0.0;
  std::string jsonl;
};

namespace {

thread_local std::string last_error;

vusc_status status_of(vusc::ErrorKind kind) {
  switch (kind) {
    case vusc::ErrorKind::InvalidArgument: return VUSC_ERR_INVALID_ARGUMENT;
    case vusc::ErrorKind::Parse: return VUSC_ERR_PARSE;
    case vusc::ErrorKind::Io: return VUSC_ERR_IO;
    case vusc::ErrorKind::Numeric: return VUSC_ERR_NUMERIC;
    case vusc::ErrorKind::Verification: return VUSC_ERR_VERIFICATION;
  }
  return VUSC_ERR_INTERNAL;
}

template <typename F>
vusc_status guarded(F&& body) {
  try {
    last_error.clear();
    body();
    return VUSC_OK;
  } catch (const vusc::Error& e) {
    last_error = e.what();
    return status_of(e.kind());
  } catch (const std::bad_alloc&) {
    last_error = "out of memory";
    return VUSC_ERR_INTERNAL;
  } catch (const std::exception& e) {
    last_error = e.what();
    return VUSC_ERR_INTERNAL;
  }
}

void require(bool condition, const char* what) {
  if (!condition) vusc::fail(vusc::ErrorKind::InvalidArgument, std::string(what) + " must not be NULL");
}

std::vector<std::string> gold_aspects(const std::vector<vusc::Document>& docs) {
  std::set<std::string> names;
  for (const auto& d : docs)
    for (const auto& [aspect, label] : d.gold_labels) names.insert(aspect);
  if (names.empty()) vusc::fail(vusc::ErrorKind::InvalidArgument, "corpus carries no gold labels");
  return {names.begin(), names.end()};
}

double mean_of(const std::vector<vusc::AspectScore>& scores) {
  double total = 0.0;
  for (const auto& s : scores) total += s.mean;
  return scores.empty() ? 0.0 : total / static_cast<double>(scores.size());
}

vusc::SynthConfig to_core(const vusc_synth_config& c) {
  vusc::SynthConfig s;
  s.num_docs = c.num_docs;
  s.num_aspects = c.num_aspects;
  s.num_classes = c.num_classes;
  s.targets_per_aspect = c.targets_per_aspect;
  s.opinions_per_class = c.opinions_per_class;
  s.filler_vocab_size = c.filler_vocab_size;
  s.doc_length = c.doc_length;
  s.pair_rate = c.pair_rate;
  s.class_separation = c.class_separation;
  s.noise_dims = c.noise_dims;
  s.embedding_noise = c.embedding_noise;
  s.seed = c.seed;
  return s;
}

struct WarningSink {
  vusc_warning_callback callback = nullptr;
  void* user = nullptr;
};

}  // namespace

extern "C" {

const char* vusc_last_error(void) { return last_error.c_str(); }

const char* vusc_version(void) { return "1.0.0"; }

void vusc_set_warning_callback(vusc_warning_callback callback, void* user) {
  if (!callback) {
    vusc::set_warning_handler({});
    return;
  }
  WarningSink sink{callback, user};
  vusc::set_warning_handler([sink](const std::string& message) { sink.callback(message.c_str(), sink.user); });
}

vusc_status vusc_corpus_load(const char* path, vusc_corpus** out) {
  return guarded([&] {
    require(path && out, "path and out");
    auto corpus = std::make_unique<vusc_corpus>();
    corpus->docs = vusc::load_corpus(path);
    *out = corpus.release();
  });
}

void vusc_corpus_free(vusc_corpus* corpus) { delete corpus; }

size_t vusc_corpus_size(const vusc_corpus* corpus) { return corpus ? corpus->docs.size() : 0; }

vusc_status vusc_corpus_save_jsonl(const vusc_corpus* corpus, const char* path) {
  return guarded([&] {
    require(corpus && path, "corpus and path");
    vusc::save_jsonl(path, corpus->docs);
  });
}

vusc_status vusc_corpus_split(const vusc_corpus* corpus, const double ratios[3], uint64_t seed, vusc_corpus** train,
                              vusc_corpus** dev, vusc_corpus** test) {
  return guarded([&] {
    require(corpus && ratios && train && dev && test, "corpus, ratios and outputs");
    const auto split = vusc::split_corpus(corpus->docs.size(), {ratios[0], ratios[1], ratios[2]}, seed);
    auto a = std::make_unique<vusc_corpus>(), b = std::make_unique<vusc_corpus>(), c = std::make_unique<vusc_corpus>();
    a->docs = vusc::select(corpus->docs, split.train);
    b->docs = vusc::select(corpus->docs, split.dev);
    c->docs = vusc::select(corpus->docs, split.test);
    *train = a.release();
    *dev = b.release();
    *test = c.release();
  });
}

vusc_status vusc_embeddings_load(const char* path, vusc_embeddings** out) {
  return guarded([&] {
    require(path && out, "path and out");
    auto e = std::make_unique<vusc_embeddings>();
    e->value = vusc::load_embeddings(path);
    *out = e.release();
  });
}

void vusc_embeddings_free(vusc_embeddings* embeddings) { delete embeddings; }

size_t vusc_embeddings_size(const vusc_embeddings* embeddings) {
  return embeddings ? embeddings->value.vocab.size() : 0;
}

size_t vusc_embeddings_dim(const vusc_embeddings* embeddings) {
  return embeddings ? embeddings->value.table.dim() : 0;
}

vusc_status vusc_extract_rules(const vusc_corpus* corpus, const char* aspect_config_path,
                               const vusc_embeddings* embeddings, const char* rules, size_t threads,
                               vusc_pairs** out) {
  return guarded([&] {
    require(corpus && aspect_config_path && out, "corpus, aspect config and out");
    const vusc::Embeddings* emb = embeddings ? &embeddings->value : nullptr;
    const auto resolved = vusc::resolve_aspects(vusc::load_aspect_config(aspect_config_path), emb);
    vusc::ExtractionOptions options;
    options.rules = vusc::RuleSet::parse(rules ? rules : "all");
    options.threads = std::max<size_t>(1, threads);
    auto report = vusc::extract_all(corpus->docs, resolved, emb, options);
    auto p = std::make_unique<vusc_pairs>();
    p->set = std::move(report.pairs);
    p->unassigned = report.unassigned;
    *out = p.release();
  });
}

vusc_status vusc_extract_window(const vusc_corpus* corpus, const char* lexicon_config_path, size_t threads,
                                vusc_pairs** out) {
  return guarded([&] {
    require(corpus && lexicon_config_path && out, "corpus, lexicon config and out");
    auto report = vusc::extract_window_all(corpus->docs, vusc::load_lexicon_config(lexicon_config_path),
                                           std::max<size_t>(1, threads));
    auto p = std::make_unique<vusc_pairs>();
    p->set = std::move(report.pairs);
    *out = p.release();
  });
}

vusc_status vusc_pairs_load(const char* path, vusc_pairs** out) {
  return guarded([&] {
    require(path && out, "path and out");
    auto p = std::make_unique<vusc_pairs>();
    p->set = vusc::read_pair_file(path);
    *out = p.release();
  });
}

vusc_status vusc_pairs_save(const vusc_pairs* pairs, const char* path) {
  return guarded([&] {
    require(pairs && path, "pairs and path");
    vusc::write_pair_file(path, pairs->set);
  });
}

void vusc_pairs_free(vusc_pairs* pairs) { delete pairs; }

size_t vusc_pairs_size(const vusc_pairs* pairs) { return pairs ? pairs->set.pairs.size() : 0; }

size_t vusc_pairs_aspect_count(const vusc_pairs* pairs) { return pairs ? pairs->set.aspects.size() : 0; }

const char* vusc_pairs_aspect_name(const vusc_pairs* pairs, size_t index) {
  if (!pairs || index >= pairs->set.aspects.size()) return nullptr;
  return pairs->set.aspects[index].c_str();
}

size_t vusc_pairs_rule_count(const vusc_pairs* pairs, const char* rule) {
  if (!pairs || !rule) return 0;
  const auto r = vusc::parse_rule(rule);
  if (!r) return 0;
  return static_cast<size_t>(std::count_if(pairs->set.pairs.begin(), pairs->set.pairs.end(),
                                           [&](const vusc::WordPair& p) { return p.rule == *r; }));
}

size_t vusc_pairs_unassigned(const vusc_pairs* pairs) { return pairs ? pairs->unassigned : 0; }

vusc_status vusc_train_config_new(vusc_train_config** out) {
  return guarded([&] {
    require(out, "out");
    *out = new vusc_train_config();
  });
}

void vusc_train_config_free(vusc_train_config* config) { delete config; }

vusc_status vusc_train_config_set(vusc_train_config* config, const char* key, const char* value) {
  return guarded([&] {
    require(config && key && value, "config, key and value");
    vusc::apply_setting(config->value, key, value);
  });
}

vusc_status vusc_train_config_load(vusc_train_config* config, const char* path) {
  return guarded([&] {
    require(config && path, "config and path");
    config->value = vusc::load_train_config(path, config->value);
  });
}

double vusc_train_config_alpha(const vusc_train_config* config) {
  return config ? config->value.effective_alpha() : NAN;
}

vusc_status vusc_train(const vusc_corpus* train, const vusc_corpus* dev, const vusc_pairs* pairs,
                       const vusc_embeddings* embeddings, const vusc_train_config* config, vusc_model** out) {
  return guarded([&] {
    require(train && pairs && config && out, "train corpus, pairs, config and out");
    const std::vector<vusc::Document> none;
    auto result = vusc::train(train->docs, dev ? dev->docs : none, pairs->set, embeddings ? &embeddings->value : nullptr,
                              config->value);
    auto m = std::make_unique<vusc_model>();
    m->value = std::move(result.model);
    m->history = std::move(result.history);
    *out = m.release();
  });
}

vusc_status vusc_model_save(const vusc_model* model, const char* path) {
  return guarded([&] {
    require(model && path, "model and path");
    vusc::save_checkpoint(path, model->value);
  });
}

vusc_status vusc_model_load(const char* path, vusc_model** out) {
  return guarded([&] {
    require(path && out, "path and out");
    auto m = std::make_unique<vusc_model>();
    m->value = vusc::load_checkpoint(path);
    *out = m.release();
  });
}

void vusc_model_free(vusc_model* model) { delete model; }

size_t vusc_model_aspect_count(const vusc_model* model) { return model ? model->value.aspects.size() : 0; }

const char* vusc_model_aspect_name(const vusc_model* model, size_t index) {
  if (!model || index >= model->value.aspects.size()) return nullptr;
  return model->value.aspects[index].aspect.c_str();
}

size_t vusc_model_history_size(const vusc_model* model) { return model ? model->history.size() : 0; }

vusc_status vusc_model_history_entry(const vusc_model* model, size_t index, vusc_history_entry* out) {
  return guarded([&] {
    require(model && out, "model and out");
    if (index >= model->history.size()) vusc::fail(vusc::ErrorKind::InvalidArgument, "history index out of range");
    const auto& h = model->history[index];
    *out = vusc_history_entry{h.epoch, h.objective, h.regularizer, h.dev_accuracy};
  });
}

vusc_status vusc_model_history_save(const vusc_model* model, const char* path) {
  return guarded([&] {
    require(model && path, "model and path");
    vusc::write_history(path, model->history);
  });
}

vusc_status vusc_model_predict(const vusc_model* model, const char* aspect, const vusc_corpus* corpus,
                               size_t doc_index, size_t* cluster) {
  return guarded([&] {
    require(model && aspect && corpus && cluster, "model, aspect, corpus and cluster");
    const auto* a = model->value.find(aspect);
    if (!a) vusc::fail(vusc::ErrorKind::InvalidArgument, std::string("model has no aspect '") + aspect + "'");
    if (doc_index >= corpus->docs.size()) vusc::fail(vusc::ErrorKind::InvalidArgument, "document index out of range");
    *cluster = vusc::predict(*a, model->value.features, corpus->docs[doc_index]);
  });
}

vusc_status vusc_evaluate(const vusc_model* model, const vusc_corpus* corpus, size_t threads, vusc_report** out) {
  return guarded([&] {
    require(model && corpus && out, "model, corpus and out");
    auto report = vusc::evaluate_model(model->value, corpus->docs, std::max<size_t>(1, threads));
    auto r = std::make_unique<vusc_report>();
    r->scores = std::move(report.aspects);
    r->mean = report.mean;
    *out = r.release();
  });
}

vusc_status vusc_baseline_majority(const vusc_corpus* train, const vusc_corpus* eval, vusc_report** out) {
  return guarded([&] {
    require(train && eval && out, "train, eval and out");
    auto r = std::make_unique<vusc_report>();
    for (const auto& aspect : gold_aspects(eval->docs))
      r->scores.push_back({aspect, vusc::majority_baseline(train->docs, eval->docs, aspect), 0.0});
    r->mean = mean_of(r->scores);
    *out = r.release();
  });
}

vusc_status vusc_baseline_lexicon(const vusc_corpus* corpus, const vusc_pairs* pairs, const char* lexicon_path,
                                  vusc_lexicon_mode mode, size_t trials, uint64_t seed, vusc_report** out) {
  return guarded([&] {
    require(corpus && pairs && lexicon_path && out, "corpus, pairs, lexicon and out");
    const auto lexicon = vusc::load_opinion_lexicon(lexicon_path);
    vusc::LexiconOptions options;
    options.tie_break = mode == VUSC_LEXICON_OVERALL ? vusc::TieBreak::Overall : vusc::TieBreak::Random;
    options.trials = trials;
    options.seed = seed;
    auto r = std::make_unique<vusc_report>();
    for (const auto& aspect : gold_aspects(corpus->docs)) {
      const auto result = vusc::lexicon_baseline(corpus->docs, pairs->set, aspect, lexicon, options);
      r->scores.push_back({aspect, result.mean, result.stddev});
    }
    r->mean = mean_of(r->scores);
    *out = r.release();
  });
}

void vusc_report_free(vusc_report* report) { delete report; }

size_t vusc_report_size(const vusc_report* report) { return report ? report->scores.size() : 0; }

vusc_status vusc_report_entry(const vusc_report* report, size_t index, vusc_score* out) {
  return guarded([&] {
    require(report && out, "report and out");
    if (index >= report->scores.size()) vusc::fail(vusc::ErrorKind::InvalidArgument, "report index out of range");
    const auto& s = report->scores[index];
    *out = vusc_score{s.aspect.c_str(), s.mean, s.stddev};
  });
}

double vusc_report_mean(const vusc_report* report) { return report ? report->mean : NAN; }

const char* vusc_report_jsonl(vusc_report* report, const char* method, const char* split) {
  if (!report || !method || !split) return nullptr;
  report->jsonl.clear();
  double spread = 0.0;
  for (const auto& s : report->scores) {
    report->jsonl += vusc::format_report_line(s.aspect, method, split, s.mean, s.stddev) + "\n";
    spread += s.stddev;
  }
  const double mean_std = report->scores.empty() ? 0.0 : spread / static_cast<double>(report->scores.size());
  report->jsonl += vusc::format_report_line("mean", method, split, report->mean, mean_std) + "\n";
  return report->jsonl.c_str();
}

void vusc_synth_config_default(vusc_synth_config* config) {
  if (!config) return;
  const vusc::SynthConfig s;
  *config = vusc_synth_config{s.num_docs,     s.num_aspects, s.num_classes,      s.targets_per_aspect,
                              s.opinions_per_class, s.filler_vocab_size, s.doc_length, s.pair_rate,
                              s.class_separation,   s.noise_dims,        s.embedding_noise, s.seed};
}

vusc_status vusc_synth_write(const vusc_synth_config* config, const char* directory) {
  return guarded([&] {
    require(config && directory, "config and directory");
    vusc::write_synth(directory, vusc::generate(to_core(*config)));
  });
}

vusc_status vusc_synth_generate(const vusc_synth_config* config, vusc_corpus** corpus, vusc_pairs** pairs,
                                vusc_embeddings** embeddings) {
  return guarded([&] {
    require(config, "config");
    auto generated = vusc::generate(to_core(*config));
    std::unique_ptr<vusc_corpus> c;
    std::unique_ptr<vusc_pairs> p;
    std::unique_ptr<vusc_embeddings> e;
    if (corpus) {
      c = std::make_unique<vusc_corpus>();
      c->docs = std::move(generated.docs);
    }
    if (pairs) {
      p = std::make_unique<vusc_pairs>();
      p->set = std::move(generated.pairs);
    }
    if (embeddings) {
      e = std::make_unique<vusc_embeddings>();
      e->value = std::move(generated.embeddings);
    }
    if (corpus) *corpus = c.release();
    if (pairs) *pairs = p.release();
    if (embeddings) *embeddings = e.release();
  });
}

vusc_status vusc_synth_bayes_accuracy(const vusc_synth_config* config, double* out) {
  return guarded([&] {
    require(config && out, "config and out");
    *out = vusc::bayes_accuracy(to_core(*config));
  });
}

vusc_status vusc_run_checks(uint64_t seed, const char* fault, const char* only, vusc_check_callback callback,
                            void* user, size_t* failed) {
  size_t failures = 0;
  const vusc_status status = guarded([&] {
    vusc::CheckOptions options;
    options.seed = seed;
    options.fault = vusc::parse_fault(fault ? fault : "");
    options.only = only ? only : "";
    vusc::run_checks(options, [&](const vusc::CheckResult& r) {
      if (!r.passed) ++failures;
      if (callback) {
        const vusc_check_result c{r.name.c_str(), r.passed ? 1 : 0, r.detail.c_str(), r.seconds};
        callback(&c, user);
      }
    });
  });
  if (failed) *failed = failures;
  if (status != VUSC_OK) return status;
  if (failures > 0) {
    last_error = std::to_string(failures) + " check(s) failed";
    return VUSC_ERR_VERIFICATION;
  }
  return VUSC_OK;
}

}  // extern "C"
