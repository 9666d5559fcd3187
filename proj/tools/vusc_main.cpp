#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "vusc/vusc.h"

#ifndef VUSC_DEFAULT_DATA_DIR
#define VUSC_DEFAULT_DATA_DIR "data"
#endif

namespace {

constexpr int kExitOk = 0;
constexpr int kExitVerification = 1;
constexpr int kExitUsage = 2;
constexpr int kExitIo = 3;

struct Failure {
  int code;
  std::string message;
};

int exit_code(vusc_status status) {
  switch (status) {
    case VUSC_OK: return kExitOk;
    case VUSC_ERR_INVALID_ARGUMENT: return kExitUsage;
    case VUSC_ERR_PARSE:
    case VUSC_ERR_IO: return kExitIo;
    default: return kExitVerification;
  }
}

void check(vusc_status status) {
  if (status != VUSC_OK) throw Failure{exit_code(status), vusc_last_error()};
}

[[noreturn]] void usage(const std::string& message) { throw Failure{kExitUsage, message}; }

template <typename T, void (*Free)(T*)>
struct Deleter {
  void operator()(T* p) const { Free(p); }
};
using Corpus = std::unique_ptr<vusc_corpus, Deleter<vusc_corpus, vusc_corpus_free>>;
using Pairs = std::unique_ptr<vusc_pairs, Deleter<vusc_pairs, vusc_pairs_free>>;
using EmbeddingsPtr = std::unique_ptr<vusc_embeddings, Deleter<vusc_embeddings, vusc_embeddings_free>>;
using Model = std::unique_ptr<vusc_model, Deleter<vusc_model, vusc_model_free>>;
using Config = std::unique_ptr<vusc_train_config, Deleter<vusc_train_config, vusc_train_config_free>>;
using Report = std::unique_ptr<vusc_report, Deleter<vusc_report, vusc_report_free>>;

std::string data_dir() {
  const char* env = std::getenv("VUSC_DATA_DIR");
  return env && *env ? env : VUSC_DEFAULT_DATA_DIR;
}

// Relative input paths are looked up under VUSC_DATA_DIR when it is set.
std::string input_path(const std::string& path) {
  const char* env = std::getenv("VUSC_DATA_DIR");
  if (!env || !*env || path.empty() || std::filesystem::path(path).is_absolute()) return path;
  return (std::filesystem::path(env) / path).string();
}

Corpus load_corpus(const std::string& path) {
  vusc_corpus* c = nullptr;
  check(vusc_corpus_load(input_path(path).c_str(), &c));
  return Corpus(c);
}

EmbeddingsPtr load_embeddings(const std::string& path) {
  if (path.empty()) return nullptr;
  vusc_embeddings* e = nullptr;
  check(vusc_embeddings_load(input_path(path).c_str(), &e));
  return EmbeddingsPtr(e);
}

Pairs load_pairs(const std::string& path) {
  vusc_pairs* p = nullptr;
  check(vusc_pairs_load(input_path(path).c_str(), &p));
  return Pairs(p);
}

struct SplitCorpus {
  Corpus train, dev, test;
};

SplitCorpus split(const vusc_corpus* corpus, std::uint64_t seed) {
  const double ratios[3] = {8.0, 1.0, 1.0};
  vusc_corpus *a = nullptr, *b = nullptr, *c = nullptr;
  check(vusc_corpus_split(corpus, ratios, seed, &a, &b, &c));
  return {Corpus(a), Corpus(b), Corpus(c)};
}

Corpus pick(const std::string& path, const std::string& part, std::uint64_t seed) {
  Corpus all = load_corpus(path);
  if (part == "all") return all;
  SplitCorpus s = split(all.get(), seed);
  if (part == "train") return std::move(s.train);
  if (part == "dev") return std::move(s.dev);
  return std::move(s.test);
}

std::string fixed(double v, int digits = 4) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string exact(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Failure{kExitIo, "cannot write " + path};
  out << text;
  if (!out) throw Failure{kExitIo, "cannot write " + path};
}

void on_warning(const char* message, void*) { std::cerr << "warning: " << message << '\n'; }

struct ExtractArgs {
  std::string corpus, out, mode = "rules", aspects, embeddings, rules = "all", lexicon;
  std::size_t threads = 1;
};

int run_extract(const ExtractArgs& a) {
  if (a.mode != "rules" && a.mode != "window") usage("--mode must be rules or window");
  if (a.mode == "rules" && a.aspects.empty()) usage("--aspects is required in rules mode");
  if (a.mode == "window" && a.lexicon.empty()) usage("--lexicon is required in window mode");
  Corpus corpus = load_corpus(a.corpus);
  vusc_pairs* raw = nullptr;
  if (a.mode == "rules") {
    EmbeddingsPtr emb = load_embeddings(a.embeddings);
    check(vusc_extract_rules(corpus.get(), input_path(a.aspects).c_str(), emb.get(), a.rules.c_str(), a.threads, &raw));
  } else {
    check(vusc_extract_window(corpus.get(), input_path(a.lexicon).c_str(), a.threads, &raw));
  }
  Pairs pairs(raw);
  check(vusc_pairs_save(pairs.get(), a.out.c_str()));
  const std::vector<std::string> rules =
      a.mode == "rules" ? std::vector<std::string>{"R1", "R2", "R3", "R4", "R5"} : std::vector<std::string>{"WINDOW"};
  for (const auto& r : rules) std::cout << r << '\t' << vusc_pairs_rule_count(pairs.get(), r.c_str()) << '\n';
  std::cout << "total\t" << vusc_pairs_size(pairs.get()) << '\n';
  if (a.mode == "rules") std::cout << "unassigned\t" << vusc_pairs_unassigned(pairs.get()) << '\n';
  return kExitOk;
}

struct TrainArgs {
  std::string corpus, dev, pairs, embeddings, config, out, history, profile = "reviews", stopwords;
  bool split = false;
  std::uint64_t split_seed = 42;
  std::vector<std::string> settings;
  std::optional<std::string> objective, estimator, prior;
  std::optional<double> alpha, beta, gamma;
  std::optional<std::size_t> negatives, epochs, batch_size, samples;
  std::optional<std::uint64_t> seed;
};

int run_train(const TrainArgs& a) {
  vusc_train_config* raw_config = nullptr;
  check(vusc_train_config_new(&raw_config));
  Config config(raw_config);
  auto set = [&](const std::string& key, const std::string& value) {
    check(vusc_train_config_set(config.get(), key.c_str(), value.c_str()));
  };
  if (!a.config.empty()) check(vusc_train_config_load(config.get(), input_path(a.config).c_str()));
  for (const auto& s : a.settings) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) usage("--set expects key=value, got '" + s + "'");
    set(s.substr(0, eq), s.substr(eq + 1));
  }
  if (a.profile == "clinical" && a.stopwords.empty())
    set("stopwords", (std::filesystem::path(data_dir()) / "stopwords_clinical.txt").string());
  else if (a.profile != "clinical" && a.profile != "reviews")
    usage("--profile must be reviews or clinical");
  if (!a.stopwords.empty()) set("stopwords", input_path(a.stopwords));
  if (a.objective) set("objective", *a.objective);
  if (a.estimator) set("estimator", *a.estimator);
  if (a.prior) set("prior", *a.prior);
  if (a.alpha) set("alpha", exact(*a.alpha));
  if (a.beta) set("beta", exact(*a.beta));
  if (a.gamma) set("gamma", exact(*a.gamma));
  if (a.negatives) set("negatives", std::to_string(*a.negatives));
  if (a.epochs) set("epochs", std::to_string(*a.epochs));
  if (a.batch_size) set("batch_size", std::to_string(*a.batch_size));
  if (a.samples) set("samples", std::to_string(*a.samples));
  if (a.seed) set("seed", std::to_string(*a.seed));

  Corpus corpus = load_corpus(a.corpus);
  Corpus dev;
  SplitCorpus parts;
  const vusc_corpus* train_part = corpus.get();
  const vusc_corpus* dev_part = nullptr;
  if (a.split) {
    if (!a.dev.empty()) usage("--dev cannot be combined with --split");
    parts = split(corpus.get(), a.split_seed);
    train_part = parts.train.get();
    dev_part = parts.dev.get();
  } else if (!a.dev.empty()) {
    dev = load_corpus(a.dev);
    dev_part = dev.get();
  }
  Pairs pairs = load_pairs(a.pairs);
  EmbeddingsPtr emb = load_embeddings(a.embeddings);

  vusc_model* raw_model = nullptr;
  check(vusc_train(train_part, dev_part, pairs.get(), emb.get(), config.get(), &raw_model));
  Model model(raw_model);
  check(vusc_model_save(model.get(), a.out.c_str()));
  const std::string history = a.history.empty() ? a.out + ".history.tsv" : a.history;
  check(vusc_model_history_save(model.get(), history.c_str()));

  for (std::size_t i = 0; i < vusc_model_history_size(model.get()); ++i) {
    vusc_history_entry h;
    check(vusc_model_history_entry(model.get(), i, &h));
    std::cout << "epoch " << h.epoch << "  objective " << fixed(h.objective) << "  reg " << fixed(h.regularizer)
              << "  dev_acc " << fixed(h.dev_accuracy) << '\n';
  }
  std::cout << "wrote " << a.out << " and " << history << '\n';
  return kExitOk;
}

struct EvalArgs {
  std::string model, corpus, part = "all", train_corpus, baseline, pairs, lexicon, out;
  std::uint64_t split_seed = 42;
  std::uint64_t seed = 42;
  std::size_t trials = 5, threads = 1;
};

int run_eval(const EvalArgs& a) {
  Corpus eval = pick(a.corpus, a.part, a.split_seed);
  vusc_report* raw = nullptr;
  std::string method = "vusc";
  if (a.baseline.empty()) {
    if (a.model.empty()) usage("--model is required unless --baseline is given");
    vusc_model* m = nullptr;
    check(vusc_model_load(a.model.c_str(), &m));
    Model model(m);
    check(vusc_evaluate(model.get(), eval.get(), a.threads, &raw));
  } else if (a.baseline == "majority") {
    method = "majority";
    Corpus train;
    if (!a.train_corpus.empty()) {
      train = load_corpus(a.train_corpus);
    } else if (a.part != "all") {
      train = pick(a.corpus, "train", a.split_seed);
    } else {
      usage("--baseline majority needs --train-corpus or a --split part");
    }
    check(vusc_baseline_majority(train.get(), eval.get(), &raw));
  } else if (a.baseline == "lexicon-r" || a.baseline == "lexicon-o") {
    method = a.baseline;
    if (a.pairs.empty() || a.lexicon.empty()) usage("--baseline " + a.baseline + " needs --pairs and --lexicon");
    Pairs pairs = load_pairs(a.pairs);
    const auto mode = a.baseline == "lexicon-o" ? VUSC_LEXICON_OVERALL : VUSC_LEXICON_RANDOM;
    check(vusc_baseline_lexicon(eval.get(), pairs.get(), input_path(a.lexicon).c_str(), mode, a.trials, a.seed, &raw));
  } else {
    usage("--baseline must be majority, lexicon-r or lexicon-o");
  }
  Report report(raw);
  const char* lines = vusc_report_jsonl(report.get(), method.c_str(), a.part.c_str());
  std::cout << lines;
  if (!a.out.empty()) write_text(a.out, lines);
  return kExitOk;
}

struct GenerateArgs {
  vusc_synth_config config{};
  std::string out;
};

int run_generate(const GenerateArgs& a) {
  check(vusc_synth_write(&a.config, a.out.c_str()));
  double bayes = 0.0;
  check(vusc_synth_bayes_accuracy(&a.config, &bayes));
  std::cout << "wrote " << a.config.num_docs << " documents to " << a.out << '\n';
  std::cout << "bayes_accuracy\t" << fixed(bayes, 6) << '\n';
  return kExitOk;
}

struct CheckArgs {
  std::uint64_t seed = 42;
  std::string fault, only;
};

void print_check(const vusc_check_result* r, void*) {
  std::cout << (r->passed ? "PASS " : "FAIL ") << r->name << " (" << fixed(r->seconds, 2) << " s): " << r->detail
            << std::endl;
}

int run_check(const CheckArgs& a) {
  std::size_t failed = 0;
  const vusc_status status = vusc_run_checks(a.seed, a.fault.empty() ? nullptr : a.fault.c_str(),
                                             a.only.empty() ? nullptr : a.only.c_str(), print_check, nullptr, &failed);
  if (status == VUSC_ERR_VERIFICATION) {
    std::cout << failed << " check(s) failed\n";
    return kExitVerification;
  }
  check(status);
  std::cout << "all checks passed\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Unsupervised sentiment classification from target-opinion word pairs"};
  app.require_subcommand(1);
  app.set_version_flag("--version", vusc_version());

  ExtractArgs ex;
  auto* extract = app.add_subcommand("extract", "Extract target-opinion pairs from a corpus");
  extract->add_option("--corpus", ex.corpus, "CoNLL-U or JSON-lines corpus")->required();
  extract->add_option("--out", ex.out, "Pair file to write")->required();
  extract->add_option("--mode", ex.mode, "rules (dependency rules) or window (clinical lexicon)")
      ->check(CLI::IsMember({"rules", "window"}));
  extract->add_option("--aspects", ex.aspects, "Aspect config (rules mode)");
  extract->add_option("--embeddings", ex.embeddings, "word2vec text embeddings for aspect assignment");
  extract->add_option("--rules", ex.rules, "Rule subset, e.g. R1,R2,R5, or all");
  extract->add_option("--lexicon", ex.lexicon, "Target/opinion lexicon config (window mode)");
  extract->add_option("--threads", ex.threads)->check(CLI::PositiveNumber);

  TrainArgs tr;
  auto* train = app.add_subcommand("train", "Train the sentiment classifiers");
  train->add_option("--corpus", tr.corpus, "Training corpus")->required();
  train->add_option("--pairs", tr.pairs, "Pair file")->required();
  train->add_option("--out", tr.out, "Checkpoint to write")->required();
  train->add_option("--history", tr.history, "History file (default: <out>.history.tsv)");
  train->add_option("--dev", tr.dev, "Dev corpus with gold labels");
  train->add_flag("--split", tr.split, "Split --corpus 8:1:1 and train on the first part, using the second as dev");
  train->add_option("--split-seed", tr.split_seed);
  train->add_option("--embeddings", tr.embeddings, "word2vec text embeddings");
  train->add_option("--config", tr.config, "Training config file");
  train->add_option("--set", tr.settings, "Override a setting, key=value (repeatable)");
  train->add_option("--profile", tr.profile, "reviews or clinical (clinical drops the shipped stopwords)");
  train->add_option("--stopwords", tr.stopwords, "Stopword list left out of the document features");
  train->add_option("--objective", tr.objective, "l1, l2 or l3");
  train->add_option("--estimator", tr.estimator, "exact or lr");
  train->add_option("--samples", tr.samples, "Samples per pair for the lr estimator");
  train->add_option("--prior", tr.prior, "uniform or learned");
  train->add_option("--alpha", tr.alpha, "Entropy weight");
  train->add_option("--beta", tr.beta, "Regularizer weight");
  train->add_option("--gamma", tr.gamma, "Similarity threshold");
  train->add_option("--negatives", tr.negatives, "Negative samples per pair");
  train->add_option("--epochs", tr.epochs);
  train->add_option("--batch-size", tr.batch_size);
  train->add_option("--seed", tr.seed, "Random seed (default 42)");

  EvalArgs ev;
  auto* eval = app.add_subcommand("eval", "Score a checkpoint or a baseline against gold labels");
  eval->add_option("--corpus", ev.corpus, "Gold-labelled corpus")->required();
  eval->add_option("--model", ev.model, "Checkpoint");
  eval->add_option("--split", ev.part, "all, or the train/dev/test part of an 8:1:1 split")
      ->check(CLI::IsMember({"all", "train", "dev", "test"}));
  eval->add_option("--split-seed", ev.split_seed);
  eval->add_option("--baseline", ev.baseline, "majority, lexicon-r or lexicon-o");
  eval->add_option("--train-corpus", ev.train_corpus, "Training corpus for the majority baseline");
  eval->add_option("--pairs", ev.pairs, "Pair file for the lexicon baselines");
  eval->add_option("--lexicon", ev.lexicon, "Opinion lexicon for the lexicon baselines");
  eval->add_option("--trials", ev.trials)->check(CLI::PositiveNumber);
  eval->add_option("--seed", ev.seed);
  eval->add_option("--threads", ev.threads)->check(CLI::PositiveNumber);
  eval->add_option("--out", ev.out, "Write the JSON-lines report here as well");

  GenerateArgs gen;
  vusc_synth_config_default(&gen.config);
  auto* generate = app.add_subcommand("generate", "Write a synthetic corpus with known polarities");
  generate->add_option("--out", gen.out, "Output directory")->required();
  generate->add_option("--docs", gen.config.num_docs);
  generate->add_option("--aspects", gen.config.num_aspects);
  generate->add_option("--classes", gen.config.num_classes);
  generate->add_option("--targets", gen.config.targets_per_aspect, "Target words per aspect");
  generate->add_option("--opinions", gen.config.opinions_per_class, "Opinion words per class and aspect");
  generate->add_option("--filler", gen.config.filler_vocab_size, "Filler vocabulary size");
  generate->add_option("--doc-length", gen.config.doc_length);
  generate->add_option("--pair-rate", gen.config.pair_rate);
  generate->add_option("--separation", gen.config.class_separation);
  generate->add_option("--noise-dims", gen.config.noise_dims);
  generate->add_option("--embedding-noise", gen.config.embedding_noise);
  generate->add_option("--seed", gen.config.seed);

  CheckArgs ck;
  auto* checks = app.add_subcommand("check", "Run the built-in verification suite");
  checks->add_option("--seed", ck.seed);
  checks->add_option("--inject-fault", ck.fault, "entropy-sign");
  checks->add_option("--only", ck.only, "Run checks whose name starts with this prefix");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  vusc_set_warning_callback(on_warning, nullptr);
  try {
    if (*extract) return run_extract(ex);
    if (*train) return run_train(tr);
    if (*eval) return run_eval(ev);
    if (*generate) return run_generate(gen);
    return run_check(ck);
  } catch (const Failure& f) {
    std::cerr << "error: " << f.message << '\n';
    return f.code;
  }
}
