#include "core/training.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <unordered_map>

#include "core/config_file.hpp"
#include "core/error.hpp"
#include "core/evaluation.hpp"
#include "core/log.hpp"

namespace vusc {

namespace {

double parse_double(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    double v = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    fail(ErrorKind::InvalidArgument, "setting '" + key + "' expects a number, got '" + value + "'");
  }
}

std::size_t parse_count(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    long long v = std::stoll(value, &used);
    if (used != value.size() || v < 0) throw std::invalid_argument(value);
    return static_cast<std::size_t>(v);
  } catch (const std::exception&) {
    fail(ErrorKind::InvalidArgument, "setting '" + key + "' expects a nonnegative integer, got '" + value + "'");
  }
}

// Vocabulary in descending frequency, ties lexicographic.
Vocab ranked_vocab(const std::map<std::string, std::size_t>& counts) {
  std::vector<std::pair<std::string, std::size_t>> items(counts.begin(), counts.end());
  std::stable_sort(items.begin(), items.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  Vocab v;
  for (const auto& [w, c] : items) v.add(w, c);
  return v;
}

struct TrainDoc {
  std::size_t doc_index;
  std::vector<PairSample> pairs;
  PairSampler sampler;
};

struct AspectState {
  std::vector<TrainDoc> docs;
  std::optional<NegativeSampler> negatives;
};

void require_finite(const ObjectiveValue& v, const std::string& aspect, std::size_t epoch) {
  const std::pair<const char*, double> terms[] = {{"likelihood", v.likelihood}, {"prior", v.prior},
                                                   {"entropy", v.entropy},       {"regularizer", v.regularizer},
                                                   {"weight_decay", v.decay}};
  for (const auto& [name, value] : terms)
    if (!std::isfinite(value))
      fail(ErrorKind::Numeric, "non-finite objective term '" + std::string(name) + "' for aspect '" + aspect +
                                   "' in epoch " + std::to_string(epoch));
}

}  // namespace

double TrainConfig::effective_alpha() const {
  if (alpha) return *alpha;
  return objective == Objective::NegativeSamplingL3 ? 0.1 : 1.0;
}

void TrainConfig::validate() const {
  auto bad = [](const std::string& msg) { fail(ErrorKind::InvalidArgument, msg); };
  if (effective_alpha() < 0.0) bad("alpha must be >= 0");
  if (beta < 0.0) bad("beta must be >= 0");
  if (gamma < 0.0 || gamma > 1.0) bad("gamma must lie in [0, 1]");
  if (negatives < 1) bad("negatives must be >= 1");
  if (estimator_samples < 1) bad("estimator samples K must be >= 1");
  if (pairs_per_doc < 1) bad("pairs_per_doc must be >= 1");
  if (batch_size < 1) bad("batch_size must be >= 1");
  if (weight_decay < 0.0) bad("weight_decay must be >= 0");
  if (dropout < 0.0 || dropout >= 1.0) bad("dropout must lie in [0, 1)");
  if (num_classes < 2) bad("num_classes must be >= 2");
  if (min_count < 1) bad("min_count must be >= 1");
  if (embedding_dim < 1) bad("embedding_dim must be >= 1");
  if (!(learning_rate > 0.0)) bad("learning_rate must be positive");
  if (!(adadelta_decay > 0.0 && adadelta_decay < 1.0)) bad("adadelta_decay must lie in (0, 1)");
  if (!(adadelta_epsilon > 0.0)) bad("adadelta_epsilon must be positive");
  if (!(init_stddev >= 0.0)) bad("init_stddev must be >= 0");
}

std::string objective_name(Objective objective) {
  switch (objective) {
    case Objective::ExactL1: return "l1";
    case Objective::ExactL2: return "l2";
    case Objective::NegativeSamplingL3: return "l3";
  }
  return "?";
}

Objective parse_objective(const std::string& text) {
  const std::string t = to_lower(text);
  if (t == "l1" || t == "exact_l1") return Objective::ExactL1;
  if (t == "l2" || t == "exact_l2") return Objective::ExactL2;
  if (t == "l3" || t == "neg_sampling_l3" || t == "negative_sampling") return Objective::NegativeSamplingL3;
  fail(ErrorKind::InvalidArgument, "unknown objective '" + text + "' (expected l1, l2 or l3)");
}

void apply_setting(TrainConfig& cfg, const std::string& raw_key, const std::string& value) {
  const std::string key = to_lower(raw_key);
  const std::string v = to_lower(value);
  if (key == "alpha") cfg.alpha = parse_double(key, value);
  else if (key == "beta") cfg.beta = parse_double(key, value);
  else if (key == "gamma") cfg.gamma = parse_double(key, value);
  else if (key == "negatives") cfg.negatives = parse_count(key, value);
  else if (key == "pairs_per_doc") cfg.pairs_per_doc = parse_count(key, value);
  else if (key == "batch_size") cfg.batch_size = parse_count(key, value);
  else if (key == "epochs") cfg.epochs = parse_count(key, value);
  else if (key == "seed") cfg.seed = parse_count(key, value);
  else if (key == "weight_decay") cfg.weight_decay = parse_double(key, value);
  else if (key == "dropout") cfg.dropout = parse_double(key, value);
  else if (key == "objective") cfg.objective = parse_objective(value);
  else if (key == "grad_estimator" || key == "estimator") {
    if (v == "exact" || v == "exact_expectation") cfg.estimator = GradientEstimator::ExactExpectation;
    else if (v == "lr" || v == "likelihood_ratio") cfg.estimator = GradientEstimator::LikelihoodRatio;
    else fail(ErrorKind::InvalidArgument, "unknown gradient estimator '" + value + "'");
  } else if (key == "samples" || key == "estimator_samples") cfg.estimator_samples = parse_count(key, value);
  else if (key == "prior") {
    if (v == "uniform") cfg.prior = PriorKind::Uniform;
    else if (v == "learned") cfg.prior = PriorKind::Learned;
    else fail(ErrorKind::InvalidArgument, "unknown prior '" + value + "' (expected uniform or learned)");
  } else if (key == "negative_distribution") {
    if (v == "unigram") cfg.negative_distribution = NegativeDistribution::Unigram;
    else if (v == "uniform") cfg.negative_distribution = NegativeDistribution::Uniform;
    else fail(ErrorKind::InvalidArgument, "unknown negative distribution '" + value + "'");
  } else if (key == "optimizer") {
    if (v == "adadelta") cfg.optimizer = OptimizerKind::Adadelta;
    else if (v == "sgd") cfg.optimizer = OptimizerKind::Sgd;
    else fail(ErrorKind::InvalidArgument, "unknown optimizer '" + value + "'");
  } else if (key == "learning_rate") cfg.learning_rate = parse_double(key, value);
  else if (key == "adadelta_decay") cfg.adadelta_decay = parse_double(key, value);
  else if (key == "adadelta_epsilon") cfg.adadelta_epsilon = parse_double(key, value);
  else if (key == "pair_sampling_power") cfg.pair_sampling_power = parse_double(key, value);
  else if (key == "init_stddev") cfg.init_stddev = parse_double(key, value);
  else if (key == "num_classes") cfg.num_classes = parse_count(key, value);
  else if (key == "min_count") cfg.min_count = parse_count(key, value);
  else if (key == "embedding_dim") cfg.embedding_dim = parse_count(key, value);
  else if (key == "stopwords") cfg.stopwords = load_word_list(value);
  else fail(ErrorKind::InvalidArgument, "unknown training setting '" + raw_key + "'");
}

TrainConfig load_train_config(const std::string& path, TrainConfig base) {
  for (const auto& section : parse_config_file(path)) {
    if (!section.kind.empty() && section.kind != "train")
      fail(ErrorKind::Parse, path + ": unexpected section [" + section.kind + "]");
    for (const auto& [k, v] : section.entries) apply_setting(base, k, v);
  }
  return base;
}

Optimizer::Optimizer(const TrainConfig& config)
    : kind_(config.optimizer),
      learning_rate_(config.learning_rate),
      decay_(config.adadelta_decay),
      epsilon_(config.adadelta_epsilon) {}

void Optimizer::step_block(std::vector<double>& params, const std::vector<double>& grad, BlockState& state) {
  if (grad.size() != params.size()) fail(ErrorKind::InvalidArgument, "gradient block size mismatch");
  if (kind_ == OptimizerKind::Sgd) {
    for (std::size_t k = 0; k < params.size(); ++k) params[k] += learning_rate_ * grad[k];
    return;
  }
  if (state.mean_sq_grad.size() != params.size()) {
    state.mean_sq_grad.assign(params.size(), 0.0);
    state.mean_sq_update.assign(params.size(), 0.0);
  }
  for (std::size_t k = 0; k < params.size(); ++k) {
    const double g = grad[k];
    double& eg = state.mean_sq_grad[k];
    double& ed = state.mean_sq_update[k];
    eg = decay_ * eg + (1.0 - decay_) * g * g;
    const double update = std::sqrt(ed + epsilon_) / std::sqrt(eg + epsilon_) * g;
    ed = decay_ * ed + (1.0 - decay_) * update * update;
    params[k] += learning_rate_ * update;
  }
}

void Optimizer::step(AspectModel& model, const Gradient& grad) {
  step_block(model.sentiment.weights, grad.weights, weights_);
  step_block(model.opinion.context, grad.context, context_);
  step_block(model.opinion.embeddings, grad.embeddings, embeddings_);
  if (model.prior.kind == PriorKind::Learned) step_block(model.prior.logits, grad.prior_logits, prior_);
}

FeatureVector apply_dropout(const FeatureVector& x, double rate, Rng& rng) {
  if (rate <= 0.0) return x;
  FeatureVector out(x.size(), 0.0);
  const double keep_scale = 1.0 / (1.0 - rate);
  for (std::size_t k = 0; k < x.size(); ++k)
    if (x[k] != 0.0 && rng.uniform() >= rate) out[k] = x[k] * keep_scale;
  return out;
}

TrainResult train(std::span<const Document> train_docs, std::span<const Document> dev_docs, const PairSet& pairs,
                  const Embeddings* embeddings, const TrainConfig& config, const TrainHooks& hooks) {
  config.validate();
  if (pairs.pairs.empty()) fail(ErrorKind::InvalidArgument, "training needs at least one word pair");

  Rng rng(config.seed);
  TrainResult result;
  TrainedModel& trained = result.model;
  trained.features = build_vocab(train_docs, config.min_count, config.stopwords.empty() ? nullptr : &config.stopwords);
  if (trained.features.empty()) fail(ErrorKind::InvalidArgument, "training corpus has an empty vocabulary");

  std::vector<FeatureVector> features;
  features.reserve(train_docs.size());
  std::unordered_map<std::string, std::size_t> doc_index;
  for (std::size_t i = 0; i < train_docs.size(); ++i) {
    features.push_back(bow_features(train_docs[i], trained.features));
    doc_index.emplace(train_docs[i].id, i);
  }

  const std::size_t C = config.num_classes;
  const std::size_t D = trained.features.size();
  const std::size_t E = embeddings ? embeddings->table.dim() : config.embedding_dim;
  const bool negative_sampling = config.objective == Objective::NegativeSamplingL3;

  std::vector<AspectState> states;
  for (std::size_t a = 0; a < pairs.aspects.size(); ++a) {
    std::map<std::string, std::size_t> opinion_counts, target_counts;
    std::map<std::size_t, std::vector<const WordPair*>> by_doc;
    for (const auto& p : pairs.pairs) {
      if (p.aspect_id != a) continue;
      auto it = doc_index.find(p.doc_id);
      if (it == doc_index.end()) continue;
      ++opinion_counts[p.opinion];
      ++target_counts[p.target];
      by_doc[it->second].push_back(&p);
    }

    AspectModel model;
    model.aspect = pairs.aspects[a];
    model.sentiment = SentimentModel(C, D);
    for (double& w : model.sentiment.weights) w = rng.normal(0.0, config.init_stddev);
    model.opinion = OpinionModel(C, E, ranked_vocab(opinion_counts), ranked_vocab(target_counts));
    for (double& v : model.opinion.context) v = rng.normal(0.0, config.init_stddev);
    for (std::size_t o = 0; o < model.opinion.num_opinions(); ++o) {
      auto row = model.opinion.opinion_row(o);
      auto pretrained = embeddings ? embeddings->find(model.opinion.opinions.word(o)) : std::nullopt;
      if (pretrained) {
        std::copy(pretrained->begin(), pretrained->end(), row.begin());
      } else {
        for (double& v : row) v = rng.normal(0.0, config.init_stddev);
      }
    }
    model.prior = config.prior == PriorKind::Learned ? PriorModel::learned(C) : PriorModel::uniform();

    AspectState state;
    if (by_doc.empty()) {
      warn("aspect '" + model.aspect + "' has no training pairs; its classifier stays at initialization");
    } else if (negative_sampling) {
      if (model.opinion.num_opinions() < 2)
        fail(ErrorKind::InvalidArgument, "aspect '" + model.aspect +
                                             "' has a single opinion word; negative sampling needs at least 2");
      std::vector<std::size_t> counts(model.opinion.num_opinions());
      for (std::size_t o = 0; o < counts.size(); ++o) counts[o] = model.opinion.opinions.frequency(o);
      state.negatives.emplace(counts, config.negative_distribution);
    }
    for (auto& [index, doc_pairs] : by_doc) {
      std::vector<PairSample> samples;
      std::vector<std::size_t> freqs;
      for (const WordPair* p : doc_pairs) {
        const std::size_t o = *model.opinion.opinions.index(p->opinion);
        samples.push_back({*model.opinion.targets.index(p->target), o, {}});
        freqs.push_back(model.opinion.opinions.frequency(o));
      }
      state.docs.push_back({index, std::move(samples), PairSampler(freqs, config.pair_sampling_power)});
    }
    trained.aspects.push_back(std::move(model));
    states.push_back(std::move(state));
  }

  ObjectiveOptions options;
  options.objective = config.objective;
  options.alpha = config.effective_alpha();
  options.beta = config.beta;
  options.weight_decay = config.weight_decay;
  options.estimator = config.estimator;
  options.samples = config.estimator_samples;
  options.flip_entropy_gradient = hooks.flip_entropy_gradient;
  const bool regularize = config.beta > 0.0 && embeddings != nullptr;

  std::vector<Optimizer> optimizers(trained.aspects.size(), Optimizer(config));
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    HistoryEntry entry;
    entry.epoch = epoch;
    for (std::size_t a = 0; a < trained.aspects.size(); ++a) {
      AspectState& state = states[a];
      AspectModel& model = trained.aspects[a];
      std::vector<std::size_t> order(state.docs.size());
      for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
      rng.shuffle(order);

      for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
        const std::size_t end = std::min(order.size(), start + config.batch_size);
        Batch batch;
        batch.docs.reserve(end - start);
        for (std::size_t b = start; b < end; ++b) {
          const TrainDoc& doc = state.docs[order[b]];
          BatchDoc bd;
          bd.features = apply_dropout(features[doc.doc_index], config.dropout, rng);
          for (std::size_t k = 0; k < config.pairs_per_doc; ++k) {
            PairSample sample = doc.pairs[doc.sampler.sample(rng)];
            if (state.negatives) {
              sample.negatives.resize(config.negatives);
              for (auto& n : sample.negatives) n = state.negatives->sample(rng, sample.opinion);
            }
            bd.pairs.push_back(std::move(sample));
          }
          bd.reg_word = model.opinion.opinions.word(bd.pairs.front().opinion);
          batch.docs.push_back(std::move(bd));
        }
        if (regularize) fill_similarity(batch, *embeddings, config.gamma);

        Gradient grad = Gradient::zeros_like(model);
        const ObjectiveValue value = evaluate_objective(model, batch, options, &grad, &rng);
        require_finite(value, model.aspect, epoch);
        optimizers[a].step(model, grad);
        entry.objective += value.total();
        entry.regularizer += value.regularizer;
      }
    }

    double acc_sum = 0.0;
    std::size_t scored = 0;
    for (const auto& model : trained.aspects) {
      bool any_gold = false;
      for (const auto& d : dev_docs)
        if (d.gold_labels.count(model.aspect)) {
          any_gold = true;
          break;
        }
      if (!any_gold) continue;
      acc_sum += evaluate(model, trained.features, dev_docs).accuracy;
      ++scored;
    }
    entry.dev_accuracy = scored ? acc_sum / static_cast<double>(scored) : std::numeric_limits<double>::quiet_NaN();
    result.history.push_back(entry);
  }
  return result;
}

std::string format_history(std::span<const HistoryEntry> history) {
  std::ostringstream out;
  char buf[128];
  for (const auto& h : history) {
    std::snprintf(buf, sizeof buf, "%zu\t%.17g\t%.17g\t%.17g\n", h.epoch, h.objective, h.regularizer, h.dev_accuracy);
    out << buf;
  }
  return out.str();
}

void write_history(const std::string& path, std::span<const HistoryEntry> history) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::Io, "cannot write history: " + path);
  out << format_history(history);
  if (!out) fail(ErrorKind::Io, "failed writing history: " + path);
}

}  // namespace vusc
