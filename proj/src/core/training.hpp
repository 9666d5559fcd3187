#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "core/checkpoint.hpp"
#include "core/corpus.hpp"
#include "core/extraction.hpp"
#include "core/objective.hpp"
#include "core/samplers.hpp"

namespace vusc {

enum class OptimizerKind { Adadelta, Sgd };

struct TrainConfig {
  // Entropy weight. Unset means 0.1 for the negative-sampling objective and
  // 1.0 (the plain bound) for the exact ones.
  std::optional<double> alpha;
  double beta = 0.0;
  double gamma = 0.8;
  std::size_t negatives = 10;
  std::size_t pairs_per_doc = 5;
  std::size_t batch_size = 64;
  std::size_t epochs = 20;
  std::uint64_t seed = 42;
  double weight_decay = 1e-3;
  double dropout = 0.3;
  Objective objective = Objective::NegativeSamplingL3;
  GradientEstimator estimator = GradientEstimator::ExactExpectation;
  std::size_t estimator_samples = 1;
  PriorKind prior = PriorKind::Uniform;
  NegativeDistribution negative_distribution = NegativeDistribution::Unigram;
  OptimizerKind optimizer = OptimizerKind::Adadelta;
  double learning_rate = 1.0;
  double adadelta_decay = 0.95;
  double adadelta_epsilon = 1e-6;
  double pair_sampling_power = -0.25;
  double init_stddev = 0.01;
  std::size_t num_classes = 2;
  std::size_t min_count = 1;
  std::size_t embedding_dim = 50;  // used when no embedding file is given
  WordSet stopwords;               // left out of the document features

  double effective_alpha() const;
  void validate() const;
};

// Applies one `key = value` setting; keys match the field names above.
void apply_setting(TrainConfig& config, const std::string& key, const std::string& value);
TrainConfig load_train_config(const std::string& path, TrainConfig base = {});

std::string objective_name(Objective objective);
Objective parse_objective(const std::string& text);

// Ascent on the objective. Adadelta keeps running averages of squared
// gradients and squared updates per coordinate.
class Optimizer {
 public:
  explicit Optimizer(const TrainConfig& config);

  void step(AspectModel& model, const Gradient& grad);

 private:
  struct BlockState {
    std::vector<double> mean_sq_grad;
    std::vector<double> mean_sq_update;
  };
  void step_block(std::vector<double>& params, const std::vector<double>& grad, BlockState& state);

  OptimizerKind kind_;
  double learning_rate_, decay_, epsilon_;
  BlockState weights_, context_, embeddings_, prior_;
};

struct HistoryEntry {
  std::size_t epoch = 0;
  double objective = 0.0;
  double regularizer = 0.0;
  double dev_accuracy = 0.0;  // NaN when the dev split has no gold labels
};

struct TrainResult {
  TrainedModel model;
  std::vector<HistoryEntry> history;
};

// Debug hooks threaded into the objective.
struct TrainHooks {
  bool flip_entropy_gradient = false;
};

TrainResult train(std::span<const Document> train_docs, std::span<const Document> dev_docs, const PairSet& pairs,
                  const Embeddings* embeddings, const TrainConfig& config, const TrainHooks& hooks = {});

void write_history(const std::string& path, std::span<const HistoryEntry> history);
std::string format_history(std::span<const HistoryEntry> history);

// Applies inverted dropout to the nonzero coordinates of x.
FeatureVector apply_dropout(const FeatureVector& x, double rate, Rng& rng);

}  // namespace vusc
