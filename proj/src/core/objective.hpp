#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "core/corpus.hpp"
#include "core/model.hpp"
#include "core/rng.hpp"
#include "core/samplers.hpp"

namespace vusc {

enum class Objective {
  ExactL1,             // E_q[log p(o|c,t) + log p(c)] + alpha H(q)
  ExactL2,             // E_q[log p(o|c,t)] + alpha H(q)  (uniform prior dropped)
  NegativeSamplingL3,  // sigmoid/negative-sample surrogate + log p(c) + alpha H(q)
};

enum class GradientEstimator { ExactExpectation, LikelihoodRatio };

struct PairSample {
  std::size_t target = 0;
  std::size_t opinion = 0;
  std::vector<std::size_t> negatives;  // used by NegativeSamplingL3 only
};

struct BatchDoc {
  FeatureVector features;  // dropout already applied
  std::vector<PairSample> pairs;
  std::string reg_word;  // opinion word standing for the document in the regularizer
};

struct Batch {
  std::vector<BatchDoc> docs;
  // Row-major docs x docs thresholded similarities s(w_i, w_j); empty when the
  // regularizer is off.
  std::vector<double> similarity;
};

struct ObjectiveOptions {
  Objective objective = Objective::ExactL2;
  double alpha = 1.0;
  double beta = 0.0;
  double weight_decay = 0.0;
  GradientEstimator estimator = GradientEstimator::ExactExpectation;
  std::size_t samples = 1;  // K for the likelihood-ratio estimator
  // Test hook: negates the entropy contribution to the gradient only.
  bool flip_entropy_gradient = false;
};

struct ObjectiveValue {
  double likelihood = 0.0;   // expected opinion log-likelihood (or its L3 surrogate)
  double prior = 0.0;        // expected log p(c)
  double entropy = 0.0;      // alpha * sum of entropies
  double regularizer = 0.0;  // beta * sum_{i != j} R(x_i, x_j)
  double decay = 0.0;        // -weight_decay * (|W|^2 + |A|^2)

  double total() const { return likelihood + prior + entropy + regularizer + decay; }
};

struct Gradient {
  std::vector<double> weights;
  std::vector<double> context;
  std::vector<double> embeddings;
  std::vector<double> prior_logits;

  static Gradient zeros_like(const AspectModel& model);
};

// Objective for one batch and, when `grad` is non-null, its gradient with
// respect to every parameter (accumulated into `grad`). `rng` is required
// only by the likelihood-ratio estimator.
ObjectiveValue evaluate_objective(const AspectModel& model, const Batch& batch, const ObjectiveOptions& options,
                                  Gradient* grad = nullptr, Rng* rng = nullptr);

// Exact ELBO (L1 or L2) of a batch.
double elbo_exact(const Batch& batch, const AspectModel& model, double alpha, Objective objective = Objective::ExactL1);

struct NegativeSamplingConfig {
  double alpha = 0.1;
  std::size_t negatives = 10;
  NegativeDistribution distribution = NegativeDistribution::Unigram;
};

// Draws fresh negatives for every pair (unigram^0.75 over the model's opinion
// counts, positive excluded) and evaluates the L3 objective.
double elbo_negative_sampling(const Batch& batch, const AspectModel& model, const NegativeSamplingConfig& config,
                              Rng& rng);

// Fills in negatives for every pair of `batch`.
void draw_negatives(Batch& batch, const NegativeSampler& sampler, std::size_t count, Rng& rng);

// Likelihood-ratio estimate of the gradient of the exact ELBO with respect to
// the sentiment weights: (1/K) sum_j A(c_j) grad log q(c_j|x), c_j ~ q.
std::vector<double> score_function_grad(const Batch& batch, const AspectModel& model, std::size_t samples, Rng& rng,
                                        double alpha = 1.0);

// tau(cos(w_i, w_j); gamma); 0 when either word lacks an embedding.
double similarity_score(const std::string& word_i, const std::string& word_j, const Embeddings& embeddings,
                        double gamma);

// Populates batch.similarity from each document's reg_word.
void fill_similarity(Batch& batch, const Embeddings& embeddings, double gamma);

// sum_{i != j} -d(q_i, q_j) s_ij over the batch, unweighted.
double regularizer(const Batch& batch, const AspectModel& model);

// Squared Euclidean distance between two distributions.
double squared_distance(std::span<const double> p, std::span<const double> q);

struct GradientCheckResult {
  double max_relative_error = 0.0;
  std::string worst_parameter;
};

// Central finite differences over every parameter coordinate, compared with
// the analytic gradient; error is |analytic - numeric| / max(1, |numeric|).
GradientCheckResult gradient_check(const AspectModel& model, const Batch& batch, const ObjectiveOptions& options,
                                   double epsilon = 1e-5);

}  // namespace vusc
