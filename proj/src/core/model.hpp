#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "core/corpus.hpp"

namespace vusc {

using Distribution = std::vector<double>;

// q(C|x): one weight row per polarity over document features.
struct SentimentModel {
  std::size_t num_classes = 2;
  std::size_t dim = 0;
  std::vector<double> weights;  // num_classes x dim, row-major

  SentimentModel() = default;
  SentimentModel(std::size_t classes, std::size_t feature_dim);

  std::span<double> row(std::size_t c) { return {weights.data() + c * dim, dim}; }
  std::span<const double> row(std::size_t c) const { return {weights.data() + c * dim, dim}; }
};

// p(w_o | c, w_t) with a dot-product score gated by target-set membership.
struct OpinionModel {
  std::size_t num_classes = 2;
  std::size_t dim = 0;
  std::vector<double> context;     // num_classes x dim, row c is a_c
  std::vector<double> embeddings;  // opinions.size() x dim, row o is w_o
  Vocab opinions;
  Vocab targets;
  std::vector<char> relevant;  // per target id: member of this aspect's target set

  OpinionModel() = default;
  OpinionModel(std::size_t classes, std::size_t embedding_dim, Vocab opinion_vocab, Vocab target_vocab);

  std::size_t num_opinions() const { return opinions.size(); }
  std::span<double> context_row(std::size_t c) { return {context.data() + c * dim, dim}; }
  std::span<const double> context_row(std::size_t c) const { return {context.data() + c * dim, dim}; }
  std::span<double> opinion_row(std::size_t o) { return {embeddings.data() + o * dim, dim}; }
  std::span<const double> opinion_row(std::size_t o) const { return {embeddings.data() + o * dim, dim}; }
  bool is_relevant(std::size_t target) const { return target < relevant.size() && relevant[target] != 0; }
};

enum class PriorKind { Uniform, Learned };

struct PriorModel {
  PriorKind kind = PriorKind::Uniform;
  std::vector<double> logits;  // used when kind == Learned

  static PriorModel uniform() { return {}; }
  static PriorModel learned(std::size_t classes) { return {PriorKind::Learned, std::vector<double>(classes, 0.0)}; }

  Distribution distribution(std::size_t classes) const;
  std::vector<double> log_distribution(std::size_t classes) const;
};

// Everything learned for one aspect.
struct AspectModel {
  std::string aspect;
  SentimentModel sentiment;
  OpinionModel opinion;
  PriorModel prior;
};

std::vector<double> log_softmax(std::span<const double> logits);
Distribution softmax(std::span<const double> logits);
double log_sum_exp(std::span<const double> values);
double dot(std::span<const double> a, std::span<const double> b);

std::vector<double> logits(const SentimentModel& model, std::span<const double> x);
Distribution posterior(const SentimentModel& model, std::span<const double> x);

double phi(const OpinionModel& model, std::size_t opinion, std::size_t target, std::size_t c);
Distribution opinion_softmax(const OpinionModel& model, std::size_t target, std::size_t c);
// log p(w_o | c, w_t)
double opinion_log_prob(const OpinionModel& model, std::size_t opinion, std::size_t target, std::size_t c);

// Shannon entropy in nats, with 0 log 0 = 0.
double entropy(std::span<const double> q);

// p(c | w_t, w_o) by enumeration over classes.
Distribution true_posterior(const OpinionModel& model, std::size_t opinion, std::size_t target,
                            std::span<const double> prior);

std::size_t argmax(std::span<const double> values);

}  // namespace vusc
