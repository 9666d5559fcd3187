#include "core/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "core/error.hpp"

namespace vusc {

SentimentModel::SentimentModel(std::size_t classes, std::size_t feature_dim)
    : num_classes(classes), dim(feature_dim), weights(classes * feature_dim, 0.0) {
  if (classes < 2) fail(ErrorKind::InvalidArgument, "a sentiment model needs at least 2 classes");
}

OpinionModel::OpinionModel(std::size_t classes, std::size_t embedding_dim, Vocab opinion_vocab, Vocab target_vocab)
    : num_classes(classes),
      dim(embedding_dim),
      context(classes * embedding_dim, 0.0),
      embeddings(opinion_vocab.size() * embedding_dim, 0.0),
      opinions(std::move(opinion_vocab)),
      targets(std::move(target_vocab)),
      relevant(targets.size(), 1) {
  if (classes < 2) fail(ErrorKind::InvalidArgument, "an opinion model needs at least 2 classes");
  if (embedding_dim == 0) fail(ErrorKind::InvalidArgument, "opinion embedding dimension must be positive");
}

Distribution PriorModel::distribution(std::size_t classes) const {
  if (kind == PriorKind::Uniform) return Distribution(classes, 1.0 / static_cast<double>(classes));
  if (logits.size() != classes) fail(ErrorKind::InvalidArgument, "prior logits have wrong size");
  return softmax(logits);
}

std::vector<double> PriorModel::log_distribution(std::size_t classes) const {
  if (kind == PriorKind::Uniform) return std::vector<double>(classes, -std::log(static_cast<double>(classes)));
  if (logits.size() != classes) fail(ErrorKind::InvalidArgument, "prior logits have wrong size");
  return log_softmax(logits);
}

double log_sum_exp(std::span<const double> values) {
  double m = -std::numeric_limits<double>::infinity();
  for (double v : values) m = std::max(m, v);
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double v : values) s += std::exp(v - m);
  return m + std::log(s);
}

std::vector<double> log_softmax(std::span<const double> logits) {
  const double lse = log_sum_exp(logits);
  std::vector<double> out(logits.begin(), logits.end());
  for (double& v : out) v -= lse;
  return out;
}

Distribution softmax(std::span<const double> logits) {
  double m = -std::numeric_limits<double>::infinity();
  for (double v : logits) m = std::max(m, v);
  Distribution out(logits.size());
  double s = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) s += out[i] = std::exp(logits[i] - m);
  for (double& v : out) v /= s;
  return out;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

std::vector<double> logits(const SentimentModel& model, std::span<const double> x) {
  if (x.size() != model.dim)
    fail(ErrorKind::InvalidArgument, "feature dimension " + std::to_string(x.size()) + " does not match model dimension " +
                                         std::to_string(model.dim));
  for (double v : x)
    if (!std::isfinite(v)) fail(ErrorKind::Numeric, "non-finite feature value");
  std::vector<double> z(model.num_classes);
  for (std::size_t c = 0; c < model.num_classes; ++c) z[c] = dot(model.row(c), x);
  return z;
}

Distribution posterior(const SentimentModel& model, std::span<const double> x) { return softmax(logits(model, x)); }

double phi(const OpinionModel& model, std::size_t opinion, std::size_t target, std::size_t c) {
  if (!model.is_relevant(target)) return 0.0;
  return dot(model.context_row(c), model.opinion_row(opinion));
}

Distribution opinion_softmax(const OpinionModel& model, std::size_t target, std::size_t c) {
  std::vector<double> scores(model.num_opinions());
  for (std::size_t o = 0; o < scores.size(); ++o) scores[o] = phi(model, o, target, c);
  return softmax(scores);
}

double opinion_log_prob(const OpinionModel& model, std::size_t opinion, std::size_t target, std::size_t c) {
  std::vector<double> scores(model.num_opinions());
  for (std::size_t o = 0; o < scores.size(); ++o) scores[o] = phi(model, o, target, c);
  return scores[opinion] - log_sum_exp(scores);
}

double entropy(std::span<const double> q) {
  double h = 0.0;
  for (double p : q)
    if (p > 0.0) h -= p * std::log(p);
  return h;
}

Distribution true_posterior(const OpinionModel& model, std::size_t opinion, std::size_t target,
                            std::span<const double> prior) {
  if (prior.size() != model.num_classes) fail(ErrorKind::InvalidArgument, "prior has wrong number of classes");
  std::vector<double> log_joint(model.num_classes);
  bool any = false;
  for (std::size_t c = 0; c < model.num_classes; ++c) {
    if (prior[c] > 0.0) {
      log_joint[c] = opinion_log_prob(model, opinion, target, c) + std::log(prior[c]);
      any = true;
    } else {
      log_joint[c] = -std::numeric_limits<double>::infinity();
    }
  }
  if (!any) fail(ErrorKind::Numeric, "true posterior undefined: joint probability is zero for every class");
  return softmax(log_joint);
}

std::size_t argmax(std::span<const double> values) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i)
    if (values[i] > values[best]) best = i;
  return best;
}

}  // namespace vusc
