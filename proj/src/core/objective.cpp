#include "core/objective.hpp"

#include <algorithm>
#include <cmath>

#include "core/error.hpp"
#include "core/extraction.hpp"
#include "core/log.hpp"

namespace vusc {

namespace {

double log_sigmoid(double s) { return s >= 0.0 ? -std::log1p(std::exp(-s)) : s - std::log1p(std::exp(s)); }

double sigmoid(double s) {
  if (s >= 0.0) return 1.0 / (1.0 + std::exp(-s));
  const double e = std::exp(s);
  return e / (1.0 + e);
}

// log p(o | c, t) under the full softmax. Adds weight * gradient when asked.
double exact_log_likelihood(const OpinionModel& m, const PairSample& pair, std::size_t c, Gradient* grad,
                            double weight) {
  const std::size_t V = m.num_opinions();
  if (!m.is_relevant(pair.target)) return -std::log(static_cast<double>(V));

  auto a = m.context_row(c);
  std::vector<double> scores(V);
  for (std::size_t o = 0; o < V; ++o) scores[o] = dot(a, m.opinion_row(o));
  const double lse = log_sum_exp(scores);
  const double ll = scores[pair.opinion] - lse;

  if (grad && weight != 0.0) {
    const std::size_t E = m.dim;
    double* ga = grad->context.data() + c * E;
    auto obs = m.opinion_row(pair.opinion);
    for (std::size_t k = 0; k < E; ++k) ga[k] += weight * obs[k];
    for (std::size_t o = 0; o < V; ++o) {
      const double p = std::exp(scores[o] - lse);
      auto row = m.opinion_row(o);
      double* go = grad->embeddings.data() + o * E;
      const double coeff = weight * ((o == pair.opinion ? 1.0 : 0.0) - p);
      for (std::size_t k = 0; k < E; ++k) {
        ga[k] -= weight * p * row[k];
        go[k] += coeff * a[k];
      }
    }
  }
  return ll;
}

// log sigma(phi(o)) + sum_n log(1 - sigma(phi(n))).
double negative_sampling_log_likelihood(const OpinionModel& m, const PairSample& pair, std::size_t c, Gradient* grad,
                                        double weight) {
  if (!m.is_relevant(pair.target))
    return static_cast<double>(1 + pair.negatives.size()) * log_sigmoid(0.0);

  const std::size_t E = m.dim;
  auto a = m.context_row(c);
  auto obs = m.opinion_row(pair.opinion);
  const double s_pos = dot(a, obs);
  double ll = log_sigmoid(s_pos);
  std::vector<double> s_neg(pair.negatives.size());
  for (std::size_t n = 0; n < pair.negatives.size(); ++n) {
    s_neg[n] = dot(a, m.opinion_row(pair.negatives[n]));
    ll += log_sigmoid(-s_neg[n]);
  }

  if (grad && weight != 0.0) {
    double* ga = grad->context.data() + c * E;
    const double pos_coeff = weight * sigmoid(-s_pos);
    double* go = grad->embeddings.data() + pair.opinion * E;
    for (std::size_t k = 0; k < E; ++k) {
      ga[k] += pos_coeff * obs[k];
      go[k] += pos_coeff * a[k];
    }
    for (std::size_t n = 0; n < pair.negatives.size(); ++n) {
      const double neg_coeff = weight * sigmoid(s_neg[n]);
      auto row = m.opinion_row(pair.negatives[n]);
      double* gn = grad->embeddings.data() + pair.negatives[n] * E;
      for (std::size_t k = 0; k < E; ++k) {
        ga[k] -= neg_coeff * row[k];
        gn[k] -= neg_coeff * a[k];
      }
    }
  }
  return ll;
}

double class_log_likelihood(const OpinionModel& m, const PairSample& pair, std::size_t c, Objective objective,
                            Gradient* grad, double weight) {
  if (objective == Objective::NegativeSamplingL3) return negative_sampling_log_likelihood(m, pair, c, grad, weight);
  return exact_log_likelihood(m, pair, c, grad, weight);
}

void check_pair(const OpinionModel& m, const PairSample& pair) {
  if (pair.opinion >= m.num_opinions() || pair.target >= m.targets.size())
    fail(ErrorKind::InvalidArgument, "pair references a word outside the opinion model vocabularies");
  for (auto n : pair.negatives)
    if (n >= m.num_opinions()) fail(ErrorKind::InvalidArgument, "negative sample outside the opinion vocabulary");
}

std::size_t sample_class(std::span<const double> q, Rng& rng) {
  const double u = rng.uniform();
  double acc = 0.0;
  for (std::size_t c = 0; c < q.size(); ++c) {
    acc += q[c];
    if (u < acc) return c;
  }
  // Rounding left u above the final partial sum; take the last class with mass.
  for (std::size_t c = q.size(); c-- > 0;)
    if (q[c] > 0.0) return c;
  return q.size() - 1;
}

}  // namespace

Gradient Gradient::zeros_like(const AspectModel& model) {
  Gradient g;
  g.weights.assign(model.sentiment.weights.size(), 0.0);
  g.context.assign(model.opinion.context.size(), 0.0);
  g.embeddings.assign(model.opinion.embeddings.size(), 0.0);
  g.prior_logits.assign(model.prior.kind == PriorKind::Learned ? model.prior.logits.size() : 0, 0.0);
  return g;
}

ObjectiveValue evaluate_objective(const AspectModel& model, const Batch& batch, const ObjectiveOptions& options,
                                  Gradient* grad, Rng* rng) {
  const std::size_t C = model.sentiment.num_classes;
  if (model.opinion.num_classes != C) fail(ErrorKind::InvalidArgument, "sentiment and opinion class counts differ");
  const bool sampled = options.estimator == GradientEstimator::LikelihoodRatio;
  if (grad && sampled) {
    if (!rng) fail(ErrorKind::InvalidArgument, "the likelihood-ratio estimator needs a random generator");
    if (options.samples == 0) fail(ErrorKind::InvalidArgument, "the likelihood-ratio estimator needs K >= 1");
  }
  if (grad) {
    Gradient expected = Gradient::zeros_like(model);
    if (grad->weights.size() != expected.weights.size() || grad->context.size() != expected.context.size() ||
        grad->embeddings.size() != expected.embeddings.size() ||
        grad->prior_logits.size() != expected.prior_logits.size())
      *grad = std::move(expected);
  }

  const bool use_prior = options.objective != Objective::ExactL2;
  const bool learn_prior = use_prior && model.prior.kind == PriorKind::Learned;
  const std::vector<double> log_prior = model.prior.log_distribution(C);
  const Distribution prior = model.prior.distribution(C);
  const double entropy_sign = options.flip_entropy_gradient ? -1.0 : 1.0;
  const double alpha = options.alpha;

  const std::size_t n = batch.docs.size();
  std::vector<Distribution> qs(n);
  std::vector<std::vector<double>> log_qs(n), dq(n, std::vector<double>(C, 0.0)), dz(n, std::vector<double>(C, 0.0));
  ObjectiveValue value;
  std::vector<double> ll(C);

  for (std::size_t i = 0; i < n; ++i) {
    const BatchDoc& doc = batch.docs[i];
    log_qs[i] = log_softmax(logits(model.sentiment, doc.features));
    qs[i].resize(C);
    for (std::size_t c = 0; c < C; ++c) qs[i][c] = std::exp(log_qs[i][c]);
    const auto& q = qs[i];
    const auto& log_q = log_qs[i];
    double h = 0.0;
    for (std::size_t c = 0; c < C; ++c)
      if (q[c] > 0.0) h -= q[c] * log_q[c];

    for (const auto& pair : doc.pairs) {
      check_pair(model.opinion, pair);
      const bool exact_grad = grad && !sampled;
      for (std::size_t c = 0; c < C; ++c)
        ll[c] = class_log_likelihood(model.opinion, pair, c, options.objective, exact_grad ? grad : nullptr, q[c]);
      for (std::size_t c = 0; c < C; ++c) {
        value.likelihood += q[c] * ll[c];
        if (use_prior) value.prior += q[c] * log_prior[c];
      }
      value.entropy += alpha * h;

      if (!grad) continue;
      if (!sampled) {
        for (std::size_t c = 0; c < C; ++c) {
          dq[i][c] += ll[c] + entropy_sign * alpha * (-log_q[c] - 1.0);
          if (use_prior) dq[i][c] += log_prior[c];
        }
        if (learn_prior)
          for (std::size_t k = 0; k < C; ++k) grad->prior_logits[k] += q[k] - prior[k];
      } else {
        const double inv_k = 1.0 / static_cast<double>(options.samples);
        for (std::size_t j = 0; j < options.samples; ++j) {
          const std::size_t c = sample_class(q, *rng);
          double signal = ll[c] - entropy_sign * alpha * log_q[c];
          if (use_prior) signal += log_prior[c];
          for (std::size_t k = 0; k < C; ++k) dz[i][k] += inv_k * signal * ((k == c ? 1.0 : 0.0) - q[k]);
          class_log_likelihood(model.opinion, pair, c, options.objective, grad, inv_k);
          if (learn_prior)
            for (std::size_t k = 0; k < C; ++k) grad->prior_logits[k] += inv_k * ((k == c ? 1.0 : 0.0) - prior[k]);
        }
      }
    }
  }

  if (options.beta != 0.0 && !batch.similarity.empty()) {
    if (batch.similarity.size() != n * n) fail(ErrorKind::InvalidArgument, "similarity matrix has wrong size");
    double r = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        if (i == j) continue;
        const double s = batch.similarity[i * n + j];
        if (s == 0.0) continue;
        r -= squared_distance(qs[i], qs[j]) * s;
        if (grad) {
          // Partials of -s_ij d(q_i, q_j) with respect to both q_i and q_j.
          for (std::size_t c = 0; c < C; ++c) {
            const double diff = qs[i][c] - qs[j][c];
            dq[i][c] += options.beta * (-2.0 * s * diff);
            dq[j][c] += options.beta * (2.0 * s * diff);
          }
        }
      }
    value.regularizer = options.beta * r;
  }

  if (grad) {
    const std::size_t D = model.sentiment.dim;
    for (std::size_t i = 0; i < n; ++i) {
      const auto& q = qs[i];
      double mean = 0.0;
      for (std::size_t c = 0; c < C; ++c) mean += q[c] * dq[i][c];
      const auto& x = batch.docs[i].features;
      for (std::size_t c = 0; c < C; ++c) {
        const double g = dz[i][c] + q[c] * (dq[i][c] - mean);
        if (g == 0.0) continue;
        double* gw = grad->weights.data() + c * D;
        for (std::size_t k = 0; k < D; ++k) gw[k] += g * x[k];
      }
    }
  }

  if (options.weight_decay != 0.0) {
    double norm2 = 0.0;
    for (double w : model.sentiment.weights) norm2 += w * w;
    for (double a : model.opinion.context) norm2 += a * a;
    value.decay = -options.weight_decay * norm2;
    if (grad) {
      for (std::size_t k = 0; k < grad->weights.size(); ++k)
        grad->weights[k] -= 2.0 * options.weight_decay * model.sentiment.weights[k];
      for (std::size_t k = 0; k < grad->context.size(); ++k)
        grad->context[k] -= 2.0 * options.weight_decay * model.opinion.context[k];
    }
  }
  return value;
}

double elbo_exact(const Batch& batch, const AspectModel& model, double alpha, Objective objective) {
  if (objective == Objective::NegativeSamplingL3)
    fail(ErrorKind::InvalidArgument, "elbo_exact takes the L1 or L2 objective");
  ObjectiveOptions options;
  options.objective = objective;
  options.alpha = alpha;
  auto v = evaluate_objective(model, batch, options);
  return v.likelihood + v.prior + v.entropy;
}

void draw_negatives(Batch& batch, const NegativeSampler& sampler, std::size_t count, Rng& rng) {
  for (auto& doc : batch.docs)
    for (auto& pair : doc.pairs) {
      pair.negatives.resize(count);
      for (auto& n : pair.negatives) n = sampler.sample(rng, pair.opinion);
    }
}

double elbo_negative_sampling(const Batch& batch, const AspectModel& model, const NegativeSamplingConfig& config,
                              Rng& rng) {
  if (config.negatives == 0) fail(ErrorKind::InvalidArgument, "negative sampling needs N >= 1");
  const auto& vocab = model.opinion.opinions;
  std::vector<std::size_t> counts(vocab.size());
  for (std::size_t o = 0; o < vocab.size(); ++o) counts[o] = vocab.frequency(o);
  NegativeSampler sampler(counts, config.distribution);
  Batch sampled = batch;
  draw_negatives(sampled, sampler, config.negatives, rng);
  ObjectiveOptions options;
  options.objective = Objective::NegativeSamplingL3;
  options.alpha = config.alpha;
  auto v = evaluate_objective(model, sampled, options);
  return v.likelihood + v.prior + v.entropy;
}

std::vector<double> score_function_grad(const Batch& batch, const AspectModel& model, std::size_t samples, Rng& rng,
                                        double alpha) {
  ObjectiveOptions options;
  options.objective = Objective::ExactL1;
  options.alpha = alpha;
  options.estimator = GradientEstimator::LikelihoodRatio;
  options.samples = samples;
  Gradient grad = Gradient::zeros_like(model);
  evaluate_objective(model, batch, options, &grad, &rng);
  return grad.weights;
}

double similarity_score(const std::string& word_i, const std::string& word_j, const Embeddings& embeddings,
                        double gamma) {
  auto a = embeddings.find(word_i);
  auto b = embeddings.find(word_j);
  if (!a || !b) return 0.0;
  const double na = dot(*a, *a), nb = dot(*b, *b);
  if (na == 0.0 || nb == 0.0) {
    warn("zero-norm embedding in similarity score for '" + (na == 0.0 ? word_i : word_j) + "'");
    return 0.0;
  }
  const double z = cosine(*a, *b);
  return std::abs(z) >= gamma ? z : 0.0;
}

void fill_similarity(Batch& batch, const Embeddings& embeddings, double gamma) {
  const std::size_t n = batch.docs.size();
  batch.similarity.assign(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const auto& wi = batch.docs[i].reg_word;
      const auto& wj = batch.docs[j].reg_word;
      if (wi.empty() || wj.empty()) continue;
      const double s = similarity_score(wi, wj, embeddings, gamma);
      batch.similarity[i * n + j] = s;
      batch.similarity[j * n + i] = s;
    }
}

double squared_distance(std::span<const double> p, std::span<const double> q) {
  double d = 0.0;
  for (std::size_t c = 0; c < p.size(); ++c) d += (p[c] - q[c]) * (p[c] - q[c]);
  return d;
}

double regularizer(const Batch& batch, const AspectModel& model) {
  const std::size_t n = batch.docs.size();
  if (batch.similarity.empty()) return 0.0;
  if (batch.similarity.size() != n * n) fail(ErrorKind::InvalidArgument, "similarity matrix has wrong size");
  std::vector<Distribution> qs;
  qs.reserve(n);
  for (const auto& doc : batch.docs) qs.push_back(posterior(model.sentiment, doc.features));
  double r = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (i != j) r -= squared_distance(qs[i], qs[j]) * batch.similarity[i * n + j];
  return r;
}

GradientCheckResult gradient_check(const AspectModel& model, const Batch& batch, const ObjectiveOptions& options,
                                   double epsilon) {
  ObjectiveOptions exact = options;
  exact.estimator = GradientEstimator::ExactExpectation;
  Gradient analytic = Gradient::zeros_like(model);
  evaluate_objective(model, batch, exact, &analytic);

  AspectModel probe = model;
  GradientCheckResult result;
  auto check_block = [&](const char* name, std::vector<double>& params, const std::vector<double>& grad) {
    for (std::size_t k = 0; k < params.size(); ++k) {
      const double saved = params[k];
      params[k] = saved + epsilon;
      const double up = evaluate_objective(probe, batch, exact).total();
      params[k] = saved - epsilon;
      const double down = evaluate_objective(probe, batch, exact).total();
      params[k] = saved;
      const double numeric = (up - down) / (2.0 * epsilon);
      const double err = std::abs(grad[k] - numeric) / std::max(1.0, std::abs(numeric));
      if (err > result.max_relative_error || result.worst_parameter.empty()) {
        result.max_relative_error = std::max(err, result.max_relative_error);
        result.worst_parameter = std::string(name) + "[" + std::to_string(k) + "]";
      }
    }
  };
  check_block("weights", probe.sentiment.weights, analytic.weights);
  check_block("context", probe.opinion.context, analytic.context);
  check_block("embeddings", probe.opinion.embeddings, analytic.embeddings);
  if (probe.prior.kind == PriorKind::Learned) check_block("prior", probe.prior.logits, analytic.prior_logits);
  return result;
}

}  // namespace vusc
