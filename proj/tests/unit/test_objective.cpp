#include <doctest.h>

#include <cmath>
#include <numeric>

#include "core/checks.hpp"
#include "core/error.hpp"
#include "core/log.hpp"
#include "core/objective.hpp"
#include "core/rng.hpp"
#include "core/samplers.hpp"
#include "core/training.hpp"
#include "oracle.hpp"

using namespace vusc;
using doctest::Approx;

namespace {

Batch one_pair_batch(std::vector<double> x, std::size_t target, std::size_t opinion) {
  Batch b;
  BatchDoc d;
  d.features = std::move(x);
  d.pairs.push_back({target, opinion, {}});
  b.docs.push_back(std::move(d));
  return b;
}

double log_sigma(double s) { return -std::log1p(std::exp(-s)); }

Embeddings embeddings_of(const std::vector<std::pair<std::string, std::vector<double>>>& rows) {
  Embeddings e;
  for (const auto& [w, v] : rows) {
    e.vocab.add(w);
    e.table.append_row(v);
  }
  return e;
}

}  // namespace

TEST_CASE("exact bound of one pair under a one-hot posterior") {
  Rng rng(1);
  ToyShape shape;
  auto model = make_toy_model(shape, rng);
  model.sentiment.weights.assign(model.sentiment.weights.size(), 0.0);
  model.sentiment.weights[1 * shape.features] = 2000.0;  // class 1 dominates by exp(-2000) = 0
  std::vector<double> x(shape.features, 0.0);
  x[0] = 1.0;
  const auto batch = one_pair_batch(x, 0, 3);
  const double expected = std::log(oracle::opinion_prob(model.opinion, 3, 0, 1)) + std::log(0.5);
  CHECK(elbo_exact(batch, model, 1.0, Objective::ExactL1) == Approx(expected).epsilon(1e-12));
}

TEST_CASE("the exact bound never exceeds the log-likelihood and the gap is the KL divergence") {
  Rng rng(2);
  for (int draw = 0; draw < 100; ++draw) {
    ToyShape shape;
    shape.classes = 2 + draw % 2;
    shape.opinions = 2 + rng.below(9);
    shape.scale = 0.5 + 2.0 * rng.uniform();
    const auto model = make_toy_model(shape, rng, draw % 3 == 0 ? PriorKind::Learned : PriorKind::Uniform);
    const auto batch = make_toy_batch(shape, model, rng);
    const double bound = elbo_exact(batch, model, 1.0, Objective::ExactL1);
    const double ll = oracle::log_likelihood(model, batch);
    CHECK(bound <= ll + 1e-12);
    CHECK(std::abs((ll - bound) - oracle::total_kl(model, batch)) <= 1e-9);
  }
}

TEST_CASE("an empty batch has a zero bound") {
  Rng rng(3);
  const auto model = make_toy_model(ToyShape{}, rng);
  CHECK(elbo_exact(Batch{}, model, 1.0) == 0.0);
}

TEST_CASE("the prior-free bound differs by the expected log prior") {
  Rng rng(4);
  ToyShape shape;
  shape.classes = 3;
  const auto model = make_toy_model(shape, rng, PriorKind::Learned);
  const auto batch = make_toy_batch(shape, model, rng);
  const auto log_p = model.prior.log_distribution(3);
  double expected_prior = 0.0;
  for (const auto& d : batch.docs) {
    const auto q = oracle::q_of(model.sentiment, d.features);
    for (std::size_t k = 0; k < d.pairs.size(); ++k)
      for (std::size_t c = 0; c < 3; ++c) expected_prior += q[c] * log_p[c];
  }
  const double l1 = elbo_exact(batch, model, 0.7, Objective::ExactL1);
  const double l2 = elbo_exact(batch, model, 0.7, Objective::ExactL2);
  CHECK(l1 - l2 == Approx(expected_prior).epsilon(1e-10));
}

TEST_CASE("alpha scales the entropy term and alpha = 0 removes it") {
  Rng rng(5);
  ToyShape shape;
  const auto model = make_toy_model(shape, rng);
  const auto batch = make_toy_batch(shape, model, rng);
  double h = 0.0;
  for (const auto& d : batch.docs) h += d.pairs.size() * entropy(oracle::q_of(model.sentiment, d.features));
  ObjectiveOptions opts;
  opts.objective = Objective::ExactL1;
  opts.alpha = 0.0;
  const auto v0 = evaluate_objective(model, batch, opts);
  CHECK(v0.entropy == 0.0);
  CHECK(elbo_exact(batch, model, 0.0) == v0.likelihood + v0.prior);
  CHECK(elbo_exact(batch, model, 0.3) - elbo_exact(batch, model, 0.0) == Approx(0.3 * h).epsilon(1e-12));

  opts.objective = Objective::NegativeSamplingL3;
  auto sampled = batch;
  for (auto& d : sampled.docs)
    for (auto& p : d.pairs) p.negatives = {0, 1, 2};
  CHECK(evaluate_objective(model, sampled, opts).entropy == 0.0);
}

TEST_CASE("negative sampling with all scores zero") {
  Rng rng(6);
  ToyShape shape;
  shape.classes = 3;
  auto model = make_toy_model(shape, rng);
  model.opinion.context.assign(model.opinion.context.size(), 0.0);
  const auto batch = one_pair_batch(std::vector<double>(shape.features, 0.4), 0, 2);
  const auto q = oracle::q_of(model.sentiment, batch.docs[0].features);
  NegativeSamplingConfig cfg;
  cfg.negatives = 10;
  cfg.alpha = 0.25;
  const double expected = 11.0 * std::log(0.5) + std::log(1.0 / 3.0) + 0.25 * entropy(q);
  CHECK(elbo_negative_sampling(batch, model, cfg, rng) == Approx(expected).epsilon(1e-12));
}

TEST_CASE("negative sampling needs at least two opinion words") {
  Vocab one;
  one.add("good");
  Vocab targets;
  targets.add("price");
  AspectModel model;
  model.sentiment = SentimentModel(2, 2);
  model.opinion = OpinionModel(2, 2, one, targets);
  Rng rng(7);
  CHECK_THROWS_AS(elbo_negative_sampling(one_pair_batch({1.0, 0.0}, 0, 0), model, {}, rng), Error);
}

TEST_CASE("the sampled negative term converges to its exact expectation") {
  Rng rng(8);
  ToyShape shape;
  shape.opinions = 8;
  shape.scale = 1.5;
  const auto model = make_toy_model(shape, rng);
  const std::size_t positive = 4;
  const auto batch = one_pair_batch(make_toy_batch(shape, model, rng).docs[0].features, 0, positive);
  const auto q = oracle::q_of(model.sentiment, batch.docs[0].features);

  // f(w) = sum_c q_c log(1 - sigma(phi(w, c))): the negative term contributed by one draw w.
  std::vector<std::size_t> counts;
  for (std::size_t o = 0; o < shape.opinions; ++o) counts.push_back(model.opinion.opinions.frequency(o));
  std::vector<double> weight(shape.opinions, 0.0);
  double total = 0.0;
  for (std::size_t o = 0; o < shape.opinions; ++o)
    if (o != positive) total += weight[o] = std::pow(static_cast<double>(counts[o]), 0.75);
  double mean = 0.0, second = 0.0;
  for (std::size_t o = 0; o < shape.opinions; ++o) {
    double f = 0.0;
    for (std::size_t c = 0; c < 2; ++c) f += q[c] * log_sigma(-oracle::phi(model.opinion, o, 0, c));
    mean += weight[o] / total * f;
    second += weight[o] / total * f * f;
  }
  const double sd = std::sqrt(second - mean * mean);

  double fixed = std::log(0.5) + entropy(q) * 0.1;
  for (std::size_t c = 0; c < 2; ++c) fixed += q[c] * log_sigma(oracle::phi(model.opinion, positive, 0, c));

  const std::size_t n = 100000;
  NegativeSamplingConfig cfg;
  cfg.negatives = n;
  cfg.alpha = 0.1;
  const double negative_part = elbo_negative_sampling(batch, model, cfg, rng) - fixed;
  CHECK(std::abs(negative_part / n - mean) <= 3.0 * sd / std::sqrt(static_cast<double>(n)));
}

TEST_CASE("with one draw the estimator is A(c) times grad log q(c|x)") {
  Rng rng(9);
  ToyShape shape;
  shape.classes = 3;
  const auto model = make_toy_model(shape, rng);
  const auto x = make_toy_batch(shape, model, rng).docs[0].features;
  const auto batch = one_pair_batch(x, 0, 5);
  const double alpha = 0.4;
  Rng draw(77);
  Rng replay = draw;
  const auto got = score_function_grad(batch, model, 1, draw, alpha);

  const auto q = oracle::q_of(model.sentiment, x);
  const double u = replay.uniform();
  std::size_t c = 0;
  for (double acc = q[0]; u >= acc && c + 1 < q.size(); acc += q[++c]) {
  }
  const double a = std::log(oracle::opinion_prob(model.opinion, 5, 0, c)) + std::log(1.0 / 3.0) - alpha * std::log(q[c]);
  for (std::size_t k = 0; k < 3; ++k)
    for (std::size_t d = 0; d < shape.features; ++d)
      CHECK(got[k * shape.features + d] == Approx(a * ((k == c ? 1.0 : 0.0) - q[k]) * x[d]).epsilon(1e-10));
}

TEST_CASE("a calibrated posterior gives a zero-mean estimator") {
  // q equal to the true posterior makes A(c) = log p(o | t) for every c.
  Rng rng(10);
  ToyShape shape;
  shape.classes = 3;
  shape.features = 1;
  auto model = make_toy_model(shape, rng);
  const auto truth = true_posterior(model.opinion, 2, 0, model.prior.distribution(3));
  for (std::size_t c = 0; c < 3; ++c) model.sentiment.weights[c] = std::log(truth[c]);
  const auto batch = one_pair_batch({1.0}, 0, 2);

  ObjectiveOptions opts;
  opts.objective = Objective::ExactL1;
  Gradient exact = Gradient::zeros_like(model);
  evaluate_objective(model, batch, opts, &exact);
  for (double g : exact.weights) CHECK(std::abs(g) <= 1e-12);

  const std::size_t draws = 100000;
  std::vector<double> sum(3, 0.0), sum_sq(3, 0.0);
  for (std::size_t i = 0; i < draws; ++i) {
    const auto g = score_function_grad(batch, model, 1, rng, 1.0);
    for (std::size_t k = 0; k < 3; ++k) {
      sum[k] += g[k];
      sum_sq[k] += g[k] * g[k];
    }
  }
  for (std::size_t k = 0; k < 3; ++k) {
    const double mean = sum[k] / draws;
    const double se = std::sqrt((sum_sq[k] / draws - mean * mean) / draws);
    CHECK(std::abs(mean) <= 3.0 * se + 1e-12);
  }
}

TEST_CASE("the estimator's sample mean matches the exact gradient on a 3-class toy") {
  Rng rng(11);
  ToyShape shape;
  shape.classes = 3;
  shape.docs = 1;
  shape.pairs_per_doc = 2;
  const auto model = make_toy_model(shape, rng);
  const auto batch = make_toy_batch(shape, model, rng);
  ObjectiveOptions opts;
  opts.objective = Objective::ExactL1;
  Gradient exact = Gradient::zeros_like(model);
  evaluate_objective(model, batch, opts, &exact);

  const std::size_t draws = 100000;
  std::vector<double> sum(exact.weights.size(), 0.0), sum_sq(exact.weights.size(), 0.0);
  for (std::size_t i = 0; i < draws; ++i) {
    const auto g = score_function_grad(batch, model, 1, rng, 1.0);
    for (std::size_t k = 0; k < g.size(); ++k) {
      sum[k] += g[k];
      sum_sq[k] += g[k] * g[k];
    }
  }
  int misses = 0;
  for (std::size_t k = 0; k < sum.size(); ++k) {
    const double mean = sum[k] / draws;
    const double se = std::sqrt((sum_sq[k] / draws - mean * mean) / draws);
    if (std::abs(mean - exact.weights[k]) > 3.0 * se) ++misses;
  }
  CHECK(misses == 0);
}

TEST_CASE("similarity thresholding") {
  const double s3 = std::sqrt(0.75);
  const auto emb = embeddings_of({{"a", {1.0, 0.0}},
                                  {"half", {0.5, s3}},
                                  {"close", {0.9, std::sqrt(1.0 - 0.81)}},
                                  {"far", {-0.9, std::sqrt(1.0 - 0.81)}},
                                  {"zero", {0.0, 0.0}}});
  CHECK(similarity_score("a", "half", emb, 0.8) == 0.0);
  CHECK(similarity_score("a", "close", emb, 0.8) == Approx(0.9).epsilon(1e-12));
  CHECK(similarity_score("a", "far", emb, 0.8) == Approx(-0.9).epsilon(1e-12));
  CHECK(similarity_score("a", "missing", emb, 0.0) == 0.0);

  const double z = cosine(*emb.find("a"), *emb.find("half"));
  CHECK(similarity_score("a", "half", emb, z) == z);
  CHECK(similarity_score("a", "half", emb, std::nextafter(z, 1.0)) == 0.0);

  std::vector<std::string> warnings;
  set_warning_handler([&](const std::string& m) { warnings.push_back(m); });
  CHECK(similarity_score("a", "zero", emb, 0.0) == 0.0);
  set_warning_handler({});
  CHECK(warnings.size() == 1);
}

TEST_CASE("regularizer") {
  Rng rng(12);
  ToyShape shape;
  shape.docs = 3;
  const auto model = make_toy_model(shape, rng);
  auto batch = make_toy_batch(shape, model, rng);

  batch.similarity.assign(9, 0.0);
  CHECK(regularizer(batch, model) == 0.0);

  for (auto& s : batch.similarity) s = rng.uniform() * 2.0 - 1.0;
  for (std::size_t i = 0; i < 3; ++i) batch.similarity[i * 3 + i] = 0.0;
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < i; ++j) batch.similarity[i * 3 + j] = batch.similarity[j * 3 + i];
  CHECK(regularizer(batch, model) == Approx(oracle::regularizer(model, batch)).epsilon(1e-12));

  auto same = batch;
  same.docs.resize(2);
  same.docs[1].features = same.docs[0].features;
  same.similarity = {0.0, 1.0, 1.0, 0.0};
  CHECK(regularizer(same, model) == 0.0);
}

TEST_CASE("fill_similarity uses each document's opinion word") {
  const auto emb = embeddings_of({{"good", {1.0, 0.0}}, {"great", {1.0, 0.1}}, {"bad", {-1.0, 0.0}}});
  Batch batch;
  for (const char* w : {"good", "great", "bad", "unknown"}) {
    BatchDoc d;
    d.reg_word = w;
    batch.docs.push_back(d);
  }
  fill_similarity(batch, emb, 0.8);
  REQUIRE(batch.similarity.size() == 16);
  CHECK(batch.similarity[0 * 4 + 1] == Approx(cosine(*emb.find("good"), *emb.find("great"))));
  CHECK(batch.similarity[1 * 4 + 0] == batch.similarity[0 * 4 + 1]);
  CHECK(batch.similarity[0 * 4 + 2] == Approx(-1.0));
  CHECK(batch.similarity[0 * 4 + 3] == 0.0);
  CHECK(batch.similarity[0] == 0.0);
}

TEST_CASE("finite differences are exact on the quadratic decay term") {
  Rng rng(13);
  ToyShape shape;
  auto model = make_toy_model(shape, rng);
  Batch batch = make_toy_batch(shape, model, rng);
  for (auto& d : batch.docs) d.pairs.clear();
  ObjectiveOptions opts;
  opts.weight_decay = 0.05;
  CHECK(gradient_check(model, batch, opts).max_relative_error <= 1e-9);
}

TEST_CASE("analytic gradients agree with finite differences") {
  Rng rng(14);
  for (Objective objective : {Objective::ExactL1, Objective::ExactL2, Objective::NegativeSamplingL3})
    for (PriorKind prior : {PriorKind::Uniform, PriorKind::Learned})
      for (std::size_t classes : {2u, 3u}) {
        ToyShape shape;
        shape.classes = classes;
        shape.features = 8;
        shape.embedding_dim = 8;
        shape.opinions = 10;
        auto model = make_toy_model(shape, rng, prior);
        auto batch = make_toy_batch(shape, model, rng);
        if (objective == Objective::NegativeSamplingL3) {
          std::vector<std::size_t> counts;
          for (std::size_t o = 0; o < shape.opinions; ++o) counts.push_back(model.opinion.opinions.frequency(o));
          draw_negatives(batch, NegativeSampler(counts, NegativeDistribution::Unigram), 5, rng);
        }
        batch.similarity.assign(shape.docs * shape.docs, 0.0);
        for (std::size_t i = 0; i < shape.docs; ++i)
          for (std::size_t j = i + 1; j < shape.docs; ++j)
            batch.similarity[i * shape.docs + j] = batch.similarity[j * shape.docs + i] = rng.uniform() * 2 - 1;
        ObjectiveOptions opts;
        opts.objective = objective;
        opts.alpha = 0.3;
        opts.beta = 0.5;
        opts.weight_decay = 1e-3;
        const auto result = gradient_check(model, batch, opts, 1e-5);
        INFO(objective_name(objective), " classes=", classes, " at ", result.worst_parameter);
        CHECK(result.max_relative_error < 1e-4);
      }
}

TEST_CASE("the regularizer alone has a matching gradient") {
  Rng rng(15);
  ToyShape shape;
  shape.docs = 4;
  auto model = make_toy_model(shape, rng);
  auto batch = make_toy_batch(shape, model, rng);
  for (auto& d : batch.docs) d.pairs.clear();
  batch.similarity.assign(16, 0.0);
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = i + 1; j < 4; ++j) batch.similarity[i * 4 + j] = batch.similarity[j * 4 + i] = rng.uniform();
  ObjectiveOptions opts;
  opts.beta = 1.0;
  CHECK(gradient_check(model, batch, opts).max_relative_error < 1e-4);
}

TEST_CASE("ascent on q alone drives the KL divergence down") {
  Rng rng(16);
  ToyShape shape;
  shape.docs = 1;
  shape.pairs_per_doc = 1;
  shape.classes = 3;
  auto model = make_toy_model(shape, rng, PriorKind::Learned);
  auto batch = make_toy_batch(shape, model, rng);
  batch.docs[0].pairs[0].target = 0;
  ObjectiveOptions opts;
  opts.objective = Objective::ExactL1;
  double previous = oracle::total_kl(model, batch);
  const double initial = previous;
  for (int step = 0; step < 200; ++step) {
    Gradient g = Gradient::zeros_like(model);
    evaluate_objective(model, batch, opts, &g);
    for (std::size_t k = 0; k < g.weights.size(); ++k) model.sentiment.weights[k] += 0.1 * g.weights[k];
    const double kl = oracle::total_kl(model, batch);
    CHECK(kl <= previous + 1e-15);
    previous = kl;
  }
  CHECK(previous < initial);
}
