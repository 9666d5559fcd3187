#include <doctest.h>

#include <cmath>
#include <numeric>

#include <json.hpp>

#include "core/checkpoint.hpp"
#include "core/checks.hpp"
#include "core/error.hpp"
#include "core/model.hpp"
#include "core/rng.hpp"
#include "oracle.hpp"
#include "test_util.hpp"

using namespace vusc;
using doctest::Approx;

namespace {

Vocab vocab_of(std::initializer_list<const char*> words) {
  Vocab v;
  for (const char* w : words) v.add(w);
  return v;
}

void check_distribution(const Distribution& d) {
  double sum = 0.0;
  for (double p : d) {
    CHECK(p >= 0.0);
    sum += p;
  }
  CHECK(std::abs(sum - 1.0) <= 1e-9);
}

}  // namespace

TEST_CASE("zero weights give a uniform posterior") {
  SentimentModel m(3, 4);
  const auto q = posterior(m, std::vector<double>{0.5, 0.1, 0.0, 0.3});
  for (double p : q) CHECK(p == Approx(1.0 / 3.0).epsilon(1e-15));
}

TEST_CASE("posterior of logits (1, 1 + ln 3) is (0.25, 0.75)") {
  SentimentModel m(2, 1);
  m.weights = {1.0, 1.0 + std::log(3.0)};
  const auto q = posterior(m, std::vector<double>{1.0});
  CHECK(std::abs(q[0] - 0.25) <= 1e-15);
  CHECK(std::abs(q[1] - 0.75) <= 1e-15);
}

TEST_CASE("posterior agrees with an unstabilized softmax at small scale") {
  Rng rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    SentimentModel m(2 + rng.below(3), 1 + rng.below(8));
    for (auto& w : m.weights) w = rng.normal();
    std::vector<double> x(m.dim);
    for (auto& v : x) v = rng.uniform();
    const auto q = posterior(m, x);
    const auto expected = oracle::q_of(m, x);
    check_distribution(q);
    for (std::size_t c = 0; c < q.size(); ++c) CHECK(std::abs(q[c] - expected[c]) <= 1e-12);
  }
}

TEST_CASE("softmax is invariant to a common shift and survives large logits") {
  Rng rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> z(4);
    for (auto& v : z) v = rng.normal();
    const double shift = rng.normal(0.0, 50.0);
    auto shifted = z;
    for (auto& v : shifted) v += shift;
    const auto a = softmax(z);
    const auto b = softmax(shifted);
    for (std::size_t i = 0; i < z.size(); ++i) CHECK(std::abs(a[i] - b[i]) <= 1e-12);
  }
  const auto big = softmax(std::vector<double>{1000.0, 1000.0 + std::log(3.0)});
  CHECK(big[1] == Approx(0.75));
  check_distribution(big);
}

TEST_CASE("posterior rejects non-finite and wrongly sized features") {
  SentimentModel m(2, 2);
  CHECK_THROWS_AS(posterior(m, std::vector<double>{NAN, 0.0}), Error);
  CHECK_THROWS_AS(posterior(m, std::vector<double>{INFINITY, 0.0}), Error);
  CHECK_THROWS_AS(posterior(m, std::vector<double>{1.0}), Error);
}

TEST_CASE("phi is zero for targets outside the aspect's set") {
  OpinionModel m(2, 3, vocab_of({"good", "bad"}), vocab_of({"price", "weather"}));
  for (auto& v : m.context) v = 1.0;
  for (auto& v : m.embeddings) v = 2.0;
  m.relevant[1] = 0;
  CHECK(phi(m, 0, 1, 0) == 0.0);
  CHECK(phi(m, 0, 0, 0) == 6.0);
  const auto uniform = opinion_softmax(m, 1, 1);
  CHECK(uniform[0] == Approx(0.5));
}

TEST_CASE("phi of a unit context and (5, 0, ...) is 5") {
  OpinionModel m(2, 3, vocab_of({"good"}), vocab_of({"price"}));
  m.context = {1, 0, 0, 0, 0, 0};
  m.embeddings = {5, 0, 0};
  CHECK(phi(m, 0, 0, 0) == 5.0);
  CHECK(phi(m, 0, 0, 1) == 0.0);
}

TEST_CASE("phi matches an independent dot product and is linear in the context") {
  Rng rng(7);
  ToyShape shape;
  for (int trial = 0; trial < 50; ++trial) {
    auto model = make_toy_model(shape, rng);
    auto& m = model.opinion;
    for (std::size_t o = 0; o < m.num_opinions(); ++o)
      for (std::size_t t = 0; t < m.targets.size(); ++t)
        for (std::size_t c = 0; c < m.num_classes; ++c) {
          CHECK(std::abs(phi(m, o, t, c) - oracle::phi(m, o, t, c)) <= 1e-12);
          if (!m.is_relevant(t)) continue;
          const double scale = rng.normal();
          auto scaled = m;
          for (auto& v : scaled.context_row(c)) v *= scale;
          CHECK(std::abs(phi(scaled, o, t, c) - scale * phi(m, o, t, c)) <= 1e-12);
        }
  }
}

TEST_CASE("opinion softmax: zero context is uniform, one word is certain, random sums to one") {
  OpinionModel zero(2, 2, vocab_of({"a", "b", "c", "d"}), vocab_of({"t"}));
  for (auto& v : zero.embeddings) v = 3.0;
  for (double p : opinion_softmax(zero, 0, 0)) CHECK(p == Approx(0.25));

  OpinionModel single(2, 2, vocab_of({"a"}), vocab_of({"t"}));
  single.context = {4, -1, 2, 2};
  single.embeddings = {1, 1};
  CHECK(opinion_softmax(single, 0, 1)[0] == 1.0);

  Rng rng(9);
  ToyShape shape;
  shape.scale = 3.0;
  const auto model = make_toy_model(shape, rng);
  for (std::size_t t = 0; t < shape.targets; ++t)
    for (std::size_t c = 0; c < shape.classes; ++c) {
      const auto p = opinion_softmax(model.opinion, t, c);
      check_distribution(p);
      for (std::size_t o = 0; o < p.size(); ++o) {
        CHECK(std::abs(p[o] - oracle::opinion_prob(model.opinion, o, t, c)) <= 1e-12);
        CHECK(std::abs(std::exp(opinion_log_prob(model.opinion, o, t, c)) - p[o]) <= 1e-12);
      }
    }
}

TEST_CASE("entropy") {
  CHECK(entropy(std::vector<double>{0.5, 0.5}) == Approx(std::log(2.0)).epsilon(1e-15));
  CHECK(entropy(std::vector<double>{0.0, 1.0, 0.0}) == 0.0);
  // -0.25 ln 0.25 - 0.75 ln 0.75 evaluated in long double.
  const long double expected = -0.25L * std::log(0.25L) - 0.75L * std::log(0.75L);
  CHECK(std::abs(entropy(std::vector<double>{0.25, 0.75}) - static_cast<double>(expected)) <= 1e-15);
  CHECK(std::abs(entropy(std::vector<double>{0.25, 0.75}) - 0.5623351446188083) <= 1e-15);
}

TEST_CASE("true posterior") {
  OpinionModel flat(2, 2, vocab_of({"a", "b"}), vocab_of({"t"}));
  auto p = true_posterior(flat, 0, 0, std::vector<double>{0.5, 0.5});
  CHECK(p[0] == Approx(0.5));

  Rng rng(11);
  ToyShape shape;
  shape.classes = 3;
  const auto model = make_toy_model(shape, rng);
  p = true_posterior(model.opinion, 2, 0, std::vector<double>{0.0, 1.0, 0.0});
  CHECK(p[1] == 1.0);
  CHECK(p[0] == 0.0);

  CHECK_THROWS_AS(true_posterior(model.opinion, 2, 0, std::vector<double>{0.0, 0.0, 0.0}), Error);

  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> prior(3);
    for (auto& v : prior) v = rng.uniform() + 0.01;
    const double total = std::accumulate(prior.begin(), prior.end(), 0.0);
    for (auto& v : prior) v /= total;
    const std::size_t o = rng.below(shape.opinions);
    const std::size_t t = rng.below(shape.targets);
    const auto got = true_posterior(model.opinion, o, t, prior);
    std::vector<double> joint(3);
    double z = 0.0;
    for (std::size_t c = 0; c < 3; ++c) z += joint[c] = prior[c] * oracle::opinion_prob(model.opinion, o, t, c);
    for (std::size_t c = 0; c < 3; ++c) CHECK(std::abs(got[c] - joint[c] / z) <= 1e-12);
    check_distribution(got);

    // A uniform prior leaves the normalized likelihood slice.
    const auto uniform = true_posterior(model.opinion, o, t, std::vector<double>(3, 1.0 / 3.0));
    double lz = 0.0;
    for (std::size_t c = 0; c < 3; ++c) lz += oracle::opinion_prob(model.opinion, o, t, c);
    for (std::size_t c = 0; c < 3; ++c)
      CHECK(std::abs(uniform[c] - oracle::opinion_prob(model.opinion, o, t, c) / lz) <= 1e-12);
  }
}

TEST_CASE("argmax breaks ties toward the lowest index") {
  CHECK(argmax(std::vector<double>{0.5, 0.5}) == 0);
  CHECK(argmax(std::vector<double>{0.1, 0.45, 0.45}) == 1);
}

TEST_CASE("learned priors are softmaxes of their logits") {
  auto prior = PriorModel::learned(3);
  prior.logits = {0.0, std::log(2.0), std::log(5.0)};
  const auto d = prior.distribution(3);
  CHECK(d[0] == Approx(0.125));
  CHECK(d[2] == Approx(0.625));
  CHECK(PriorModel::uniform().distribution(4)[3] == 0.25);
  CHECK_THROWS_AS(prior.distribution(2), Error);
}

TEST_CASE("checkpoints round trip exactly") {
  Rng rng(13);
  ToyShape shape;
  TrainedModel model;
  for (int f = 0; f < static_cast<int>(shape.features); ++f) model.features.add("w" + std::to_string(f), 1 + f);
  model.aspects.push_back(make_toy_model(shape, rng, PriorKind::Learned));
  model.aspects.push_back(make_toy_model(shape, rng, PriorKind::Uniform));
  model.aspects[0].aspect = "room";
  model.aspects[1].aspect = "price";
  const auto path = testutil::scratch_file("model.json");
  save_checkpoint(path, model);
  const auto back = load_checkpoint(path, model.features.hash());
  REQUIRE(back.aspects.size() == 2);
  CHECK(back.features.words() == model.features.words());
  for (std::size_t a = 0; a < 2; ++a) {
    CHECK(back.aspects[a].aspect == model.aspects[a].aspect);
    CHECK(back.aspects[a].sentiment.weights == model.aspects[a].sentiment.weights);
    CHECK(back.aspects[a].opinion.context == model.aspects[a].opinion.context);
    CHECK(back.aspects[a].opinion.embeddings == model.aspects[a].opinion.embeddings);
    CHECK(back.aspects[a].opinion.relevant == model.aspects[a].opinion.relevant);
    CHECK(back.aspects[a].opinion.opinions.words() == model.aspects[a].opinion.opinions.words());
    CHECK(back.aspects[a].prior.kind == model.aspects[a].prior.kind);
    CHECK(back.aspects[a].prior.logits == model.aspects[a].prior.logits);
  }
  CHECK(back.find("price") != nullptr);
  CHECK(back.find("smell") == nullptr);

  SUBCASE("a different expected feature vocabulary is rejected") {
    CHECK_THROWS_AS(load_checkpoint(path, model.features.hash() ^ 1), Error);
  }
  SUBCASE("an edited word list no longer matches its stored hash") {
    auto j = nlohmann::json::parse(testutil::read_file(path));
    j["aspects"][0]["opinions"]["words"][0] = "tampered";
    const auto bad = testutil::scratch_file("tampered.json");
    testutil::write_file(bad, j.dump());
    CHECK_THROWS_AS(load_checkpoint(bad), Error);
  }
  SUBCASE("a wrongly sized matrix is rejected") {
    auto j = nlohmann::json::parse(testutil::read_file(path));
    j["aspects"][0]["weights"].erase(0);
    const auto bad = testutil::scratch_file("short.json");
    testutil::write_file(bad, j.dump());
    CHECK_THROWS_AS(load_checkpoint(bad), Error);
  }
}
