#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include <json.hpp>

#include "builders.hpp"
#include "core/error.hpp"
#include "core/evaluation.hpp"
#include "core/rng.hpp"
#include "oracle.hpp"
#include "test_util.hpp"

using namespace vusc;
using doctest::Approx;

namespace {

CostMatrix random_matrix(Rng& rng, std::size_t n, bool integer) {
  CostMatrix m(n, std::vector<double>(n));
  for (auto& row : m)
    for (auto& v : row) v = integer ? static_cast<double>(rng.below(4)) : rng.normal();
  return m;
}

Document labelled(const std::string& id, const std::string& text, int gold, std::optional<int> overall = {}) {
  auto d = build::doc(id, {text});
  d.gold_labels["food"] = gold;
  d.overall_polarity = overall;
  return d;
}

OpinionLexicon demo_lexicon() {
  OpinionLexicon lex;
  lex.positive = {"good", "great"};
  lex.negative = {"terrible", "bland"};
  return lex;
}

PairSet food_pairs(std::initializer_list<std::pair<const char*, const char*>> doc_opinions) {
  PairSet p;
  p.aspects = {"food"};
  for (const auto& [doc, opinion] : doc_opinions) p.pairs.push_back({"food", opinion, 0, doc, Rule::R1});
  return p;
}

}  // namespace

TEST_CASE("hungarian on small fixed matrices") {
  CHECK(hungarian({{0, 1}, {1, 0}}) == Assignment{0, 1});
  CHECK(hungarian({{1, 0}, {0, 1}}) == Assignment{1, 0});
  CHECK(hungarian({{7.5}}) == Assignment{0});
  CHECK(hungarian({{0, 0, 0}, {0, 0, 0}, {0, 0, 0}}) == Assignment{0, 1, 2});
  CHECK(assignment_cost({{0, 1}, {1, 0}}, {0, 1}) == 0.0);
}

TEST_CASE("hungarian rejects malformed matrices") {
  CHECK_THROWS_AS(hungarian({{0, 1}, {1}}), Error);
  CHECK_THROWS_AS(hungarian({{0, 1, 2}, {1, 0, 2}}), Error);
  CHECK_THROWS_AS(hungarian({}), Error);
  CHECK_THROWS_AS(hungarian({{0, NAN}, {1, 0}}), Error);
}

TEST_CASE("hungarian agrees with brute force, including tie-breaking") {
  Rng rng(31);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + rng.below(6);
    const auto cost = random_matrix(rng, n, trial % 2 == 0);
    const auto got = hungarian(cost);
    const auto expected = oracle::brute_force_assignment(cost);
    CHECK(std::abs(assignment_cost(cost, got) - oracle::assignment_cost(cost, expected)) <= 1e-9);
    CHECK(got == expected);
  }
}

TEST_CASE("adding a constant to one row keeps the assignment optimal") {
  Rng rng(32);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 2 + rng.below(5);
    auto cost = random_matrix(rng, n, false);
    const std::size_t row = rng.below(n);
    const double shift = rng.normal(0.0, 10.0);
    for (auto& v : cost[row]) v += shift;
    const auto got = hungarian(cost);
    CHECK(std::abs(assignment_cost(cost, got) -
                   oracle::assignment_cost(cost, oracle::brute_force_assignment(cost))) <= 1e-9);
  }
}

TEST_CASE("permuted predictions score 1") {
  const std::vector<int> gold{0, 1, 2, 1, 0, 2, 2};
  std::vector<std::size_t> predicted;
  const std::size_t relabel[] = {2, 0, 1};
  for (int g : gold) predicted.push_back(relabel[g]);
  const auto r = evaluate_predictions(predicted, gold, 3);
  CHECK(r.accuracy == 1.0);
  CHECK(r.documents == 7);
}

TEST_CASE("a single cluster on balanced gold scores one half") {
  const std::vector<int> gold{0, 1, 0, 1, 1, 0};
  const std::vector<std::size_t> predicted(6, 0);
  CHECK(evaluate_predictions(predicted, gold, 2).accuracy == 0.5);
}

TEST_CASE("random predictions on balanced gold never fall below one half") {
  Rng rng(33);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<int> gold;
    std::vector<std::size_t> predicted;
    for (int i = 0; i < 1000; ++i) {
      gold.push_back(i % 2);
      predicted.push_back(rng.below(2));
    }
    CHECK(evaluate_predictions(predicted, gold, 2).accuracy >= 0.5);
  }
}

TEST_CASE("accuracy is invariant under relabelling the clusters") {
  Rng rng(34);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<int> gold;
    std::vector<std::size_t> predicted;
    for (int i = 0; i < 60; ++i) {
      gold.push_back(static_cast<int>(rng.below(3)));
      predicted.push_back(rng.below(3));
    }
    std::vector<std::size_t> perm{0, 1, 2};
    rng.shuffle(perm);
    std::vector<std::size_t> relabelled;
    for (auto p : predicted) relabelled.push_back(perm[p]);
    CHECK(evaluate_predictions(predicted, gold, 3).accuracy == evaluate_predictions(relabelled, gold, 3).accuracy);

    // Counting oracle: best mapping over all 3! permutations.
    std::vector<std::size_t> map{0, 1, 2};
    std::size_t best = 0;
    do {
      std::size_t hits = 0;
      for (std::size_t i = 0; i < gold.size(); ++i) hits += map[predicted[i]] == static_cast<std::size_t>(gold[i]);
      best = std::max(best, hits);
    } while (std::next_permutation(map.begin(), map.end()));
    CHECK(evaluate_predictions(predicted, gold, 3).accuracy == Approx(best / 60.0));
  }
}

TEST_CASE("evaluation needs gold labels") {
  Rng rng(35);
  SentimentModel s(2, 1);
  AspectModel m;
  m.aspect = "food";
  m.sentiment = s;
  Vocab features;
  features.add("tasty");
  std::vector<Document> docs{build::doc("d", {"tasty"})};
  CHECK_THROWS_AS(evaluate(m, features, docs), Error);
  docs[0].gold_labels["food"] = 1;
  CHECK(evaluate(m, features, docs).accuracy == 1.0);
}

TEST_CASE("majority baseline") {
  std::vector<Document> train, eval;
  for (int i = 0; i < 10; ++i) train.push_back(labelled("t" + std::to_string(i), "x", i < 7 ? 1 : 0));
  for (int i = 0; i < 8; ++i) eval.push_back(labelled("e" + std::to_string(i), "x", i < 5 ? 1 : 0));
  CHECK(majority_baseline(train, eval, "food") == Approx(5.0 / 8.0));

  std::vector<Document> tied{labelled("a", "x", 0), labelled("b", "x", 1)};
  CHECK(majority_baseline(tied, eval, "food") == Approx(3.0 / 8.0));

  CHECK_THROWS_AS(majority_baseline(train, eval, "service"), Error);
}

TEST_CASE("lexicon votes follow the majority") {
  std::vector<Document> docs{labelled("d", "good food , terrible service , great wine", 1)};
  const auto pairs = food_pairs({{"d", "good"}, {"d", "terrible"}, {"d", "great"}});
  LexiconOptions o;
  o.trials = 3;
  const auto r = lexicon_baseline(docs, pairs, "food", demo_lexicon(), o);
  CHECK(r.mean == 1.0);
  CHECK(r.stddev == 0.0);
}

TEST_CASE("a preceding negation flips the vote") {
  std::vector<Document> docs{labelled("d", "the food was not good", 0), labelled("e", "not bad but good", 0),
                             labelled("f", "not at all a very good meal", 1)};
  const auto pairs = food_pairs({{"d", "good"}, {"e", "good"}, {"f", "good"}});
  const auto r = lexicon_baseline(docs, pairs, "food", demo_lexicon(), {});
  // d: "not" directly precedes good. e: "not" is three tokens before good.
  // f: "not" is five tokens before good, outside the window.
  CHECK(r.mean == 1.0);
  LexiconOptions narrow;
  narrow.negation_window = 2;
  CHECK(lexicon_baseline(docs, pairs, "food", demo_lexicon(), narrow).mean == Approx(2.0 / 3.0));
}

TEST_CASE("lexicon ties are broken randomly or by the overall label") {
  std::vector<Document> docs;
  for (int i = 0; i < 40; ++i) docs.push_back(labelled("d" + std::to_string(i), "fine", i % 2, i % 2));
  const PairSet none = food_pairs({});
  LexiconOptions o;
  o.trials = 5;
  o.seed = 9;
  const auto random = lexicon_baseline(docs, none, "food", demo_lexicon(), o);
  CHECK(random.trials.size() == 5);
  CHECK(random.stddev > 0.0);
  const auto again = lexicon_baseline(docs, none, "food", demo_lexicon(), o);
  CHECK(again.trials == random.trials);

  o.tie_break = TieBreak::Overall;
  const auto overall = lexicon_baseline(docs, none, "food", demo_lexicon(), o);
  CHECK(overall.mean == 1.0);
  CHECK(overall.stddev == 0.0);
}

TEST_CASE("lexicon files") {
  const auto lex = load_opinion_lexicon(testutil::fixture("lexicon_demo.txt"));
  CHECK_FALSE(lex.positive.empty());
  CHECK_FALSE(lex.negative.empty());
  CHECK(lex.negation.count("not") == 1);

  const auto bad = testutil::scratch_file("overlap_lexicon.txt");
  testutil::write_file(bad, "[positive]\ngood\n[negative]\ngood bad\n");
  CHECK_THROWS_AS(load_opinion_lexicon(bad), Error);

  std::vector<Document> docs{labelled("d", "good", 1)};
  CHECK_THROWS_AS(lexicon_baseline(docs, food_pairs({}), "food", OpinionLexicon{}, {}), Error);
}

TEST_CASE("report lines carry the fields in order") {
  const auto line = format_report_line("room", "vusc", "test", 0.75, 0.0);
  CHECK(line == R"({"aspect":"room","method":"vusc","split":"test","mean":0.75,"std":0.0})");
  const auto j = nlohmann::json::parse(line);
  CHECK(j["mean"].get<double>() == 0.75);
}
