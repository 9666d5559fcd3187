#include "core/checks.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <sstream>

#include <boost/math/distributions/chi_squared.hpp>

#include "core/error.hpp"
#include "core/evaluation.hpp"
#include "core/samplers.hpp"

namespace vusc {

namespace {

constexpr double kGradientTolerance = 1e-4;
constexpr double kChiSquareLevel = 1e-3;

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(3);
  s << v;
  return s.str();
}

ObjectiveOptions gradient_options(const CheckOptions& check, Objective objective, double alpha) {
  ObjectiveOptions o;
  o.objective = objective;
  o.alpha = alpha;
  o.weight_decay = 0.01;
  o.flip_entropy_gradient = check.fault == Fault::EntropySign;
  return o;
}

CheckResult check_elbo_bound(Rng& rng) {
  CheckResult r{"elbo.bound", true, "", 0.0};
  double worst_gap_error = 0.0;
  double worst_violation = -INFINITY;
  for (int draw = 0; draw < 100; ++draw) {
    ToyShape shape;
    shape.classes = draw % 2 == 0 ? 2 : 3;
    shape.opinions = 2 + rng.below(9);
    shape.pairs_per_doc = 1 + rng.below(3);
    const PriorKind prior = draw % 4 < 2 ? PriorKind::Uniform : PriorKind::Learned;
    AspectModel model = make_toy_model(shape, rng, prior);
    Batch batch = make_toy_batch(shape, model, rng);

    const double bound = elbo_exact(batch, model, 1.0, Objective::ExactL1);
    const Distribution p = model.prior.distribution(shape.classes);
    const std::vector<double> log_p = model.prior.log_distribution(shape.classes);
    double log_likelihood = 0.0, kl = 0.0;
    for (const auto& doc : batch.docs) {
      const Distribution q = posterior(model.sentiment, doc.features);
      for (const auto& pair : doc.pairs) {
        std::vector<double> joint(shape.classes);
        for (std::size_t c = 0; c < shape.classes; ++c)
          joint[c] = log_p[c] + opinion_log_prob(model.opinion, pair.opinion, pair.target, c);
        log_likelihood += log_sum_exp(joint);
        const Distribution truth = true_posterior(model.opinion, pair.opinion, pair.target, p);
        for (std::size_t c = 0; c < shape.classes; ++c)
          if (q[c] > 0.0) kl += q[c] * (std::log(q[c]) - std::log(truth[c]));
      }
    }
    worst_violation = std::max(worst_violation, bound - log_likelihood);
    worst_gap_error = std::max(worst_gap_error, std::abs((log_likelihood - bound) - kl));
  }
  r.passed = worst_violation <= 1e-12 && worst_gap_error <= 1e-9;
  r.detail = "max(elbo - loglik) = " + fmt(worst_violation) + ", max |gap - KL| = " + fmt(worst_gap_error);
  return r;
}

CheckResult check_gradient(const std::string& name, const CheckOptions& check, Rng& rng, Objective objective,
                           PriorKind prior, double alpha) {
  CheckResult r{name, true, "", 0.0};
  double worst = 0.0;
  std::string where;
  for (std::size_t classes : {2u, 3u}) {
    ToyShape shape;
    shape.classes = classes;
    shape.features = 8;
    shape.embedding_dim = 6;
    shape.opinions = 10;
    AspectModel model = make_toy_model(shape, rng, prior);
    Batch batch = make_toy_batch(shape, model, rng);
    if (objective == Objective::NegativeSamplingL3) {
      std::vector<std::size_t> counts;
      for (std::size_t o = 0; o < model.opinion.num_opinions(); ++o) counts.push_back(model.opinion.opinions.frequency(o));
      draw_negatives(batch, NegativeSampler(counts, NegativeDistribution::Unigram), 5, rng);
    }
    const auto result = gradient_check(model, batch, gradient_options(check, objective, alpha));
    if (result.max_relative_error >= worst) {
      worst = result.max_relative_error;
      where = "|C|=" + std::to_string(classes) + " " + result.worst_parameter;
    }
  }
  r.passed = worst < kGradientTolerance;
  r.detail = "max relative error " + fmt(worst) + " at " + where;
  return r;
}

CheckResult check_regularizer_gradient(const CheckOptions& check, Rng& rng) {
  CheckResult r{"gradient.regularizer", true, "", 0.0};
  ToyShape shape;
  shape.classes = 3;
  shape.features = 8;
  shape.docs = 5;
  shape.scale = 2.0;
  AspectModel model = make_toy_model(shape, rng);
  Batch batch = make_toy_batch(shape, model, rng);
  for (auto& doc : batch.docs) doc.pairs.clear();
  const std::size_t n = batch.docs.size();
  batch.similarity.assign(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const double s = rng.uniform() < 0.25 ? 0.0 : 2.0 * rng.uniform() - 1.0;
      batch.similarity[i * n + j] = batch.similarity[j * n + i] = s;
    }
  ObjectiveOptions options = gradient_options(check, Objective::ExactL2, 1.0);
  options.weight_decay = 0.0;
  options.beta = 0.5;
  const auto result = gradient_check(model, batch, options);
  r.passed = result.max_relative_error < kGradientTolerance;
  r.detail = "max relative error " + fmt(result.max_relative_error) + " at " + result.worst_parameter;
  return r;
}

CheckResult check_score_function(const CheckOptions& check, Rng& rng) {
  CheckResult r{"estimator.score_function", true, "", 0.0};
  ToyShape shape;
  shape.classes = 3;
  shape.features = 4;
  shape.docs = 1;
  shape.pairs_per_doc = 3;
  AspectModel model = make_toy_model(shape, rng, PriorKind::Learned);
  Batch batch = make_toy_batch(shape, model, rng);

  ObjectiveOptions exact_options;
  exact_options.objective = Objective::ExactL1;
  exact_options.flip_entropy_gradient = check.fault == Fault::EntropySign;
  Gradient exact = Gradient::zeros_like(model);
  evaluate_objective(model, batch, exact_options, &exact);

  constexpr std::size_t draws = 100000;
  const std::size_t size = exact.weights.size();
  std::vector<double> mean(size, 0.0), m2(size, 0.0);
  for (std::size_t t = 1; t <= draws; ++t) {
    const std::vector<double> g = score_function_grad(batch, model, 1, rng);
    for (std::size_t k = 0; k < size; ++k) {
      const double delta = g[k] - mean[k];
      mean[k] += delta / static_cast<double>(t);
      m2[k] += delta * (g[k] - mean[k]);
    }
  }
  double worst = 0.0;
  for (std::size_t k = 0; k < size; ++k) {
    const double se = std::sqrt(m2[k] / static_cast<double>(draws - 1) / static_cast<double>(draws));
    const double diff = std::abs(mean[k] - exact.weights[k]);
    const double z = se > 0.0 ? diff / se : (diff == 0.0 ? 0.0 : INFINITY);
    worst = std::max(worst, z);
  }
  r.passed = worst <= 3.0;
  r.detail = "max |mean - exact| = " + fmt(worst) + " standard errors over " + std::to_string(draws) + " draws";
  return r;
}

CheckResult check_hungarian(Rng& rng) {
  CheckResult r{"hungarian.bruteforce", true, "", 0.0};
  std::size_t mismatches = 0;
  for (int m = 0; m < 200; ++m) {
    const std::size_t n = 1 + static_cast<std::size_t>(m % 6);
    CostMatrix cost(n, std::vector<double>(n));
    for (auto& row : cost)
      for (auto& c : row) c = m % 2 == 0 ? static_cast<double>(rng.below(4)) : rng.normal();
    const Assignment got = hungarian(cost);

    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    double best = INFINITY;
    do best = std::min(best, assignment_cost(cost, perm));
    while (std::next_permutation(perm.begin(), perm.end()));
    std::iota(perm.begin(), perm.end(), 0);
    Assignment first;
    do {
      if (assignment_cost(cost, perm) <= best + 1e-9) {
        first = perm;
        break;
      }
    } while (std::next_permutation(perm.begin(), perm.end()));

    if (std::abs(assignment_cost(cost, got) - best) > 1e-9 || got != first) ++mismatches;
  }
  r.passed = mismatches == 0;
  r.detail = std::to_string(mismatches) + " of 200 matrices disagree with enumeration";
  return r;
}

CheckResult check_negative_sampler(Rng& rng) {
  CheckResult r{"sampler.negative", true, "", 0.0};
  const std::vector<std::size_t> counts{50, 30, 20, 10, 5, 3, 2, 1};
  const std::size_t positive = 1;
  NegativeSampler sampler(counts, NegativeDistribution::Unigram);
  std::vector<double> expected(counts.size(), 0.0);
  double z = 0.0;
  for (std::size_t w = 0; w < counts.size(); ++w)
    if (w != positive) z += std::pow(static_cast<double>(counts[w]), 0.75);
  for (std::size_t w = 0; w < counts.size(); ++w)
    if (w != positive) expected[w] = std::pow(static_cast<double>(counts[w]), 0.75) / z;
  std::vector<std::size_t> observed(counts.size(), 0);
  for (int t = 0; t < 100000; ++t) ++observed[sampler.sample(rng, positive)];
  const double p = observed[positive] == 0 ? chi_square_p_value(observed, expected) : 0.0;
  r.passed = p > kChiSquareLevel;
  r.detail = "chi-square p = " + fmt(p) + ", positive drawn " + std::to_string(observed[positive]) + " times";
  return r;
}

CheckResult check_pair_sampler(Rng& rng) {
  CheckResult r{"sampler.pair", true, "", 0.0};
  const std::vector<std::size_t> freqs{1, 2, 5, 10, 40, 100};
  PairSampler sampler(freqs);
  std::vector<double> expected(freqs.size());
  double z = 0.0;
  for (std::size_t i = 0; i < freqs.size(); ++i) z += std::pow(static_cast<double>(freqs[i]), -0.25);
  for (std::size_t i = 0; i < freqs.size(); ++i) expected[i] = std::pow(static_cast<double>(freqs[i]), -0.25) / z;
  std::vector<std::size_t> observed(freqs.size(), 0);
  for (int t = 0; t < 100000; ++t) ++observed[sampler.sample(rng)];
  const double p = chi_square_p_value(observed, expected);
  r.passed = p > kChiSquareLevel;
  r.detail = "chi-square p = " + fmt(p);
  return r;
}

}  // namespace

Fault parse_fault(const std::string& text) {
  if (text.empty() || text == "none") return Fault::None;
  if (text == "entropy-sign") return Fault::EntropySign;
  fail(ErrorKind::InvalidArgument, "unknown fault '" + text + "' (expected entropy-sign)");
}

std::vector<std::string> check_names() {
  return {"elbo.bound",           "gradient.l1",          "gradient.l2",         "gradient.l3",
          "gradient.regularizer", "estimator.score_function", "hungarian.bruteforce", "sampler.negative",
          "sampler.pair"};
}

std::vector<CheckResult> run_checks(const CheckOptions& options, const CheckCallback& on_result) {
  std::vector<CheckResult> results;
  const auto names = check_names();
  for (std::size_t index = 0; index < names.size(); ++index) {
    const std::string& name = names[index];
    if (name.rfind(options.only, 0) != 0) continue;
    // Each check draws from its own stream so results do not depend on which others ran.
    Rng rng(options.seed + 1000 * index);
    const auto start = std::chrono::steady_clock::now();
    CheckResult r;
    try {
      if (name == "elbo.bound") r = check_elbo_bound(rng);
      else if (name == "gradient.l1") r = check_gradient(name, options, rng, Objective::ExactL1, PriorKind::Learned, 0.7);
      else if (name == "gradient.l2") r = check_gradient(name, options, rng, Objective::ExactL2, PriorKind::Uniform, 1.0);
      else if (name == "gradient.l3")
        r = check_gradient(name, options, rng, Objective::NegativeSamplingL3, PriorKind::Learned, 0.1);
      else if (name == "gradient.regularizer") r = check_regularizer_gradient(options, rng);
      else if (name == "estimator.score_function") r = check_score_function(options, rng);
      else if (name == "hungarian.bruteforce") r = check_hungarian(rng);
      else if (name == "sampler.negative") r = check_negative_sampler(rng);
      else r = check_pair_sampler(rng);
    } catch (const std::exception& e) {
      r = CheckResult{name, false, std::string("error: ") + e.what(), 0.0};
    }
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (on_result) on_result(r);
    results.push_back(std::move(r));
  }
  if (results.empty()) fail(ErrorKind::InvalidArgument, "no check matches '" + options.only + "'");
  return results;
}

AspectModel make_toy_model(const ToyShape& shape, Rng& rng, PriorKind prior) {
  Vocab opinions, targets;
  for (std::size_t o = 0; o < shape.opinions; ++o) opinions.add("o" + std::to_string(o), 1 + rng.below(50));
  for (std::size_t t = 0; t < shape.targets; ++t) targets.add("t" + std::to_string(t));
  AspectModel m;
  m.aspect = "toy";
  m.sentiment = SentimentModel(shape.classes, shape.features);
  m.opinion = OpinionModel(shape.classes, shape.embedding_dim, opinions, targets);
  if (shape.targets > 1) m.opinion.relevant.back() = 0;
  for (auto& w : m.sentiment.weights) w = shape.scale * rng.normal();
  for (auto& a : m.opinion.context) a = shape.scale * rng.normal();
  for (auto& e : m.opinion.embeddings) e = shape.scale * rng.normal();
  if (prior == PriorKind::Learned) {
    m.prior = PriorModel::learned(shape.classes);
    for (auto& l : m.prior.logits) l = rng.normal();
  }
  return m;
}

Batch make_toy_batch(const ToyShape& shape, const AspectModel& model, Rng& rng) {
  Batch batch;
  for (std::size_t i = 0; i < shape.docs; ++i) {
    BatchDoc doc;
    doc.features.resize(model.sentiment.dim);
    double norm = 0.0;
    for (auto& x : doc.features) {
      x = std::abs(rng.normal());
      norm += x * x;
    }
    for (auto& x : doc.features) x /= std::sqrt(norm);
    for (std::size_t p = 0; p < shape.pairs_per_doc; ++p)
      doc.pairs.push_back(PairSample{rng.below(model.opinion.targets.size()), rng.below(model.opinion.num_opinions()), {}});
    doc.reg_word = model.opinion.opinions.word(doc.pairs.empty() ? 0 : doc.pairs.front().opinion);
    batch.docs.push_back(std::move(doc));
  }
  return batch;
}

double chi_square_p_value(const std::vector<std::size_t>& observed, const std::vector<double>& expected) {
  if (observed.size() != expected.size()) fail(ErrorKind::InvalidArgument, "chi-square: size mismatch");
  const double total = static_cast<double>(std::accumulate(observed.begin(), observed.end(), std::size_t{0}));
  double stat = 0.0;
  std::size_t cells = 0;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    if (expected[i] <= 0.0) {
      if (observed[i] != 0) return 0.0;
      continue;
    }
    const double e = total * expected[i];
    stat += (static_cast<double>(observed[i]) - e) * (static_cast<double>(observed[i]) - e) / e;
    ++cells;
  }
  if (cells < 2) fail(ErrorKind::InvalidArgument, "chi-square needs at least two cells");
  boost::math::chi_squared dist(static_cast<double>(cells - 1));
  return boost::math::cdf(boost::math::complement(dist, stat));
}

}  // namespace vusc
