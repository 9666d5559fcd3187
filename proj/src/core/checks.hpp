#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "core/model.hpp"
#include "core/objective.hpp"
#include "core/rng.hpp"

namespace vusc {

enum class Fault { None, EntropySign };

struct CheckOptions {
  std::uint64_t seed = 42;
  Fault fault = Fault::None;
  std::string only;  // run only checks whose name starts with this prefix
};

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
  double seconds = 0.0;
};

using CheckCallback = std::function<void(const CheckResult&)>;

// The built-in verification suite: ELBO bound, gradients, likelihood-ratio
// estimator, Hungarian oracle and sampler goodness of fit.
std::vector<CheckResult> run_checks(const CheckOptions& options, const CheckCallback& on_result = {});

std::vector<std::string> check_names();

Fault parse_fault(const std::string& text);

// Random model and batch of the given size, shared by the checks and tests.
struct ToyShape {
  std::size_t classes = 2;
  std::size_t features = 6;
  std::size_t embedding_dim = 4;
  std::size_t opinions = 8;
  std::size_t targets = 3;
  std::size_t docs = 3;
  std::size_t pairs_per_doc = 2;
  double scale = 1.0;  // standard deviation of the parameters
};

AspectModel make_toy_model(const ToyShape& shape, Rng& rng, PriorKind prior = PriorKind::Uniform);
Batch make_toy_batch(const ToyShape& shape, const AspectModel& model, Rng& rng);

// p-value of Pearson's chi-square statistic for observed counts against
// expected probabilities (cells with zero probability must have zero counts).
double chi_square_p_value(const std::vector<std::size_t>& observed, const std::vector<double>& expected);

}  // namespace vusc
