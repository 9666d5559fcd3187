#include "core/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "core/error.hpp"

namespace vusc {

double Rng::uniform() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

std::size_t Rng::below(std::size_t n) {
  if (n == 0) fail(ErrorKind::InvalidArgument, "Rng::below called with n = 0");
  const std::uint64_t bound = static_cast<std::uint64_t>(n);
  // Reject the top partial bucket so every residue is equally likely.
  const std::uint64_t limit = UINT64_MAX - (UINT64_MAX % bound + 1) % bound;
  std::uint64_t x;
  do {
    x = engine_();
  } while (x > limit);
  return static_cast<std::size_t>(x % bound);
}

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u1;
  do {
    u1 = uniform();
  } while (u1 <= 0.0);
  const double u2 = uniform();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  spare_ = radius * std::sin(angle);
  has_spare_ = true;
  return radius * std::cos(angle);
}

int Rng::poisson(double mean) {
  if (!(mean >= 0.0)) fail(ErrorKind::InvalidArgument, "poisson mean must be >= 0");
  // Knuth's product method; means used here are small.
  const double threshold = std::exp(-mean);
  int k = 0;
  double product = uniform();
  while (product > threshold) {
    ++k;
    product *= uniform();
  }
  return k;
}

CategoricalSampler::CategoricalSampler(std::span<const double> weights) {
  cumulative_.reserve(weights.size());
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w))
      fail(ErrorKind::InvalidArgument, "categorical weights must be finite and nonnegative");
    total += w;
    cumulative_.push_back(total);
  }
  if (cumulative_.empty() || !(total > 0.0))
    fail(ErrorKind::InvalidArgument, "categorical sampler needs positive total weight");
}

std::size_t CategoricalSampler::sample(Rng& rng) const {
  const double u = rng.uniform() * cumulative_.back();
  auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
  // upper_bound never lands on a zero-weight entry.
  if (it == cumulative_.end()) --it;
  return static_cast<std::size_t>(it - cumulative_.begin());
}

double CategoricalSampler::probability(std::size_t i) const {
  const double prev = i == 0 ? 0.0 : cumulative_[i - 1];
  return (cumulative_[i] - prev) / cumulative_.back();
}

}  // namespace vusc
