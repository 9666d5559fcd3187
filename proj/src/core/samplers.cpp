#include "core/samplers.hpp"

#include <cmath>

#include "core/error.hpp"

namespace vusc {

namespace {

std::vector<double> powered(std::span<const std::size_t> counts, double power) {
  std::vector<double> w(counts.size());
  for (std::size_t i = 0; i < counts.size(); ++i) {
    if (counts[i] == 0) fail(ErrorKind::InvalidArgument, "sampler frequencies must be >= 1");
    w[i] = std::pow(static_cast<double>(counts[i]), power);
  }
  return w;
}

}  // namespace

NegativeSampler::NegativeSampler(std::span<const std::size_t> counts, NegativeDistribution distribution, double power) {
  if (counts.size() < 2)
    fail(ErrorKind::InvalidArgument, "negative sampling needs an opinion vocabulary of at least 2 words");
  if (distribution == NegativeDistribution::Uniform) {
    std::vector<double> w(counts.size(), 1.0);
    sampler_ = CategoricalSampler(w);
  } else {
    sampler_ = CategoricalSampler(powered(counts, power));
  }
}

std::size_t NegativeSampler::sample(Rng& rng, std::size_t positive) const {
  // Rejection yields the distribution renormalized over the remaining words.
  while (true) {
    std::size_t w = sampler_.sample(rng);
    if (w != positive) return w;
  }
}

double NegativeSampler::probability(std::size_t word, std::size_t positive) const {
  if (word == positive) return 0.0;
  return sampler_.probability(word) / (1.0 - sampler_.probability(positive));
}

PairSampler::PairSampler(std::span<const std::size_t> opinion_frequencies, double power)
    : sampler_(powered(opinion_frequencies, power)) {}

}  // namespace vusc
