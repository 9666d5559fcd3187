#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "core/rng.hpp"

namespace vusc {

enum class NegativeDistribution { Unigram, Uniform };

// Draws negative opinion words with probability proportional to
// count^power (power 0.75 by default), never returning the positive word.
class NegativeSampler {
 public:
  NegativeSampler(std::span<const std::size_t> counts, NegativeDistribution distribution, double power = 0.75);

  std::size_t sample(Rng& rng, std::size_t positive) const;
  // Probability of drawing `word` given the excluded positive.
  double probability(std::size_t word, std::size_t positive) const;
  std::size_t size() const { return sampler_.size(); }

 private:
  CategoricalSampler sampler_;
};

// Biased selection of a document's pairs: weight freq(opinion)^power with
// power = -0.25 by default, so rarer opinion words are drawn more often.
class PairSampler {
 public:
  PairSampler(std::span<const std::size_t> opinion_frequencies, double power = -0.25);

  std::size_t sample(Rng& rng) const { return sampler_.sample(rng); }
  double probability(std::size_t i) const { return sampler_.probability(i); }
  std::size_t size() const { return sampler_.size(); }

 private:
  CategoricalSampler sampler_;
};

}  // namespace vusc
