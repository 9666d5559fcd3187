#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "core/corpus.hpp"
#include "core/extraction.hpp"

namespace vusc {

struct SynthConfig {
  std::size_t num_docs = 2000;
  std::size_t num_aspects = 2;
  std::size_t num_classes = 2;
  std::size_t targets_per_aspect = 5;
  std::size_t opinions_per_class = 10;
  std::size_t filler_vocab_size = 200;
  std::size_t doc_length = 60;
  double pair_rate = 3.0;         // Poisson mean of pair sentences per document and aspect
  double class_separation = 1.0;  // total-variation distance between class-conditional opinion distributions
  std::size_t noise_dims = 8;     // extra embedding dimensions carrying only noise
  double embedding_noise = 0.1;
  std::uint64_t seed = 42;

  void validate() const;
};

struct SynthCorpus {
  std::vector<Document> docs;
  PairSet pairs;
  Embeddings embeddings;
};

SynthCorpus generate(const SynthConfig& config);

// Files written by `write_synth` inside the output directory.
inline constexpr const char* kSynthCorpusFile = "corpus.jsonl";
inline constexpr const char* kSynthPairFile = "pairs.tsv";
inline constexpr const char* kSynthEmbeddingFile = "embeddings.txt";

void write_synth(const std::string& directory, const SynthCorpus& corpus);

std::string synth_aspect_name(std::size_t aspect);
std::string synth_target_word(std::size_t aspect, std::size_t j);
std::string synth_opinion_word(std::size_t aspect, std::size_t c, std::size_t j);
std::string synth_filler_word(std::size_t j);

// Opinion-word distribution of one class, over the aspect's opinion words in
// block order (class 0 words first).
std::vector<double> synth_opinion_distribution(const SynthConfig& config, std::size_t c);

// Expected accuracy of the Bayes-optimal classifier that sees a document's
// opinion words for one aspect and knows the generator parameters.
double bayes_accuracy(const SynthConfig& config);

}  // namespace vusc
