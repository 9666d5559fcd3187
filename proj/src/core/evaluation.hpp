#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "core/checkpoint.hpp"
#include "core/corpus.hpp"
#include "core/extraction.hpp"

namespace vusc {

using CostMatrix = std::vector<std::vector<double>>;
// assignment[k] = label matched to cluster k
using Assignment = std::vector<std::size_t>;

// Minimum-cost perfect matching on a square matrix. Among optimal
// permutations the lexicographically smallest is returned.
Assignment hungarian(const CostMatrix& cost);
double assignment_cost(const CostMatrix& cost, const Assignment& assignment);

struct EvalResult {
  double accuracy = 0.0;
  std::size_t documents = 0;
  Assignment assignment;
};

std::size_t predict(const AspectModel& model, const Vocab& features, const Document& doc);

// Accuracy of argmax q(c|x) after matching clusters to gold labels. Documents
// without a gold label for the model's aspect are skipped.
EvalResult evaluate(const AspectModel& model, const Vocab& features, std::span<const Document> docs);
// Same, from precomputed cluster predictions and gold labels.
EvalResult evaluate_predictions(std::span<const std::size_t> predicted, std::span<const int> gold,
                                std::size_t num_clusters);

struct AspectScore {
  std::string aspect;
  double mean = 0.0;
  double stddev = 0.0;
};

struct Report {
  std::vector<AspectScore> aspects;
  double mean = 0.0;  // averaged over aspects
};

Report evaluate_model(const TrainedModel& model, std::span<const Document> docs, std::size_t threads = 1);

double majority_baseline(std::span<const Document> train_docs, std::span<const Document> eval_docs,
                         const std::string& aspect);

struct OpinionLexicon {
  WordSet positive;
  WordSet negative;
  WordSet negation{"no", "not", "never", "n't"};
};

// Sections [positive], [negative] and optionally [negation], one or more
// words per line.
OpinionLexicon load_opinion_lexicon(const std::string& path);

enum class TieBreak { Random, Overall };

struct LexiconOptions {
  TieBreak tie_break = TieBreak::Random;
  std::size_t trials = 5;
  std::uint64_t seed = 42;
  std::size_t negation_window = 3;
};

struct LexiconResult {
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation over trials
  std::vector<double> trials;
};

// Lexicon-R / Lexicon-O: majority vote of the extracted opinion words.
LexiconResult lexicon_baseline(std::span<const Document> docs, const PairSet& pairs, const std::string& aspect,
                               const OpinionLexicon& lexicon, const LexiconOptions& options);

// One JSON object per line: {"aspect", "method", "split", "mean", "std"}.
std::string format_report_line(const std::string& aspect, const std::string& method, const std::string& split,
                               double mean, double stddev);

}  // namespace vusc
