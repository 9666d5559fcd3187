#include "core/synth.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <functional>

#include "core/error.hpp"
#include "core/rng.hpp"

namespace vusc {

namespace {

constexpr std::size_t kFillerSentenceLength = 10;
constexpr std::uint64_t kEmbeddingStream = 0x9e3779b97f4a7c15ULL;

// Probability that a class-c document draws its opinion from block b.
double block_probability(const SynthConfig& config, std::size_t c, std::size_t b) {
  const double shared = (1.0 - config.class_separation) / static_cast<double>(config.num_classes);
  return (b == c ? config.class_separation : 0.0) + shared;
}

double poisson_log_pmf(std::size_t n, double mean) {
  const double k = static_cast<double>(n);
  return k * std::log(mean) - mean - std::lgamma(k + 1.0);
}

}  // namespace

void SynthConfig::validate() const {
  auto positive = [](std::size_t v, const char* name) {
    if (v == 0) fail(ErrorKind::InvalidArgument, std::string("synth: ") + name + " must be at least 1");
  };
  positive(num_docs, "num_docs");
  positive(num_aspects, "num_aspects");
  positive(targets_per_aspect, "targets_per_aspect");
  positive(opinions_per_class, "opinions_per_class");
  positive(filler_vocab_size, "filler_vocab_size");
  positive(doc_length, "doc_length");
  if (num_classes < 2) fail(ErrorKind::InvalidArgument, "synth: num_classes must be at least 2");
  if (!(pair_rate > 0.0) || !std::isfinite(pair_rate))
    fail(ErrorKind::InvalidArgument, "synth: pair_rate must be positive");
  if (!(class_separation >= 0.0 && class_separation <= 1.0))
    fail(ErrorKind::InvalidArgument, "synth: class_separation must lie in [0, 1]");
  if (!(embedding_noise >= 0.0)) fail(ErrorKind::InvalidArgument, "synth: embedding_noise must be nonnegative");
}

std::string synth_aspect_name(std::size_t aspect) { return "aspect" + std::to_string(aspect); }

std::string synth_target_word(std::size_t aspect, std::size_t j) {
  return "a" + std::to_string(aspect) + "_t" + std::to_string(j);
}

std::string synth_opinion_word(std::size_t aspect, std::size_t c, std::size_t j) {
  return "a" + std::to_string(aspect) + "_c" + std::to_string(c) + "_o" + std::to_string(j);
}

std::string synth_filler_word(std::size_t j) { return "f" + std::to_string(j); }

std::vector<double> synth_opinion_distribution(const SynthConfig& config, std::size_t c) {
  const double m = static_cast<double>(config.opinions_per_class);
  std::vector<double> p;
  for (std::size_t b = 0; b < config.num_classes; ++b)
    for (std::size_t j = 0; j < config.opinions_per_class; ++j) p.push_back(block_probability(config, c, b) / m);
  return p;
}

SynthCorpus generate(const SynthConfig& config) {
  config.validate();
  Rng rng(config.seed);
  SynthCorpus out;
  for (std::size_t k = 0; k < config.num_aspects; ++k) out.pairs.aspect_id(synth_aspect_name(k));

  for (std::size_t i = 0; i < config.num_docs; ++i) {
    Document doc;
    doc.id = "doc" + std::to_string(i);
    std::size_t length = 0;
    for (std::size_t k = 0; k < config.num_aspects; ++k) {
      const std::size_t c = rng.below(config.num_classes);
      doc.gold_labels[synth_aspect_name(k)] = static_cast<int>(c);
      const int count = std::max(1, rng.poisson(config.pair_rate));
      for (int n = 0; n < count; ++n) {
        const std::string target = synth_target_word(k, rng.below(config.targets_per_aspect));
        const std::size_t block = rng.uniform() < config.class_separation ? c : rng.below(config.num_classes);
        const std::string opinion = synth_opinion_word(k, block, rng.below(config.opinions_per_class));
        Sentence s;
        s.parsed = false;
        s.tokens.push_back(Token{target, target, "NOUN", 0, "_"});
        s.tokens.push_back(Token{opinion, opinion, "ADJ", 0, "_"});
        doc.sentences.push_back(std::move(s));
        length += 2;
        out.pairs.pairs.push_back(WordPair{target, opinion, k, doc.id, Rule::Synthetic});
      }
    }
    while (length < config.doc_length) {
      Sentence s;
      s.parsed = false;
      while (length < config.doc_length && s.tokens.size() < kFillerSentenceLength) {
        const std::string w = synth_filler_word(rng.below(config.filler_vocab_size));
        s.tokens.push_back(Token{w, w, "X", 0, "_"});
        ++length;
      }
      doc.sentences.push_back(std::move(s));
    }
    out.docs.push_back(std::move(doc));
  }

  // One-hot slot per (aspect, class) opinion block, one shared slot for every
  // other word, then pure-noise dimensions.
  const std::size_t blocks = config.num_aspects * config.num_classes;
  const std::size_t dim = blocks + 1 + config.noise_dims;
  Rng noise(config.seed ^ kEmbeddingStream);
  out.embeddings.table = EmbeddingTable(0, dim);
  auto add = [&](const std::string& word, std::size_t slot) {
    std::vector<double> v(dim);
    for (auto& x : v) x = config.embedding_noise * noise.normal();
    v[slot] += 1.0;
    out.embeddings.vocab.add(word);
    out.embeddings.table.append_row(v);
  };
  for (std::size_t k = 0; k < config.num_aspects; ++k) {
    for (std::size_t j = 0; j < config.targets_per_aspect; ++j) add(synth_target_word(k, j), blocks);
    for (std::size_t c = 0; c < config.num_classes; ++c)
      for (std::size_t j = 0; j < config.opinions_per_class; ++j)
        add(synth_opinion_word(k, c, j), k * config.num_classes + c);
  }
  for (std::size_t j = 0; j < config.filler_vocab_size; ++j) add(synth_filler_word(j), blocks);
  return out;
}

void write_synth(const std::string& directory, const SynthCorpus& corpus) {
  std::error_code ec;
  std::filesystem::create_directories(directory, ec);
  if (ec) fail(ErrorKind::Io, "cannot create directory " + directory + ": " + ec.message());
  const std::filesystem::path dir(directory);
  save_jsonl((dir / kSynthCorpusFile).string(), corpus.docs);
  write_pair_file((dir / kSynthPairFile).string(), corpus.pairs);
  save_embeddings((dir / kSynthEmbeddingFile).string(), corpus.embeddings);
}

double bayes_accuracy(const SynthConfig& config) {
  config.validate();
  const std::size_t classes = config.num_classes;
  std::vector<std::vector<double>> log_pi(classes, std::vector<double>(classes));
  for (std::size_t c = 0; c < classes; ++c)
    for (std::size_t b = 0; b < classes; ++b) {
      const double p = block_probability(config, c, b);
      log_pi[c][b] = p > 0.0 ? std::log(p) : -INFINITY;
    }

  // Within a block every word is equally likely under every class, so block
  // counts are sufficient; enumerate all count vectors for each pair total.
  auto accuracy_given = [&](std::size_t n) {
    double total = 0.0;
    std::vector<std::size_t> counts(classes, 0);
    std::function<void(std::size_t, std::size_t)> visit = [&](std::size_t b, std::size_t left) {
      if (b + 1 == classes) {
        counts[b] = left;
        double log_coef = std::lgamma(static_cast<double>(n) + 1.0);
        for (auto v : counts) log_coef -= std::lgamma(static_cast<double>(v) + 1.0);
        double best = 0.0;
        for (std::size_t c = 0; c < classes; ++c) {
          double lp = log_coef;
          for (std::size_t bb = 0; bb < classes; ++bb)
            if (counts[bb] > 0) lp += static_cast<double>(counts[bb]) * log_pi[c][bb];
          best = std::max(best, std::exp(lp));
        }
        total += best / static_cast<double>(classes);
        return;
      }
      for (std::size_t v = 0; v <= left; ++v) {
        counts[b] = v;
        visit(b + 1, left - v);
      }
    };
    visit(0, n);
    return total;
  };

  // Pair count is max(1, Poisson(rate)); truncate the Poisson tail once it is negligible.
  const double rate = config.pair_rate;
  const std::size_t cap = static_cast<std::size_t>(std::ceil(rate + 12.0 * std::sqrt(rate) + 12.0));
  double result = 0.0;
  for (std::size_t n = 1; n <= cap; ++n) {
    double p = std::exp(poisson_log_pmf(n, rate));
    if (n == 1) p += std::exp(-rate);
    result += p * accuracy_given(n);
  }
  return result;
}

}  // namespace vusc
