#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace vusc {

struct Token {
  std::string form;
  std::string lemma;
  std::string upos;
  int head = 0;  // 1-based, 0 = root
  std::string deprel;
};

struct Sentence {
  std::vector<Token> tokens;
  bool parsed = true;
};

struct Document {
  std::string id;
  std::vector<Sentence> sentences;
  std::map<std::string, int> gold_labels;  // aspect name -> polarity index
  std::optional<int> overall_polarity;
};

class Vocab {
 public:
  std::optional<std::size_t> index(const std::string& word) const;
  bool contains(const std::string& word) const { return ids_.count(word) != 0; }
  const std::string& word(std::size_t i) const { return words_.at(i); }
  std::size_t frequency(std::size_t i) const { return counts_.at(i); }
  std::size_t size() const { return words_.size(); }
  bool empty() const { return words_.empty(); }
  const std::vector<std::string>& words() const { return words_; }

  // Appends a new word, or adds to the count of an existing one. Returns its index.
  std::size_t add(const std::string& word, std::size_t count = 1);

  // FNV-1a over the index-ordered word list; stable across platforms.
  std::uint64_t hash() const;

 private:
  std::unordered_map<std::string, std::size_t> ids_;
  std::vector<std::string> words_;
  std::vector<std::size_t> counts_;
};

class EmbeddingTable {
 public:
  EmbeddingTable() = default;
  EmbeddingTable(std::size_t rows, std::size_t dim);

  std::size_t dim() const { return dim_; }
  std::size_t rows() const { return dim_ == 0 ? 0 : data_.size() / dim_; }
  std::span<double> row(std::size_t i) { return {data_.data() + i * dim_, dim_}; }
  std::span<const double> row(std::size_t i) const { return {data_.data() + i * dim_, dim_}; }
  void append_row(std::span<const double> values);

 private:
  std::size_t dim_ = 0;
  std::vector<double> data_;
};

struct Embeddings {
  Vocab vocab;
  EmbeddingTable table;

  std::optional<std::span<const double>> find(const std::string& word) const;
};

using FeatureVector = std::vector<double>;
using WordSet = std::unordered_set<std::string>;

// Lowercases a surface form; returns "" for punctuation-only tokens.
std::string normalize_token(std::string_view form);

std::vector<Document> load_conllu(const std::string& path);
std::vector<Document> parse_conllu(std::string_view text, const std::string& source);

// JSON-lines corpus: {"id", "sentences": [[tok, ...], ...], "gold": {aspect: label}, "overall": label}
std::vector<Document> load_jsonl(const std::string& path);
void save_jsonl(const std::string& path, std::span<const Document> docs);

// Dispatches on extension: .conllu/.conll -> CoNLL-U, otherwise JSON-lines.
std::vector<Document> load_corpus(const std::string& path);

WordSet load_word_list(const std::string& path);

Vocab build_vocab(std::span<const Document> docs, std::size_t min_count,
                  const WordSet* stopwords = nullptr);
FeatureVector bow_features(const Document& doc, const Vocab& vocab);

Embeddings load_embeddings(const std::string& path);
void save_embeddings(const std::string& path, const Embeddings& embeddings);

struct SplitIndices {
  std::vector<std::size_t> train, dev, test;
};

SplitIndices split_corpus(std::size_t num_docs, std::array<double, 3> ratios, std::uint64_t seed);

std::vector<Document> select(std::span<const Document> docs, std::span<const std::size_t> indices);

}  // namespace vusc
