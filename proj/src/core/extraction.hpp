#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "core/corpus.hpp"

namespace vusc {

enum class Rule { R1, R2, R3, R4, R5, Window, Synthetic };

std::string rule_name(Rule rule);
std::optional<Rule> parse_rule(const std::string& text);

struct WordPair {
  std::string target;
  std::string opinion;
  std::size_t aspect_id = 0;
  std::string doc_id;
  Rule rule = Rule::R1;

  bool operator==(const WordPair&) const = default;
};

// A pair as produced by a rule, before aspect assignment.
struct CandidatePair {
  std::string target;
  std::string opinion;

  bool operator==(const CandidatePair&) const = default;
};

struct AspectSpec {
  std::string name;
  std::vector<std::string> seed_words;
  std::vector<std::string> implicit_words;  // rule 5 adjectives that name this aspect
};

struct LexiconSpec {
  std::string aspect = "hip";
  std::vector<std::string> target_words;
  std::vector<std::string> opinion_words;
  std::size_t max_sentence_len = 20;
};

// Which of R1..R5 are enabled.
struct RuleSet {
  std::array<bool, 5> enabled{true, true, true, true, true};

  static RuleSet all() { return {}; }
  static RuleSet none() { return RuleSet{{false, false, false, false, false}}; }
  static RuleSet parse(const std::string& text);  // "R1,R2" or "all"
  bool has(Rule r) const;
  RuleSet without(Rule r) const;
};

// Aspect names with pairs; ids index into `aspects`.
struct PairSet {
  std::vector<std::string> aspects;
  std::vector<WordPair> pairs;

  std::size_t aspect_id(const std::string& name);  // adds the aspect when new
  std::optional<std::size_t> find_aspect(const std::string& name) const;
};

std::vector<CandidatePair> extract_r1(const Sentence& sentence);
std::vector<CandidatePair> extract_r2(const Sentence& sentence);
std::vector<CandidatePair> extract_r3(const Sentence& sentence);
std::vector<CandidatePair> extract_r4(const Sentence& sentence);

// Rule 5: adjectives that stand for their aspect. `implicit_map` maps a lemma
// to an aspect id; `aspect_names` names the emitted target.
struct ImplicitPair {
  CandidatePair pair;
  std::size_t aspect_id;
};
std::vector<ImplicitPair> extract_r5(const Sentence& sentence, const std::map<std::string, std::size_t>& implicit_map,
                                     std::span<const std::string> aspect_names);

// Seed words resolved against an embedding vocabulary.
struct ResolvedAspects {
  std::vector<AspectSpec> specs;
  std::vector<std::vector<std::size_t>> seed_rows;
  std::vector<std::string> dropped_seeds;
};
ResolvedAspects resolve_aspects(std::vector<AspectSpec> aspects, const Embeddings* embeddings);

double cosine(std::span<const double> a, std::span<const double> b);

// Aspect whose seed word is most cosine-similar to the target or opinion
// word. nullopt when neither pair word has an embedding.
std::optional<std::size_t> assign_aspect(const CandidatePair& pair, const ResolvedAspects& aspects,
                                         const Embeddings* embeddings);

std::vector<WordPair> window_extract(const Document& doc, const LexiconSpec& lexicon, std::size_t aspect_id = 0);

struct ExtractionOptions {
  RuleSet rules;
  std::size_t threads = 1;
};

struct ExtractionReport {
  PairSet pairs;
  std::map<Rule, std::size_t> counts;  // emitted pairs per rule
  std::size_t unassigned = 0;          // R1-R4 candidates dropped by aspect assignment
};

ExtractionReport extract_all(std::span<const Document> docs, const ResolvedAspects& aspects,
                             const Embeddings* embeddings, const ExtractionOptions& options);

ExtractionReport extract_window_all(std::span<const Document> docs, const LexiconSpec& lexicon,
                                    std::size_t threads = 1);

std::vector<AspectSpec> load_aspect_config(const std::string& path);
LexiconSpec load_lexicon_config(const std::string& path);

void write_pair_file(const std::string& path, const PairSet& pairs);
PairSet read_pair_file(const std::string& path);

}  // namespace vusc
