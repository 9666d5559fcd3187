#include "core/extraction.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>
#include <thread>

#include "core/config_file.hpp"
#include "core/error.hpp"
#include "core/log.hpp"

namespace vusc {

namespace {

// Relation label without its subtype, so nsubj:cop / obj:lvc etc. match their base.
std::string base_relation(const std::string& deprel) {
  return to_lower(deprel.substr(0, deprel.find(':')));
}

std::string lemma_or_form(const Token& tok) {
  if (tok.lemma.empty() || tok.lemma == "_") return to_lower(tok.form);
  return to_lower(tok.lemma);
}

const Token* head_of(const Sentence& sentence, const Token& tok) {
  if (!sentence.parsed || tok.head <= 0 || tok.head > static_cast<int>(sentence.tokens.size())) return nullptr;
  return &sentence.tokens[static_cast<std::size_t>(tok.head - 1)];
}

const std::set<std::string> kObjectVerbs = {"like", "dislike", "love", "hate"};
const std::set<std::string> kPerceptionVerbs = {"seem", "look", "feel", "smell", "taste"};

template <typename Fn>
void parallel_over(std::size_t n, std::size_t threads, Fn&& fn) {
  threads = std::max<std::size_t>(1, std::min(threads, n));
  if (threads == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> workers;
  for (std::size_t t = 0; t < threads; ++t)
    workers.emplace_back([&, t] {
      for (std::size_t i = t; i < n; i += threads) fn(i);
    });
  for (auto& w : workers) w.join();
}

}  // namespace

std::string rule_name(Rule rule) {
  switch (rule) {
    case Rule::R1: return "R1";
    case Rule::R2: return "R2";
    case Rule::R3: return "R3";
    case Rule::R4: return "R4";
    case Rule::R5: return "R5";
    case Rule::Window: return "WINDOW";
    case Rule::Synthetic: return "SYNTH";
  }
  return "?";
}

std::optional<Rule> parse_rule(const std::string& text) {
  const std::string t = to_lower(text);
  if (t == "r1") return Rule::R1;
  if (t == "r2") return Rule::R2;
  if (t == "r3") return Rule::R3;
  if (t == "r4") return Rule::R4;
  if (t == "r5") return Rule::R5;
  if (t == "window") return Rule::Window;
  if (t == "synth") return Rule::Synthetic;
  return std::nullopt;
}

RuleSet RuleSet::parse(const std::string& text) {
  if (to_lower(trim(text)) == "all") return all();
  RuleSet set = none();
  for (const auto& item : split_list(text)) {
    auto r = parse_rule(item);
    if (!r || *r == Rule::Window || *r == Rule::Synthetic)
      fail(ErrorKind::InvalidArgument, "unknown rule '" + item + "' (expected R1..R5)");
    set.enabled[static_cast<std::size_t>(*r)] = true;
  }
  return set;
}

bool RuleSet::has(Rule r) const {
  auto i = static_cast<std::size_t>(r);
  return i < enabled.size() && enabled[i];
}

RuleSet RuleSet::without(Rule r) const {
  RuleSet copy = *this;
  auto i = static_cast<std::size_t>(r);
  if (i < copy.enabled.size()) copy.enabled[i] = false;
  return copy;
}

std::size_t PairSet::aspect_id(const std::string& name) {
  if (auto id = find_aspect(name)) return *id;
  aspects.push_back(name);
  return aspects.size() - 1;
}

std::optional<std::size_t> PairSet::find_aspect(const std::string& name) const {
  auto it = std::find(aspects.begin(), aspects.end(), name);
  if (it == aspects.end()) return std::nullopt;
  return static_cast<std::size_t>(it - aspects.begin());
}

std::vector<CandidatePair> extract_r1(const Sentence& sentence) {
  std::vector<CandidatePair> out;
  for (const auto& tok : sentence.tokens) {
    if (base_relation(tok.deprel) != "amod") continue;
    if (const Token* head = head_of(sentence, tok)) out.push_back({to_lower(head->form), to_lower(tok.form)});
  }
  return out;
}

std::vector<CandidatePair> extract_r2(const Sentence& sentence) {
  std::vector<CandidatePair> out;
  for (const auto& tok : sentence.tokens) {
    if (base_relation(tok.deprel) != "nsubj" || tok.upos != "NOUN") continue;
    const Token* head = head_of(sentence, tok);
    if (head && head->upos == "ADJ") out.push_back({to_lower(tok.form), to_lower(head->form)});
  }
  return out;
}

std::vector<CandidatePair> extract_r3(const Sentence& sentence) {
  std::vector<CandidatePair> out;
  for (const auto& tok : sentence.tokens) {
    const std::string rel = base_relation(tok.deprel);
    if (rel != "dobj" && rel != "obj") continue;
    const Token* head = head_of(sentence, tok);
    if (head && kObjectVerbs.count(lemma_or_form(*head))) out.push_back({to_lower(tok.form), lemma_or_form(*head)});
  }
  return out;
}

std::vector<CandidatePair> extract_r4(const Sentence& sentence) {
  std::vector<CandidatePair> out;
  for (const auto& tok : sentence.tokens) {
    if (base_relation(tok.deprel) != "xcomp") continue;
    const Token* head = head_of(sentence, tok);
    if (head && kPerceptionVerbs.count(lemma_or_form(*head))) out.push_back({lemma_or_form(*head), to_lower(tok.form)});
  }
  return out;
}

std::vector<ImplicitPair> extract_r5(const Sentence& sentence, const std::map<std::string, std::size_t>& implicit_map,
                                     std::span<const std::string> aspect_names) {
  std::vector<ImplicitPair> out;
  if (implicit_map.empty()) return out;
  for (const auto& tok : sentence.tokens) {
    auto it = implicit_map.find(lemma_or_form(tok));
    if (it == implicit_map.end()) continue;
    if (it->second >= aspect_names.size()) fail(ErrorKind::InvalidArgument, "implicit map names unknown aspect");
    out.push_back({{aspect_names[it->second], to_lower(tok.form)}, it->second});
  }
  return out;
}

ResolvedAspects resolve_aspects(std::vector<AspectSpec> aspects, const Embeddings* embeddings) {
  ResolvedAspects resolved;
  for (auto& spec : aspects) {
    std::vector<std::size_t> rows;
    std::vector<std::string> kept;
    for (const auto& raw : spec.seed_words) {
      std::string w = to_lower(raw);
      auto id = embeddings ? embeddings->vocab.index(w) : std::nullopt;
      if (id) {
        rows.push_back(*id);
        kept.push_back(w);
      } else if (embeddings) {
        resolved.dropped_seeds.push_back(spec.name + ":" + w);
        warn("aspect '" + spec.name + "': seed word '" + w + "' has no embedding and is ignored");
      } else {
        kept.push_back(w);
      }
    }
    if (embeddings && rows.empty() && aspects.size() > 1)
      fail(ErrorKind::InvalidArgument, "aspect '" + spec.name + "' has no seed word with an embedding");
    spec.seed_words = std::move(kept);
    for (auto& w : spec.implicit_words) w = to_lower(w);
    resolved.seed_rows.push_back(std::move(rows));
    resolved.specs.push_back(std::move(spec));
  }
  return resolved;
}

double cosine(std::span<const double> a, std::span<const double> b) {
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

std::optional<std::size_t> assign_aspect(const CandidatePair& pair, const ResolvedAspects& aspects,
                                         const Embeddings* embeddings) {
  if (aspects.specs.empty()) fail(ErrorKind::InvalidArgument, "assign_aspect needs at least one aspect");
  if (aspects.specs.size() == 1) return 0;
  if (!embeddings) fail(ErrorKind::InvalidArgument, "assigning pairs to several aspects needs embeddings");

  std::vector<std::span<const double>> words;
  for (const auto* w : {&pair.target, &pair.opinion})
    if (auto row = embeddings->find(*w)) words.push_back(*row);
  if (words.empty()) return std::nullopt;

  std::optional<std::size_t> best;
  double best_sim = -std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a < aspects.specs.size(); ++a)
    for (auto seed : aspects.seed_rows[a])
      for (auto w : words) {
        double sim = cosine(w, embeddings->table.row(seed));
        if (sim > best_sim) {
          best_sim = sim;
          best = a;
        }
      }
  return best;
}

std::vector<WordPair> window_extract(const Document& doc, const LexiconSpec& lexicon, std::size_t aspect_id) {
  if (lexicon.max_sentence_len == 0) fail(ErrorKind::InvalidArgument, "max_sentence_len must be positive");
  std::set<std::string> targets, opinions;
  for (const auto& w : lexicon.target_words) targets.insert(to_lower(w));
  for (const auto& w : lexicon.opinion_words) opinions.insert(to_lower(w));

  std::vector<WordPair> out;
  for (const auto& sentence : doc.sentences) {
    std::vector<std::string> words;
    for (const auto& tok : sentence.tokens) {
      std::string w = normalize_token(tok.form);
      if (!w.empty()) words.push_back(std::move(w));
    }
    for (std::size_t start = 0; start < words.size(); start += lexicon.max_sentence_len) {
      const std::size_t end = std::min(words.size(), start + lexicon.max_sentence_len);
      std::vector<std::size_t> tpos, opos;
      for (std::size_t i = start; i < end; ++i) {
        if (targets.count(words[i])) tpos.push_back(i);
        else if (opinions.count(words[i])) opos.push_back(i);
      }
      if (tpos.empty() || opos.empty()) continue;
      // Closest target/opinion pairing; ties go to the leftmost target, then the leftmost opinion.
      std::size_t best_t = tpos[0], best_o = opos[0];
      std::size_t best_d = std::numeric_limits<std::size_t>::max();
      for (auto t : tpos)
        for (auto o : opos) {
          std::size_t d = t > o ? t - o : o - t;
          if (d < best_d) {
            best_d = d;
            best_t = t;
            best_o = o;
          }
        }
      out.push_back({words[best_t], words[best_o], aspect_id, doc.id, Rule::Window});
    }
  }
  return out;
}

ExtractionReport extract_all(std::span<const Document> docs, const ResolvedAspects& aspects,
                             const Embeddings* embeddings, const ExtractionOptions& options) {
  if (aspects.specs.empty()) fail(ErrorKind::InvalidArgument, "extraction needs at least one aspect");
  if (aspects.specs.size() > 1 && !embeddings)
    fail(ErrorKind::InvalidArgument, "assigning pairs to several aspects needs embeddings");

  ExtractionReport report;
  for (const auto& spec : aspects.specs) report.pairs.aspects.push_back(spec.name);

  std::map<std::string, std::size_t> implicit_map;
  if (options.rules.has(Rule::R5))
    for (std::size_t a = 0; a < aspects.specs.size(); ++a)
      for (const auto& w : aspects.specs[a].implicit_words) implicit_map.emplace(w, a);

  using Extractor = std::vector<CandidatePair> (*)(const Sentence&);
  const std::array<std::pair<Rule, Extractor>, 4> parse_rules{{
      {Rule::R1, &extract_r1}, {Rule::R2, &extract_r2}, {Rule::R3, &extract_r3}, {Rule::R4, &extract_r4}}};

  struct DocResult {
    std::vector<WordPair> pairs;
    std::size_t unassigned = 0;
  };
  std::vector<DocResult> results(docs.size());
  parallel_over(docs.size(), options.threads, [&](std::size_t d) {
    const Document& doc = docs[d];
    DocResult& res = results[d];
    for (const auto& sentence : doc.sentences) {
      if (sentence.parsed) {
        for (const auto& [rule, extractor] : parse_rules) {
          if (!options.rules.has(rule)) continue;
          for (auto& cand : extractor(sentence)) {
            auto aspect = assign_aspect(cand, aspects, embeddings);
            if (!aspect) {
              ++res.unassigned;
              continue;
            }
            res.pairs.push_back({std::move(cand.target), std::move(cand.opinion), *aspect, doc.id, rule});
          }
        }
      }
      for (auto& hit : extract_r5(sentence, implicit_map, report.pairs.aspects))
        res.pairs.push_back({std::move(hit.pair.target), std::move(hit.pair.opinion), hit.aspect_id, doc.id, Rule::R5});
    }
  });

  for (auto rule : {Rule::R1, Rule::R2, Rule::R3, Rule::R4, Rule::R5})
    if (options.rules.has(rule)) report.counts[rule] = 0;
  for (auto& res : results) {
    report.unassigned += res.unassigned;
    for (auto& p : res.pairs) {
      ++report.counts[p.rule];
      report.pairs.pairs.push_back(std::move(p));
    }
  }
  return report;
}

ExtractionReport extract_window_all(std::span<const Document> docs, const LexiconSpec& lexicon, std::size_t threads) {
  ExtractionReport report;
  report.pairs.aspects.push_back(lexicon.aspect);
  std::vector<std::vector<WordPair>> results(docs.size());
  parallel_over(docs.size(), threads, [&](std::size_t d) { results[d] = window_extract(docs[d], lexicon, 0); });
  report.counts[Rule::Window] = 0;
  for (auto& res : results)
    for (auto& p : res) {
      ++report.counts[Rule::Window];
      report.pairs.pairs.push_back(std::move(p));
    }
  return report;
}

std::vector<AspectSpec> load_aspect_config(const std::string& path) {
  std::vector<AspectSpec> aspects;
  for (const auto& section : parse_config_file(path)) {
    if (section.kind.empty()) continue;
    if (section.kind != "aspect") fail(ErrorKind::Parse, path + ": unknown section [" + section.kind + "]");
    if (section.name.empty()) fail(ErrorKind::Parse, path + ": aspect section without a name");
    AspectSpec spec;
    spec.name = section.name;
    if (auto* seeds = section.find("seeds")) spec.seed_words = split_list(*seeds);
    if (auto* implicit = section.find("implicit")) spec.implicit_words = split_list(*implicit);
    if (spec.seed_words.empty()) fail(ErrorKind::Parse, path + ": aspect '" + spec.name + "' has no seed words");
    aspects.push_back(std::move(spec));
  }
  if (aspects.empty()) fail(ErrorKind::Parse, path + ": no [aspect ...] sections");
  return aspects;
}

LexiconSpec load_lexicon_config(const std::string& path) {
  LexiconSpec lex;
  for (const auto& section : parse_config_file(path)) {
    if (auto* v = section.find("aspect")) lex.aspect = *v;
    if (auto* v = section.find("targets")) lex.target_words = split_list(*v);
    if (auto* v = section.find("opinions")) lex.opinion_words = split_list(*v);
    if (auto* v = section.find("max_sentence_len")) {
      try {
        lex.max_sentence_len = std::stoul(*v);
      } catch (const std::exception&) {
        fail(ErrorKind::Parse, path + ": max_sentence_len must be a positive integer");
      }
    }
  }
  if (lex.target_words.empty() || lex.opinion_words.empty())
    fail(ErrorKind::Parse, path + ": lexicon needs nonempty 'targets' and 'opinions'");
  if (lex.max_sentence_len == 0) fail(ErrorKind::Parse, path + ": max_sentence_len must be positive");
  std::set<std::string> targets;
  for (auto& w : lex.target_words) targets.insert(w = to_lower(w));
  for (auto& w : lex.opinion_words)
    if (targets.count(w = to_lower(w))) fail(ErrorKind::Parse, path + ": '" + w + "' is both target and opinion");
  return lex;
}

void write_pair_file(const std::string& path, const PairSet& pairs) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::Io, "cannot write pair file: " + path);
  out << "# aspects:";
  for (const auto& a : pairs.aspects) out << '\t' << a;
  out << '\n';
  for (const auto& p : pairs.pairs)
    out << p.doc_id << '\t' << pairs.aspects.at(p.aspect_id) << '\t' << p.target << '\t' << p.opinion << '\t'
        << rule_name(p.rule) << '\n';
  if (!out) fail(ErrorKind::Io, "failed writing pair file: " + path);
}

PairSet read_pair_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Io, "cannot open pair file: " + path);
  PairSet set;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cols;
    std::istringstream ls(line);
    for (std::string col; std::getline(ls, col, '\t');) cols.push_back(col);
    if (line[0] == '#') {
      if (line.rfind("# aspects:", 0) == 0)
        for (std::size_t i = 1; i < cols.size(); ++i) set.aspect_id(cols[i]);
      continue;
    }
    if (cols.size() != 5)
      fail(ErrorKind::Parse, path + ":" + std::to_string(line_no) + ": expected 5 tab-separated columns");
    auto rule = parse_rule(cols[4]);
    if (!rule) fail(ErrorKind::Parse, path + ":" + std::to_string(line_no) + ": unknown rule '" + cols[4] + "'");
    if (cols[2].empty() || cols[3].empty())
      fail(ErrorKind::Parse, path + ":" + std::to_string(line_no) + ": empty target or opinion");
    set.pairs.push_back({cols[2], cols[3], set.aspect_id(cols[1]), cols[0], *rule});
  }
  return set;
}

}  // namespace vusc
