#include "core/corpus.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "core/config_file.hpp"
#include "core/error.hpp"
#include "core/rng.hpp"

namespace vusc {

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::Io, "cannot open file: " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> cols;
  std::size_t start = 0;
  while (true) {
    auto tab = line.find('\t', start);
    cols.push_back(line.substr(start, tab == std::string_view::npos ? std::string_view::npos : tab - start));
    if (tab == std::string_view::npos) break;
    start = tab + 1;
  }
  return cols;
}

std::optional<int> parse_int(std::string_view text) {
  int value = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) return std::nullopt;
  return value;
}

std::optional<int> parse_polarity(std::string_view raw) {
  std::string text = to_lower(trim(raw));
  if (auto v = parse_int(text)) return v;
  if (text == "pos" || text == "positive") return 1;
  if (text == "neg" || text == "negative") return 0;
  return std::nullopt;
}

std::string location(const std::string& source, std::size_t line_no) {
  return source + ":" + std::to_string(line_no);
}

}  // namespace

std::optional<std::size_t> Vocab::index(const std::string& word) const {
  auto it = ids_.find(word);
  if (it == ids_.end()) return std::nullopt;
  return it->second;
}

std::size_t Vocab::add(const std::string& word, std::size_t count) {
  auto [it, inserted] = ids_.try_emplace(word, words_.size());
  if (inserted) {
    words_.push_back(word);
    counts_.push_back(count);
  } else {
    counts_[it->second] += count;
  }
  return it->second;
}

std::uint64_t Vocab::hash() const {
  std::uint64_t h = 1469598103934665603ull;
  auto mix = [&h](unsigned char byte) {
    h ^= byte;
    h *= 1099511628211ull;
  };
  for (const auto& w : words_) {
    for (unsigned char ch : w) mix(ch);
    mix(0);
  }
  return h;
}

EmbeddingTable::EmbeddingTable(std::size_t rows, std::size_t dim) : dim_(dim), data_(rows * dim, 0.0) {
  if (dim == 0) fail(ErrorKind::InvalidArgument, "embedding dimension must be positive");
}

void EmbeddingTable::append_row(std::span<const double> values) {
  if (dim_ == 0) dim_ = values.size();
  if (values.size() != dim_ || dim_ == 0)
    fail(ErrorKind::InvalidArgument, "embedding row has wrong dimension");
  data_.insert(data_.end(), values.begin(), values.end());
}

std::optional<std::span<const double>> Embeddings::find(const std::string& word) const {
  auto id = vocab.index(word);
  if (!id) return std::nullopt;
  return table.row(*id);
}

std::string normalize_token(std::string_view form) {
  bool has_content = false;
  for (unsigned char ch : form) {
    if (!std::ispunct(ch) && !std::isspace(ch)) {
      has_content = true;
      break;
    }
  }
  if (!has_content) return {};
  return to_lower(form);
}

std::vector<Document> parse_conllu(std::string_view text, const std::string& source) {
  std::vector<Document> docs;
  Sentence sentence;
  std::size_t sentence_start = 0;

  auto current_doc = [&]() -> Document& {
    if (docs.empty()) {
      docs.emplace_back();
      docs.back().id = "doc0";
    }
    return docs.back();
  };

  auto finish_sentence = [&]() {
    if (sentence.tokens.empty()) return;
    const int n = static_cast<int>(sentence.tokens.size());
    int roots = 0;
    for (const auto& tok : sentence.tokens) {
      if (tok.head < 0 || tok.head > n)
        fail(ErrorKind::Parse, location(source, sentence_start) + ": head index out of range in sentence");
      if (tok.head == 0) ++roots;
    }
    if (roots > 1)
      fail(ErrorKind::Parse, location(source, sentence_start) + ": sentence has more than one root");
    current_doc().sentences.push_back(std::move(sentence));
    sentence = Sentence{};
  };

  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);

    if (trim(line).empty()) {
      finish_sentence();
      continue;
    }
    if (line.front() == '#') {
      std::string comment = trim(line.substr(1));
      if (comment.rfind("newdoc", 0) == 0) {
        finish_sentence();
        Document doc;
        auto eq = comment.find('=');
        doc.id = eq == std::string::npos ? "doc" + std::to_string(docs.size()) : trim(comment.substr(eq + 1));
        if (doc.id.empty()) doc.id = "doc" + std::to_string(docs.size());
        docs.push_back(std::move(doc));
      } else if (comment.rfind("gold ", 0) == 0) {
        std::string body = trim(std::string_view(comment).substr(5));
        auto eq = body.find('=');
        if (eq == std::string::npos)
          fail(ErrorKind::Parse, location(source, line_no) + ": gold comment must be 'gold <aspect>=<label>'");
        auto label = parse_polarity(std::string_view(body).substr(eq + 1));
        if (!label) fail(ErrorKind::Parse, location(source, line_no) + ": unrecognized gold label");
        current_doc().gold_labels[trim(std::string_view(body).substr(0, eq))] = *label;
      } else if (comment.rfind("overall", 0) == 0) {
        auto eq = comment.find('=');
        auto label = eq == std::string::npos ? std::nullopt : parse_polarity(std::string_view(comment).substr(eq + 1));
        if (!label) fail(ErrorKind::Parse, location(source, line_no) + ": unrecognized overall label");
        current_doc().overall_polarity = *label;
      }
      continue;
    }

    auto cols = split_tabs(line);
    if (cols.size() != 10)
      fail(ErrorKind::Parse, location(source, line_no) + ": expected 10 tab-separated columns, found " +
                                 std::to_string(cols.size()));
    // Multiword-token ranges and empty nodes carry no syntactic edge of their own.
    if (cols[0].find('-') != std::string_view::npos || cols[0].find('.') != std::string_view::npos) continue;
    if (!parse_int(cols[0]))
      fail(ErrorKind::Parse, location(source, line_no) + ": non-integer token id");
    if (sentence.tokens.empty()) sentence_start = line_no;

    Token tok;
    tok.form = std::string(cols[1]);
    tok.lemma = std::string(cols[2]);
    tok.upos = std::string(cols[3]);
    if (cols[6] == "_") {
      sentence.parsed = false;
      tok.head = 0;
    } else {
      auto head = parse_int(cols[6]);
      if (!head) fail(ErrorKind::Parse, location(source, line_no) + ": non-integer head '" + std::string(cols[6]) + "'");
      tok.head = *head;
    }
    tok.deprel = std::string(cols[7]);
    if (tok.deprel.empty()) fail(ErrorKind::Parse, location(source, line_no) + ": empty deprel");
    sentence.tokens.push_back(std::move(tok));
  }
  finish_sentence();
  return docs;
}

std::vector<Document> load_conllu(const std::string& path) { return parse_conllu(read_file(path), path); }

std::vector<Document> load_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Io, "cannot open corpus: " + path);
  std::vector<Document> docs;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorKind::Parse, location(path, line_no) + ": " + e.what());
    }
    try {
      Document doc;
      doc.id = j.at("id").get<std::string>();
      for (const auto& sent : j.at("sentences")) {
        Sentence s;
        s.parsed = false;
        for (const auto& tok : sent) {
          Token t;
          t.form = tok.get<std::string>();
          t.lemma = "_";
          t.upos = "_";
          t.deprel = "_";
          s.tokens.push_back(std::move(t));
        }
        if (!s.tokens.empty()) doc.sentences.push_back(std::move(s));
      }
      if (j.contains("gold")) {
        for (const auto& [aspect, label] : j.at("gold").items()) {
          auto v = label.is_number_integer() ? std::optional<int>(label.get<int>())
                                             : parse_polarity(label.get<std::string>());
          if (!v) fail(ErrorKind::Parse, location(path, line_no) + ": unrecognized gold label");
          doc.gold_labels[aspect] = *v;
        }
      }
      if (j.contains("overall") && !j.at("overall").is_null()) {
        const auto& o = j.at("overall");
        auto v = o.is_number_integer() ? std::optional<int>(o.get<int>()) : parse_polarity(o.get<std::string>());
        if (!v) fail(ErrorKind::Parse, location(path, line_no) + ": unrecognized overall label");
        doc.overall_polarity = *v;
      }
      docs.push_back(std::move(doc));
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorKind::Parse, location(path, line_no) + ": " + e.what());
    }
  }
  return docs;
}

void save_jsonl(const std::string& path, std::span<const Document> docs) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::Io, "cannot write corpus: " + path);
  for (const auto& doc : docs) {
    nlohmann::ordered_json j;
    j["id"] = doc.id;
    auto sentences = nlohmann::ordered_json::array();
    for (const auto& s : doc.sentences) {
      auto toks = nlohmann::ordered_json::array();
      for (const auto& t : s.tokens) toks.push_back(t.form);
      sentences.push_back(std::move(toks));
    }
    j["sentences"] = std::move(sentences);
    auto gold = nlohmann::ordered_json::object();
    for (const auto& [aspect, label] : doc.gold_labels) gold[aspect] = label;
    j["gold"] = std::move(gold);
    if (doc.overall_polarity) j["overall"] = *doc.overall_polarity;
    out << j.dump() << '\n';
  }
  if (!out) fail(ErrorKind::Io, "failed writing corpus: " + path);
}

std::vector<Document> load_corpus(const std::string& path) {
  auto ends_with = [&](std::string_view suffix) {
    return path.size() >= suffix.size() && path.compare(path.size() - suffix.size(), suffix.size(), suffix) == 0;
  };
  auto docs = ends_with(".conllu") || ends_with(".conll") ? load_conllu(path) : load_jsonl(path);
  std::unordered_set<std::string> ids;
  for (const auto& d : docs)
    if (!ids.insert(d.id).second) fail(ErrorKind::Parse, path + ": duplicate document id '" + d.id + "'");
  return docs;
}

WordSet load_word_list(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Io, "cannot open word list: " + path);
  WordSet words;
  std::string line;
  while (std::getline(in, line)) {
    std::string w = trim(line);
    if (w.empty() || w[0] == '#') continue;
    words.insert(to_lower(w));
  }
  return words;
}

Vocab build_vocab(std::span<const Document> docs, std::size_t min_count, const WordSet* stopwords) {
  if (min_count < 1) fail(ErrorKind::InvalidArgument, "min_count must be >= 1");
  std::unordered_map<std::string, std::size_t> counts;
  for (const auto& doc : docs)
    for (const auto& s : doc.sentences)
      for (const auto& t : s.tokens) {
        std::string w = normalize_token(t.form);
        if (w.empty() || (stopwords && stopwords->count(w))) continue;
        ++counts[w];
      }
  std::vector<std::pair<std::string, std::size_t>> kept;
  for (auto& [w, c] : counts)
    if (c >= min_count) kept.emplace_back(w, c);
  std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  Vocab vocab;
  for (const auto& [w, c] : kept) vocab.add(w, c);
  return vocab;
}

FeatureVector bow_features(const Document& doc, const Vocab& vocab) {
  FeatureVector x(vocab.size(), 0.0);
  for (const auto& s : doc.sentences)
    for (const auto& t : s.tokens) {
      std::string w = normalize_token(t.form);
      if (w.empty()) continue;
      if (auto id = vocab.index(w)) x[*id] += 1.0;
    }
  double norm2 = 0.0;
  for (double v : x) norm2 += v * v;
  if (norm2 > 0.0) {
    const double inv = 1.0 / std::sqrt(norm2);
    for (double& v : x) v *= inv;
  }
  return x;
}

Embeddings load_embeddings(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Io, "cannot open embeddings: " + path);
  std::string header;
  if (!std::getline(in, header)) fail(ErrorKind::Parse, path + ": missing header line");
  std::istringstream hs(header);
  std::size_t count = 0, dim = 0;
  if (!(hs >> count >> dim) || dim == 0)
    fail(ErrorKind::Parse, path + ": header must be '<count> <dim>' with dim > 0");

  Embeddings emb;
  emb.table = EmbeddingTable(0, dim);
  std::string line;
  std::vector<double> values;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    std::istringstream ls(line);
    std::string word;
    ls >> word;
    values.clear();
    std::string tok;
    while (ls >> tok) {
      char* end = nullptr;
      double v = std::strtod(tok.c_str(), &end);
      if (end != tok.c_str() + tok.size())
        fail(ErrorKind::Parse, location(path, line_no) + ": bad number for word '" + word + "'");
      values.push_back(v);
    }
    if (values.size() != dim)
      fail(ErrorKind::Parse, location(path, line_no) + ": word '" + word + "' has " +
                                 std::to_string(values.size()) + " values, expected " + std::to_string(dim));
    if (emb.vocab.contains(word)) fail(ErrorKind::Parse, location(path, line_no) + ": duplicate word '" + word + "'");
    emb.vocab.add(word);
    emb.table.append_row(values);
  }
  if (emb.vocab.size() != count)
    fail(ErrorKind::Parse, path + ": header declares " + std::to_string(count) + " words, body has " +
                               std::to_string(emb.vocab.size()));
  return emb;
}

void save_embeddings(const std::string& path, const Embeddings& embeddings) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::Io, "cannot write embeddings: " + path);
  out << embeddings.vocab.size() << ' ' << embeddings.table.dim() << '\n';
  char buf[32];
  for (std::size_t i = 0; i < embeddings.vocab.size(); ++i) {
    out << embeddings.vocab.word(i);
    for (double v : embeddings.table.row(i)) {
      std::snprintf(buf, sizeof buf, "%.17g", v);
      out << ' ' << buf;
    }
    out << '\n';
  }
  if (!out) fail(ErrorKind::Io, "failed writing embeddings: " + path);
}

SplitIndices split_corpus(std::size_t num_docs, std::array<double, 3> ratios, std::uint64_t seed) {
  for (double r : ratios)
    if (!(r > 0.0) || !std::isfinite(r)) fail(ErrorKind::InvalidArgument, "split ratios must be positive");
  if (num_docs < 3) fail(ErrorKind::InvalidArgument, "need at least 3 documents to split");

  std::vector<std::size_t> order(num_docs);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  rng.shuffle(order);

  // Largest-remainder apportionment keeps every part within one document of its exact share.
  const double total = ratios[0] + ratios[1] + ratios[2];
  std::array<std::size_t, 3> sizes{};
  std::array<double, 3> remainder{};
  std::size_t assigned = 0;
  for (int k = 0; k < 3; ++k) {
    const double exact = static_cast<double>(num_docs) * ratios[k] / total;
    sizes[k] = static_cast<std::size_t>(std::floor(exact));
    remainder[k] = exact - static_cast<double>(sizes[k]);
    assigned += sizes[k];
  }
  std::array<int, 3> rank{0, 1, 2};
  std::stable_sort(rank.begin(), rank.end(), [&](int a, int b) { return remainder[a] > remainder[b]; });
  for (int i = 0; assigned < num_docs; ++i, ++assigned) ++sizes[rank[i % 3]];

  SplitIndices split;
  auto first = order.begin();
  split.train.assign(first, first + static_cast<std::ptrdiff_t>(sizes[0]));
  first += static_cast<std::ptrdiff_t>(sizes[0]);
  split.dev.assign(first, first + static_cast<std::ptrdiff_t>(sizes[1]));
  first += static_cast<std::ptrdiff_t>(sizes[1]);
  split.test.assign(first, order.end());
  return split;
}

std::vector<Document> select(std::span<const Document> docs, std::span<const std::size_t> indices) {
  std::vector<Document> out;
  out.reserve(indices.size());
  for (auto i : indices) out.push_back(docs[i]);
  return out;
}

}  // namespace vusc
