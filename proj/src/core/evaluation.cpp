#include "core/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <thread>

#include <json.hpp>

#include "core/config_file.hpp"
#include "core/error.hpp"
#include "core/model.hpp"
#include "core/rng.hpp"

namespace vusc {

namespace {

// Kuhn-Munkres with row/column potentials, O(n^3). Returns row -> column.
Assignment solve_assignment(const CostMatrix& a) {
  const std::size_t n = a.size();
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<std::size_t> p(n + 1, 0), way(n + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = p[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = a[i0 - 1][j - 1] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  Assignment rows(n);
  for (std::size_t j = 1; j <= n; ++j) rows[p[j] - 1] = j - 1;
  return rows;
}

double optimal_cost(const CostMatrix& a) {
  if (a.empty()) return 0.0;
  return assignment_cost(a, solve_assignment(a));
}

std::vector<int> gold_for(std::span<const Document> docs, const std::string& aspect) {
  std::vector<int> gold;
  for (const auto& d : docs) {
    auto it = d.gold_labels.find(aspect);
    if (it != d.gold_labels.end()) gold.push_back(it->second);
  }
  return gold;
}

}  // namespace

double assignment_cost(const CostMatrix& cost, const Assignment& assignment) {
  double total = 0.0;
  for (std::size_t r = 0; r < assignment.size(); ++r) total += cost[r][assignment[r]];
  return total;
}

Assignment hungarian(const CostMatrix& cost) {
  const std::size_t n = cost.size();
  if (n == 0) fail(ErrorKind::InvalidArgument, "hungarian needs a nonempty matrix");
  double max_abs = 0.0;
  for (const auto& row : cost) {
    if (row.size() != n) fail(ErrorKind::InvalidArgument, "hungarian needs a square cost matrix");
    for (double c : row) {
      if (!std::isfinite(c)) fail(ErrorKind::InvalidArgument, "hungarian needs finite costs");
      max_abs = std::max(max_abs, std::abs(c));
    }
  }
  const double best = optimal_cost(cost);
  const double tolerance = 1e-9 * (1.0 + max_abs * static_cast<double>(n));

  // Fix rows in order, each to the smallest column that still admits an optimal completion.
  Assignment result(n);
  std::vector<char> taken(n, 0);
  double fixed = 0.0;
  for (std::size_t r = 0; r < n; ++r) {
    bool placed = false;
    for (std::size_t c = 0; c < n && !placed; ++c) {
      if (taken[c]) continue;
      CostMatrix rest;
      for (std::size_t rr = r + 1; rr < n; ++rr) {
        std::vector<double> row;
        for (std::size_t cc = 0; cc < n; ++cc)
          if (!taken[cc] && cc != c) row.push_back(cost[rr][cc]);
        rest.push_back(std::move(row));
      }
      if (fixed + cost[r][c] + optimal_cost(rest) <= best + tolerance) {
        result[r] = c;
        taken[c] = 1;
        fixed += cost[r][c];
        placed = true;
      }
    }
    if (!placed) fail(ErrorKind::Numeric, "hungarian: no optimal completion found (ill-conditioned costs)");
  }
  return result;
}

std::size_t predict(const AspectModel& model, const Vocab& features, const Document& doc) {
  return argmax(posterior(model.sentiment, bow_features(doc, features)));
}

EvalResult evaluate_predictions(std::span<const std::size_t> predicted, std::span<const int> gold,
                                std::size_t num_clusters) {
  if (predicted.size() != gold.size()) fail(ErrorKind::InvalidArgument, "prediction and gold counts differ");
  if (gold.empty()) fail(ErrorKind::InvalidArgument, "no gold labels to evaluate against");
  std::size_t n = num_clusters;
  for (int g : gold) {
    if (g < 0) fail(ErrorKind::InvalidArgument, "gold labels must be nonnegative");
    n = std::max(n, static_cast<std::size_t>(g) + 1);
  }
  for (auto p : predicted) n = std::max(n, p + 1);
  std::vector<std::vector<std::size_t>> counts(n, std::vector<std::size_t>(n, 0));
  for (std::size_t i = 0; i < gold.size(); ++i) ++counts[predicted[i]][static_cast<std::size_t>(gold[i])];
  CostMatrix cost(n, std::vector<double>(n));
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t l = 0; l < n; ++l) cost[k][l] = -static_cast<double>(counts[k][l]);

  EvalResult result;
  result.assignment = hungarian(cost);
  std::size_t matched = 0;
  for (std::size_t k = 0; k < n; ++k) matched += counts[k][result.assignment[k]];
  result.documents = gold.size();
  result.accuracy = static_cast<double>(matched) / static_cast<double>(gold.size());
  return result;
}

EvalResult evaluate(const AspectModel& model, const Vocab& features, std::span<const Document> docs) {
  std::vector<std::size_t> predicted;
  std::vector<int> gold;
  for (const auto& d : docs) {
    auto it = d.gold_labels.find(model.aspect);
    if (it == d.gold_labels.end()) continue;
    predicted.push_back(predict(model, features, d));
    gold.push_back(it->second);
  }
  if (gold.empty()) fail(ErrorKind::InvalidArgument, "no gold labels for aspect '" + model.aspect + "'");
  return evaluate_predictions(predicted, gold, model.sentiment.num_classes);
}

Report evaluate_model(const TrainedModel& model, std::span<const Document> docs, std::size_t threads) {
  std::vector<const AspectModel*> scored;
  for (const auto& a : model.aspects)
    if (!gold_for(docs, a.aspect).empty()) scored.push_back(&a);
  if (scored.empty()) fail(ErrorKind::InvalidArgument, "evaluation documents carry no gold labels for any aspect");

  Report report;
  report.aspects.resize(scored.size());
  auto run = [&](std::size_t i) {
    report.aspects[i] = {scored[i]->aspect, evaluate(*scored[i], model.features, docs).accuracy, 0.0};
  };
  threads = std::max<std::size_t>(1, std::min(threads, scored.size()));
  if (threads == 1) {
    for (std::size_t i = 0; i < scored.size(); ++i) run(i);
  } else {
    std::vector<std::thread> workers;
    for (std::size_t t = 0; t < threads; ++t)
      workers.emplace_back([&, t] {
        for (std::size_t i = t; i < scored.size(); i += threads) run(i);
      });
    for (auto& w : workers) w.join();
  }
  for (const auto& s : report.aspects) report.mean += s.mean;
  report.mean /= static_cast<double>(report.aspects.size());
  return report;
}

double majority_baseline(std::span<const Document> train_docs, std::span<const Document> eval_docs,
                         const std::string& aspect) {
  std::map<int, std::size_t> counts;
  for (int g : gold_for(train_docs, aspect)) ++counts[g];
  if (counts.empty()) fail(ErrorKind::InvalidArgument, "no training gold labels for aspect '" + aspect + "'");
  int majority = counts.begin()->first;
  for (const auto& [label, count] : counts)
    if (count > counts[majority]) majority = label;

  const auto gold = gold_for(eval_docs, aspect);
  if (gold.empty()) fail(ErrorKind::InvalidArgument, "no evaluation gold labels for aspect '" + aspect + "'");
  const auto hits = std::count(gold.begin(), gold.end(), majority);
  return static_cast<double>(hits) / static_cast<double>(gold.size());
}

OpinionLexicon load_opinion_lexicon(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Io, "cannot open lexicon: " + path);
  OpinionLexicon lex;
  WordSet negation;
  bool custom_negation = false;
  WordSet* section = nullptr;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string text = trim(line);
    if (text.empty() || text[0] == '#') continue;
    if (text.front() == '[') {
      const std::string name = to_lower(text);
      if (name == "[positive]") section = &lex.positive;
      else if (name == "[negative]") section = &lex.negative;
      else if (name == "[negation]") {
        section = &negation;
        custom_negation = true;
      } else {
        fail(ErrorKind::Parse, path + ":" + std::to_string(line_no) + ": unknown section " + text);
      }
      continue;
    }
    if (!section) fail(ErrorKind::Parse, path + ":" + std::to_string(line_no) + ": word outside a section");
    for (const auto& w : split_list(text)) section->insert(to_lower(w));
  }
  if (custom_negation) lex.negation = std::move(negation);
  for (const auto& w : lex.positive)
    if (lex.negative.count(w)) fail(ErrorKind::Parse, path + ": '" + w + "' is both positive and negative");
  return lex;
}

LexiconResult lexicon_baseline(std::span<const Document> docs, const PairSet& pairs, const std::string& aspect,
                               const OpinionLexicon& lexicon, const LexiconOptions& options) {
  if (lexicon.positive.empty() && lexicon.negative.empty())
    fail(ErrorKind::InvalidArgument, "opinion lexicon is empty");
  if (options.trials == 0) fail(ErrorKind::InvalidArgument, "lexicon baseline needs at least one trial");
  const auto aspect_id = pairs.find_aspect(aspect);

  std::map<std::string, std::vector<const WordPair*>> by_doc;
  if (aspect_id)
    for (const auto& p : pairs.pairs)
      if (p.aspect_id == *aspect_id) by_doc[p.doc_id].push_back(&p);

  // Deterministic vote per document; nullopt marks a tie to be broken per trial.
  struct Scored {
    int gold;
    int vote;
    std::optional<int> overall;
  };
  std::vector<Scored> scored;
  for (const auto& doc : docs) {
    auto g = doc.gold_labels.find(aspect);
    if (g == doc.gold_labels.end()) continue;

    // Opinion-word occurrences, consumed left to right as pairs claim them.
    struct Occurrence {
      std::size_t sentence, position;
    };
    std::map<std::string, std::vector<Occurrence>> occurrences;
    std::vector<std::vector<std::string>> words(doc.sentences.size());
    for (std::size_t s = 0; s < doc.sentences.size(); ++s)
      for (const auto& tok : doc.sentences[s].tokens) {
        std::string w = normalize_token(tok.form);
        if (w.empty()) continue;
        occurrences[w].push_back({s, words[s].size()});
        words[s].push_back(std::move(w));
      }
    std::map<std::string, std::size_t> consumed;

    int vote = 0;
    auto it = by_doc.find(doc.id);
    if (it != by_doc.end())
      for (const WordPair* p : it->second) {
        int polarity = lexicon.positive.count(p->opinion) ? 1 : lexicon.negative.count(p->opinion) ? -1 : 0;
        if (polarity == 0) continue;
        auto occ = occurrences.find(p->opinion);
        if (occ != occurrences.end() && !occ->second.empty()) {
          std::size_t& next = consumed[p->opinion];
          const Occurrence& o = occ->second[std::min(next, occ->second.size() - 1)];
          ++next;
          const auto& sent = words[o.sentence];
          const std::size_t from = o.position >= options.negation_window ? o.position - options.negation_window : 0;
          for (std::size_t k = from; k < o.position; ++k)
            if (lexicon.negation.count(sent[k])) {
              polarity = -polarity;
              break;
            }
        }
        vote += polarity;
      }
    scored.push_back({g->second, vote, doc.overall_polarity});
  }
  if (scored.empty()) fail(ErrorKind::InvalidArgument, "no gold labels for aspect '" + aspect + "'");

  Rng rng(options.seed);
  LexiconResult result;
  for (std::size_t t = 0; t < options.trials; ++t) {
    std::size_t correct = 0;
    for (const auto& s : scored) {
      int predicted;
      if (s.vote > 0) predicted = 1;
      else if (s.vote < 0) predicted = 0;
      else if (options.tie_break == TieBreak::Overall && s.overall) predicted = *s.overall;
      else predicted = static_cast<int>(rng.below(2));
      if (predicted == s.gold) ++correct;
    }
    result.trials.push_back(static_cast<double>(correct) / static_cast<double>(scored.size()));
  }
  for (double a : result.trials) result.mean += a;
  result.mean /= static_cast<double>(result.trials.size());
  if (result.trials.size() > 1) {
    double ss = 0.0;
    for (double a : result.trials) ss += (a - result.mean) * (a - result.mean);
    result.stddev = std::sqrt(ss / static_cast<double>(result.trials.size() - 1));
  }
  return result;
}

std::string format_report_line(const std::string& aspect, const std::string& method, const std::string& split,
                               double mean, double stddev) {
  nlohmann::ordered_json j;
  j["aspect"] = aspect;
  j["method"] = method;
  j["split"] = split;
  j["mean"] = mean;
  j["std"] = stddev;
  return j.dump();
}

}  // namespace vusc
