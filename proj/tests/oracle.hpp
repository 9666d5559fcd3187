#pragma once

// Reference computations written independently of the library, used as
// test oracles. They favour directness over speed or numerical care.

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <string>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>

#include "core/corpus.hpp"
#include "core/model.hpp"
#include "core/objective.hpp"

namespace oracle {

inline std::vector<double> naive_softmax(const std::vector<double>& z) {
  std::vector<double> e(z.size());
  double total = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) total += e[i] = std::exp(z[i]);
  for (auto& v : e) v /= total;
  return e;
}

inline std::vector<double> q_of(const vusc::SentimentModel& m, const std::vector<double>& x) {
  std::vector<double> z(m.num_classes, 0.0);
  for (std::size_t c = 0; c < m.num_classes; ++c)
    for (std::size_t k = 0; k < m.dim; ++k) z[c] += m.weights[c * m.dim + k] * x[k];
  return naive_softmax(z);
}

inline double phi(const vusc::OpinionModel& m, std::size_t o, std::size_t t, std::size_t c) {
  if (!m.relevant[t]) return 0.0;
  double s = 0.0;
  for (std::size_t k = 0; k < m.dim; ++k) s += m.context[c * m.dim + k] * m.embeddings[o * m.dim + k];
  return s;
}

// p(o | c, t) by summing the unnormalized scores over the whole vocabulary.
inline double opinion_prob(const vusc::OpinionModel& m, std::size_t o, std::size_t t, std::size_t c) {
  double z = 0.0;
  for (std::size_t w = 0; w < m.num_opinions(); ++w) z += std::exp(oracle::phi(m, w, t, c));
  return std::exp(oracle::phi(m, o, t, c)) / z;
}

inline std::vector<double> prior_probs(const vusc::PriorModel& p, std::size_t classes) {
  if (p.kind == vusc::PriorKind::Uniform) return std::vector<double>(classes, 1.0 / static_cast<double>(classes));
  return naive_softmax(p.logits);
}

// sum over pairs of log sum_c p(c) p(o | c, t)
inline double log_likelihood(const vusc::AspectModel& m, const vusc::Batch& batch) {
  const auto prior = prior_probs(m.prior, m.sentiment.num_classes);
  double total = 0.0;
  for (const auto& doc : batch.docs)
    for (const auto& pair : doc.pairs) {
      double marginal = 0.0;
      for (std::size_t c = 0; c < prior.size(); ++c)
        marginal += prior[c] * opinion_prob(m.opinion, pair.opinion, pair.target, c);
      total += std::log(marginal);
    }
  return total;
}

// sum over pairs of KL(q_x || p(c | o, t)), posterior from Bayes' rule.
inline double total_kl(const vusc::AspectModel& m, const vusc::Batch& batch) {
  const auto prior = prior_probs(m.prior, m.sentiment.num_classes);
  double total = 0.0;
  for (const auto& doc : batch.docs) {
    const auto q = q_of(m.sentiment, doc.features);
    for (const auto& pair : doc.pairs) {
      std::vector<double> joint(prior.size());
      double z = 0.0;
      for (std::size_t c = 0; c < prior.size(); ++c)
        z += joint[c] = prior[c] * opinion_prob(m.opinion, pair.opinion, pair.target, c);
      for (std::size_t c = 0; c < prior.size(); ++c)
        if (q[c] > 0.0) total += q[c] * std::log(q[c] / (joint[c] / z));
    }
  }
  return total;
}

inline double sq_dist(const std::vector<double>& a, const std::vector<double>& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d += (a[i] - b[i]) * (a[i] - b[i]);
  return d;
}

inline double regularizer(const vusc::AspectModel& m, const vusc::Batch& batch) {
  const std::size_t n = batch.docs.size();
  double r = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      r += -sq_dist(q_of(m.sentiment, batch.docs[i].features), q_of(m.sentiment, batch.docs[j].features)) *
           batch.similarity[i * n + j];
    }
  return r;
}

inline double assignment_cost(const std::vector<std::vector<double>>& cost, const std::vector<std::size_t>& perm) {
  double c = 0.0;
  for (std::size_t i = 0; i < perm.size(); ++i) c += cost[i][perm[i]];
  return c;
}

// Lexicographically first permutation among those of minimum cost.
inline std::vector<std::size_t> brute_force_assignment(const std::vector<std::vector<double>>& cost) {
  std::vector<std::size_t> perm(cost.size());
  std::iota(perm.begin(), perm.end(), 0);
  double best = INFINITY;
  do best = std::min(best, assignment_cost(cost, perm));
  while (std::next_permutation(perm.begin(), perm.end()));
  std::iota(perm.begin(), perm.end(), 0);
  do
    if (assignment_cost(cost, perm) <= best + 1e-9) return perm;
  while (std::next_permutation(perm.begin(), perm.end()));
  return {};
}

inline std::size_t distinct_lowercase_tokens(const std::vector<vusc::Document>& docs) {
  std::set<std::string> seen;
  for (const auto& d : docs)
    for (const auto& s : d.sentences)
      for (const auto& t : s.tokens) {
        std::string w = t.form;
        bool has_word_char = false;
        for (char& ch : w) {
          ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
          if (std::isalnum(static_cast<unsigned char>(ch))) has_word_char = true;
        }
        if (has_word_char) seen.insert(w);
      }
  return seen.size();
}

inline double chi_square_p(const std::vector<std::size_t>& observed, const std::vector<double>& probs) {
  double n = 0.0;
  for (auto o : observed) n += static_cast<double>(o);
  double stat = 0.0;
  int cells = 0;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    if (probs[i] == 0.0) {
      if (observed[i] != 0) return 0.0;
      continue;
    }
    const double e = n * probs[i];
    stat += (static_cast<double>(observed[i]) - e) * (static_cast<double>(observed[i]) - e) / e;
    ++cells;
  }
  return boost::math::cdf(boost::math::complement(boost::math::chi_squared(cells - 1), stat));
}

}  // namespace oracle
