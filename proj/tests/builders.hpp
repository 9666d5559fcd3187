#pragma once

#include <initializer_list>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "core/corpus.hpp"

namespace build {

// Unparsed document, one sentence per string, tokens split on spaces.
inline vusc::Document doc(const std::string& id, std::initializer_list<std::string> sentences) {
  vusc::Document d;
  d.id = id;
  for (const auto& text : sentences) {
    vusc::Sentence s;
    s.parsed = false;
    std::istringstream in(text);
    std::string w;
    while (in >> w) s.tokens.push_back(vusc::Token{w, w, "X", 0, "_"});
    d.sentences.push_back(std::move(s));
  }
  return d;
}

// Parsed sentence from (form, lemma, upos, head, deprel) rows.
using Row = std::tuple<std::string, std::string, std::string, int, std::string>;

inline vusc::Sentence parsed(std::initializer_list<Row> rows) {
  vusc::Sentence s;
  for (const auto& [form, lemma, upos, head, deprel] : rows) s.tokens.push_back(vusc::Token{form, lemma, upos, head, deprel});
  return s;
}

}  // namespace build
