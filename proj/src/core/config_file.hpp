#pragma once

#include <istream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace vusc {

// Minimal key-value configuration format shared by the aspect, lexicon and
// training config files:
//
//   # comment
//   key = value
//   [section optional-name]
//   key = a, b, c
//
// Entries before the first header belong to an unnamed top-level section.
struct ConfigSection {
  std::string kind;  // first word of the header, "" for the top level
  std::string name;  // remainder of the header
  std::vector<std::pair<std::string, std::string>> entries;

  const std::string* find(std::string_view key) const;
};

std::vector<ConfigSection> parse_config(std::istream& in, const std::string& source);
std::vector<ConfigSection> parse_config_file(const std::string& path);

// Splits a comma- or whitespace-separated list, dropping empty items.
std::vector<std::string> split_list(std::string_view text);

std::string trim(std::string_view text);
std::string to_lower(std::string_view text);

}  // namespace vusc
