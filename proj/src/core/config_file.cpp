#include "core/config_file.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>

#include "core/error.hpp"

namespace vusc {

const std::string* ConfigSection::find(std::string_view key) const {
  for (const auto& [k, v] : entries)
    if (k == key) return &v;
  return nullptr;
}

std::string trim(std::string_view text) {
  std::size_t begin = 0, end = text.size();
  while (begin < end && std::isspace(static_cast<unsigned char>(text[begin]))) ++begin;
  while (end > begin && std::isspace(static_cast<unsigned char>(text[end - 1]))) --end;
  return std::string(text.substr(begin, end - begin));
}

std::string to_lower(std::string_view text) {
  std::string out(text);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::vector<std::string> split_list(std::string_view text) {
  std::vector<std::string> items;
  std::string current;
  for (char ch : text) {
    if (ch == ',' || std::isspace(static_cast<unsigned char>(ch))) {
      if (!current.empty()) items.push_back(std::move(current));
      current.clear();
    } else {
      current.push_back(ch);
    }
  }
  if (!current.empty()) items.push_back(std::move(current));
  return items;
}

std::vector<ConfigSection> parse_config(std::istream& in, const std::string& source) {
  std::vector<ConfigSection> sections(1);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string text = trim(line);
    if (text.empty() || text[0] == '#') continue;
    if (text.front() == '[') {
      if (text.back() != ']')
        fail(ErrorKind::Parse, source + ":" + std::to_string(line_no) + ": unterminated section header");
      std::string header = trim(std::string_view(text).substr(1, text.size() - 2));
      ConfigSection section;
      auto space = header.find_first_of(" \t");
      section.kind = to_lower(header.substr(0, space));
      if (space != std::string::npos) section.name = trim(header.substr(space));
      if (section.kind.empty())
        fail(ErrorKind::Parse, source + ":" + std::to_string(line_no) + ": empty section header");
      sections.push_back(std::move(section));
      continue;
    }
    auto eq = text.find('=');
    if (eq == std::string::npos)
      fail(ErrorKind::Parse, source + ":" + std::to_string(line_no) + ": expected 'key = value'");
    std::string key = to_lower(trim(std::string_view(text).substr(0, eq)));
    if (key.empty())
      fail(ErrorKind::Parse, source + ":" + std::to_string(line_no) + ": empty key");
    sections.back().entries.emplace_back(std::move(key), trim(std::string_view(text).substr(eq + 1)));
  }
  return sections;
}

std::vector<ConfigSection> parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Io, "cannot open config file: " + path);
  return parse_config(in, path);
}

}  // namespace vusc
