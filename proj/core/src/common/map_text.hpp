#pragma once

// Line-oriented helpers shared by the map file readers and writers.

#include <initializer_list>
#include <sstream>
#include <string>
#include <vector>

#include "fmeac/common/errors.hpp"
#include "fmeac/common/text_io.hpp"

namespace fmeac::map_text {

inline void put(std::ostringstream& os, std::initializer_list<double> values) {
  bool first = true;
  for (double v : values) {
    if (!first) os << ' ';
    os << format_double(v);
    first = false;
  }
  os << '\n';
}

struct SectionReader {
  std::vector<std::string> lines;
  std::size_t pos = 0;

  bool done() const { return pos >= lines.size(); }
  const std::string& peek() const { return lines[pos]; }
  const std::string& next() {
    if (done()) throw ContractError("map file ended unexpectedly");
    return lines[pos++];
  }
  bool at_section() const { return !done() && !peek().empty() && peek().front() == '['; }
};

inline SectionReader read_lines(const std::string& text) {
  SectionReader r;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (split_tokens(line).empty()) continue;
    r.lines.push_back(line);
  }
  return r;
}

inline std::vector<double> numbers(const std::string& line, std::size_t expected) {
  std::vector<double> out;
  for (auto tok : split_tokens(line)) out.push_back(parse_double(tok));
  if (expected != 0 && out.size() != expected) {
    throw ContractError("map line has " + std::to_string(out.size()) + " fields, expected " +
                        std::to_string(expected) + ": " + line);
  }
  return out;
}

inline void expect_section(SectionReader& r, const std::string& name) {
  const std::string& line = r.next();
  if (line != name) throw ContractError("expected section " + name + ", found '" + line + "'");
}

}  // namespace fmeac::map_text
