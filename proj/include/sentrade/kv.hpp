#pragma once

#include <istream>
#include <set>
#include <string>
#include <vector>

#include "sentrade/csv.hpp"
#include "sentrade/error.hpp"

namespace sentrade::kv {

struct Entry {
  std::string key;
  std::string value;
  std::size_t line;
};

/// Reads `key = value` lines. Blank lines and `#` comments are skipped;
/// a line without `=` or a repeated key is a ConfigError.
inline std::vector<Entry> parse(std::istream& in) {
  std::vector<Entry> entries;
  std::set<std::string> seen;
  csv::Reader reader(in);
  std::string line;
  while (reader.next(line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(reader.line()) + ": expected `key = value`");
    std::string key{csv::trim(std::string_view(line).substr(0, eq))};
    std::string value{csv::trim(std::string_view(line).substr(eq + 1))};
    if (key.empty()) throw ConfigError("line " + std::to_string(reader.line()) + ": empty key");
    if (!seen.insert(key).second)
      throw ConfigError("line " + std::to_string(reader.line()) + ": duplicate key `" + key + "`");
    entries.push_back({std::move(key), std::move(value), reader.line()});
  }
  return entries;
}

}  // namespace sentrade::kv
