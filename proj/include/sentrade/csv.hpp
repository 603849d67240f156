#pragma once

#include <charconv>
#include <cstdint>
#include <istream>
#include <optional>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "sentrade/error.hpp"

namespace sentrade::csv {

inline std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

inline std::vector<std::string_view> split(std::string_view line, char sep = ',') {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      fields.push_back(trim(line.substr(start)));
      break;
    }
    fields.push_back(trim(line.substr(start, pos - start)));
    start = pos + 1;
  }
  return fields;
}

inline std::optional<double> to_double(std::string_view s) {
  double v{};
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc{} || ptr != end || s.empty()) return std::nullopt;
  return v;
}

inline std::optional<std::int64_t> to_int(std::string_view s) {
  std::int64_t v{};
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc{} || ptr != end || s.empty()) return std::nullopt;
  return v;
}

/// Shortest representation that parses back to the same double.
inline std::string format(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

/// Line reader that tracks 1-based line numbers and skips blank and `#` lines.
class Reader {
 public:
  explicit Reader(std::istream& in) : in_(in) {}

  bool next(std::string& line) {
    while (std::getline(in_, line)) {
      ++line_;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      const auto t = trim(line);
      if (t.empty() || t.front() == '#') continue;
      return true;
    }
    return false;
  }

  std::size_t line() const noexcept { return line_; }

  /// Consumes the header row and checks it matches `expected` exactly.
  void expect_header(std::string_view expected) {
    std::string line;
    if (!next(line)) throw DataError("missing header `" + std::string(expected) + "`", line_ ? line_ : 1);
    if (trim(line) != expected)
      throw DataError("expected header `" + std::string(expected) + "`, got `" + line + "`", line_);
  }

 private:
  std::istream& in_;
  std::size_t line_ = 0;
};

}  // namespace sentrade::csv
