#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace sentrade {

/// Malformed or inconsistent input data (CSV rows, session invariants, spans).
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& what, std::size_t line = 0)
      : std::runtime_error(line ? "line " + std::to_string(line) + ": " + what : what),
        line_(line) {}

  /// 1-based line of the offending row, 0 when not tied to a row.
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Invalid configuration value or unknown configuration key.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace sentrade
