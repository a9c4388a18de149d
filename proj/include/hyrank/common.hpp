#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace hyrank {

using Vec = std::vector<double>;

/// Malformed input data (embedding files, gold files, checkpoints, config).
/// Messages include a line number where one is known.
class ParseError : public std::runtime_error {
 public:
  explicit ParseError(const std::string& msg) : std::runtime_error(msg) {}
  ParseError(const std::string& msg, std::size_t line)
      : std::runtime_error(msg + " (line " + std::to_string(line) + ")") {}
};

/// Non-finite values, zero norms, and other numeric failures.
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace hyrank
