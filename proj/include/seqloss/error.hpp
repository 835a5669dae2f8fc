// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace seqloss {

/// Invalid or missing configuration (bad paths, unsupported options).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A record in an input file could not be parsed.
class FormatError : public std::runtime_error {
 public:
  FormatError(const std::string &file, std::size_t line, const std::string &what)
      : std::runtime_error(file + ":" + std::to_string(line) + ": " + what),
        line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Non-finite values appeared in activations, gradients or parameters.
class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A fixture-backed embedding provider was asked for a sentence it does not hold.
class FixtureMissError : public std::runtime_error {
 public:
  explicit FixtureMissError(const std::string &sentence)
      : std::runtime_error("sentence not in embedding fixture: \"" + sentence + "\""),
        sentence_(sentence) {}

  const std::string &sentence() const noexcept { return sentence_; }

 private:
  std::string sentence_;
};

}  // namespace seqloss
