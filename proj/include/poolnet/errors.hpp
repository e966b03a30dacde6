// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace poolnet {

/// Operand dimensions do not conform.
struct ShapeError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// A caller-supplied value is outside the accepted domain.
struct ArgumentError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// A character index does not exist in the vocabulary.
struct VocabularyError : std::out_of_range {
  using std::out_of_range::out_of_range;
};

/// An API was called out of sequence (e.g. backward without a matching forward).
struct UsageError : std::logic_error {
  using std::logic_error::logic_error;
};

/// Malformed input data. `line` is 1-based; 0 when not tied to a line.
class DataError : public std::runtime_error {
 public:
  DataError(const std::string& what, std::size_t line)
      : std::runtime_error(line ? "line " + std::to_string(line) + ": " + what : what),
        line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// A checkpoint could not be read back into a consistent model.
struct LoadError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace poolnet
