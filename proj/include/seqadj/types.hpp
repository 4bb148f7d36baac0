#pragma once

// Shared numeric aliases and the exception types thrown across the library.

#include <Eigen/Dense>

#include <cstddef>
#include <stdexcept>
#include <string>

namespace seqadj {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

/// Base of every error raised by seqadj.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Sizes of vectors or matrices that do not agree with the declared dimensions.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Invalid configuration or arguments (unknown names, out-of-range settings).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A computation produced a non-finite or otherwise unusable value.
/// `index()` names the step (or component) where it happened, or -1.
class NumericalError : public Error {
 public:
  NumericalError(const std::string& what, long index = -1)
      : Error(what), index_(index) {}
  long index() const noexcept { return index_; }

 private:
  long index_;
};

inline void require_size(Index actual, Index expected, const char* what) {
  if (actual != expected) {
    throw DimensionError(std::string(what) + ": expected size " +
                         std::to_string(expected) + ", got " +
                         std::to_string(actual));
  }
}

inline bool all_finite(const Vector& v) { return v.allFinite(); }

}  // namespace seqadj
