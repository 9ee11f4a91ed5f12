#pragma once

#include <Eigen/Core>

#include <compare>
#include <stdexcept>
#include <string>
#include <string_view>

namespace lrlasso {

using Index = Eigen::Index;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

enum class Family { gaussian, binomial };

std::string_view to_string(Family family);
Family parse_family(std::string_view name);

// Base of every error thrown by the library. The CLI maps these to exit code 1.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input file (carries row/column in the message).
class ParseError : public Error {
 public:
  using Error::Error;
};

// Value outside the mathematical domain of an operation (log of 0, degenerate
// column, sum-nonzero vector passed where a contrast is required, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

class ConvergenceError : public Error {
 public:
  using Error::Error;
};

// Selection event or truncation interval that contradicts the observed data.
class ConsistencyError : public Error {
 public:
  using Error::Error;
};

// Two 0-based feature indices denoting the ratio log(x_first / x_second).
// Canonical (stored) pairs have first < second.
struct FeaturePair {
  Index first = 0;
  Index second = 0;

  friend auto operator<=>(const FeaturePair&, const FeaturePair&) = default;
};

}  // namespace lrlasso
