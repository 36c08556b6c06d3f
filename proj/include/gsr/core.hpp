#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <stdexcept>
#include <string>

namespace gsr {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using SparseMatrix = Eigen::SparseMatrix<double>;

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

inline bool operator==(const Point2& a, const Point2& b) { return a.x == b.x && a.y == b.y; }

// Error hierarchy. Every failure surfaced by the library derives from gsr::Error so
// the CLI can map categories onto exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input text (mesh, region or data files).
class ParseError : public Error {
 public:
  using Error::Error;
};

// Well-formed input that violates a structural invariant.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Value outside the mean or canonical domain of a family.
class DomainError : public Error {
 public:
  using Error::Error;
};

// Singular systems, rank-deficient designs, failed fits.
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace gsr
