#pragma once

#include "gsr/core.hpp"
#include "gsr/fem.hpp"

#include <optional>
#include <vector>

namespace gsr {

// Sampling moments of the gaussian field estimator at probe points.
struct FieldStats {
  std::vector<Point2> points;
  std::optional<Vector> mean;  // only when the true field at the observations is supplied
  Matrix covariance;           // sigma^2 units

  Vector variance() const { return covariance.diagonal(); }
};

struct FieldStatsOptions {
  // Covariate-adjusted variant: replaces Psi^T Psi by Psi^T Q Psi with
  // Q = I - X (X^T X)^{-1} X^T. Zero columns gives the plain formulas.
  Matrix X = Matrix(0, 0);
  // True field values at the n observations (f at the points, or its region integrals).
  std::optional<Vector> true_values;
  unsigned threads = 1;
};

constexpr std::size_t kMaxDenseStatsBasis = 2000;

// With A = (Psi^T Psi + lambda P)^{-1}:
//   cov(p1, p2) = sigma^2 psi(p1)^T A Psi^T Psi A psi(p2)
//   mean(p)     = psi(p)^T A Psi^T f_true
// Dense; throws ValidationError when K exceeds kMaxDenseStatsBasis or a probe lies
// outside the mesh.
FieldStats field_stats(const FemSystem& fem, double lambda, double sigma2, const std::vector<Point2>& points,
                       const FieldStatsOptions& options = {});

// Dense P = R1 R0^{-1} R1.
Matrix dense_penalty(const FemSystem& fem);

}  // namespace gsr
