#include "gsr/inference.hpp"

#include "gsr/parallel.hpp"
#include "gsr/text.hpp"

#include <cmath>

namespace gsr {

Matrix dense_penalty(const FemSystem& fem) {
  const Matrix r1 = Matrix(fem.r1());
  Eigen::LLT<Matrix> mass(Matrix(fem.r0()));
  Matrix p = r1 * mass.solve(r1);
  return 0.5 * (p + p.transpose());
}

FieldStats field_stats(const FemSystem& fem, double lambda, double sigma2, const std::vector<Point2>& points,
                       const FieldStatsOptions& options) {
  const auto K = static_cast<Eigen::Index>(fem.num_basis());
  const auto n = static_cast<Eigen::Index>(fem.num_observations());
  if (fem.num_basis() > kMaxDenseStatsBasis) {
    throw ValidationError("field statistics are dense; mesh has " + std::to_string(K) + " nodes, limit is " +
                          std::to_string(kMaxDenseStatsBasis));
  }
  if (!(lambda > 0.0) || !std::isfinite(lambda)) {
    throw ValidationError("smoothing parameter must be positive and finite, got " + text::format_double(lambda));
  }
  if (!(sigma2 > 0.0) || !std::isfinite(sigma2)) throw ValidationError("sigma^2 must be positive and finite");
  if (options.true_values && options.true_values->size() != n) {
    throw ValidationError("true field has " + std::to_string(options.true_values->size()) + " values, expected " +
                          std::to_string(n));
  }

  const Matrix psi = Matrix(fem.psi());
  Matrix qpsi = psi;
  if (options.X.cols() > 0) {
    if (options.X.rows() != n) throw ValidationError("design matrix rows do not match the number of observations");
    Eigen::ColPivHouseholderQR<Matrix> qr(options.X);
    if (qr.rank() < options.X.cols()) throw NumericalError("rank-deficient design matrix");
    qpsi -= options.X * qr.solve(psi);
  }
  const Matrix gram = psi.transpose() * qpsi;
  const Matrix system = gram + lambda * dense_penalty(fem);
  Eigen::LDLT<Matrix> ldlt(system);
  if (ldlt.info() != Eigen::Success) throw NumericalError("field statistics system is singular");

  const auto m = static_cast<Eigen::Index>(points.size());
  Matrix basis = Matrix::Zero(K, m);
  for (Eigen::Index j = 0; j < m; ++j) {
    const auto b = basis_at(fem.mesh(), points[static_cast<std::size_t>(j)]);
    if (!b) throw ValidationError("probe point " + std::to_string(j) + " lies outside the mesh");
    basis.col(j) = Vector(*b);
  }

  // columns A psi(p_j)
  Matrix a_basis(K, m);
  parallel_for(static_cast<std::size_t>(m), options.threads, [&](std::size_t j) {
    a_basis.col(static_cast<Eigen::Index>(j)) = ldlt.solve(basis.col(static_cast<Eigen::Index>(j)));
  });

  FieldStats out;
  out.points = points;
  Matrix cov = sigma2 * (a_basis.transpose() * gram * a_basis);
  out.covariance = 0.5 * (cov + cov.transpose());
  if (options.true_values) {
    const Vector rhs = qpsi.transpose() * *options.true_values;
    out.mean = a_basis.transpose() * rhs;
  }
  return out;
}

}  // namespace gsr
