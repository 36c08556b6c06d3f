#include "gsr/solver.hpp"

#include "gsr/text.hpp"

#include <Eigen/OrderingMethods>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <variant>

namespace gsr {

namespace {

constexpr double kMinWeight = 1e-10;
constexpr double kRankTol = 1e-10;
constexpr Eigen::Index kTraceChunk = 128;

using ColamdLU = Eigen::SparseLU<SparseMatrix, Eigen::COLAMDOrdering<int>>;
using AmdLU = Eigen::SparseLU<SparseMatrix, Eigen::AMDOrdering<int>>;

void append_block(std::vector<Eigen::Triplet<double>>& trips, const SparseMatrix& m, Eigen::Index row0,
                  Eigen::Index col0, double scale) {
  for (Eigen::Index k = 0; k < m.outerSize(); ++k) {
    for (SparseMatrix::InnerIterator it(m, k); it; ++it) {
      trips.emplace_back(static_cast<int>(row0 + it.row()), static_cast<int>(col0 + it.col()), scale * it.value());
    }
  }
}

}  // namespace

// The factorised matrix is the symmetrically rescaled system
//   [ -Psi~^T Psi~     sqrt(l) R1 ]
//   [  sqrt(l) R1      R0         ]
// (h block scaled by sqrt(lambda)), which keeps pivots of comparable size across the
// whole lambda range. Solutions are unscaled on the way out.
struct PlsSystem::Impl {
  const FemSystem* fem = nullptr;
  Eigen::Index n = 0;
  Eigen::Index K = 0;
  Eigen::Index q = 0;
  double lambda = 0.0;
  double root_lambda = 0.0;

  Vector sqrt_w;
  SparseMatrix psi_w;  // W^{1/2} Psi
  Matrix x_w;          // W^{1/2} X
  Eigen::ColPivHouseholderQR<Matrix> x_qr;

  std::variant<std::monostate, ColamdLU, AmdLU, Eigen::PartialPivLU<Matrix>> lu;

  Matrix a0inv_u;  // A0^{-1} U, U = [Psi~^T X~; 0]
  Eigen::PartialPivLU<Matrix> capacitance;

  Matrix solve_a0(const Matrix& rhs) const {
    return std::visit(
        [&](const auto& f) -> Matrix {
          if constexpr (std::is_same_v<std::decay_t<decltype(f)>, std::monostate>) {
            throw NumericalError("block system not factorised");
          } else {
            return f.solve(rhs);
          }
        },
        lu);
  }

  // Q~ v for each column of v
  Matrix apply_q(const Matrix& v) const {
    if (q == 0) return v;
    return v - x_w * x_qr.solve(v);
  }

  // Solves the (scaled) block system with right-hand side [top; 0] and returns the
  // unscaled [f; h] stacked in 2K rows.
  Matrix solve_top(const Matrix& top) const {
    Matrix rhs = Matrix::Zero(2 * K, top.cols());
    rhs.topRows(K) = top;
    Matrix y = solve_a0(rhs);
    if (q > 0) {
      const Matrix ut_y = x_w.transpose() * (psi_w * y.topRows(K));
      y -= a0inv_u * capacitance.solve(ut_y);
    }
    y.bottomRows(K) /= root_lambda;
    return y;
  }
};

PlsSystem::PlsSystem(const FemSystem& fem, const Matrix& X, const Vector& w, double lambda,
                     Factorization factorization)
    : impl_(std::make_unique<Impl>()) {
  auto& s = *impl_;
  s.fem = &fem;
  s.n = static_cast<Eigen::Index>(fem.num_observations());
  s.K = static_cast<Eigen::Index>(fem.num_basis());
  s.q = X.cols();
  if (!(lambda > 0.0) || !std::isfinite(lambda)) {
    throw ValidationError("smoothing parameter must be positive and finite, got " + text::format_double(lambda));
  }
  if (w.size() != s.n) throw ValidationError("weight vector length does not match the number of observations");
  if (s.q > 0 && X.rows() != s.n) throw ValidationError("design matrix rows do not match the number of observations");
  for (Eigen::Index i = 0; i < s.n; ++i) {
    if (!(w[i] >= kMinWeight) || !std::isfinite(w[i])) {
      throw ValidationError("weight " + std::to_string(i) + " is below 1e-10 or not finite");
    }
  }
  s.lambda = lambda;
  s.root_lambda = std::sqrt(lambda);
  s.sqrt_w = w.cwiseSqrt();
  s.psi_w = s.sqrt_w.asDiagonal() * fem.psi();

  if (s.q > 0) {
    s.x_w = s.sqrt_w.asDiagonal() * X;
    if (!s.x_w.allFinite()) throw ValidationError("design matrix has non-finite entries");
    Eigen::JacobiSVD<Matrix> svd(s.x_w);
    const auto& sv = svd.singularValues();
    if (sv.size() < s.q || !(sv[sv.size() - 1] > kRankTol * sv[0])) {
      throw NumericalError("rank-deficient design matrix (singular value ratio below 1e-10)");
    }
    s.x_qr.compute(s.x_w);
  }

  // sparse part of the system (Q~ = I)
  const SparseMatrix gram = SparseMatrix(s.psi_w.transpose()) * s.psi_w;
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(static_cast<std::size_t>(gram.nonZeros() + 2 * fem.r1().nonZeros() + fem.r0().nonZeros()));
  append_block(trips, gram, 0, 0, -1.0);
  append_block(trips, fem.r1(), 0, s.K, s.root_lambda);
  append_block(trips, fem.r1(), s.K, 0, s.root_lambda);
  append_block(trips, fem.r0(), s.K, s.K, 1.0);
  SparseMatrix a0(2 * s.K, 2 * s.K);
  a0.setFromTriplets(trips.begin(), trips.end());
  a0.makeCompressed();

  const auto sparse_factor = [&](auto& lu) {
    lu.analyzePattern(a0);
    lu.factorize(a0);
    if (lu.info() != Eigen::Success) throw NumericalError("singular block system: " + lu.lastErrorMessage());
  };
  switch (factorization) {
    case Factorization::SparseColamd: sparse_factor(s.lu.emplace<ColamdLU>()); break;
    case Factorization::SparseAmd: sparse_factor(s.lu.emplace<AmdLU>()); break;
    case Factorization::Dense: {
      auto& lu = s.lu.emplace<Eigen::PartialPivLU<Matrix>>(Matrix(a0));
      if (!(lu.rcond() > 1e-15)) throw NumericalError("singular block system (dense factorisation)");
      break;
    }
  }

  if (s.q > 0) {
    Matrix u = Matrix::Zero(2 * s.K, s.q);
    u.topRows(s.K) = s.psi_w.transpose() * s.x_w;
    s.a0inv_u = s.solve_a0(u);
    const Matrix xtx = s.x_w.transpose() * s.x_w;
    const Matrix cap = xtx + u.transpose() * s.a0inv_u;
    Eigen::JacobiSVD<Matrix> svd(cap);
    const auto& sv = svd.singularValues();
    Eigen::JacobiSVD<Matrix> svd_xtx(xtx);
    if (!(sv[sv.size() - 1] > kRankTol * svd_xtx.singularValues()[0])) {
      throw NumericalError(
          "singular block system: covariates are aliased with the unpenalised part of the field "
          "(for instance an intercept column)");
    }
    s.capacitance.compute(cap);
  }
}

PlsSystem::~PlsSystem() = default;
PlsSystem::PlsSystem(PlsSystem&&) noexcept = default;
PlsSystem& PlsSystem::operator=(PlsSystem&&) noexcept = default;

std::size_t PlsSystem::num_covariates() const { return static_cast<std::size_t>(impl_->q); }
double PlsSystem::lambda() const { return impl_->lambda; }

PlsSolution PlsSystem::solve(const Vector& z) const {
  const auto& s = *impl_;
  if (z.size() != s.n) throw ValidationError("pseudo-data length does not match the number of observations");
  const Vector zw = s.sqrt_w.cwiseProduct(z);
  const Vector b = s.psi_w.transpose() * s.apply_q(zw);
  const Matrix x = s.solve_top(-b);

  PlsSolution sol;
  sol.lambda = s.lambda;
  sol.f_coeffs = x.col(0).head(s.K);
  sol.h_coeffs = x.col(0).tail(s.K);
  if (s.q > 0) {
    const Vector resid = zw - s.psi_w * sol.f_coeffs;
    sol.beta = s.x_qr.solve(resid);
  } else {
    sol.beta = Vector(0);
  }
  sol.fitted_fn = s.fem->psi() * sol.f_coeffs;
  return sol;
}

double PlsSystem::hat_trace() const {
  const auto& s = *impl_;
  double trace = static_cast<double>(s.q);
  if (s.n <= s.K) {
    // tr(R^T T^{-1} R) with R = Psi~^T Q~ (K x n), one column per observation
    for (Eigen::Index c0 = 0; c0 < s.n; c0 += kTraceChunk) {
      const Eigen::Index m = std::min(kTraceChunk, s.n - c0);
      Matrix e = Matrix::Zero(s.n, m);
      for (Eigen::Index j = 0; j < m; ++j) e(c0 + j, j) = 1.0;
      const Matrix r = s.psi_w.transpose() * s.apply_q(e);
      const Matrix f = s.solve_top(-r).topRows(s.K);
      trace += r.cwiseProduct(f).sum();
    }
  } else {
    // tr(T^{-1} B) with B = Psi~^T Q~ Psi~, one column per basis function
    for (Eigen::Index c0 = 0; c0 < s.K; c0 += kTraceChunk) {
      const Eigen::Index m = std::min(kTraceChunk, s.K - c0);
      const Matrix cols = Matrix(s.psi_w.middleCols(c0, m));
      const Matrix b = s.psi_w.transpose() * s.apply_q(cols);
      const Matrix f = s.solve_top(-b).topRows(s.K);
      for (Eigen::Index j = 0; j < m; ++j) trace += f(c0 + j, j);
    }
  }
  return trace;
}

double PlsSystem::working_objective(const PlsSolution& sol, const Vector& z) const {
  const auto& s = *impl_;
  Vector r = s.sqrt_w.cwiseProduct(z) - s.psi_w * sol.f_coeffs;
  if (s.q > 0) r -= s.x_w * sol.beta;
  const double penalty = sol.h_coeffs.dot(s.fem->r0() * sol.h_coeffs);
  return r.squaredNorm() + s.lambda * penalty;
}

Matrix PlsSystem::dense_block_matrix() const {
  const auto& s = *impl_;
  const Matrix psi = Matrix(s.psi_w);
  const Matrix qpsi = s.apply_q(psi);
  Matrix a(2 * s.K, 2 * s.K);
  a.topLeftCorner(s.K, s.K) = -(psi.transpose() * qpsi);
  a.topRightCorner(s.K, s.K) = s.lambda * Matrix(s.fem->r1());
  a.bottomLeftCorner(s.K, s.K) = s.lambda * Matrix(s.fem->r1());
  a.bottomRightCorner(s.K, s.K) = s.lambda * Matrix(s.fem->r0());
  return a;
}

PlsSolution solve_pls(const FemSystem& fem, const Matrix& X, const Vector& z, const Vector& w, double lambda) {
  PlsSystem system(fem, X, w, lambda);
  PlsSolution sol = system.solve(z);
  sol.hat_trace = system.hat_trace();
  return sol;
}

double hat_trace(const FemSystem& fem, const Matrix& X, const Vector& w, double lambda) {
  return PlsSystem(fem, X, w, lambda).hat_trace();
}

}  // namespace gsr
