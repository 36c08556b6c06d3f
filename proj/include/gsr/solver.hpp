#pragma once

#include "gsr/core.hpp"
#include "gsr/fem.hpp"

#include <memory>

namespace gsr {

// Solution of one penalized weighted least-squares problem
//   min_{beta, f}  || W^{1/2} (z - X beta - Psi f) ||^2 + lambda f^T P f,
// with P = R1 R0^{-1} R1.
struct PlsSolution {
  Vector beta;       // length q; empty without covariates
  Vector f_coeffs;   // field coefficients
  Vector h_coeffs;   // auxiliary mixed variable, R0 h = -R1 f
  double lambda = 0.0;
  double hat_trace = 0.0;  // tr(M); filled by solve_pls, left 0 by PlsSystem::solve
  Vector fitted_fn;  // Psi f
};

enum class Factorization {
  SparseColamd,  // SparseLU with COLAMD ordering (default)
  SparseAmd,     // SparseLU with AMD ordering
  Dense,         // dense partial-pivot LU; small problems and tests only
};

// Factorisation of the 2K x 2K block system
//   [ -Psi~^T Q~ Psi~   lambda R1 ] [f]   [ -Psi~^T Q~ z~ ]
//   [  lambda R1        lambda R0 ] [h] = [       0       ]
// where Psi~ = W^{1/2} Psi, X~ = W^{1/2} X, z~ = W^{1/2} z and
// Q~ = I - X~ (X~^T X~)^{-1} X~^T. Only the sparse part (Q~ = I) is factorised; the
// rank-q covariate correction is applied through the Woodbury identity, so Q~ is
// never formed. With W = I this is exactly the unweighted system.
//
// An empty X (zero columns) means no covariates.
class PlsSystem {
 public:
  PlsSystem(const FemSystem& fem, const Matrix& X, const Vector& w, double lambda,
            Factorization factorization = Factorization::SparseColamd);
  ~PlsSystem();
  PlsSystem(PlsSystem&&) noexcept;
  PlsSystem& operator=(PlsSystem&&) noexcept;
  PlsSystem(const PlsSystem&) = delete;
  PlsSystem& operator=(const PlsSystem&) = delete;

  PlsSolution solve(const Vector& z) const;

  // tr(M) = q + tr((Psi~^T Q~ Psi~ + lambda P)^{-1} Psi~^T Q~ Psi~), computed exactly
  // from min(n, K) solves against the cached factorisation.
  double hat_trace() const;

  // ||W^{1/2}(z - X beta - Psi f)||^2 + lambda f^T P f for a solution of this system.
  double working_objective(const PlsSolution& sol, const Vector& z) const;

  // The full block matrix with Q~ expanded densely. Diagnostic use only.
  Matrix dense_block_matrix() const;

  std::size_t num_covariates() const;
  double lambda() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

PlsSolution solve_pls(const FemSystem& fem, const Matrix& X, const Vector& z, const Vector& w, double lambda);
double hat_trace(const FemSystem& fem, const Matrix& X, const Vector& w, double lambda);

}  // namespace gsr
