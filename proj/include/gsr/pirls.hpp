#pragma once

#include "gsr/core.hpp"
#include "gsr/family.hpp"
#include "gsr/fem.hpp"
#include "gsr/solver.hpp"

#include <optional>
#include <string>
#include <vector>

namespace gsr {

// Responses and (optional) covariates attached to the n observations of a FemSystem.
struct ObservationSet {
  Vector y;
  Matrix X = Matrix(0, 0);  // n x q, zero columns when there are no covariates
  std::vector<std::string> covariate_names;

  std::size_t num_covariates() const { return static_cast<std::size_t>(X.cols()); }
};

struct PirlsOptions {
  double tol = 1e-6;
  int max_iter = 25;
  bool verbose = false;
  double gamma = 1.0;  // GCV dof inflation reported with the fit
  Factorization factorization = Factorization::SparseColamd;
};

struct WorkingQuantities {
  Vector z;  // pseudo-data g'(mu)(y - mu) + g(mu)
  Vector w;  // working weights 1 / (g'(mu)^2 V(mu)), clamped below at 1e-10
  std::size_t clamped = 0;
};

WorkingQuantities working_quantities(const FamilySpec& family, const Vector& y, const Vector& mu);

struct FitResult {
  std::string family;
  Vector beta;
  Vector f_coeffs;
  Vector h_coeffs;
  double lambda = 0.0;
  int iterations = 0;  // inner solves performed, including the confirming one
  bool converged = false;
  double hat_trace = 0.0;
  std::optional<double> phi_hat;  // absent for known-scale families or when n <= tr(M)
  double gcv = 0.0;
  std::vector<double> objective_trace;  // working objective after each inner solve

  Vector theta;  // X beta + Psi f
  Vector mu;     // fitted mean
  Vector z;      // pseudo-data of the final inner solve
  Vector w;      // working weights of the final inner solve

  std::size_t weight_clamps = 0;
  std::size_t theta_clamps = 0;
  std::size_t step_halvings = 0;
  std::string message;
};

// Penalized log-likelihood [sum_i (y_i theta_i - b(theta_i)) - (lambda/2) f^T P f] / phi,
// up to additive constants; theta = X beta + Psi f. The PIRLS fixed point is a
// stationary point of this function. Throws DomainError if some theta_i lies outside
// the canonical domain.
double penalized_loglik(const FamilySpec& family, const Vector& y, const Vector& beta, const Vector& f_coeffs,
                        const FemSystem& fem, const Matrix& X, double lambda, double phi = 1.0);

// Functional PIRLS: mu0 = initial_mean(y), then repeat
//   (z, W) from mu  ->  penalized weighted least squares  ->  mu = g^{-1}(X beta + Psi f)
// until the working objective changes by less than tol (relative) or max_iter solves.
// Non-convergence is reported through FitResult::converged, never thrown.
FitResult fit(const FamilySpec& family, const ObservationSet& obs, const FemSystem& fem, double lambda,
              const PirlsOptions& options = {});

// Central finite-difference scores of penalized_loglik at (beta, f): one entry per
// beta coordinate followed by one per requested basis coefficient. Each entry is
// |dL/dx| / (|d2L/dx2| (1 + |x|)), i.e. the Newton step still left along that
// coordinate relative to its magnitude.
std::vector<double> score_residuals(const FamilySpec& family, const Vector& y, const Matrix& X,
                                    const FemSystem& fem, double lambda, const Vector& beta,
                                    const Vector& f_coeffs, const std::vector<int>& basis_indices);

}  // namespace gsr
