#pragma once

#include "gsr/core.hpp"
#include "gsr/family.hpp"
#include "gsr/pirls.hpp"

#include <optional>
#include <string>
#include <vector>

namespace gsr {

// GCV(lambda) = n ||y - mu||^2 / (n - gamma tr(M))^2. Returns +infinity when the
// effective residual degrees of freedom n - gamma tr(M) are not positive.
double gcv(const Vector& y, const Vector& mu_hat, double hat_trace, double gamma = 1.0);

// Pearson-type scale estimate ||V^{-1/2}(y - mu)||^2 / (n - tr(M)) with V at mu.
// Absent when n <= tr(M).
std::optional<double> estimate_phi(const Vector& y, const Vector& mu_hat, const FamilySpec& family,
                                   double hat_trace);

// n log-spaced values from lo to hi inclusive.
std::vector<double> log_grid(double lo, double hi, std::size_t n);
// 25 log-spaced values in [1e-6, 1e2].
std::vector<double> default_lambda_grid();

struct GcvEntry {
  double lambda = 0.0;
  double gcv = 0.0;
  double edf = 0.0;  // tr(M)
  bool converged = false;
  int iterations = 0;
  std::string error;  // non-empty when the fit threw
};

struct GcvScan {
  std::vector<GcvEntry> grid;  // in the order the grid was given
  std::size_t best = 0;        // minimal GCV among converged entries; ties go to the larger lambda
  FitResult best_fit;
  std::vector<FitResult> fits;  // every fit, grid order; only filled when requested
};

struct ScanOptions {
  PirlsOptions pirls;
  unsigned threads = 1;
  bool keep_fits = false;
};

// Index of the minimal GCV among converged entries with finite GCV; ties go to the
// larger lambda. Empty when no entry qualifies.
std::optional<std::size_t> select_best(const std::vector<GcvEntry>& entries);

// Outer-iteration smoothing parameter selection: each lambda is fitted from scratch
// (no warm starts), entries are reduced in grid order. Throws NumericalError listing
// the per-lambda diagnostics when no fit converges.
GcvScan gcv_scan(const FamilySpec& family, const ObservationSet& obs, const FemSystem& fem,
                 const std::vector<double>& lambdas, const ScanOptions& options = {});

// "lambda,gcv,edf,converged" table.
std::string scan_to_csv(const GcvScan& scan);

}  // namespace gsr
