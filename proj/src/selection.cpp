#include "gsr/selection.hpp"

#include "gsr/parallel.hpp"
#include "gsr/text.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace gsr {

double gcv(const Vector& y, const Vector& mu_hat, double hat_trace, double gamma) {
  if (y.size() != mu_hat.size()) throw ValidationError("gcv: y and mu lengths differ");
  const double n = static_cast<double>(y.size());
  const double dof = n - gamma * hat_trace;
  if (!(dof > 0.0)) return std::numeric_limits<double>::infinity();
  return n * (y - mu_hat).squaredNorm() / (dof * dof);
}

std::optional<double> estimate_phi(const Vector& y, const Vector& mu_hat, const FamilySpec& family,
                                   double hat_trace) {
  const double dof = static_cast<double>(y.size()) - hat_trace;
  if (!(dof > 0.0)) return std::nullopt;
  double pearson = 0.0;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    const double r = y[i] - mu_hat[i];
    pearson += r * r / family.variance(mu_hat[i]);
  }
  return pearson / dof;
}

std::vector<double> log_grid(double lo, double hi, std::size_t n) {
  if (!(lo > 0.0) || !(hi >= lo) || n == 0) throw ValidationError("log_grid needs 0 < lo <= hi and n >= 1");
  std::vector<double> out(n);
  if (n == 1) {
    out[0] = lo;
    return out;
  }
  const double a = std::log10(lo);
  const double b = std::log10(hi);
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = std::pow(10.0, a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1));
  }
  out.front() = lo;
  out.back() = hi;
  return out;
}

std::vector<double> default_lambda_grid() { return log_grid(1e-6, 1e2, 25); }

std::optional<std::size_t> select_best(const std::vector<GcvEntry>& entries) {
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const auto& e = entries[i];
    if (!e.converged || !std::isfinite(e.gcv)) continue;
    if (!best) {
      best = i;
      continue;
    }
    const auto& b = entries[*best];
    if (e.gcv < b.gcv || (e.gcv == b.gcv && e.lambda > b.lambda)) best = i;
  }
  return best;
}

GcvScan gcv_scan(const FamilySpec& family, const ObservationSet& obs, const FemSystem& fem,
                 const std::vector<double>& lambdas, const ScanOptions& options) {
  if (lambdas.empty()) throw ValidationError("empty smoothing parameter grid");
  if (!(options.pirls.gamma >= 1.0)) throw ValidationError("gamma must be at least 1");
  for (double l : lambdas) {
    if (!(l > 0.0) || !std::isfinite(l)) {
      throw ValidationError("smoothing parameter must be positive and finite, got " + text::format_double(l));
    }
  }

  std::vector<std::optional<FitResult>> fits(lambdas.size());
  GcvScan scan;
  scan.grid.resize(lambdas.size());
  parallel_for(lambdas.size(), options.threads, [&](std::size_t i) {
    GcvEntry& e = scan.grid[i];
    e.lambda = lambdas[i];
    try {
      FitResult r = fit(family, obs, fem, lambdas[i], options.pirls);
      e.gcv = r.gcv;
      e.edf = r.hat_trace;
      e.converged = r.converged;
      e.iterations = r.iterations;
      fits[i] = std::move(r);
    } catch (const ValidationError&) {
      throw;
    } catch (const std::exception& ex) {
      e.gcv = std::numeric_limits<double>::quiet_NaN();
      e.edf = std::numeric_limits<double>::quiet_NaN();
      e.error = ex.what();
    }
  });

  const auto best = select_best(scan.grid);
  if (!best) {
    std::ostringstream msg;
    msg << "no smoothing parameter produced a converged fit with finite GCV:";
    for (const auto& e : scan.grid) {
      msg << "\n  lambda " << text::format_double(e.lambda) << ": ";
      if (!e.error.empty()) {
        msg << e.error;
      } else {
        msg << (e.converged ? "converged" : "not converged") << " after " << e.iterations << " iterations, gcv "
            << text::format_double(e.gcv);
      }
    }
    throw NumericalError(msg.str());
  }
  scan.best = *best;
  scan.best_fit = *fits[*best];
  if (options.keep_fits) {
    scan.fits.reserve(fits.size());
    for (auto& f : fits) scan.fits.push_back(f ? std::move(*f) : FitResult{});
  }
  return scan;
}

std::string scan_to_csv(const GcvScan& scan) {
  std::ostringstream out;
  out << "lambda,gcv,edf,converged\n";
  for (const auto& e : scan.grid) {
    out << text::format_double(e.lambda) << ',' << text::format_double(e.gcv) << ','
        << text::format_double(e.edf) << ',' << (e.converged ? "true" : "false") << '\n';
  }
  return out.str();
}

}  // namespace gsr
