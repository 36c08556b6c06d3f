#include "gsr/pirls.hpp"

#include "gsr/selection.hpp"
#include "gsr/text.hpp"

#include <cmath>
#include <iostream>

namespace gsr {

namespace {

constexpr double kMinWeight = 1e-10;
constexpr double kGammaThetaCeiling = -1e-10;
constexpr double kPoissonThetaCeiling = 700.0;
constexpr int kMaxHalvings = 10;

Vector linear_predictor(const Matrix& X, const Vector& beta, const FemSystem& fem, const Vector& f) {
  Vector theta = fem.psi() * f;
  if (X.cols() > 0) theta += X * beta;
  return theta;
}

bool feasible(const FamilySpec& family, const Vector& theta) {
  for (Eigen::Index i = 0; i < theta.size(); ++i) {
    if (!family.in_canonical_domain(theta[i])) return false;
    if (!family.in_mean_domain(family.inv_link(theta[i]))) return false;
  }
  return true;
}

// Last-resort projection of theta into the region where the mean is representable.
std::size_t clamp_theta(const FamilySpec& family, Vector& theta) {
  std::size_t clamped = 0;
  for (Eigen::Index i = 0; i < theta.size(); ++i) {
    double t = theta[i];
    switch (family.kind()) {
      case FamilyKind::Gamma:
        if (!(t < kGammaThetaCeiling)) t = kGammaThetaCeiling;
        break;
      case FamilyKind::Poisson:
        if (!(t < kPoissonThetaCeiling)) t = kPoissonThetaCeiling;
        break;
      case FamilyKind::Bernoulli:
        t = std::clamp(t, -30.0, 30.0);
        break;
      case FamilyKind::Gaussian: break;
    }
    if (t != theta[i]) {
      theta[i] = t;
      ++clamped;
    }
  }
  return clamped;
}

Vector mean_of(const FamilySpec& family, const Vector& theta) {
  Vector mu(theta.size());
  for (Eigen::Index i = 0; i < theta.size(); ++i) mu[i] = family.inv_link(theta[i]);
  return mu;
}

}  // namespace

WorkingQuantities working_quantities(const FamilySpec& family, const Vector& y, const Vector& mu) {
  if (y.size() != mu.size()) throw ValidationError("working_quantities: y and mu lengths differ");
  WorkingQuantities out;
  out.z.resize(y.size());
  out.w.resize(y.size());
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    const auto k = family.kernel(mu[i]);
    out.z[i] = k.dlink * (y[i] - mu[i]) + k.theta;
    double w = 1.0 / (k.dlink * k.dlink * k.variance);
    if (!(w >= kMinWeight)) {
      w = kMinWeight;
      ++out.clamped;
    }
    out.w[i] = w;
  }
  return out;
}

double penalized_loglik(const FamilySpec& family, const Vector& y, const Vector& beta, const Vector& f_coeffs,
                        const FemSystem& fem, const Matrix& X, double lambda, double phi) {
  const Vector theta = linear_predictor(X, beta, fem, f_coeffs);
  double ll = 0.0;
  for (Eigen::Index i = 0; i < theta.size(); ++i) ll += y[i] * theta[i] - family.cumulant(theta[i]);
  return (ll - 0.5 * lambda * fem.penalty(f_coeffs)) / phi;
}

FitResult fit(const FamilySpec& family, const ObservationSet& obs, const FemSystem& fem, double lambda,
              const PirlsOptions& options) {
  const auto n = static_cast<Eigen::Index>(fem.num_observations());
  if (obs.y.size() != n) {
    throw ValidationError("expected " + std::to_string(n) + " responses, got " + std::to_string(obs.y.size()));
  }
  if (obs.X.cols() > 0 && obs.X.rows() != n) throw ValidationError("design matrix rows do not match responses");
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!family.in_support(obs.y[i])) {
      throw ValidationError("response " + std::to_string(i) + " = " + text::format_double(obs.y[i]) +
                            " is outside the support of the " + std::string(family.name()) + " family");
    }
  }
  if (options.max_iter < 1) throw ValidationError("max_iter must be at least 1");

  FitResult res;
  res.family = std::string(family.name());
  res.lambda = lambda;

  Vector mu = family.initial_mean(obs.y);
  Vector theta(n);
  for (Eigen::Index i = 0; i < n; ++i) theta[i] = family.link(mu[i]);

  std::optional<PlsSystem> last_system;
  std::optional<double> previous;
  for (int k = 1; k <= options.max_iter; ++k) {
    auto wq = working_quantities(family, obs.y, mu);
    res.weight_clamps += wq.clamped;
    PlsSystem system(fem, obs.X, wq.w, lambda, options.factorization);
    const PlsSolution sol = system.solve(wq.z);
    const double objective = system.working_objective(sol, wq.z);
    res.objective_trace.push_back(objective);
    res.iterations = k;
    res.beta = sol.beta;
    res.f_coeffs = sol.f_coeffs;
    res.h_coeffs = sol.h_coeffs;
    res.z = std::move(wq.z);
    res.w = std::move(wq.w);
    last_system.emplace(std::move(system));

    Vector candidate = linear_predictor(obs.X, sol.beta, fem, sol.f_coeffs);
    if (!feasible(family, candidate)) {
      // halve the step along the straight line in theta space
      bool accepted = false;
      double t = 1.0;
      for (int h = 0; h < kMaxHalvings && !accepted; ++h) {
        t *= 0.5;
        ++res.step_halvings;
        const Vector trial = theta + t * (candidate - theta);
        if (feasible(family, trial)) {
          candidate = trial;
          accepted = true;
        }
      }
      if (!accepted) {
        const std::size_t c = clamp_theta(family, candidate);
        res.theta_clamps += c;
        if (options.verbose) {
          std::cerr << "pirls: clamped " << c << " canonical values into the " << family.name() << " domain\n";
        }
      }
    }
    theta = candidate;
    mu = mean_of(family, theta);

    if (options.verbose) {
      std::cerr << "pirls: iteration " << k << " objective " << text::format_double(objective) << '\n';
    }
    if (previous) {
      const double change = std::abs(objective - *previous) / (std::abs(*previous) + 1e-10);
      if (change < options.tol) {
        res.converged = true;
        break;
      }
    }
    previous = objective;
  }

  res.theta = linear_predictor(obs.X, res.beta, fem, res.f_coeffs);
  res.mu = mu;
  res.hat_trace = last_system->hat_trace();
  res.gcv = gcv(obs.y, res.mu, res.hat_trace, options.gamma);
  if (!family.scale_known()) res.phi_hat = estimate_phi(obs.y, res.mu, family, res.hat_trace);
  if (!res.converged) {
    res.message = "no convergence after " + std::to_string(res.iterations) + " iterations";
  }
  return res;
}

std::vector<double> score_residuals(const FamilySpec& family, const Vector& y, const Matrix& X,
                                    const FemSystem& fem, double lambda, const Vector& beta,
                                    const Vector& f_coeffs, const std::vector<int>& basis_indices) {
  const auto q = beta.size();
  const auto eval = [&](const Vector& b, const Vector& f) {
    return penalized_loglik(family, y, b, f, fem, X, lambda, 1.0);
  };
  const double base = eval(beta, f_coeffs);

  // perturbs coordinate j of the stacked (beta, f) vector by delta
  const auto shifted = [&](Eigen::Index j, double delta) {
    Vector b = beta;
    Vector f = f_coeffs;
    if (j < q) {
      b[j] += delta;
    } else {
      f[j - q] += delta;
    }
    return eval(b, f);
  };

  std::vector<Eigen::Index> coords;
  for (Eigen::Index j = 0; j < q; ++j) coords.push_back(j);
  for (int idx : basis_indices) coords.push_back(q + idx);

  std::vector<double> out;
  out.reserve(coords.size());
  for (const auto j : coords) {
    const double x = j < q ? beta[j] : f_coeffs[j - q];
    const double h1 = 1e-5 * (1.0 + std::abs(x));
    const double h2 = 1e-3 * (1.0 + std::abs(x));
    const double slope = (shifted(j, h1) - shifted(j, -h1)) / (2.0 * h1);
    const double curvature = std::abs(shifted(j, h2) - 2.0 * base + shifted(j, -h2)) / (h2 * h2);
    out.push_back(std::abs(slope) / (curvature * (1.0 + std::abs(x))));
  }
  return out;
}

}  // namespace gsr
