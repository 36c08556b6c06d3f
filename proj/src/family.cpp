#include "gsr/family.hpp"

#include "gsr/text.hpp"

#include <cmath>

namespace gsr {

std::string_view FamilySpec::name() const {
  switch (kind_) {
    case FamilyKind::Gaussian: return "gaussian";
    case FamilyKind::Poisson: return "poisson";
    case FamilyKind::Bernoulli: return "bernoulli";
    case FamilyKind::Gamma: return "gamma";
  }
  return "unknown";
}

bool FamilySpec::in_mean_domain(double mu) const {
  if (!std::isfinite(mu)) return false;
  switch (kind_) {
    case FamilyKind::Gaussian: return true;
    case FamilyKind::Poisson:
    case FamilyKind::Gamma: return mu > 0.0;
    case FamilyKind::Bernoulli: return mu > 0.0 && mu < 1.0;
  }
  return false;
}

bool FamilySpec::in_canonical_domain(double theta) const {
  if (!std::isfinite(theta)) return false;
  if (kind_ == FamilyKind::Gamma) return theta < 0.0;
  return true;
}

void FamilySpec::check_mean(double mu) const {
  if (!in_mean_domain(mu)) {
    throw DomainError(std::string(name()) + ": mean " + text::format_double(mu) + " outside the mean domain");
  }
}

void FamilySpec::check_theta(double theta) const {
  if (!in_canonical_domain(theta)) {
    throw DomainError(std::string(name()) + ": canonical parameter " + text::format_double(theta) +
                      " outside the canonical domain");
  }
}

double FamilySpec::link(double mu) const {
  check_mean(mu);
  switch (kind_) {
    case FamilyKind::Gaussian: return mu;
    case FamilyKind::Poisson: return std::log(mu);
    case FamilyKind::Bernoulli: return std::log(mu) - std::log1p(-mu);
    case FamilyKind::Gamma: return -1.0 / mu;
  }
  return 0.0;
}

double FamilySpec::inv_link(double theta) const {
  check_theta(theta);
  switch (kind_) {
    case FamilyKind::Gaussian: return theta;
    case FamilyKind::Poisson: return std::exp(theta);
    case FamilyKind::Bernoulli:
      return theta >= 0.0 ? 1.0 / (1.0 + std::exp(-theta)) : std::exp(theta) / (1.0 + std::exp(theta));
    case FamilyKind::Gamma: return -1.0 / theta;
  }
  return 0.0;
}

double FamilySpec::dlink(double mu) const {
  check_mean(mu);
  switch (kind_) {
    case FamilyKind::Gaussian: return 1.0;
    case FamilyKind::Poisson: return 1.0 / mu;
    case FamilyKind::Bernoulli: return 1.0 / (mu * (1.0 - mu));
    case FamilyKind::Gamma: return 1.0 / (mu * mu);
  }
  return 0.0;
}

double FamilySpec::variance(double mu) const {
  check_mean(mu);
  switch (kind_) {
    case FamilyKind::Gaussian: return 1.0;
    case FamilyKind::Poisson: return mu;
    case FamilyKind::Bernoulli: return mu * (1.0 - mu);
    case FamilyKind::Gamma: return mu * mu;
  }
  return 0.0;
}

double FamilySpec::cumulant(double theta) const {
  check_theta(theta);
  switch (kind_) {
    case FamilyKind::Gaussian: return 0.5 * theta * theta;
    case FamilyKind::Poisson: return std::exp(theta);
    case FamilyKind::Bernoulli:
      // log(1 + e^theta) without overflow
      return theta > 0.0 ? theta + std::log1p(std::exp(-theta)) : std::log1p(std::exp(theta));
    case FamilyKind::Gamma: return -std::log(-theta);
  }
  return 0.0;
}

KernelValues FamilySpec::kernel(double mu) const { return {link(mu), dlink(mu), variance(mu)}; }

Vector FamilySpec::initial_mean(const Vector& y) const {
  switch (kind_) {
    case FamilyKind::Gaussian: return y;
    case FamilyKind::Bernoulli: return 0.5 * (y.array() + 0.5).matrix();
    case FamilyKind::Poisson:
    case FamilyKind::Gamma: {
      const double mean_pos = y.size() > 0 ? y.cwiseMax(0.0).mean() : 0.0;
      const double eps = 1e-3 * mean_pos + 1e-8;
      return y.cwiseMax(eps);
    }
  }
  return y;
}

bool FamilySpec::in_support(double y) const {
  if (!std::isfinite(y)) return false;
  switch (kind_) {
    case FamilyKind::Gaussian: return true;
    case FamilyKind::Poisson: return y >= 0.0 && y == std::floor(y);
    case FamilyKind::Bernoulli: return y == 0.0 || y == 1.0;
    case FamilyKind::Gamma: return y > 0.0;
  }
  return false;
}

FamilySpec parse_family(std::string_view name) {
  if (name == "gaussian") return FamilySpec(FamilyKind::Gaussian);
  if (name == "poisson") return FamilySpec(FamilyKind::Poisson);
  if (name == "bernoulli") return FamilySpec(FamilyKind::Bernoulli);
  if (name == "gamma") return FamilySpec(FamilyKind::Gamma);
  throw ValidationError("unknown family '" + std::string(name) + "' (expected gaussian|poisson|bernoulli|gamma)");
}

}  // namespace gsr
