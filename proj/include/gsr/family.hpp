#pragma once

#include "gsr/core.hpp"

#include <string>
#include <string_view>

namespace gsr {

enum class FamilyKind { Gaussian, Poisson, Bernoulli, Gamma };

// Canonical quantities at one mean value.
struct KernelValues {
  double theta = 0.0;     // g(mu)
  double dlink = 0.0;     // g'(mu)
  double variance = 0.0;  // V(mu)
};

// Exponential-family kernel with canonical link, parametrised as
// exp{(y theta - b(theta)) / phi + c(phi, y)}.
//
//   gaussian   g = mu             V = 1
//   poisson    g = log mu         V = mu
//   bernoulli  g = logit mu       V = mu (1 - mu)
//   gamma      g = -1 / mu        V = mu^2
class FamilySpec {
 public:
  explicit FamilySpec(FamilyKind kind) : kind_(kind) {}

  FamilyKind kind() const { return kind_; }
  std::string_view name() const;
  // Poisson and Bernoulli have phi fixed at 1.
  bool scale_known() const { return kind_ == FamilyKind::Poisson || kind_ == FamilyKind::Bernoulli; }

  bool in_mean_domain(double mu) const;
  bool in_canonical_domain(double theta) const;

  // These throw DomainError naming the family and the offending value.
  double link(double mu) const;
  double inv_link(double theta) const;
  double dlink(double mu) const;
  double variance(double mu) const;
  // Cumulant function b(theta); b'(theta) = inv_link(theta).
  double cumulant(double theta) const;

  KernelValues kernel(double mu) const;

  // PIRLS start values: y for gaussian, (y + 1/2) / 2 for bernoulli, and a strictly
  // positive clamp max(y, eps) with eps = 1e-3 mean(max(y, 0)) + 1e-8 for poisson
  // and gamma.
  Vector initial_mean(const Vector& y) const;

  // Whether y is a valid response value for this family.
  bool in_support(double y) const;

 private:
  void check_mean(double mu) const;
  void check_theta(double theta) const;

  FamilyKind kind_;
};

// Accepts gaussian | poisson | bernoulli | gamma.
FamilySpec parse_family(std::string_view name);

}  // namespace gsr
