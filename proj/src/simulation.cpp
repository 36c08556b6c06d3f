#include "gsr/simulation.hpp"

#include "gsr/parallel.hpp"
#include "gsr/text.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <sstream>

namespace gsr {

namespace {

constexpr std::uint64_t kLocationsTag = 1;
constexpr std::uint64_t kCovariatesTag = 2;
constexpr std::uint64_t kResponsesTag = 3;
constexpr double kMaxLogMean = 30.0;

std::uint32_t lo32(std::uint64_t v) { return static_cast<std::uint32_t>(v & 0xffffffffu); }
std::uint32_t hi32(std::uint64_t v) { return static_cast<std::uint32_t>(v >> 32); }

struct QuadNode {
  double a, b, c, w;
};

constexpr std::array<QuadNode, 7> kDunavant5{{
    {1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0, 0.225},
    {0.059715871789770, 0.470142064105115, 0.470142064105115, 0.132394152788506},
    {0.470142064105115, 0.059715871789770, 0.470142064105115, 0.132394152788506},
    {0.470142064105115, 0.470142064105115, 0.059715871789770, 0.132394152788506},
    {0.797426985353087, 0.101286507323456, 0.101286507323456, 0.125939180544827},
    {0.101286507323456, 0.797426985353087, 0.101286507323456, 0.125939180544827},
    {0.101286507323456, 0.101286507323456, 0.797426985353087, 0.125939180544827},
}};

Point2 mid(const Point2& p, const Point2& q) { return {(p.x + q.x) / 2.0, (p.y + q.y) / 2.0}; }

double integrate_triangle(const Point2& p0, const Point2& p1, const Point2& p2,
                          const std::function<double(const Point2&)>& f, int depth) {
  if (depth > 0) {
    const Point2 m01 = mid(p0, p1);
    const Point2 m12 = mid(p1, p2);
    const Point2 m20 = mid(p2, p0);
    return integrate_triangle(p0, m01, m20, f, depth - 1) + integrate_triangle(m01, p1, m12, f, depth - 1) +
           integrate_triangle(m20, m12, p2, f, depth - 1) + integrate_triangle(m01, m12, m20, f, depth - 1);
  }
  const double area = std::abs((p1.x - p0.x) * (p2.y - p0.y) - (p2.x - p0.x) * (p1.y - p0.y)) / 2.0;
  double sum = 0.0;
  for (const auto& n : kDunavant5) {
    sum += n.w * f({n.a * p0.x + n.b * p1.x + n.c * p2.x, n.a * p0.y + n.b * p1.y + n.c * p2.y});
  }
  return area * sum;
}

double median(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const std::size_t h = v.size() / 2;
  return v.size() % 2 == 1 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

Vector probe_truth(const HorseshoeSpec& spec, FieldVariant variant, const std::vector<Point2>& probes) {
  Vector t(static_cast<Eigen::Index>(probes.size()));
  for (std::size_t i = 0; i < probes.size(); ++i) t[static_cast<Eigen::Index>(i)] = test_field(spec, variant, probes[i]);
  return t;
}

Vector field_at(const TriangularMesh& mesh, const Vector& coeffs, const std::vector<Point2>& probes) {
  const auto values = evaluate_field(mesh, coeffs, probes);
  Vector out(static_cast<Eigen::Index>(values.size()));
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!values[i]) throw ValidationError("probe point " + std::to_string(i) + " lies outside the mesh");
    out[static_cast<Eigen::Index>(i)] = *values[i];
  }
  return out;
}

ReplicateResult summarize_fit(std::size_t m, std::uint64_t seed, const FitResult& fit) {
  ReplicateResult r;
  r.index = m;
  r.seed = seed;
  r.beta = fit.beta;
  r.lambda = fit.lambda;
  r.gcv = fit.gcv;
  r.edf = fit.hat_trace;
  r.phi_hat = fit.phi_hat;
  r.converged = fit.converged;
  r.iterations = fit.iterations;
  return r;
}

}  // namespace

Engine make_engine(std::uint64_t seed, std::uint64_t tag) {
  std::seed_seq seq{lo32(seed), hi32(seed), lo32(tag), hi32(tag)};
  return Engine(seq);
}

std::uint64_t replicate_seed(std::uint64_t master, std::uint64_t replicate) {
  std::seed_seq seq{lo32(master), hi32(master), lo32(replicate), hi32(replicate), 0x5eedu};
  std::array<std::uint32_t, 2> out{};
  seq.generate(out.begin(), out.end());
  return (static_cast<std::uint64_t>(out[1]) << 32) | out[0];
}

double sample_beta(Engine& rng, double a, double b) {
  std::gamma_distribution<double> ga(a, 1.0);
  std::gamma_distribution<double> gb(b, 1.0);
  const double u = ga(rng);
  const double v = gb(rng);
  return u / (u + v);
}

std::vector<Point2> sample_horseshoe(const HorseshoeSpec& spec, const TriangularMesh& mesh, std::size_t n,
                                     Engine& rng) {
  spec.validate();
  const double outer = 2.0 * spec.r - spec.r0;
  std::uniform_real_distribution<double> ux(-outer, 3.0 + spec.r - spec.r0);
  std::uniform_real_distribution<double> uy(-outer, outer);
  std::vector<Point2> out;
  out.reserve(n);
  std::size_t attempts = 0;
  while (out.size() < n) {
    if (++attempts > 1000 * (n + 10)) throw ValidationError("mesh does not cover the horseshoe");
    const Point2 p{ux(rng), uy(rng)};
    if (horseshoe_contains(spec, p) == HorseshoePart::Outside) continue;
    if (!mesh.locate(p)) continue;
    out.push_back(p);
  }
  return out;
}

double integrate_over(const TriangularMesh& mesh, const std::vector<int>& triangles,
                      const std::function<double(const Point2&)>& f) {
  double sum = 0.0;
  for (int t : triangles) {
    const auto& tri = mesh.triangle(static_cast<std::size_t>(t));
    sum += integrate_triangle(mesh.node(static_cast<std::size_t>(tri[0])), mesh.node(static_cast<std::size_t>(tri[1])),
                              mesh.node(static_cast<std::size_t>(tri[2])), f, 2);
  }
  return sum;
}

SimDataset generate_geostat_gamma_at(const std::vector<Point2>& locations, const HorseshoeSpec& spec,
                                     std::uint64_t seed, double phi) {
  spec.validate();
  if (locations.empty()) throw ValidationError("need at least one location");
  if (!(phi > 0.0) || !std::isfinite(phi)) throw ValidationError("gamma scale must be positive and finite");
  const auto n = static_cast<Eigen::Index>(locations.size());

  SimDataset d;
  d.op = PointObservations{locations};
  d.seed = seed;
  d.phi = phi;
  d.true_beta = Vector(2);
  d.true_beta << -0.4, 0.3;
  d.obs.covariate_names = {"x1", "x2"};
  d.obs.X.resize(n, 2);
  d.obs.y.resize(n);
  d.true_values.resize(n);
  d.mu.resize(n);

  Engine cov_rng = make_engine(seed, kCovariatesTag);
  for (Eigen::Index i = 0; i < n; ++i) {
    d.obs.X(i, 0) = 1.0 + sample_beta(cov_rng, 1.5, 2.0);
    d.obs.X(i, 1) = 1.0 + sample_beta(cov_rng, 3.0, 2.0);
  }
  Engine resp_rng = make_engine(seed, kResponsesTag);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double f = test_field(spec, FieldVariant::Geostat, locations[static_cast<std::size_t>(i)]);
    const double theta = d.obs.X.row(i).dot(d.true_beta) + f;
    if (!(theta < 0.0)) {
      throw ValidationError("configuration gives a nonpositive gamma mean at location " + std::to_string(i));
    }
    d.true_values[i] = f;
    d.mu[i] = -1.0 / theta;
    std::gamma_distribution<double> g(1.0 / phi, d.mu[i] * phi);
    d.obs.y[i] = g(resp_rng);
  }
  return d;
}

SimDataset generate_geostat_gamma(const TriangularMesh& mesh, const HorseshoeSpec& spec, std::size_t n,
                                  std::uint64_t seed, double phi) {
  if (n == 0) throw ValidationError("need at least one location");
  Engine rng = make_engine(seed, kLocationsTag);
  return generate_geostat_gamma_at(sample_horseshoe(spec, mesh, n, rng), spec, seed, phi);
}

SimDataset generate_areal_poisson(const TriangularMesh& mesh, const std::vector<std::vector<int>>& regions,
                                  const HorseshoeSpec& spec, std::uint64_t seed, double beta) {
  spec.validate();
  if (regions.empty()) throw ValidationError("need at least one region");
  for (std::size_t i = 0; i < regions.size(); ++i) {
    if (regions[i].empty()) throw ValidationError("region " + std::to_string(i) + " is empty");
    for (int t : regions[i]) {
      if (t < 0 || static_cast<std::size_t>(t) >= mesh.num_triangles()) {
        throw ValidationError("region " + std::to_string(i) + " names triangle " + std::to_string(t) +
                              " which is out of range");
      }
    }
  }
  const auto n = static_cast<Eigen::Index>(regions.size());
  SimDataset d;
  d.op = RegionObservations{regions};
  d.seed = seed;
  d.phi = 1.0;
  d.true_beta = Vector::Constant(1, beta);
  d.obs.covariate_names = {"x1"};
  d.obs.X.resize(n, 1);
  d.obs.y.resize(n);
  d.true_values.resize(n);
  d.mu.resize(n);

  const auto field = [&](const Point2& p) { return test_field_extended(spec, FieldVariant::Areal, p); };
  Engine cov_rng = make_engine(seed, kCovariatesTag);
  for (Eigen::Index i = 0; i < n; ++i) d.obs.X(i, 0) = sample_beta(cov_rng, 2.0, 2.0);
  Engine resp_rng = make_engine(seed, kResponsesTag);
  for (Eigen::Index i = 0; i < n; ++i) {
    d.true_values[i] = integrate_over(mesh, regions[static_cast<std::size_t>(i)], field);
    const double eta = beta * d.obs.X(i, 0) + d.true_values[i];
    if (!(eta <= kMaxLogMean)) throw ValidationError("log mean of region " + std::to_string(i) + " exceeds 30");
    d.mu[i] = std::exp(eta);
    std::poisson_distribution<long long> pois(d.mu[i]);
    d.obs.y[i] = static_cast<double>(pois(resp_rng));
  }
  return d;
}

std::vector<Point2> probe_grid(const HorseshoeSpec& spec, const TriangularMesh& mesh, double dx, double dy) {
  if (!(dx > 0.0) || !(dy > 0.0)) throw ValidationError("probe grid steps must be positive");
  const auto& box = mesh.bounding_box();
  const auto nx = static_cast<long>(std::floor((box.hi.x - box.lo.x) / dx + 1e-9));
  const auto ny = static_cast<long>(std::floor((box.hi.y - box.lo.y) / dy + 1e-9));
  std::vector<Point2> out;
  for (long j = 0; j <= ny; ++j) {
    for (long i = 0; i <= nx; ++i) {
      const Point2 p{box.lo.x + static_cast<double>(i) * dx, box.lo.y + static_cast<double>(j) * dy};
      if (horseshoe_contains(spec, p) != HorseshoePart::Outside && mesh.locate(p)) out.push_back(p);
    }
  }
  return out;
}

BetaSummary summarize_beta(const std::vector<Vector>& estimates, const Vector& truth) {
  if (estimates.empty()) throw ValidationError("need at least one replicate");
  const auto q = truth.size();
  const double m = static_cast<double>(estimates.size());
  BetaSummary s;
  s.truth = truth;
  s.mean = Vector::Zero(q);
  s.sd = Vector::Zero(q);
  s.rmse = Vector::Zero(q);
  for (const auto& e : estimates) {
    if (e.size() != q) throw ValidationError("estimate length does not match the true coefficients");
    s.mean += e;
    s.rmse += (e - truth).cwiseAbs2();
  }
  s.mean /= m;
  s.rmse = (s.rmse / m).cwiseSqrt();
  if (estimates.size() > 1) {
    for (const auto& e : estimates) s.sd += (e - s.mean).cwiseAbs2();
    s.sd = (s.sd / (m - 1.0)).cwiseSqrt();
  }
  return s;
}

Vector pointwise_rmse(const std::vector<Vector>& estimates, const Vector& truth) {
  if (estimates.empty()) throw ValidationError("need at least one replicate");
  Vector acc = Vector::Zero(truth.size());
  for (const auto& e : estimates) {
    if (e.size() != truth.size()) throw ValidationError("estimate length does not match the truth");
    acc += (e - truth).cwiseAbs2();
  }
  return (acc / static_cast<double>(estimates.size())).cwiseSqrt();
}

StudyKind parse_study(std::string_view name) {
  if (name == "geostat-gamma") return StudyKind::GeostatGamma;
  if (name == "areal-poisson") return StudyKind::ArealPoisson;
  throw ValidationError("unknown study '" + std::string(name) + "' (expected geostat-gamma or areal-poisson)");
}

std::vector<double> geostat_lambda_grid() { return log_grid(1e-6, 1e4, 31); }
std::vector<double> areal_lambda_grid() { return default_lambda_grid(); }

StudyResult run_geostat_study(const std::shared_ptr<const TriangularMesh>& mesh, const HorseshoeSpec& spec,
                              const StudyOptions& options) {
  if (options.replicates == 0) throw ValidationError("need at least one replicate");
  Engine loc_rng = make_engine(options.seed, kLocationsTag);
  const auto locations = sample_horseshoe(spec, *mesh, options.n, loc_rng);
  const FemSystem fem(mesh, PointObservations{locations});
  const FamilySpec gamma(FamilyKind::Gamma);
  const auto grid = options.lambdas.empty() ? geostat_lambda_grid() : options.lambdas;

  StudyResult res;
  res.kind = StudyKind::GeostatGamma;
  res.beta_names = {"x1", "x2"};
  res.probes = probe_grid(spec, *mesh);
  const Vector truth = probe_truth(spec, FieldVariant::Geostat, res.probes);

  const std::size_t M = options.replicates;
  res.replicates.resize(M);
  res.scans.resize(M);
  std::vector<Vector> probe_estimates(M);
  parallel_for(M, options.threads, [&](std::size_t m) {
    const std::uint64_t seed = replicate_seed(options.seed, m);
    const SimDataset data = generate_geostat_gamma_at(locations, spec, seed, options.phi);
    ScanOptions so;
    so.pirls = options.pirls;
    so.pirls.gamma = options.gamma.value_or(kGeostatGamma);
    so.keep_fits = static_cast<bool>(options.inspect);
    GcvScan scan = gcv_scan(gamma, data.obs, fem, grid, so);
    res.replicates[m] = summarize_fit(m, seed, scan.best_fit);
    probe_estimates[m] = field_at(*mesh, scan.best_fit.f_coeffs, res.probes);
    if (options.inspect) options.inspect(m, data, fem, scan);
    scan.fits.clear();
    res.scans[m] = std::move(scan);
  });

  std::vector<Vector> betas;
  for (const auto& r : res.replicates) betas.push_back(r.beta);
  res.beta = summarize_beta(betas, Vector((Vector(2) << -0.4, 0.3).finished()));
  res.probe_rmse = pointwise_rmse(probe_estimates, truth);

  // RMSE pooled over the probes of each part of the domain
  const std::array parts{HorseshoePart::UpperArm, HorseshoePart::B, HorseshoePart::LowerArm, HorseshoePart::A,
                         HorseshoePart::C};
  res.region_rmse = Vector::Zero(static_cast<Eigen::Index>(parts.size()));
  for (std::size_t k = 0; k < parts.size(); ++k) {
    double acc = 0.0;
    std::size_t count = 0;
    for (std::size_t j = 0; j < res.probes.size(); ++j) {
      if (horseshoe_contains(spec, res.probes[j]) != parts[k]) continue;
      const auto idx = static_cast<Eigen::Index>(j);
      acc += res.probe_rmse[idx] * res.probe_rmse[idx];
      ++count;
    }
    res.region_labels.emplace_back(part_name(parts[k]));
    res.region_rmse[static_cast<Eigen::Index>(k)] = count > 0 ? std::sqrt(acc / static_cast<double>(count)) : 0.0;
  }
  return res;
}

StudyResult run_areal_study(const std::shared_ptr<const TriangularMesh>& mesh,
                            const std::vector<std::vector<int>>& regions, const HorseshoeSpec& spec,
                            const StudyOptions& options) {
  if (options.replicates == 0) throw ValidationError("need at least one replicate");
  const FemSystem fem(mesh, RegionObservations{regions});
  const FamilySpec poisson(FamilyKind::Poisson);
  const auto grid = options.lambdas.empty() ? areal_lambda_grid() : options.lambdas;

  StudyResult res;
  res.kind = StudyKind::ArealPoisson;
  res.beta_names = {"x1"};
  res.probes = probe_grid(spec, *mesh);
  const Vector truth = probe_truth(spec, FieldVariant::Areal, res.probes);

  const std::size_t M = options.replicates;
  res.replicates.resize(M);
  std::vector<Vector> probe_estimates(M);
  std::vector<Vector> region_estimates(M);
  Vector region_truth;

  // lambda from one GCV scan on the first replicate
  const std::uint64_t seed0 = replicate_seed(options.seed, 0);
  const SimDataset first = generate_areal_poisson(*mesh, regions, spec, seed0);
  region_truth = first.true_values;
  ScanOptions so;
  so.pirls = options.pirls;
  so.pirls.gamma = options.gamma.value_or(kArealGamma);
  so.threads = options.threads;
  so.keep_fits = static_cast<bool>(options.inspect);
  GcvScan scan = gcv_scan(poisson, first.obs, fem, grid, so);
  const double lambda = scan.best_fit.lambda;
  if (options.inspect) options.inspect(0, first, fem, scan);
  res.replicates[0] = summarize_fit(0, seed0, scan.best_fit);
  probe_estimates[0] = field_at(*mesh, scan.best_fit.f_coeffs, res.probes);
  region_estimates[0] = fem.psi() * scan.best_fit.f_coeffs;
  scan.fits.clear();
  res.scans.push_back(std::move(scan));

  parallel_for(M - 1, options.threads, [&](std::size_t k) {
    const std::size_t m = k + 1;
    const std::uint64_t seed = replicate_seed(options.seed, m);
    const SimDataset data = generate_areal_poisson(*mesh, regions, spec, seed);
    FitResult fit = gsr::fit(poisson, data.obs, fem, lambda, so.pirls);
    res.replicates[m] = summarize_fit(m, seed, fit);
    probe_estimates[m] = field_at(*mesh, fit.f_coeffs, res.probes);
    region_estimates[m] = fem.psi() * fit.f_coeffs;
    if (options.inspect) {
      GcvScan single;
      single.grid.push_back({lambda, fit.gcv, fit.hat_trace, fit.converged, fit.iterations, {}});
      single.best_fit = fit;
      single.fits.push_back(std::move(fit));
      options.inspect(m, data, fem, single);
    }
  });

  std::vector<Vector> betas;
  for (const auto& r : res.replicates) betas.push_back(r.beta);
  res.beta = summarize_beta(betas, Vector::Constant(1, 5.0));
  res.probe_rmse = pointwise_rmse(probe_estimates, truth);
  res.region_rmse = pointwise_rmse(region_estimates, region_truth);
  for (std::size_t i = 0; i < regions.size(); ++i) res.region_labels.push_back(std::to_string(i));
  return res;
}

void write_study(const StudyResult& result, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const auto fmt = [](double v) { return text::format_double(v); };

  std::ostringstream reps;
  reps << "replicate,seed,lambda,gcv,edf,phi_hat";
  for (const auto& name : result.beta_names) reps << ",beta_" << name;
  reps << ",converged,iterations\n";
  for (const auto& r : result.replicates) {
    reps << r.index << ',' << r.seed << ',' << fmt(r.lambda) << ',' << fmt(r.gcv) << ',' << fmt(r.edf) << ','
         << (r.phi_hat ? fmt(*r.phi_hat) : "");
    for (Eigen::Index j = 0; j < r.beta.size(); ++j) reps << ',' << fmt(r.beta[j]);
    reps << ',' << (r.converged ? "true" : "false") << ',' << r.iterations << '\n';
  }
  text::write_file_atomic(dir / "replicates.csv", reps.str());

  std::ostringstream grid;
  grid << "x,y,rmse\n";
  for (std::size_t j = 0; j < result.probes.size(); ++j) {
    grid << fmt(result.probes[j].x) << ',' << fmt(result.probes[j].y) << ','
         << fmt(result.probe_rmse[static_cast<Eigen::Index>(j)]) << '\n';
  }
  text::write_file_atomic(dir / "rmse_grid.csv", grid.str());

  std::ostringstream regions;
  regions << "region,rmse\n";
  for (std::size_t i = 0; i < result.region_labels.size(); ++i) {
    regions << result.region_labels[i] << ',' << fmt(result.region_rmse[static_cast<Eigen::Index>(i)]) << '\n';
  }
  text::write_file_atomic(dir / "region_rmse.csv", regions.str());

  std::ostringstream summary;
  summary << "statistic,value\n";
  summary << "replicates," << result.replicates.size() << '\n';
  for (std::size_t j = 0; j < result.beta_names.size(); ++j) {
    const auto k = static_cast<Eigen::Index>(j);
    const std::string p = "beta_" + result.beta_names[j];
    summary << p << "_true," << fmt(result.beta.truth[k]) << '\n';
    summary << p << "_mean," << fmt(result.beta.mean[k]) << '\n';
    summary << p << "_sd," << fmt(result.beta.sd[k]) << '\n';
    summary << p << "_rmse," << fmt(result.beta.rmse[k]) << '\n';
  }
  std::vector<double> lambdas;
  std::size_t converged = 0;
  for (const auto& r : result.replicates) {
    lambdas.push_back(r.lambda);
    if (r.converged) ++converged;
  }
  summary << "lambda_median," << fmt(median(lambdas)) << '\n';
  summary << "converged_fraction,"
          << fmt(static_cast<double>(converged) / static_cast<double>(result.replicates.size())) << '\n';
  summary << "probe_rmse_median,"
          << fmt(median(std::vector<double>(result.probe_rmse.data(),
                                            result.probe_rmse.data() + result.probe_rmse.size())))
          << '\n';
  text::write_file_atomic(dir / "summary.csv", summary.str());
}

}  // namespace gsr
