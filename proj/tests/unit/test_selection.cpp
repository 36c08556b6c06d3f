#include "gsr/horseshoe.hpp"
#include "gsr/selection.hpp"
#include "gsr/simulation.hpp"
#include "testing.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

namespace gsr {
namespace {

TEST(Gcv, Examples) {
  Vector y = Vector::Zero(10);
  Vector mu = Vector::Zero(10);
  mu[0] = std::sqrt(2.5);
  EXPECT_NEAR(gcv(y, mu, 4.0), 25.0 / 36.0, 1e-12);
  EXPECT_NEAR(gcv(y, mu, 4.0, 1.4), 25.0 / 19.36, 1e-12);
  EXPECT_NEAR(gcv(y, mu, 4.0, 1.4), 1.29132, 1e-5);
  EXPECT_EQ(gcv(y, y, 4.0), 0.0);
  EXPECT_TRUE(std::isinf(gcv(y, mu, 10.0)));
  EXPECT_TRUE(std::isinf(gcv(y, mu, 8.0, 1.4)));
  EXPECT_THROW(gcv(y, Vector::Zero(3), 1.0), ValidationError);
}

TEST(Gcv, PhiExamples) {
  Vector y(4), mu = Vector::Zero(4);
  y << 1, -1, 0, 0;
  EXPECT_NEAR(*estimate_phi(y, mu, FamilySpec(FamilyKind::Gaussian), 1.0), 2.0 / 3.0, 1e-15);
  EXPECT_EQ(*estimate_phi(y, y, FamilySpec(FamilyKind::Gaussian), 1.0), 0.0);
  EXPECT_FALSE(estimate_phi(y, mu, FamilySpec(FamilyKind::Gaussian), 4.0));
  Vector gy(2), gm(2);
  gy << 1.5, 1.0;
  gm << 1.0, 2.0;
  EXPECT_NEAR(*estimate_phi(gy, gm, FamilySpec(FamilyKind::Gamma), 0.0), 0.25, 1e-15);
}

TEST(Gcv, LogGrid) {
  const auto g = log_grid(1e-6, 1e2, 25);
  ASSERT_EQ(g.size(), 25u);
  EXPECT_EQ(g.front(), 1e-6);
  EXPECT_EQ(g.back(), 1e2);
  EXPECT_NEAR(g[3], 1e-5, 1e-18);
  EXPECT_TRUE(std::is_sorted(g.begin(), g.end()));
  EXPECT_EQ(default_lambda_grid(), g);
  EXPECT_EQ(log_grid(3.0, 5.0, 1), std::vector<double>{3.0});
  EXPECT_THROW(log_grid(0.0, 1.0, 3), ValidationError);
  EXPECT_THROW(log_grid(2.0, 1.0, 3), ValidationError);
}

TEST(Gcv, SelectBest) {
  std::vector<GcvEntry> e(4);
  e[0] = {0.1, 2.0, 5.0, true, 3, ""};
  e[1] = {1.0, 1.5, 4.0, true, 3, ""};
  e[2] = {10.0, 1.5, 3.0, true, 3, ""};
  e[3] = {100.0, 0.5, 2.0, false, 25, ""};
  EXPECT_EQ(*select_best(e), 2u);  // tie goes to the larger lambda, unconverged ignored
  std::reverse(e.begin(), e.end());
  EXPECT_EQ(*select_best(e), 1u);
  e[1].gcv = std::numeric_limits<double>::infinity();
  e[2].gcv = std::numeric_limits<double>::quiet_NaN();
  EXPECT_EQ(*select_best(e), 3u);
  for (auto& x : e) x.converged = false;
  EXPECT_FALSE(select_best(e));
}

struct GaussianHorseshoe {
  std::shared_ptr<const TriangularMesh> mesh;
  std::unique_ptr<FemSystem> fem;
  ObservationSet obs;
};

GaussianHorseshoe gaussian_horseshoe(std::uint64_t seed) {
  GaussianHorseshoe g;
  g.mesh = std::make_shared<const TriangularMesh>(load_mesh(std::filesystem::path(GSRPDE_DATA_DIR) / "horseshoe.mesh"));
  const HorseshoeSpec spec;
  auto rng = make_engine(seed, 1);
  const auto pts = sample_horseshoe(spec, *g.mesh, 200, rng);
  g.fem = std::make_unique<FemSystem>(g.mesh, PointObservations{pts});
  std::normal_distribution<double> noise(0.0, 0.5);
  g.obs.y.resize(200);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    g.obs.y[static_cast<Eigen::Index>(i)] = test_field(spec, FieldVariant::Areal, pts[i]) + noise(rng);
  }
  return g;
}

TEST(GcvScan, GaussianHorseshoeHasInteriorMinimum) {
  const auto g = gaussian_horseshoe(3);
  const auto grid = default_lambda_grid();
  const auto scan = gcv_scan(FamilySpec(FamilyKind::Gaussian), g.obs, *g.fem, grid);
  for (const auto& e : scan.grid) {
    EXPECT_TRUE(std::isfinite(e.gcv));
    EXPECT_TRUE(e.converged);
  }
  EXPECT_GT(scan.best, 0u);
  EXPECT_LT(scan.best, grid.size() - 1);
  EXPECT_EQ(scan.best_fit.lambda, grid[scan.best]);
  for (std::size_t i = 1; i < scan.grid.size(); ++i) EXPECT_LE(scan.grid[i].edf, scan.grid[i - 1].edf + 1e-8);
  EXPECT_GE(scan.grid.back().edf, 0.0);
  EXPECT_LE(scan.grid.front().edf, static_cast<double>(g.fem->num_basis()));
}

TEST(GcvScan, OrderAndThreadInvariance) {
  const auto g = gaussian_horseshoe(4);
  const FamilySpec fam(FamilyKind::Gaussian);
  auto grid = log_grid(1e-4, 1e2, 7);
  const auto a = gcv_scan(fam, g.obs, *g.fem, grid);
  ScanOptions threaded;
  threaded.threads = 3;
  const auto b = gcv_scan(fam, g.obs, *g.fem, grid, threaded);
  std::reverse(grid.begin(), grid.end());
  const auto c = gcv_scan(fam, g.obs, *g.fem, grid);
  EXPECT_EQ(a.best_fit.f_coeffs, b.best_fit.f_coeffs);
  EXPECT_EQ(a.best_fit.lambda, c.best_fit.lambda);
  EXPECT_EQ(a.best_fit.f_coeffs, c.best_fit.f_coeffs);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    EXPECT_EQ(a.grid[i].gcv, b.grid[i].gcv);
    EXPECT_EQ(a.grid[i].gcv, c.grid[grid.size() - 1 - i].gcv);
  }
}

TEST(GcvScan, SingletonAndKeepFits) {
  const auto g = gaussian_horseshoe(5);
  ScanOptions opt;
  opt.keep_fits = true;
  const auto scan = gcv_scan(FamilySpec(FamilyKind::Gaussian), g.obs, *g.fem, {0.5}, opt);
  EXPECT_EQ(scan.best, 0u);
  EXPECT_EQ(scan.best_fit.lambda, 0.5);
  ASSERT_EQ(scan.fits.size(), 1u);
  const auto csv = scan_to_csv(scan);
  EXPECT_EQ(csv.rfind("lambda,gcv,edf,converged\n0.5,", 0), 0u);
}

TEST(GcvScan, Errors) {
  const auto g = gaussian_horseshoe(6);
  const FamilySpec fam(FamilyKind::Gaussian);
  EXPECT_THROW(gcv_scan(fam, g.obs, *g.fem, {}), ValidationError);
  EXPECT_THROW(gcv_scan(fam, g.obs, *g.fem, {1.0, -1.0}), ValidationError);
  ScanOptions opt;
  opt.pirls.gamma = 0.5;
  EXPECT_THROW(gcv_scan(fam, g.obs, *g.fem, {1.0}, opt), ValidationError);
  // every fit stops short of convergence
  ScanOptions short_run;
  short_run.pirls.max_iter = 1;
  try {
    gcv_scan(fam, g.obs, *g.fem, {0.1, 1.0}, short_run);
    ADD_FAILURE();
  } catch (const NumericalError& e) {
    EXPECT_NE(std::string(e.what()).find("lambda 0.1"), std::string::npos);
  }
}

}  // namespace
}  // namespace gsr
