#include "gsr/cli.hpp"
#include "gsr/io.hpp"
#include "gsr/simulation.hpp"
#include "gsr/text.hpp"
#include "testing.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <sstream>

namespace gsr {
namespace {

namespace fs = std::filesystem;
const fs::path kData(GSRPDE_DATA_DIR);
const std::string kMesh = (kData / "horseshoe.mesh").string();
const std::string kRegions = (kData / "horseshoe.regions").string();

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

// Writes a geostatistical gamma dataset and an areal poisson dataset into dir.
void write_datasets(const fs::path& dir) {
  const auto mesh = load_mesh(kMesh);
  const auto g = generate_geostat_gamma(mesh, HorseshoeSpec{}, 150, 21, 0.1);
  DataTable gt;
  gt.obs = g.obs;
  gt.points = std::get<PointObservations>(g.op).points;
  gt.f_true = g.true_values;
  text::write_file_atomic(dir / "geo.csv", data_to_csv(gt));

  const auto a = generate_areal_poisson(mesh, load_regions(kRegions), HorseshoeSpec{}, 21);
  DataTable at;
  at.obs = a.obs;
  for (Eigen::Index i = 0; i < a.obs.y.size(); ++i) at.region_ids.push_back(static_cast<int>(i));
  text::write_file_atomic(dir / "areal.csv", data_to_csv(at));
}

class Cli : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = testing::temp_dir("cli");
    write_datasets(dir_);
  }
  static fs::path dir_;
};
fs::path Cli::dir_;

TEST_F(Cli, FitWithGcvWritesOutputs) {
  const auto out = dir_ / "gcv";
  const auto r = run({"fit", "--mesh", kMesh, "--data", (dir_ / "geo.csv").string(), "--family", "gamma", "--gcv",
                      "--lambda-grid", "1e-3", "1e3", "7", "--out", out.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(fs::exists(out / "fit.json"));
  EXPECT_TRUE(fs::exists(out / "scan.csv"));
  EXPECT_TRUE(fs::exists(out / "field.csv"));
  const auto rec = read_fit_json(out / "fit.json");
  EXPECT_EQ(rec.family, "gamma");
  EXPECT_EQ(rec.beta_names, (std::vector<std::string>{"x1", "x2"}));
  EXPECT_TRUE(rec.converged);
  ASSERT_TRUE(rec.phi_hat);
  EXPECT_EQ(rec.mesh_checksum, load_mesh(kMesh).checksum());
  EXPECT_NE(r.out.find("x1 = "), std::string::npos);
  // gcv-scan is an alias
  const auto s = run({"gcv-scan", "--mesh", kMesh, "--data", (dir_ / "geo.csv").string(), "--family", "gamma",
                      "--lambda-grid", "1e-3", "1e3", "7", "--out", (dir_ / "alias").string()});
  ASSERT_EQ(s.code, 0) << s.err;
  EXPECT_EQ(text::read_file(out / "fit.json"), text::read_file(dir_ / "alias" / "fit.json"));
}

TEST_F(Cli, EvalReproducesField) {
  const auto out = dir_ / "fixed";
  auto r = run({"fit", "--mesh", kMesh, "--data", (dir_ / "geo.csv").string(), "--family", "gamma", "--lambda",
                "1", "--grid", "40", "20", "--out", out.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  r = run({"eval", "--fit", (out / "fit.json").string(), "--mesh", kMesh, "--grid", "40", "20", "--out",
           (out / "eval.csv").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto a = text::read_file(out / "field.csv");
  const auto b = text::read_file(out / "eval.csv");
  EXPECT_EQ(a, b);
  // exterior grid points are blank
  EXPECT_NE(a.find(",\n"), std::string::npos);

  // nodal output evaluates to the coefficients
  const auto n = run({"fit", "--mesh", kMesh, "--data", (dir_ / "geo.csv").string(), "--family", "gamma",
                      "--lambda", "1", "--out", (dir_ / "nodal").string()});
  ASSERT_EQ(n.code, 0);
  r = run({"eval", "--fit", (dir_ / "nodal" / "fit.json").string(), "--mesh", kMesh, "--points",
           (dir_ / "nodal" / "field.csv").string(), "--out", (dir_ / "nodal" / "eval.csv").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto rec = read_fit_json(dir_ / "nodal" / "fit.json");
  const auto rows = text::read_file(dir_ / "nodal" / "eval.csv");
  std::istringstream lines(rows);
  std::string line;
  std::getline(lines, line);
  Eigen::Index k = 0;
  while (std::getline(lines, line)) {
    const auto fields = text::split_char(line, ',');
    ASSERT_EQ(fields.size(), 3u);
    EXPECT_NEAR(text::parse_double(fields[2], "value"), rec.f_coeffs[k], 1e-12 * (1 + std::abs(rec.f_coeffs[k])));
    ++k;
  }
  EXPECT_EQ(k, rec.f_coeffs.size());
}

TEST_F(Cli, ArealFit) {
  const auto r = run({"fit", "--mesh", kMesh, "--data", (dir_ / "areal.csv").string(), "--regions", kRegions,
                      "--family", "poisson", "--lambda", "0.5", "--out", (dir_ / "areal").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto rec = read_fit_json(dir_ / "areal" / "fit.json");
  EXPECT_NEAR(rec.beta[0], 5.0, 0.3);
  EXPECT_FALSE(rec.phi_hat);
}

TEST_F(Cli, ValidationFailures) {
  auto r = run({"fit", "--family", "poisson", "--data", (dir_ / "areal.csv").string(), "--mesh", kMesh, "--lambda",
                "1"});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("--regions"), std::string::npos);
  r = run({"fit", "--mesh", kMesh, "--data", (dir_ / "geo.csv").string(), "--family", "gamma"});
  EXPECT_EQ(r.code, 1);
  r = run({"fit", "--mesh", kMesh, "--data", (dir_ / "geo.csv").string(), "--family", "gamma", "--lambda", "1",
           "--gcv"});
  EXPECT_EQ(r.code, 1);
  r = run({"fit", "--mesh", kMesh, "--data", (dir_ / "geo.csv").string(), "--family", "binomial", "--lambda", "1"});
  EXPECT_EQ(r.code, 1);
  r = run({"fit", "--mesh", "/nonexistent.mesh", "--data", (dir_ / "geo.csv").string(), "--lambda", "1"});
  EXPECT_EQ(r.code, 1);
  r = run({"fit", "--mesh", kMesh, "--data", (dir_ / "geo.csv").string(), "--family", "poisson", "--lambda", "1"});
  EXPECT_EQ(r.code, 1);  // gamma responses are not counts
  r = run({"frobnicate"});
  EXPECT_EQ(r.code, 1);
  r = run({});
  EXPECT_EQ(r.code, 1);
  r = run({"--help"});
  EXPECT_EQ(r.code, 0);
  r = run({"eval", "--fit", (dir_ / "nope.json").string(), "--mesh", kMesh});
  EXPECT_EQ(r.code, 1);
}

TEST_F(Cli, EvalRejectsOtherMesh) {
  const auto tri = (kData / "unit_triangle.mesh").string();
  const auto r = run({"fit", "--mesh", kMesh, "--data", (dir_ / "geo.csv").string(), "--family", "gamma",
                      "--lambda", "1", "--out", (dir_ / "m").string()});
  ASSERT_EQ(r.code, 0);
  const auto e = run({"eval", "--fit", (dir_ / "m" / "fit.json").string(), "--mesh", tri});
  EXPECT_EQ(e.code, 1);
  EXPECT_NE(e.err.find("checksum"), std::string::npos);
}

TEST_F(Cli, NumericalFailures) {
  auto r = run({"fit", "--mesh", kMesh, "--data", (dir_ / "geo.csv").string(), "--family", "gamma", "--lambda", "1",
                "--max-iter", "1", "--strict", "--out", (dir_ / "strict").string()});
  EXPECT_EQ(r.code, 2);
  r = run({"fit", "--mesh", kMesh, "--data", (dir_ / "geo.csv").string(), "--family", "gamma", "--lambda", "1",
           "--max-iter", "1", "--out", (dir_ / "lenient").string()});
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.err.find("warning"), std::string::npos);

  // an intercept column is aliased with the constant field
  auto d = read_data_csv(dir_ / "geo.csv");
  d.obs.X.col(0).setOnes();
  text::write_file_atomic(dir_ / "alias.csv", data_to_csv(d));
  r = run({"fit", "--mesh", kMesh, "--data", (dir_ / "alias.csv").string(), "--family", "gaussian", "--lambda", "1",
           "--out", (dir_ / "alias-out").string()});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("aliased"), std::string::npos);
}

TEST_F(Cli, ThreadsEnvironment) {
  ::setenv("GSRPDE_THREADS", "abc", 1);
  auto r = run({"fit", "--mesh", kMesh, "--data", (dir_ / "geo.csv").string(), "--family", "gamma", "--lambda", "1",
                "--out", (dir_ / "env").string()});
  EXPECT_EQ(r.code, 1);
  ::setenv("GSRPDE_THREADS", "2", 1);
  r = run({"fit", "--mesh", kMesh, "--data", (dir_ / "geo.csv").string(), "--family", "gamma", "--gcv",
           "--lambda-grid", "1e-2", "1e2", "3", "--out", (dir_ / "env2").string()});
  EXPECT_EQ(r.code, 0) << r.err;
  ::unsetenv("GSRPDE_THREADS");
}

TEST_F(Cli, SimulateIsDeterministic) {
  for (const char* sub : {"a", "b"}) {
    const auto r = run({"simulate", "--case", "areal-poisson", "--reps", "2", "--seed", "7", "--out",
                        (dir_ / "sim" / sub).string()});
    ASSERT_EQ(r.code, 0) << r.err;
  }
  for (const char* f : {"summary.csv", "replicates.csv", "region_rmse.csv"}) {
    EXPECT_EQ(text::read_file(dir_ / "sim" / "a" / f), text::read_file(dir_ / "sim" / "b" / f)) << f;
  }
  const auto r = run({"simulate", "--case", "portland"});
  EXPECT_EQ(r.code, 1);
}

TEST_F(Cli, SimulateSavedDataRefitsToReplicateZero) {
  const auto sim = dir_ / "saved";
  auto r = run({"simulate", "--case", "geostat-gamma", "--reps", "1", "--n", "120", "--seed", "3", "--save-data",
                "--out", sim.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto data = read_data_csv(sim / "data.csv");
  EXPECT_EQ(data.obs.y.size(), 120);
  ASSERT_TRUE(data.f_true.has_value());

  std::istringstream reps(text::read_file(sim / "replicates.csv"));
  std::string header, row;
  std::getline(reps, header);
  std::getline(reps, row);
  const auto fields = text::split_char(row, ',');
  const std::string lambda(fields.at(2));
  const double beta1 = text::parse_double(fields.at(6), "beta_x1");

  r = run({"fit", "--mesh", kMesh, "--data", (sim / "data.csv").string(), "--family", "gamma", "--lambda", lambda,
           "--out", (dir_ / "refit").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NEAR(read_fit_json(dir_ / "refit" / "fit.json").beta[0], beta1, 1e-8);
}

TEST_F(Cli, StatsAndExport) {
  auto r = run({"stats", "--mesh", kMesh, "--data", (dir_ / "geo.csv").string(), "--lambda", "0.5", "--sigma2",
                "0.2", "--use-q", "--out", (dir_ / "stats").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(fs::exists(dir_ / "stats" / "stats.csv"));
  EXPECT_TRUE(fs::exists(dir_ / "stats" / "covariance.csv"));
  r = run({"export-matrices", "--mesh", kMesh, "--data", (dir_ / "geo.csv").string(), "--out",
           (dir_ / "coo").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  for (const char* f : {"r0.coo", "r1.coo", "psi.coo"}) EXPECT_TRUE(fs::exists(dir_ / "coo" / f)) << f;
  const auto head = text::read_file(dir_ / "coo" / "psi.coo").substr(0, 10);
  EXPECT_EQ(head, "# 150 781\n");
}

}  // namespace
}  // namespace gsr
