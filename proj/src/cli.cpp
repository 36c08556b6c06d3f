#include "gsr/cli.hpp"

#include "gsr/family.hpp"
#include "gsr/fem.hpp"
#include "gsr/inference.hpp"
#include "gsr/io.hpp"
#include "gsr/mesh.hpp"
#include "gsr/pirls.hpp"
#include "gsr/selection.hpp"
#include "gsr/simulation.hpp"
#include "gsr/text.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>

namespace gsr::cli {

namespace fs = std::filesystem;

namespace {

unsigned default_threads() {
  if (const char* env = std::getenv("GSRPDE_THREADS")) {
    const long long v = text::parse_int(env, "GSRPDE_THREADS");
    if (v < 1 || v > 1024) throw ValidationError("GSRPDE_THREADS must be between 1 and 1024");
    return static_cast<unsigned>(v);
  }
  return 1;
}

struct ModelArgs {
  std::string mesh;
  std::string data;
  std::string regions;
  std::string family = "gaussian";
  std::optional<double> lambda;
  bool gcv = false;
  std::vector<double> lambda_grid;  // lo hi n
  double gamma = 1.0;
  double tol = 1e-6;
  int max_iter = 25;
  std::vector<int> grid;  // nx ny
  std::string out = ".";
  bool strict = false;
  bool verbose = false;
  unsigned threads = 1;
};

struct SimArgs {
  std::string study;
  std::size_t reps = 20;
  std::uint64_t seed = 1;
  std::size_t n = 200;
  double phi = 0.1;
  std::string mesh = std::string(GSRPDE_DATA_DIR) + "/horseshoe.mesh";
  std::string regions = std::string(GSRPDE_DATA_DIR) + "/horseshoe.regions";
  std::vector<double> lambda_grid;
  std::optional<double> gamma;
  std::string out = "sim-out";
  bool save_data = false;
  unsigned threads = 1;
};

struct EvalArgs {
  std::string fit;
  std::string mesh;
  std::vector<int> grid;
  std::string points;
  std::string out = "field.csv";
};

struct StatsArgs {
  std::string mesh;
  std::string data;
  std::string regions;
  double lambda = 0.0;
  double sigma2 = 1.0;
  std::string points;
  bool use_q = false;
  std::string out = ".";
  unsigned threads = 1;
};

struct ExportArgs {
  std::string mesh;
  std::string data;
  std::string regions;
  std::string out = ".";
};

std::vector<double> grid_from(const std::vector<double>& spec) {
  if (spec.empty()) return default_lambda_grid();
  const double n = spec[2];
  if (n < 1 || n != std::floor(n)) throw ValidationError("--lambda-grid needs an integer count");
  return log_grid(spec[0], spec[1], static_cast<std::size_t>(n));
}

std::shared_ptr<const TriangularMesh> mesh_from(const std::string& path) {
  return std::make_shared<const TriangularMesh>(load_mesh(path));
}

// Observation operator for a data table; areal data needs the region file.
ObservationOperator operator_for(const DataTable& data, const std::string& regions_path) {
  if (!data.areal()) return PointObservations{data.points};
  if (regions_path.empty()) throw ValidationError("areal data (region_id column) requires --regions");
  const auto sets = load_regions(regions_path);
  RegionObservations op;
  for (std::size_t i = 0; i < data.region_ids.size(); ++i) {
    const auto id = static_cast<std::size_t>(data.region_ids[i]);
    if (id >= sets.size()) {
      throw ValidationError("data row " + std::to_string(i + 1) + " refers to region " + std::to_string(id) +
                            ", but the region file defines " + std::to_string(sets.size()));
    }
    op.regions.push_back(sets[id]);
  }
  return op;
}

std::vector<Point2> bbox_grid(const TriangularMesh& mesh, const std::vector<int>& grid) {
  const int nx = grid.at(0);
  const int ny = grid.at(1);
  if (nx < 2 || ny < 2) throw ValidationError("--grid needs at least 2 points per direction");
  const auto& box = mesh.bounding_box();
  std::vector<Point2> out;
  out.reserve(static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny));
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      out.push_back({box.lo.x + (box.hi.x - box.lo.x) * i / (nx - 1), box.lo.y + (box.hi.y - box.lo.y) * j / (ny - 1)});
    }
  }
  return out;
}

std::string field_csv(const TriangularMesh& mesh, const Vector& coeffs, const std::vector<int>& grid,
                      const std::vector<Point2>& points) {
  std::vector<Point2> where = points;
  if (!grid.empty()) {
    where = bbox_grid(mesh, grid);
  } else if (where.empty()) {
    where = mesh.nodes();
  }
  const auto values = evaluate_field(mesh, coeffs, where);
  std::ostringstream out;
  out << "x,y,value\n";
  for (std::size_t i = 0; i < where.size(); ++i) {
    out << text::format_double(where[i].x) << ',' << text::format_double(where[i].y) << ',';
    if (values[i]) out << text::format_double(*values[i]);
    out << '\n';
  }
  return out.str();
}

int do_fit(const ModelArgs& a, std::ostream& out, std::ostream& err) {
  if (a.lambda && a.gcv) throw ValidationError("--lambda and --gcv are mutually exclusive");
  if (!a.lambda && !a.gcv) throw ValidationError("either --lambda or --gcv is required");
  if (a.lambda && !a.lambda_grid.empty()) throw ValidationError("--lambda and --lambda-grid are mutually exclusive");
  if (!(a.gamma >= 1.0)) throw ValidationError("--gamma must be at least 1");
  if (!(a.tol > 0.0)) throw ValidationError("--tol must be positive");
  if (a.max_iter < 1) throw ValidationError("--max-iter must be at least 1");

  const FamilySpec family = parse_family(a.family);
  const DataTable data = read_data_csv(a.data);
  const auto mesh = mesh_from(a.mesh);
  const FemSystem fem(mesh, operator_for(data, a.regions));

  PirlsOptions po;
  po.tol = a.tol;
  po.max_iter = a.max_iter;
  po.gamma = a.gamma;
  po.verbose = a.verbose;

  FitResult result;
  std::optional<GcvScan> scan;
  if (a.gcv) {
    ScanOptions so;
    so.pirls = po;
    so.threads = a.threads;
    scan = gcv_scan(family, data.obs, fem, grid_from(a.lambda_grid), so);
    result = scan->best_fit;
  } else {
    result = fit(family, data.obs, fem, *a.lambda, po);
  }

  const fs::path dir(a.out);
  fs::create_directories(dir);
  const FitRecord record = make_record(result, data.obs.covariate_names, fem.mesh_checksum());
  text::write_file_atomic(dir / "fit.json", record_to_json(record));
  text::write_file_atomic(dir / "field.csv", field_csv(*mesh, result.f_coeffs, a.grid, {}));
  if (scan) text::write_file_atomic(dir / "scan.csv", scan_to_csv(*scan));

  out << "family " << result.family << ", lambda " << text::format_double(result.lambda) << ", edf "
      << text::format_double(result.hat_trace) << ", iterations " << result.iterations
      << (result.converged ? ", converged" : ", not converged") << '\n';
  for (Eigen::Index j = 0; j < result.beta.size(); ++j) {
    out << "  " << data.obs.covariate_names[static_cast<std::size_t>(j)] << " = "
        << text::format_double(result.beta[j]) << '\n';
  }
  if (!result.converged) {
    err << "warning: " << result.message << '\n';
    if (a.strict) return kExitNumerical;
  }
  return kExitOk;
}

int do_eval(const EvalArgs& a, std::ostream& out) {
  if (!a.grid.empty() && !a.points.empty()) throw ValidationError("--grid and --points are mutually exclusive");
  const FitRecord record = read_fit_json(a.fit);
  const auto mesh = mesh_from(a.mesh);
  if (mesh->checksum() != record.mesh_checksum) {
    throw ValidationError("mesh checksum " + mesh->checksum() + " does not match the fit (" + record.mesh_checksum +
                          ")");
  }
  const std::vector<Point2> points = a.points.empty() ? std::vector<Point2>{} : read_points_csv(a.points);
  text::write_file_atomic(a.out, field_csv(*mesh, record.f_coeffs, a.grid, points));
  out << "wrote " << a.out << '\n';
  return kExitOk;
}

int do_simulate(const SimArgs& a, std::ostream& out) {
  const StudyKind kind = parse_study(a.study);
  if (a.reps < 1) throw ValidationError("--reps must be at least 1");
  StudyOptions so;
  so.replicates = a.reps;
  so.seed = a.seed;
  so.n = a.n;
  so.phi = a.phi;
  so.threads = a.threads;
  if (!a.lambda_grid.empty()) so.lambdas = grid_from(a.lambda_grid);
  so.gamma = a.gamma;
  std::optional<DataTable> first;
  if (a.save_data) {
    so.inspect = [&first](std::size_t m, const SimDataset& d, const FemSystem&, const GcvScan&) {
      if (m != 0) return;
      DataTable t;
      t.obs = d.obs;
      t.f_true = d.true_values;
      if (const auto* pts = std::get_if<PointObservations>(&d.op)) {
        t.points = pts->points;
      } else {
        for (Eigen::Index i = 0; i < d.obs.y.size(); ++i) t.region_ids.push_back(static_cast<int>(i));
      }
      first = std::move(t);
    };
  }
  const auto mesh = mesh_from(a.mesh);
  const HorseshoeSpec spec;
  const StudyResult result = kind == StudyKind::GeostatGamma
                                 ? run_geostat_study(mesh, spec, so)
                                 : run_areal_study(mesh, load_regions(a.regions), spec, so);
  write_study(result, a.out);
  if (first) text::write_file_atomic(std::filesystem::path(a.out) / "data.csv", data_to_csv(*first));
  for (std::size_t j = 0; j < result.beta_names.size(); ++j) {
    const auto k = static_cast<Eigen::Index>(j);
    out << result.beta_names[j] << ": mean " << text::format_double(result.beta.mean[k]) << ", sd "
        << text::format_double(result.beta.sd[k]) << ", rmse " << text::format_double(result.beta.rmse[k]) << '\n';
  }
  return kExitOk;
}

int do_stats(const StatsArgs& a, std::ostream& out) {
  const DataTable data = read_data_csv(a.data);
  const auto mesh = mesh_from(a.mesh);
  const FemSystem fem(mesh, operator_for(data, a.regions));
  const std::vector<Point2> points = a.points.empty() ? mesh->nodes() : read_points_csv(a.points);
  FieldStatsOptions fo;
  if (a.use_q) fo.X = data.obs.X;
  fo.true_values = data.f_true;
  fo.threads = a.threads;
  const FieldStats stats = field_stats(fem, a.lambda, a.sigma2, points, fo);

  std::ostringstream table;
  table << "x,y,variance" << (stats.mean ? ",mean" : "") << '\n';
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto k = static_cast<Eigen::Index>(i);
    table << text::format_double(points[i].x) << ',' << text::format_double(points[i].y) << ','
          << text::format_double(stats.covariance(k, k));
    if (stats.mean) table << ',' << text::format_double((*stats.mean)[k]);
    table << '\n';
  }
  std::ostringstream cov;
  for (Eigen::Index i = 0; i < stats.covariance.rows(); ++i) {
    for (Eigen::Index j = 0; j < stats.covariance.cols(); ++j) {
      cov << (j ? "," : "") << text::format_double(stats.covariance(i, j));
    }
    cov << '\n';
  }
  const fs::path dir(a.out);
  fs::create_directories(dir);
  text::write_file_atomic(dir / "stats.csv", table.str());
  text::write_file_atomic(dir / "covariance.csv", cov.str());
  out << "wrote statistics for " << points.size() << " points\n";
  return kExitOk;
}

int do_export(const ExportArgs& a, std::ostream& out) {
  const auto mesh = mesh_from(a.mesh);
  const fs::path dir(a.out);
  fs::create_directories(dir);
  write_coo(dir / "r0.coo", assemble_mass(*mesh));
  write_coo(dir / "r1.coo", assemble_stiffness(*mesh));
  if (!a.data.empty()) {
    const DataTable data = read_data_csv(a.data);
    write_coo(dir / "psi.coo", assemble_psi(*mesh, operator_for(data, a.regions)));
  }
  out << "wrote matrices to " << dir.string() << '\n';
  return kExitOk;
}

void add_model_options(CLI::App* cmd, ModelArgs& a, bool gcv_flag) {
  cmd->add_option("--mesh", a.mesh, "mesh file")->required();
  cmd->add_option("--data", a.data, "data CSV")->required();
  cmd->add_option("--regions", a.regions, "region file (areal data)");
  cmd->add_option("--family", a.family, "gaussian | poisson | bernoulli | gamma");
  cmd->add_option("--lambda", a.lambda, "fixed smoothing parameter");
  if (gcv_flag) cmd->add_flag("--gcv", a.gcv, "select lambda by GCV");
  cmd->add_option("--lambda-grid", a.lambda_grid, "lo hi n: log-spaced GCV grid")->expected(3);
  cmd->add_option("--gamma", a.gamma, "GCV degrees-of-freedom inflation (>= 1)");
  cmd->add_option("--tol", a.tol, "relative objective tolerance");
  cmd->add_option("--max-iter", a.max_iter, "maximum PIRLS iterations");
  cmd->add_option("--grid", a.grid, "nx ny: evaluate on the mesh bounding box")->expected(2);
  cmd->add_option("--out", a.out, "output directory");
  cmd->add_flag("--strict", a.strict, "treat non-convergence as an error");
  cmd->add_flag("--verbose", a.verbose, "report PIRLS progress");
  cmd->add_option("--threads", a.threads, "worker threads");
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Spatial regression with differential regularization", "gsrpde"};
  app.require_subcommand(1);

  ModelArgs fit_args;
  ModelArgs scan_args;
  SimArgs sim_args;
  EvalArgs eval_args;
  StatsArgs stats_args;
  ExportArgs export_args;
  try {
    const unsigned threads = default_threads();
    fit_args.threads = scan_args.threads = sim_args.threads = stats_args.threads = threads;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitValidation;
  }

  auto* fit_cmd = app.add_subcommand("fit", "fit a model at a fixed lambda or by GCV");
  add_model_options(fit_cmd, fit_args, true);
  auto* scan_cmd = app.add_subcommand("gcv-scan", "same as fit --gcv");
  add_model_options(scan_cmd, scan_args, false);

  auto* eval_cmd = app.add_subcommand("eval", "evaluate a fitted field");
  eval_cmd->add_option("--fit", eval_args.fit, "fit.json")->required();
  eval_cmd->add_option("--mesh", eval_args.mesh, "mesh file")->required();
  eval_cmd->add_option("--grid", eval_args.grid, "nx ny")->expected(2);
  eval_cmd->add_option("--points", eval_args.points, "CSV with px,py columns");
  eval_cmd->add_option("--out", eval_args.out, "output CSV");

  auto* sim_cmd = app.add_subcommand("simulate", "run a simulation study");
  sim_cmd->add_option("--case", sim_args.study, "geostat-gamma | areal-poisson")->required();
  sim_cmd->add_option("--reps", sim_args.reps, "replicates");
  sim_cmd->add_option("--seed", sim_args.seed, "master seed");
  sim_cmd->add_option("--n", sim_args.n, "locations (geostat-gamma)");
  sim_cmd->add_option("--phi", sim_args.phi, "gamma scale (geostat-gamma)");
  sim_cmd->add_option("--mesh", sim_args.mesh, "horseshoe mesh");
  sim_cmd->add_option("--regions", sim_args.regions, "areal partition");
  sim_cmd->add_option("--lambda-grid", sim_args.lambda_grid, "lo hi n")->expected(3);
  sim_cmd->add_option("--gamma", sim_args.gamma, "GCV degrees-of-freedom inflation (study default if absent)");
  sim_cmd->add_option("--out", sim_args.out, "output directory");
  sim_cmd->add_flag("--save-data", sim_args.save_data, "also write replicate 0 as data.csv");
  sim_cmd->add_option("--threads", sim_args.threads, "worker threads");

  auto* stats_cmd = app.add_subcommand("stats", "sampling covariance of the gaussian field estimator");
  stats_cmd->add_option("--mesh", stats_args.mesh, "mesh file")->required();
  stats_cmd->add_option("--data", stats_args.data, "data CSV (locations, covariates, optional f_true)")->required();
  stats_cmd->add_option("--regions", stats_args.regions, "region file (areal data)");
  stats_cmd->add_option("--lambda", stats_args.lambda, "smoothing parameter")->required();
  stats_cmd->add_option("--sigma2", stats_args.sigma2, "error variance");
  stats_cmd->add_option("--points", stats_args.points, "probe points CSV (default: mesh nodes)");
  stats_cmd->add_flag("--use-q", stats_args.use_q, "project out the covariates");
  stats_cmd->add_option("--out", stats_args.out, "output directory");
  stats_cmd->add_option("--threads", stats_args.threads, "worker threads");

  auto* export_cmd = app.add_subcommand("export-matrices", "write R0, R1 and Psi in coordinate format");
  export_cmd->add_option("--mesh", export_args.mesh, "mesh file")->required();
  export_cmd->add_option("--data", export_args.data, "data CSV (for Psi)");
  export_cmd->add_option("--regions", export_args.regions, "region file (areal data)");
  export_cmd->add_option("--out", export_args.out, "output directory");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitValidation;
  }

  try {
    if (fit_cmd->parsed()) return do_fit(fit_args, out, err);
    if (scan_cmd->parsed()) {
      scan_args.gcv = true;
      return do_fit(scan_args, out, err);
    }
    if (eval_cmd->parsed()) return do_eval(eval_args, out);
    if (sim_cmd->parsed()) return do_simulate(sim_args, out);
    if (stats_cmd->parsed()) return do_stats(stats_args, out);
    if (export_cmd->parsed()) return do_export(export_args, out);
  } catch (const NumericalError& e) {
    err << "error: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kExitValidation;
  }
  return kExitValidation;
}

int run(int argc, char** argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(args, std::cout, std::cerr);
}

}  // namespace gsr::cli
