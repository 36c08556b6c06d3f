#pragma once

#include "gsr/core.hpp"
#include "gsr/pirls.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace gsr {

// Data CSV: header row naming the columns. `y` is required, covariates are
// x1..xq, geostatistical rows carry px,py and areal rows carry region_id. An
// optional f_true column holds the true field at each observation.
struct DataTable {
  ObservationSet obs;
  std::vector<Point2> points;   // geostatistical rows
  std::vector<int> region_ids;  // areal rows
  std::optional<Vector> f_true;

  bool areal() const { return !region_ids.empty(); }
};

DataTable parse_data_csv(const std::string& content);
DataTable read_data_csv(const std::filesystem::path& path);
std::string data_to_csv(const DataTable& data);

// Points file: header with px,py (or x,y) columns.
std::vector<Point2> read_points_csv(const std::filesystem::path& path);

// The persisted part of a fit.
struct FitRecord {
  std::string family;
  double lambda = 0.0;
  std::vector<std::string> beta_names;
  Vector beta;
  Vector f_coeffs;
  double hat_trace = 0.0;
  std::optional<double> phi_hat;
  double gcv = 0.0;
  int iterations = 0;
  bool converged = false;
  std::string mesh_checksum;
};

FitRecord make_record(const FitResult& fit, const std::vector<std::string>& beta_names,
                      const std::string& mesh_checksum);
std::string record_to_json(const FitRecord& record);
FitRecord parse_record_json(const std::string& content);
FitRecord read_fit_json(const std::filesystem::path& path);

}  // namespace gsr
