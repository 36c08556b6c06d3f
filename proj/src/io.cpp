#include "gsr/io.hpp"

#include "gsr/text.hpp"

#include <json.hpp>

#include <map>
#include <sstream>

namespace gsr {

namespace {

std::optional<int> covariate_index(std::string_view name) {
  if (name.size() < 2 || name[0] != 'x') return std::nullopt;
  int k = 0;
  for (char c : name.substr(1)) {
    if (c < '0' || c > '9') return std::nullopt;
    k = 10 * k + (c - '0');
    if (k > 100000) return std::nullopt;
  }
  return k;
}

}  // namespace

DataTable parse_data_csv(const std::string& content) {
  std::istringstream in(content);
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    for (auto c : text::split_char(text::trim(line), ',')) header.emplace_back(c);
    break;
  }
  if (header.empty()) throw ParseError("data file is empty");

  std::map<std::string, std::size_t> col;
  std::map<int, std::size_t> covariates;
  for (std::size_t j = 0; j < header.size(); ++j) {
    const auto& h = header[j];
    if (!col.emplace(h, j).second) throw ParseError("duplicate column '" + h + "' in data header");
    if (const auto k = covariate_index(h)) {
      covariates[*k] = j;
    } else if (h != "y" && h != "px" && h != "py" && h != "region_id" && h != "f_true") {
      throw ParseError("unknown column '" + h + "' in data header");
    }
  }
  if (!col.count("y")) throw ParseError("data header has no 'y' column");
  int expect = 1;
  for (const auto& [k, j] : covariates) {
    if (k != expect) throw ParseError("covariate columns must be x1..xq without gaps; missing x" + std::to_string(expect));
    ++expect;
  }
  const bool has_points = col.count("px") || col.count("py");
  const bool has_regions = col.count("region_id") > 0;
  if (has_points && (!col.count("px") || !col.count("py"))) throw ParseError("data header needs both px and py");
  if (has_points == has_regions) {
    throw ParseError("data header needs either px,py (point data) or region_id (areal data)");
  }

  std::vector<double> y;
  std::vector<std::vector<double>> xs(covariates.size());
  std::vector<double> f_true;
  DataTable out;
  while (std::getline(in, line)) {
    ++line_no;
    const auto t = text::trim(line);
    if (t.empty()) continue;
    const auto fields = text::split_char(t, ',');
    const std::string ctx = "data line " + std::to_string(line_no);
    if (fields.size() != header.size()) {
      throw ParseError(ctx + ": expected " + std::to_string(header.size()) + " fields, got " +
                       std::to_string(fields.size()));
    }
    y.push_back(text::parse_double(fields[col["y"]], ctx + ", column y"));
    std::size_t c = 0;
    for (const auto& [k, j] : covariates) {
      xs[c++].push_back(text::parse_double(fields[j], ctx + ", column x" + std::to_string(k)));
    }
    if (has_points) {
      out.points.push_back({text::parse_double(fields[col["px"]], ctx + ", column px"),
                            text::parse_double(fields[col["py"]], ctx + ", column py")});
    } else {
      const long long id = text::parse_int(fields[col["region_id"]], ctx + ", column region_id");
      if (id < 0 || id > 1'000'000'000) throw ParseError(ctx + ": region_id out of range");
      out.region_ids.push_back(static_cast<int>(id));
    }
    if (col.count("f_true")) f_true.push_back(text::parse_double(fields[col["f_true"]], ctx + ", column f_true"));
  }
  if (y.empty()) throw ParseError("data file has no rows");

  const auto n = static_cast<Eigen::Index>(y.size());
  out.obs.y = Eigen::Map<const Vector>(y.data(), n);
  out.obs.X.resize(n, static_cast<Eigen::Index>(xs.size()));
  for (std::size_t c = 0; c < xs.size(); ++c) {
    out.obs.X.col(static_cast<Eigen::Index>(c)) = Eigen::Map<const Vector>(xs[c].data(), n);
    out.obs.covariate_names.push_back("x" + std::to_string(c + 1));
  }
  if (!f_true.empty()) out.f_true = Eigen::Map<const Vector>(f_true.data(), n);
  return out;
}

DataTable read_data_csv(const std::filesystem::path& path) { return parse_data_csv(text::read_file(path)); }

std::string data_to_csv(const DataTable& data) {
  std::ostringstream out;
  const auto q = data.obs.X.cols();
  out << 'y';
  for (Eigen::Index j = 0; j < q; ++j) out << ",x" << j + 1;
  out << (data.areal() ? ",region_id" : ",px,py");
  if (data.f_true) out << ",f_true";
  out << '\n';
  for (Eigen::Index i = 0; i < data.obs.y.size(); ++i) {
    out << text::format_double(data.obs.y[i]);
    for (Eigen::Index j = 0; j < q; ++j) out << ',' << text::format_double(data.obs.X(i, j));
    const auto k = static_cast<std::size_t>(i);
    if (data.areal()) {
      out << ',' << data.region_ids[k];
    } else {
      out << ',' << text::format_double(data.points[k].x) << ',' << text::format_double(data.points[k].y);
    }
    if (data.f_true) out << ',' << text::format_double((*data.f_true)[i]);
    out << '\n';
  }
  return out.str();
}

std::vector<Point2> read_points_csv(const std::filesystem::path& path) {
  std::istringstream in(text::read_file(path));
  std::string line;
  std::vector<std::string> header;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    for (auto c : text::split_char(text::trim(line), ',')) header.emplace_back(c);
    break;
  }
  std::optional<std::size_t> ix;
  std::optional<std::size_t> iy;
  for (std::size_t j = 0; j < header.size(); ++j) {
    if (header[j] == "px" || header[j] == "x") ix = j;
    if (header[j] == "py" || header[j] == "y") iy = j;
  }
  if (!ix || !iy) throw ParseError("points file needs px,py (or x,y) columns");
  std::vector<Point2> out;
  while (std::getline(in, line)) {
    ++line_no;
    const auto t = text::trim(line);
    if (t.empty()) continue;
    const auto fields = text::split_char(t, ',');
    const std::string ctx = "points line " + std::to_string(line_no);
    if (fields.size() != header.size()) throw ParseError(ctx + ": wrong number of fields");
    out.push_back({text::parse_double(fields[*ix], ctx), text::parse_double(fields[*iy], ctx)});
  }
  return out;
}

FitRecord make_record(const FitResult& fit, const std::vector<std::string>& beta_names,
                      const std::string& mesh_checksum) {
  FitRecord r;
  r.family = fit.family;
  r.lambda = fit.lambda;
  r.beta_names = beta_names;
  r.beta = fit.beta;
  r.f_coeffs = fit.f_coeffs;
  r.hat_trace = fit.hat_trace;
  r.phi_hat = fit.phi_hat;
  r.gcv = fit.gcv;
  r.iterations = fit.iterations;
  r.converged = fit.converged;
  r.mesh_checksum = mesh_checksum;
  return r;
}

std::string record_to_json(const FitRecord& r) {
  using nlohmann::json;
  json beta = json::array();
  for (Eigen::Index j = 0; j < r.beta.size(); ++j) {
    beta.push_back({{"name", r.beta_names.at(static_cast<std::size_t>(j))}, {"value", r.beta[j]}});
  }
  json doc;
  doc["family"] = r.family;
  doc["lambda"] = r.lambda;
  doc["beta"] = beta;
  doc["f_coeffs"] = std::vector<double>(r.f_coeffs.data(), r.f_coeffs.data() + r.f_coeffs.size());
  doc["hat_trace"] = r.hat_trace;
  doc["phi_hat"] = r.phi_hat ? json(*r.phi_hat) : json(nullptr);
  doc["gcv"] = std::isfinite(r.gcv) ? json(r.gcv) : json(nullptr);
  doc["iterations"] = r.iterations;
  doc["converged"] = r.converged;
  doc["mesh_checksum"] = r.mesh_checksum;
  return doc.dump(2) + "\n";
}

FitRecord parse_record_json(const std::string& content) {
  using nlohmann::json;
  FitRecord r;
  try {
    const json doc = json::parse(content);
    r.family = doc.at("family").get<std::string>();
    r.lambda = doc.at("lambda").get<double>();
    const auto& beta = doc.at("beta");
    r.beta.resize(static_cast<Eigen::Index>(beta.size()));
    for (std::size_t j = 0; j < beta.size(); ++j) {
      r.beta_names.push_back(beta[j].at("name").get<std::string>());
      r.beta[static_cast<Eigen::Index>(j)] = beta[j].at("value").get<double>();
    }
    const auto f = doc.at("f_coeffs").get<std::vector<double>>();
    r.f_coeffs = Eigen::Map<const Vector>(f.data(), static_cast<Eigen::Index>(f.size()));
    r.hat_trace = doc.at("hat_trace").get<double>();
    if (!doc.at("phi_hat").is_null()) r.phi_hat = doc.at("phi_hat").get<double>();
    r.gcv = doc.at("gcv").is_null() ? std::numeric_limits<double>::infinity() : doc.at("gcv").get<double>();
    r.iterations = doc.at("iterations").get<int>();
    r.converged = doc.at("converged").get<bool>();
    r.mesh_checksum = doc.at("mesh_checksum").get<std::string>();
  } catch (const json::exception& e) {
    throw ParseError(std::string("malformed fit file: ") + e.what());
  }
  return r;
}

FitRecord read_fit_json(const std::filesystem::path& path) { return parse_record_json(text::read_file(path)); }

}  // namespace gsr
