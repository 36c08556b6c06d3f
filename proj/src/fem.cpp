#include "gsr/fem.hpp"

#include "gsr/text.hpp"

#include <array>
#include <string>

namespace gsr {

namespace {

using Triplets = std::vector<Eigen::Triplet<double>>;

// Adds a symmetric 3x3 element block, computing each off-diagonal value once so the
// assembled matrix is exactly symmetric.
void scatter_symmetric(Triplets& trips, const Triangle& tri, const std::array<std::array<double, 3>, 3>& local) {
  for (int a = 0; a < 3; ++a) {
    trips.emplace_back(tri[a], tri[a], local[a][a]);
    for (int b = a + 1; b < 3; ++b) {
      trips.emplace_back(tri[a], tri[b], local[a][b]);
      trips.emplace_back(tri[b], tri[a], local[a][b]);
    }
  }
}

SparseMatrix from_triplets(Eigen::Index rows, Eigen::Index cols, const Triplets& trips) {
  SparseMatrix m(rows, cols);
  m.setFromTriplets(trips.begin(), trips.end());
  m.makeCompressed();
  return m;
}

}  // namespace

std::size_t num_observations(const ObservationOperator& op) {
  return std::visit(
      [](const auto& o) -> std::size_t {
        if constexpr (std::is_same_v<std::decay_t<decltype(o)>, PointObservations>) {
          return o.points.size();
        } else {
          return o.regions.size();
        }
      },
      op);
}

bool is_areal(const ObservationOperator& op) { return std::holds_alternative<RegionObservations>(op); }

SparseMatrix assemble_mass(const TriangularMesh& mesh) {
  Triplets trips;
  trips.reserve(9 * mesh.num_triangles());
  for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
    const double area = mesh.triangle_area(t);
    const double diag = area / 6.0;
    const double off = area / 12.0;
    scatter_symmetric(trips, mesh.triangle(t), {{{diag, off, off}, {off, diag, off}, {off, off, diag}}});
  }
  const auto K = static_cast<Eigen::Index>(mesh.num_nodes());
  return from_triplets(K, K, trips);
}

SparseMatrix assemble_stiffness(const TriangularMesh& mesh) {
  Triplets trips;
  trips.reserve(9 * mesh.num_triangles());
  for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
    const auto& tri = mesh.triangle(t);
    const Point2& p0 = mesh.node(tri[0]);
    const Point2& p1 = mesh.node(tri[1]);
    const Point2& p2 = mesh.node(tri[2]);
    const double area = mesh.triangle_area(t);
    const double twice = 2.0 * area;
    // constant gradients of the barycentric coordinates
    const std::array<std::array<double, 2>, 3> grad{{
        {(p1.y - p2.y) / twice, (p2.x - p1.x) / twice},
        {(p2.y - p0.y) / twice, (p0.x - p2.x) / twice},
        {(p0.y - p1.y) / twice, (p1.x - p0.x) / twice},
    }};
    std::array<std::array<double, 3>, 3> local{};
    for (int a = 0; a < 3; ++a) {
      for (int b = 0; b < 3; ++b) {
        local[a][b] = area * (grad[a][0] * grad[b][0] + grad[a][1] * grad[b][1]);
      }
    }
    scatter_symmetric(trips, tri, local);
  }
  const auto K = static_cast<Eigen::Index>(mesh.num_nodes());
  return from_triplets(K, K, trips);
}

std::optional<Eigen::SparseVector<double>> basis_at(const TriangularMesh& mesh, const Point2& p) {
  const auto loc = mesh.locate(p);
  if (!loc) return std::nullopt;
  Eigen::SparseVector<double> v(static_cast<Eigen::Index>(mesh.num_nodes()));
  const auto& tri = mesh.triangle(static_cast<std::size_t>(loc->triangle));
  for (int a = 0; a < 3; ++a) v.coeffRef(tri[a]) += loc->bary[a];
  return v;
}

SparseMatrix assemble_psi(const TriangularMesh& mesh, const ObservationOperator& op) {
  const auto K = static_cast<Eigen::Index>(mesh.num_nodes());
  Triplets trips;
  if (const auto* pts = std::get_if<PointObservations>(&op)) {
    trips.reserve(3 * pts->points.size());
    for (std::size_t i = 0; i < pts->points.size(); ++i) {
      const auto& p = pts->points[i];
      const auto loc = mesh.locate(p);
      if (!loc) {
        throw ValidationError("observation " + std::to_string(i) + " at (" + text::format_double(p.x) + ", " +
                              text::format_double(p.y) + ") lies outside the mesh");
      }
      const auto& tri = mesh.triangle(static_cast<std::size_t>(loc->triangle));
      for (int a = 0; a < 3; ++a) trips.emplace_back(static_cast<int>(i), tri[a], loc->bary[a]);
    }
    return from_triplets(static_cast<Eigen::Index>(pts->points.size()), K, trips);
  }

  const auto& regions = std::get<RegionObservations>(op).regions;
  std::vector<int> owner(mesh.num_triangles(), -1);
  for (std::size_t i = 0; i < regions.size(); ++i) {
    if (regions[i].empty()) throw ValidationError("region " + std::to_string(i) + " is empty");
    for (int t : regions[i]) {
      if (t < 0 || static_cast<std::size_t>(t) >= mesh.num_triangles()) {
        throw ValidationError("region " + std::to_string(i) + " references triangle " + std::to_string(t) +
                              " outside the mesh");
      }
      if (owner[static_cast<std::size_t>(t)] >= 0) {
        throw ValidationError("regions " + std::to_string(owner[static_cast<std::size_t>(t)]) + " and " +
                              std::to_string(i) + " overlap at triangle " + std::to_string(t));
      }
      owner[static_cast<std::size_t>(t)] = static_cast<int>(i);
      const double third = mesh.triangle_area(static_cast<std::size_t>(t)) / 3.0;
      for (int v : mesh.triangle(static_cast<std::size_t>(t))) trips.emplace_back(static_cast<int>(i), v, third);
    }
  }
  return from_triplets(static_cast<Eigen::Index>(regions.size()), K, trips);
}

std::vector<std::optional<double>> evaluate_field(const TriangularMesh& mesh, const Vector& coeffs,
                                                  const std::vector<Point2>& points) {
  if (static_cast<std::size_t>(coeffs.size()) != mesh.num_nodes()) {
    throw ValidationError("evaluate_field: expected " + std::to_string(mesh.num_nodes()) + " coefficients, got " +
                          std::to_string(coeffs.size()));
  }
  std::vector<std::optional<double>> out;
  out.reserve(points.size());
  for (const auto& p : points) {
    const auto loc = mesh.locate(p);
    if (!loc) {
      out.emplace_back(std::nullopt);
      continue;
    }
    const auto& tri = mesh.triangle(static_cast<std::size_t>(loc->triangle));
    out.emplace_back(loc->bary[0] * coeffs[tri[0]] + loc->bary[1] * coeffs[tri[1]] + loc->bary[2] * coeffs[tri[2]]);
  }
  return out;
}

FemSystem::FemSystem(std::shared_ptr<const TriangularMesh> mesh, ObservationOperator op)
    : mesh_(std::move(mesh)), op_(std::move(op)) {
  if (!mesh_) throw ValidationError("FemSystem: null mesh");
  psi_ = assemble_psi(*mesh_, op_);
  r0_ = assemble_mass(*mesh_);
  r1_ = assemble_stiffness(*mesh_);
  checksum_ = mesh_->checksum();
  auto factor = std::make_shared<Eigen::SimplicialLLT<SparseMatrix>>(r0_);
  if (factor->info() != Eigen::Success) throw NumericalError("mass matrix is not positive definite");
  mass_factor_ = std::move(factor);
}

Vector FemSystem::solve_mass(const Vector& v) const { return mass_factor_->solve(v); }

double FemSystem::penalty(const Vector& f) const {
  const Vector u = r1_ * f;
  return u.dot(solve_mass(u));
}

void write_coo(const std::filesystem::path& path, const SparseMatrix& m) {
  std::string out;
  out += "# " + std::to_string(m.rows()) + " " + std::to_string(m.cols()) + "\n";
  for (Eigen::Index k = 0; k < m.outerSize(); ++k) {
    for (SparseMatrix::InnerIterator it(m, k); it; ++it) {
      out += std::to_string(it.row()) + " " + std::to_string(it.col()) + " " + text::format_double(it.value()) + "\n";
    }
  }
  text::write_file_atomic(path, out);
}

}  // namespace gsr
