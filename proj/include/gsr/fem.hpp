#pragma once

#include "gsr/core.hpp"
#include "gsr/mesh.hpp"

#include <Eigen/SparseCholesky>

#include <filesystem>
#include <memory>
#include <optional>
#include <variant>
#include <vector>

namespace gsr {

// Pointwise evaluation at n locations.
struct PointObservations {
  std::vector<Point2> points;
};

// Integration over n disjoint regions, each a union of mesh triangles.
struct RegionObservations {
  std::vector<std::vector<int>> regions;
};

// The linear observation functional mapping a field to its n observed values.
using ObservationOperator = std::variant<PointObservations, RegionObservations>;

std::size_t num_observations(const ObservationOperator& op);
bool is_areal(const ObservationOperator& op);

// Linear finite element matrices on a mesh: mass R0 = int psi psi^T and stiffness
// R1 = int grad(psi)^T grad(psi). Both are assembled per triangle with exact rules.
SparseMatrix assemble_mass(const TriangularMesh& mesh);
SparseMatrix assemble_stiffness(const TriangularMesh& mesh);

// n x K matrix of the observation functional applied to each basis function.
// Throws ValidationError naming the offending observation for points outside the
// mesh, empty or overlapping regions, or triangle indices out of range.
SparseMatrix assemble_psi(const TriangularMesh& mesh, const ObservationOperator& op);

// Row vector psi(p)^T of basis values at p (empty when p is outside the mesh).
std::optional<Eigen::SparseVector<double>> basis_at(const TriangularMesh& mesh, const Point2& p);

// Barycentric interpolation of nodal coefficients; absent outside the mesh.
std::vector<std::optional<double>> evaluate_field(const TriangularMesh& mesh, const Vector& coeffs,
                                                  const std::vector<Point2>& points);

// Assembled discretisation shared (read-only) by every fit on the same mesh and
// observation operator.
class FemSystem {
 public:
  FemSystem(std::shared_ptr<const TriangularMesh> mesh, ObservationOperator op);

  const TriangularMesh& mesh() const { return *mesh_; }
  std::shared_ptr<const TriangularMesh> mesh_ptr() const { return mesh_; }
  const ObservationOperator& observation_operator() const { return op_; }

  const SparseMatrix& psi() const { return psi_; }
  const SparseMatrix& r0() const { return r0_; }
  const SparseMatrix& r1() const { return r1_; }
  const std::string& mesh_checksum() const { return checksum_; }

  std::size_t num_basis() const { return static_cast<std::size_t>(r0_.rows()); }
  std::size_t num_observations() const { return static_cast<std::size_t>(psi_.rows()); }

  // R0^{-1} v through the cached Cholesky factor of the mass matrix.
  Vector solve_mass(const Vector& v) const;
  // f^T P f with P = R1 R0^{-1} R1, the discrete integral of the squared Laplacian.
  double penalty(const Vector& f) const;

 private:
  std::shared_ptr<const TriangularMesh> mesh_;
  ObservationOperator op_;
  SparseMatrix psi_;
  SparseMatrix r0_;
  SparseMatrix r1_;
  std::string checksum_;
  std::shared_ptr<const Eigen::SimplicialLLT<SparseMatrix>> mass_factor_;
};

// Coordinate-format dump ("i j value" per nonzero, 0-based) for debugging.
void write_coo(const std::filesystem::path& path, const SparseMatrix& m);

}  // namespace gsr
