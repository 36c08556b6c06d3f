#pragma once

#include "gsr/core.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace gsr {

using Triangle = std::array<int, 3>;
using Edge = std::array<int, 2>;

// Result of a successful point location: containing triangle and the barycentric
// weights of its three vertices (in the triangle's stored vertex order).
struct Location {
  int triangle = -1;
  std::array<double, 3> bary{};
};

struct BoundingBox {
  Point2 lo;
  Point2 hi;
  double span() const;
};

// Conforming triangulation of a planar domain. Immutable once built; every
// constructor path runs the full validation, so a TriangularMesh in hand always
// satisfies the invariants (counterclockwise triangles of positive area, indices in
// range, complete-edge adjacency, no duplicate or orphan nodes).
class TriangularMesh {
 public:
  // Throws ValidationError naming the first violated invariant.
  TriangularMesh(std::vector<Point2> nodes, std::vector<Triangle> triangles);

  std::size_t num_nodes() const { return nodes_.size(); }
  std::size_t num_triangles() const { return triangles_.size(); }

  const std::vector<Point2>& nodes() const { return nodes_; }
  const std::vector<Triangle>& triangles() const { return triangles_; }
  const Point2& node(std::size_t i) const { return nodes_.at(i); }
  const Triangle& triangle(std::size_t t) const { return triangles_.at(t); }

  // Directed edges that belong to exactly one triangle, oriented as in that triangle.
  const std::vector<Edge>& boundary_edges() const { return boundary_edges_; }
  // Closed boundary polygons assembled from boundary_edges (outer loops run
  // counterclockwise, hole loops clockwise).
  std::vector<std::vector<int>> boundary_loops() const;

  const BoundingBox& bounding_box() const { return bbox_; }

  double triangle_area(std::size_t t) const;
  double total_area() const;

  // Lowest-index triangle whose barycentric coordinates of p are all >= -1e-12.
  std::optional<Location> locate(const Point2& p) const;
  // Same result computed by scanning every triangle; kept for cross-checking.
  std::optional<Location> locate_brute_force(const Point2& p) const;

  // FNV-1a digest of the canonical node/triangle content, hex encoded.
  std::string checksum() const;

  // Number of triangles reoriented to counterclockwise during construction.
  std::size_t reoriented_count() const { return reoriented_; }

 private:
  void validate_and_orient();
  void build_boundary();
  void build_buckets();
  std::optional<Location> try_triangle(std::size_t t, const Point2& p) const;

  std::vector<Point2> nodes_;
  std::vector<Triangle> triangles_;
  std::vector<Edge> boundary_edges_;
  BoundingBox bbox_;
  std::size_t reoriented_ = 0;

  // uniform bucket grid over the bounding box; each cell lists (ascending) the
  // triangles whose slightly inflated bounding box overlaps it
  int bucket_nx_ = 0;
  int bucket_ny_ = 0;
  std::vector<std::vector<int>> buckets_;
};

// Plain-text mesh format: "K T", K lines "x y", T lines "i j k" (0-based), '#'
// starts a comment.
TriangularMesh parse_mesh(std::istream& in);
TriangularMesh load_mesh(const std::filesystem::path& path);
void write_mesh(std::ostream& out, const TriangularMesh& mesh);

// Signed shoelace area of a closed polygon given by node indices.
double polygon_area(const TriangularMesh& mesh, const std::vector<int>& loop);

// Region file: lines "region_id triangle_index". Returns the triangle sets of the
// regions 0..R-1 in id order; ids must be contiguous from 0.
std::vector<std::vector<int>> parse_regions(std::istream& in);
std::vector<std::vector<int>> load_regions(const std::filesystem::path& path);

}  // namespace gsr
