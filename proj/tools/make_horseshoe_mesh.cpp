// Writes the structured horseshoe triangulation and its areal partition.
//
// The tube (arms and bend) is a grid of 9 nodes across by 77 columns along the
// centerline; each cap is a polar grid on the half disk. Regions are blocks of
// 2 x 2 tube cells (4 along by 2 across in the bend) plus two halves per cap,
// 140 in all.

#include "gsr/horseshoe.hpp"
#include "gsr/mesh.hpp"
#include "gsr/text.hpp"

#include <cmath>
#include <iostream>
#include <map>
#include <numbers>
#include <sstream>
#include <utility>

namespace {

struct Builder {
  std::vector<gsr::Point2> nodes;
  std::map<std::pair<long long, long long>, int> index;
  std::vector<gsr::Triangle> triangles;
  std::vector<int> region_of;

  int node(double x, double y) {
    const auto key = std::make_pair(std::llround(x * 1e9), std::llround(y * 1e9));
    const auto it = index.find(key);
    if (it != index.end()) return it->second;
    nodes.push_back({x, y});
    const int id = static_cast<int>(nodes.size()) - 1;
    index.emplace(key, id);
    return id;
  }

  void triangle(int a, int b, int c, int region) {
    const auto& p = nodes[static_cast<std::size_t>(a)];
    const auto& q = nodes[static_cast<std::size_t>(b)];
    const auto& s = nodes[static_cast<std::size_t>(c)];
    const double cross = (q.x - p.x) * (s.y - p.y) - (s.x - p.x) * (q.y - p.y);
    if (cross < 0.0) std::swap(b, c);
    triangles.push_back({a, b, c});
    region_of.push_back(region);
  }
};

constexpr int kAcross = 8;      // tube cells across
constexpr int kArm = 30;        // cells along each arm
constexpr int kBend = 16;       // cells along the bend
constexpr int kCapRings = 4;
constexpr int kCapSegments = 12;

gsr::Point2 tube_point(const gsr::HorseshoeSpec& spec, int column, int k) {
  const double half = spec.r - spec.r0;
  const double d = -half + 2.0 * half * k / kAcross;
  const double rho = spec.r + d;
  if (column <= kArm) return {3.0 - 3.0 * column / kArm, rho};
  if (column <= kArm + kBend) {
    const double phi = std::numbers::pi / 2.0 + std::numbers::pi * (column - kArm) / kBend;
    return {rho * std::cos(phi), rho * std::sin(phi)};
  }
  return {3.0 * (column - kArm - kBend) / kArm, -rho};
}

int along_block(int cell) {
  if (cell < kArm) return cell / 2;
  if (cell < kArm + kBend) return kArm / 2 + (cell - kArm) / 4;
  return kArm / 2 + kBend / 4 + (cell - kArm - kBend) / 2;
}

void add_cap(Builder& b, const gsr::HorseshoeSpec& spec, double cy, int first_region) {
  const double half = spec.r - spec.r0;
  const int center = b.node(3.0, cy);
  std::vector<std::vector<int>> ring(kCapRings + 1);
  for (int k = 1; k <= kCapRings; ++k) {
    const double rho = half * k / kCapRings;
    for (int j = 0; j <= kCapSegments; ++j) {
      const double phi = -std::numbers::pi / 2.0 + std::numbers::pi * j / kCapSegments;
      const double x = j == 0 || j == kCapSegments ? 3.0 : 3.0 + rho * std::cos(phi);
      const double y = j == 0 ? cy - rho : j == kCapSegments ? cy + rho : cy + rho * std::sin(phi);
      ring[static_cast<std::size_t>(k)].push_back(b.node(x, y));
    }
  }
  for (int j = 0; j < kCapSegments; ++j) {
    const int region = first_region + (2 * j < kCapSegments ? 0 : 1);
    const auto& r1 = ring[1];
    b.triangle(center, r1[static_cast<std::size_t>(j)], r1[static_cast<std::size_t>(j + 1)], region);
    for (int k = 1; k < kCapRings; ++k) {
      const auto& in = ring[static_cast<std::size_t>(k)];
      const auto& out = ring[static_cast<std::size_t>(k + 1)];
      const auto J = static_cast<std::size_t>(j);
      b.triangle(in[J], out[J], out[J + 1], region);
      b.triangle(in[J], out[J + 1], in[J + 1], region);
    }
  }
}

}  // namespace

int main(int argc, char** argv) {
  const std::filesystem::path dir = argc > 1 ? argv[1] : GSRPDE_DATA_DIR;
  const gsr::HorseshoeSpec spec;
  Builder b;

  const int columns = 2 * kArm + kBend + 1;
  std::vector<std::vector<int>> grid(static_cast<std::size_t>(columns));
  for (int c = 0; c < columns; ++c) {
    for (int k = 0; k <= kAcross; ++k) {
      const auto p = tube_point(spec, c, k);
      grid[static_cast<std::size_t>(c)].push_back(b.node(p.x, p.y));
    }
  }
  const int blocks_across = kAcross / 2;
  for (int c = 0; c + 1 < columns; ++c) {
    const auto& g0 = grid[static_cast<std::size_t>(c)];
    const auto& g1 = grid[static_cast<std::size_t>(c + 1)];
    for (int k = 0; k < kAcross; ++k) {
      const int region = along_block(c) * blocks_across + k / 2;
      const auto K = static_cast<std::size_t>(k);
      b.triangle(g0[K], g1[K], g1[K + 1], region);
      b.triangle(g0[K], g1[K + 1], g0[K + 1], region);
    }
  }
  const int tube_regions = (along_block(2 * kArm + kBend - 1) + 1) * blocks_across;
  add_cap(b, spec, spec.r, tube_regions);
  add_cap(b, spec, -spec.r, tube_regions + 2);

  const gsr::TriangularMesh mesh(b.nodes, b.triangles);

  std::ostringstream mesh_text;
  mesh_text << "# horseshoe r = 0.5, r0 = 0.1\n";
  gsr::write_mesh(mesh_text, mesh);
  gsr::text::write_file_atomic(dir / "horseshoe.mesh", mesh_text.str());

  std::ostringstream regions;
  regions << "# region_id triangle_index\n";
  for (std::size_t t = 0; t < b.region_of.size(); ++t) regions << b.region_of[t] << ' ' << t << '\n';
  gsr::text::write_file_atomic(dir / "horseshoe.regions", regions.str());

  gsr::text::write_file_atomic(dir / "unit_triangle.mesh", "3 1\n0 0\n1 0\n0 1\n0 1 2\n");

  std::cout << "nodes " << mesh.num_nodes() << ", triangles " << mesh.num_triangles() << ", regions "
            << tube_regions + 4 << ", area " << mesh.total_area() << '\n';
  return 0;
}
