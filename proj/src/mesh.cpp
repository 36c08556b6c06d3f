#include "gsr/mesh.hpp"

#include "gsr/text.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <sstream>

namespace gsr {

namespace {

constexpr double kBaryTol = 1e-12;
constexpr double kDuplicateTol = 1e-12;

double cross(const Point2& o, const Point2& a, const Point2& b) {
  return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

std::string edge_str(int a, int b) {
  return "(" + std::to_string(a) + "," + std::to_string(b) + ")";
}

}  // namespace

double BoundingBox::span() const { return std::max(hi.x - lo.x, hi.y - lo.y); }

TriangularMesh::TriangularMesh(std::vector<Point2> nodes, std::vector<Triangle> triangles)
    : nodes_(std::move(nodes)), triangles_(std::move(triangles)) {
  validate_and_orient();
  build_boundary();
  build_buckets();
}

void TriangularMesh::validate_and_orient() {
  if (nodes_.size() < 3) throw ValidationError("mesh needs at least 3 nodes");
  if (triangles_.empty()) throw ValidationError("mesh has no triangles");

  bbox_.lo = bbox_.hi = nodes_.front();
  for (const auto& p : nodes_) {
    if (!std::isfinite(p.x) || !std::isfinite(p.y)) throw ValidationError("non-finite node coordinate");
    bbox_.lo.x = std::min(bbox_.lo.x, p.x);
    bbox_.lo.y = std::min(bbox_.lo.y, p.y);
    bbox_.hi.x = std::max(bbox_.hi.x, p.x);
    bbox_.hi.y = std::max(bbox_.hi.y, p.y);
  }
  const double span = bbox_.span();
  if (!(span > 0.0)) throw ValidationError("mesh nodes are all coincident");

  const int K = static_cast<int>(nodes_.size());
  std::vector<char> used(nodes_.size(), 0);
  for (std::size_t t = 0; t < triangles_.size(); ++t) {
    auto& tri = triangles_[t];
    for (int v : tri) {
      if (v < 0 || v >= K) throw ValidationError("index out of range, triangle " + std::to_string(t));
    }
    if (tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2]) {
      throw ValidationError("degenerate triangle " + std::to_string(t) + " (repeated vertex)");
    }
    const double twice_area = cross(nodes_[tri[0]], nodes_[tri[1]], nodes_[tri[2]]);
    if (std::abs(twice_area) <= 1e-14 * span * span) {
      throw ValidationError("degenerate triangle " + std::to_string(t) + " (zero area)");
    }
    if (twice_area < 0.0) {
      std::swap(tri[1], tri[2]);
      ++reoriented_;
    }
    for (int v : tri) used[v] = 1;
  }
  for (int k = 0; k < K; ++k) {
    if (!used[k]) throw ValidationError("node " + std::to_string(k) + " is not referenced by any triangle");
  }

  // duplicate nodes: sweep in x order
  std::vector<int> order(nodes_.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    return nodes_[a].x < nodes_[b].x || (nodes_[a].x == nodes_[b].x && nodes_[a].y < nodes_[b].y);
  });
  const double dup_tol = kDuplicateTol * span;
  for (std::size_t i = 0; i < order.size(); ++i) {
    const auto& p = nodes_[order[i]];
    for (std::size_t j = i + 1; j < order.size() && nodes_[order[j]].x - p.x <= dup_tol; ++j) {
      const auto& q = nodes_[order[j]];
      if (std::hypot(q.x - p.x, q.y - p.y) <= dup_tol) {
        const int a = std::min(order[i], order[j]);
        const int b = std::max(order[i], order[j]);
        throw ValidationError("duplicate nodes " + std::to_string(a) + " and " + std::to_string(b));
      }
    }
  }
}

void TriangularMesh::build_boundary() {
  struct HalfEdge {
    int lo, hi, tri;
    bool forward;
  };
  std::vector<HalfEdge> edges;
  edges.reserve(3 * triangles_.size());
  for (std::size_t t = 0; t < triangles_.size(); ++t) {
    const auto& tri = triangles_[t];
    for (int e = 0; e < 3; ++e) {
      const int a = tri[e];
      const int b = tri[(e + 1) % 3];
      edges.push_back({std::min(a, b), std::max(a, b), static_cast<int>(t), a < b});
    }
  }
  std::sort(edges.begin(), edges.end(), [](const HalfEdge& x, const HalfEdge& y) {
    return std::tie(x.lo, x.hi, x.tri) < std::tie(y.lo, y.hi, y.tri);
  });

  boundary_edges_.clear();
  for (std::size_t i = 0; i < edges.size();) {
    std::size_t j = i;
    while (j < edges.size() && edges[j].lo == edges[i].lo && edges[j].hi == edges[i].hi) ++j;
    const std::size_t count = j - i;
    if (count > 2) {
      throw ValidationError("non-conforming mesh: edge " + edge_str(edges[i].lo, edges[i].hi) +
                            " shared by more than two triangles");
    }
    if (count == 2 && edges[i].forward == edges[i + 1].forward) {
      throw ValidationError("non-conforming mesh: triangles " + std::to_string(edges[i].tri) + " and " +
                            std::to_string(edges[i + 1].tri) + " overlap across edge " +
                            edge_str(edges[i].lo, edges[i].hi));
    }
    if (count == 1) {
      const auto& e = edges[i];
      boundary_edges_.push_back(e.forward ? Edge{e.lo, e.hi} : Edge{e.hi, e.lo});
    }
    i = j;
  }

  // a node strictly inside a boundary edge is a hanging node: the edge is shared
  // only partially with the neighbouring triangles
  const double tol = 1e-10 * bbox_.span();
  for (const auto& e : boundary_edges_) {
    const Point2& a = nodes_[e[0]];
    const Point2& b = nodes_[e[1]];
    const double len2 = (b.x - a.x) * (b.x - a.x) + (b.y - a.y) * (b.y - a.y);
    const double len = std::sqrt(len2);
    for (std::size_t k = 0; k < nodes_.size(); ++k) {
      if (static_cast<int>(k) == e[0] || static_cast<int>(k) == e[1]) continue;
      const Point2& p = nodes_[k];
      if (p.x < std::min(a.x, b.x) - tol || p.x > std::max(a.x, b.x) + tol) continue;
      if (p.y < std::min(a.y, b.y) - tol || p.y > std::max(a.y, b.y) + tol) continue;
      const double s = ((p.x - a.x) * (b.x - a.x) + (p.y - a.y) * (b.y - a.y)) / len2;
      if (s <= 0.0 || s >= 1.0) continue;
      if (std::abs(cross(a, b, p)) / len <= tol) {
        throw ValidationError("non-conforming mesh: node " + std::to_string(k) + " lies on edge " +
                              edge_str(e[0], e[1]));
      }
    }
  }
}

void TriangularMesh::build_buckets() {
  const std::size_t T = triangles_.size();
  const double w = bbox_.hi.x - bbox_.lo.x;
  const double h = bbox_.hi.y - bbox_.lo.y;
  if (T < 32) {
    bucket_nx_ = bucket_ny_ = 0;
    return;
  }
  const double cells = static_cast<double>(T);
  const double aspect = (h > 0.0) ? w / h : 1.0;
  bucket_nx_ = std::clamp(static_cast<int>(std::lround(std::sqrt(cells * aspect))), 1, 1024);
  bucket_ny_ = std::clamp(static_cast<int>(std::lround(cells / bucket_nx_)), 1, 1024);
  buckets_.assign(static_cast<std::size_t>(bucket_nx_) * bucket_ny_, {});
  const double pad = 1e-9 * bbox_.span();
  const auto cell_x = [&](double x) {
    return std::clamp(static_cast<int>(std::floor((x - bbox_.lo.x) / w * bucket_nx_)), 0, bucket_nx_ - 1);
  };
  const auto cell_y = [&](double y) {
    if (!(h > 0.0)) return 0;
    return std::clamp(static_cast<int>(std::floor((y - bbox_.lo.y) / h * bucket_ny_)), 0, bucket_ny_ - 1);
  };
  for (std::size_t t = 0; t < T; ++t) {
    const auto& tri = triangles_[t];
    double x0 = nodes_[tri[0]].x, x1 = x0, y0 = nodes_[tri[0]].y, y1 = y0;
    for (int v : tri) {
      x0 = std::min(x0, nodes_[v].x);
      x1 = std::max(x1, nodes_[v].x);
      y0 = std::min(y0, nodes_[v].y);
      y1 = std::max(y1, nodes_[v].y);
    }
    for (int iy = cell_y(y0 - pad); iy <= cell_y(y1 + pad); ++iy) {
      for (int ix = cell_x(x0 - pad); ix <= cell_x(x1 + pad); ++ix) {
        buckets_[static_cast<std::size_t>(iy) * bucket_nx_ + ix].push_back(static_cast<int>(t));
      }
    }
  }
}

std::vector<std::vector<int>> TriangularMesh::boundary_loops() const {
  std::map<int, std::vector<int>> next;
  for (const auto& e : boundary_edges_) next[e[0]].push_back(e[1]);
  std::vector<std::vector<int>> loops;
  std::map<int, std::size_t> cursor;
  // consume edges greedily; pinch points (a node visited by two loops) are handled by
  // taking outgoing edges in insertion order
  std::size_t remaining = boundary_edges_.size();
  while (remaining > 0) {
    int start = -1;
    for (auto& [node, outs] : next) {
      if (cursor[node] < outs.size()) {
        start = node;
        break;
      }
    }
    if (start < 0) break;
    std::vector<int> loop;
    int cur = start;
    do {
      loop.push_back(cur);
      auto& idx = cursor[cur];
      auto it = next.find(cur);
      if (it == next.end() || idx >= it->second.size()) {
        throw ValidationError("boundary is not a union of closed loops at node " + std::to_string(cur));
      }
      const int nxt = it->second[idx++];
      --remaining;
      cur = nxt;
    } while (cur != start);
    loops.push_back(std::move(loop));
  }
  return loops;
}

double TriangularMesh::triangle_area(std::size_t t) const {
  if (t >= triangles_.size()) {
    throw ValidationError("triangle index " + std::to_string(t) + " out of range");
  }
  const auto& tri = triangles_[t];
  return 0.5 * cross(nodes_[tri[0]], nodes_[tri[1]], nodes_[tri[2]]);
}

double TriangularMesh::total_area() const {
  double sum = 0.0;
  for (std::size_t t = 0; t < triangles_.size(); ++t) sum += triangle_area(t);
  return sum;
}

std::optional<Location> TriangularMesh::try_triangle(std::size_t t, const Point2& p) const {
  const auto& tri = triangles_[t];
  const Point2& a = nodes_[tri[0]];
  const Point2& b = nodes_[tri[1]];
  const Point2& c = nodes_[tri[2]];
  const double d = cross(a, b, c);
  const double la = cross(p, b, c) / d;
  const double lb = cross(a, p, c) / d;
  const double lc = cross(a, b, p) / d;
  if (la < -kBaryTol || lb < -kBaryTol || lc < -kBaryTol) return std::nullopt;
  std::array<double, 3> bary{std::clamp(la, 0.0, 1.0), std::clamp(lb, 0.0, 1.0), std::clamp(lc, 0.0, 1.0)};
  const double s = bary[0] + bary[1] + bary[2];
  for (auto& v : bary) v /= s;
  return Location{static_cast<int>(t), bary};
}

std::optional<Location> TriangularMesh::locate_brute_force(const Point2& p) const {
  for (std::size_t t = 0; t < triangles_.size(); ++t) {
    if (auto loc = try_triangle(t, p)) return loc;
  }
  return std::nullopt;
}

std::optional<Location> TriangularMesh::locate(const Point2& p) const {
  if (bucket_nx_ == 0) return locate_brute_force(p);
  const double pad = 1e-9 * bbox_.span();
  if (p.x < bbox_.lo.x - pad || p.x > bbox_.hi.x + pad || p.y < bbox_.lo.y - pad || p.y > bbox_.hi.y + pad) {
    return std::nullopt;
  }
  const double w = bbox_.hi.x - bbox_.lo.x;
  const double h = bbox_.hi.y - bbox_.lo.y;
  const int ix = std::clamp(static_cast<int>(std::floor((p.x - bbox_.lo.x) / w * bucket_nx_)), 0, bucket_nx_ - 1);
  const int iy = (h > 0.0)
                     ? std::clamp(static_cast<int>(std::floor((p.y - bbox_.lo.y) / h * bucket_ny_)), 0, bucket_ny_ - 1)
                     : 0;
  for (int t : buckets_[static_cast<std::size_t>(iy) * bucket_nx_ + ix]) {
    if (auto loc = try_triangle(static_cast<std::size_t>(t), p)) return loc;
  }
  return std::nullopt;
}

std::string TriangularMesh::checksum() const {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  const auto feed = [&](const std::string& s) {
    for (unsigned char c : s) {
      hash ^= c;
      hash *= 0x100000001b3ULL;
    }
  };
  feed(std::to_string(nodes_.size()) + " " + std::to_string(triangles_.size()) + "\n");
  for (const auto& p : nodes_) feed(text::format_double(p.x) + " " + text::format_double(p.y) + "\n");
  for (const auto& t : triangles_) {
    feed(std::to_string(t[0]) + " " + std::to_string(t[1]) + " " + std::to_string(t[2]) + "\n");
  }
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = digits[hash & 0xF];
    hash >>= 4;
  }
  return out;
}

double polygon_area(const TriangularMesh& mesh, const std::vector<int>& loop) {
  double sum = 0.0;
  for (std::size_t i = 0; i < loop.size(); ++i) {
    const auto& a = mesh.node(static_cast<std::size_t>(loop[i]));
    const auto& b = mesh.node(static_cast<std::size_t>(loop[(i + 1) % loop.size()]));
    sum += a.x * b.y - b.x * a.y;
  }
  return 0.5 * sum;
}

TriangularMesh parse_mesh(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  long long K = -1, T = -1;
  std::vector<Point2> nodes;
  std::vector<Triangle> tris;
  while (std::getline(in, line)) {
    ++line_no;
    const auto content = text::strip_comment(line);
    if (content.empty()) continue;
    const auto tokens = text::split_whitespace(content);
    const std::string ctx = "mesh line " + std::to_string(line_no);
    if (K < 0) {
      if (tokens.size() != 2) throw ParseError(ctx + ": header must be \"K T\"");
      K = text::parse_int(tokens[0], ctx);
      T = text::parse_int(tokens[1], ctx);
      if (K < 0 || T < 0) throw ParseError(ctx + ": negative counts in header");
      nodes.reserve(static_cast<std::size_t>(K));
      tris.reserve(static_cast<std::size_t>(T));
    } else if (static_cast<long long>(nodes.size()) < K) {
      if (tokens.size() != 2) throw ParseError(ctx + ": node line must be \"x y\"");
      nodes.push_back({text::parse_double(tokens[0], ctx), text::parse_double(tokens[1], ctx)});
    } else if (static_cast<long long>(tris.size()) < T) {
      if (tokens.size() != 3) throw ParseError(ctx + ": triangle line must be \"i j k\"");
      Triangle t{};
      for (int i = 0; i < 3; ++i) {
        const long long v = text::parse_int(tokens[static_cast<std::size_t>(i)], ctx);
        if (v < 0 || v > std::numeric_limits<int>::max()) {
          throw ValidationError("index out of range, triangle " + std::to_string(tris.size()));
        }
        t[static_cast<std::size_t>(i)] = static_cast<int>(v);
      }
      tris.push_back(t);
    } else {
      throw ParseError(ctx + ": unexpected content after " + std::to_string(K) + " nodes and " +
                       std::to_string(T) + " triangles");
    }
  }
  if (K < 0) throw ParseError("mesh: missing header");
  if (static_cast<long long>(nodes.size()) != K || static_cast<long long>(tris.size()) != T) {
    throw ParseError("mesh: expected " + std::to_string(K) + " nodes and " + std::to_string(T) +
                     " triangles, found " + std::to_string(nodes.size()) + " and " + std::to_string(tris.size()));
  }
  return TriangularMesh(std::move(nodes), std::move(tris));
}

TriangularMesh load_mesh(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open mesh file " + path.string());
  return parse_mesh(in);
}

void write_mesh(std::ostream& out, const TriangularMesh& mesh) {
  out << mesh.num_nodes() << ' ' << mesh.num_triangles() << '\n';
  for (const auto& p : mesh.nodes()) out << text::format_double(p.x) << ' ' << text::format_double(p.y) << '\n';
  for (const auto& t : mesh.triangles()) out << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
}

std::vector<std::vector<int>> parse_regions(std::istream& in) {
  std::map<long long, std::vector<int>> regions;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto content = text::strip_comment(line);
    if (content.empty()) continue;
    const auto tokens = text::split_whitespace(content);
    const std::string ctx = "region line " + std::to_string(line_no);
    if (tokens.size() != 2) throw ParseError(ctx + ": expected \"region_id triangle_index\"");
    const long long id = text::parse_int(tokens[0], ctx);
    const long long tri = text::parse_int(tokens[1], ctx);
    if (id < 0 || tri < 0 || tri > std::numeric_limits<int>::max()) {
      throw ParseError(ctx + ": ids must be non-negative");
    }
    regions[id].push_back(static_cast<int>(tri));
  }
  std::vector<std::vector<int>> out;
  out.reserve(regions.size());
  long long expected = 0;
  for (auto& [id, tris] : regions) {
    if (id != expected) throw ValidationError("region ids not contiguous: missing region " + std::to_string(expected));
    std::sort(tris.begin(), tris.end());
    if (std::adjacent_find(tris.begin(), tris.end()) != tris.end()) {
      throw ValidationError("region " + std::to_string(id) + " lists a triangle twice");
    }
    out.push_back(std::move(tris));
    ++expected;
  }
  return out;
}

std::vector<std::vector<int>> load_regions(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open region file " + path.string());
  return parse_regions(in);
}

}  // namespace gsr
