#include "gsr/mesh.hpp"
#include "testing.hpp"

#include <gtest/gtest.h>

#include <random>
#include <sstream>

namespace gsr {
namespace {

template <class E, class F>
void expect_error(F&& f, const std::string& fragment) {
  try {
    f();
    ADD_FAILURE() << "no exception, expected one containing '" << fragment << "'";
  } catch (const E& e) {
    EXPECT_NE(std::string(e.what()).find(fragment), std::string::npos) << e.what();
  }
}

TriangularMesh parse(const std::string& s) {
  std::istringstream in(s);
  return parse_mesh(in);
}

TEST(Mesh, MinimalMesh) {
  const auto m = parse("3 1\n0 0\n1 0\n0 1\n0 1 2\n");
  EXPECT_EQ(m.num_nodes(), 3u);
  EXPECT_EQ(m.num_triangles(), 1u);
  EXPECT_DOUBLE_EQ(m.triangle_area(0), 0.5);
}

TEST(Mesh, CommentsAndBlankLines) {
  const auto m = parse("# a mesh\n3 1 # counts\n\n0 0\n2 0\n0 2 # last node\n0 1 2\n");
  EXPECT_DOUBLE_EQ(m.triangle_area(0), 2.0);
}

TEST(Mesh, IndexOutOfRange) {
  expect_error<ValidationError>([] { parse("3 1\n0 0\n1 0\n0 1\n0 1 99\n"); }, "index out of range, triangle 0");
}

TEST(Mesh, ClockwiseTriangleIsReoriented) {
  const auto m = parse("3 1\n0 0\n1 0\n0 1\n0 2 1\n");
  EXPECT_EQ(m.reoriented_count(), 1u);
  EXPECT_GT(m.triangle_area(0), 0.0);
  EXPECT_DOUBLE_EQ(m.triangle_area(0), 0.5);
}

TEST(Mesh, ParseErrorsCarryLineNumbers) {
  expect_error<ParseError>([] { parse("3 1\n0 0\n1 0 7\n0 1\n0 1 2\n"); }, "line 3");
  expect_error<ParseError>([] { parse("3 1\n0 0\n1 0\n0 1\n"); }, "expected 3 nodes and 1");
  expect_error<ParseError>([] { parse("3 1\n0 0\n1 zero\n0 1\n0 1 2\n"); }, "line 3");
  expect_error<ParseError>([] { parse(""); }, "missing header");
  expect_error<ParseError>([] { parse("3 1\n0 0\n1 0\n0 1\n0 1 2\n5 5\n"); }, "unexpected content");
}

TEST(Mesh, ValidationFailures) {
  expect_error<ValidationError>([] { parse("3 1\n0 0\n1 0\n2 0\n0 1 2\n"); }, "zero area");
  expect_error<ValidationError>([] { parse("3 1\n0 0\n1 0\n0 1\n0 1 1\n"); }, "repeated vertex");
  expect_error<ValidationError>([] { parse("4 1\n0 0\n1 0\n0 1\n5 5\n0 1 2\n"); }, "node 3 is not referenced");
  // node 3 duplicates node 1
  expect_error<ValidationError>([] { parse("4 2\n0 0\n1 0\n0 1\n1 0\n0 1 2\n3 0 2\n"); }, "duplicate nodes");
  // two triangles stacked on the same side of edge 0-1
  expect_error<ValidationError>([] { parse("4 2\n0 0\n1 0\n0 1\n0.2 0.5\n0 1 2\n0 1 3\n"); }, "overlap");
  // three triangles on one edge
  expect_error<ValidationError>(
      [] { parse("5 3\n0 0\n1 0\n0 1\n0 -1\n0.5 2\n0 1 2\n1 0 3\n0 1 4\n"); }, "more than two");
  // node 4 sits in the middle of edge 1-2 of the first triangle: hanging node
  expect_error<ValidationError>(
      [] { parse("5 3\n0 0\n2 0\n0 2\n2 2\n1 1\n0 1 2\n1 3 4\n4 3 2\n"); }, "lies on edge");
}

TEST(Mesh, TriangleAreaOutOfRange) {
  const auto m = parse("3 1\n0 0\n1 0\n0 1\n0 1 2\n");
  EXPECT_THROW(m.triangle_area(1), ValidationError);
}

TEST(Mesh, LocateVertexAndCentroid) {
  const auto m = testing::rectangle_mesh(4, 3, 2.0, 1.5);
  for (std::size_t t = 0; t < m->num_triangles(); ++t) {
    const auto& tri = m->triangle(t);
    const Point2 c{(m->node(tri[0]).x + m->node(tri[1]).x + m->node(tri[2]).x) / 3.0,
                   (m->node(tri[0]).y + m->node(tri[1]).y + m->node(tri[2]).y) / 3.0};
    const auto loc = m->locate(c);
    ASSERT_TRUE(loc);
    EXPECT_EQ(loc->triangle, static_cast<int>(t));
    for (double b : loc->bary) EXPECT_NEAR(b, 1.0 / 3.0, 1e-12);
  }
  const auto& t0 = m->triangle(0);
  const auto loc = m->locate(m->node(t0[0]));
  ASSERT_TRUE(loc);
  EXPECT_EQ(loc->triangle, 0);
  EXPECT_NEAR(loc->bary[0], 1.0, 1e-12);
  EXPECT_FALSE(m->locate({100.0, 100.0}));
  EXPECT_FALSE(m->locate({-1e-3, 0.5}));
}

TEST(Mesh, LocateMatchesBruteForceAndReconstructs) {
  const auto m = testing::l_shape_mesh(8);  // enough triangles for the bucket grid
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-0.2, 2.2);
  const double span = m->bounding_box().span();
  for (int i = 0; i < 5000; ++i) {
    const Point2 p{u(rng), u(rng)};
    const auto a = m->locate(p);
    const auto b = m->locate_brute_force(p);
    ASSERT_EQ(a.has_value(), b.has_value());
    if (!a) continue;
    EXPECT_EQ(a->triangle, b->triangle);
    const auto& tri = m->triangle(static_cast<std::size_t>(a->triangle));
    double x = 0.0, y = 0.0, s = 0.0;
    for (int k = 0; k < 3; ++k) {
      x += a->bary[k] * m->node(tri[k]).x;
      y += a->bary[k] * m->node(tri[k]).y;
      s += a->bary[k];
      EXPECT_GE(a->bary[k], 0.0);
    }
    EXPECT_NEAR(s, 1.0, 1e-14);
    EXPECT_NEAR(x, p.x, 1e-10 * span);
    EXPECT_NEAR(y, p.y, 1e-10 * span);
  }
  // grid points fall on shared edges and vertices: lowest index wins in both paths
  for (int i = 0; i <= 16; ++i) {
    for (int j = 0; j <= 16; ++j) {
      const Point2 p{i / 8.0, j / 8.0};
      const auto a = m->locate(p);
      const auto b = m->locate_brute_force(p);
      ASSERT_EQ(a.has_value(), b.has_value());
      if (a) {
        EXPECT_EQ(a->triangle, b->triangle);
      }
    }
  }
}

TEST(Mesh, LocateIsDeterministic) {
  const auto m = testing::rectangle_mesh(10, 10);
  const Point2 p{0.3, 0.7};
  const auto a = m->locate(p);
  const auto b = m->locate(p);
  ASSERT_TRUE(a && b);
  EXPECT_EQ(a->triangle, b->triangle);
  EXPECT_EQ(a->bary, b->bary);
}

TEST(Mesh, AreaMatchesShoelaceOfBoundaryLoops) {
  for (const auto& m : {testing::rectangle_mesh(5, 7, 3.0, 2.0), testing::l_shape_mesh(4)}) {
    const auto loops = m->boundary_loops();
    double shoelace = 0.0;
    for (const auto& loop : loops) shoelace += polygon_area(*m, loop);
    EXPECT_NEAR(m->total_area(), shoelace, 1e-10 * shoelace);
  }
  const auto m = testing::l_shape_mesh(4);
  EXPECT_NEAR(m->total_area(), 3.0, 1e-12);
  EXPECT_EQ(m->boundary_loops().size(), 1u);
}

TEST(Mesh, BoundaryOfMeshWithHole) {
  // 3 x 3 block of unit cells with the middle cell removed
  std::vector<Point2> nodes;
  for (int j = 0; j <= 3; ++j) {
    for (int i = 0; i <= 3; ++i) nodes.push_back({double(i), double(j)});
  }
  std::vector<Triangle> tris;
  for (int j = 0; j < 3; ++j) {
    for (int i = 0; i < 3; ++i) {
      if (i == 1 && j == 1) continue;
      const int a = j * 4 + i;
      tris.push_back({a, a + 1, a + 5});
      tris.push_back({a, a + 5, a + 4});
    }
  }
  const TriangularMesh m(nodes, tris);
  const auto loops = m.boundary_loops();
  ASSERT_EQ(loops.size(), 2u);
  double total = 0.0;
  int negative = 0;
  for (const auto& l : loops) {
    const double a = polygon_area(m, l);
    total += a;
    if (a < 0) ++negative;
  }
  EXPECT_EQ(negative, 1);
  EXPECT_NEAR(total, 8.0, 1e-12);
  EXPECT_NEAR(m.total_area(), 8.0, 1e-12);
}

TEST(Mesh, WriteParseRoundTripAndChecksum) {
  const auto m = testing::l_shape_mesh(3);
  std::ostringstream out;
  write_mesh(out, *m);
  const auto back = parse(out.str());
  EXPECT_EQ(back.num_nodes(), m->num_nodes());
  EXPECT_EQ(back.checksum(), m->checksum());
  EXPECT_EQ(m->checksum().size(), 16u);
  EXPECT_NE(m->checksum(), testing::l_shape_mesh(4)->checksum());
}

TEST(Mesh, Regions) {
  std::istringstream in("# id tri\n0 0\n1 2\n0 1\n1 3\n");
  const auto r = parse_regions(in);
  ASSERT_EQ(r.size(), 2u);
  EXPECT_EQ(r[0], (std::vector<int>{0, 1}));
  EXPECT_EQ(r[1], (std::vector<int>{2, 3}));
  std::istringstream gap("0 0\n2 1\n");
  EXPECT_THROW(parse_regions(gap), ValidationError);
  std::istringstream twice("0 0\n0 0\n");
  EXPECT_THROW(parse_regions(twice), ValidationError);
  std::istringstream bad("0 x\n");
  EXPECT_THROW(parse_regions(bad), ParseError);
}

}  // namespace
}  // namespace gsr
