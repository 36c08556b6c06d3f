#include "gsr/io.hpp"
#include "testing.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <fstream>

namespace gsr {
namespace {

TEST(DataCsv, PointData) {
  const auto d = parse_data_csv("y,x1,x2,px,py\n1.5,0.1,0.2,0.3,0.4\n\n2,1,2,3,4\n");
  ASSERT_EQ(d.obs.y.size(), 2);
  EXPECT_FALSE(d.areal());
  EXPECT_EQ(d.obs.X.cols(), 2);
  EXPECT_EQ(d.obs.X(1, 1), 2.0);
  EXPECT_EQ(d.points[0].y, 0.4);
  EXPECT_EQ(d.obs.covariate_names, (std::vector<std::string>{"x1", "x2"}));
  EXPECT_FALSE(d.f_true);
}

TEST(DataCsv, ArealDataAnyColumnOrder) {
  const auto d = parse_data_csv("region_id,f_true,y\n0,1.25,3\n1,-2,7\n");
  EXPECT_TRUE(d.areal());
  EXPECT_EQ(d.region_ids, (std::vector<int>{0, 1}));
  EXPECT_EQ(d.obs.X.cols(), 0);
  ASSERT_TRUE(d.f_true);
  EXPECT_EQ((*d.f_true)[1], -2.0);
}

TEST(DataCsv, RoundTrip) {
  DataTable d;
  d.obs.y = Vector::LinSpaced(4, 0.1, 0.7);
  d.obs.X = Matrix::Random(4, 2);
  d.points = {{0.1, 1.0 / 3.0}, {2, 3}, {4, 5}, {6, 7}};
  d.f_true = Vector::Constant(4, std::acos(-1.0));
  const auto back = parse_data_csv(data_to_csv(d));
  EXPECT_EQ(back.obs.y, d.obs.y);
  EXPECT_EQ(back.obs.X, d.obs.X);
  EXPECT_EQ(back.points, d.points);
  EXPECT_EQ(*back.f_true, *d.f_true);
}

TEST(DataCsv, Errors) {
  EXPECT_THROW(parse_data_csv(""), ParseError);
  EXPECT_THROW(parse_data_csv("x1,px,py\n1,2,3\n"), ParseError);
  EXPECT_THROW(parse_data_csv("y,x2,px,py\n1,2,3,4\n"), ParseError);
  EXPECT_THROW(parse_data_csv("y,px\n1,2\n"), ParseError);
  EXPECT_THROW(parse_data_csv("y\n1\n"), ParseError);
  EXPECT_THROW(parse_data_csv("y,px,py,z\n1,2,3,4\n"), ParseError);
  EXPECT_THROW(parse_data_csv("y,y,px,py\n1,1,2,3\n"), ParseError);
  EXPECT_THROW(parse_data_csv("y,px,py\n"), ParseError);
  EXPECT_THROW(parse_data_csv("y,region_id\n1,-1\n"), ParseError);
  try {
    parse_data_csv("y,px,py\n1,2,3\n1,abc,3\n");
    ADD_FAILURE();
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos);
  }
  EXPECT_THROW(parse_data_csv("y,px,py\n1,2\n"), ParseError);
}

TEST(PointsCsv, Columns) {
  const auto dir = testing::temp_dir("points");
  {
    std::ofstream(dir / "a.csv") << "px,py\n1,2\n3,4\n";
    std::ofstream(dir / "b.csv") << "id,x,y\n0,1,2\n";
    std::ofstream(dir / "c.csv") << "u,v\n1,2\n";
  }
  EXPECT_EQ(read_points_csv(dir / "a.csv").size(), 2u);
  const auto b = read_points_csv(dir / "b.csv");
  ASSERT_EQ(b.size(), 1u);
  EXPECT_EQ(b[0].x, 1.0);
  EXPECT_EQ(b[0].y, 2.0);
  EXPECT_THROW(read_points_csv(dir / "c.csv"), ParseError);
}

TEST(FitJson, RoundTrip) {
  FitRecord r;
  r.family = "gamma";
  r.lambda = 0.123456789012345;
  r.beta_names = {"x1", "x2"};
  r.beta = Vector(2);
  r.beta << -0.4, 1.0 / 3.0;
  r.f_coeffs = Vector::LinSpaced(5, -1.0, 1.0 / 7.0);
  r.hat_trace = 12.5;
  r.phi_hat = 0.1;
  r.gcv = 3.25;
  r.iterations = 5;
  r.converged = true;
  r.mesh_checksum = "abcdef";
  const auto back = parse_record_json(record_to_json(r));
  EXPECT_EQ(back.family, r.family);
  EXPECT_EQ(back.lambda, r.lambda);
  EXPECT_EQ(back.beta, r.beta);
  EXPECT_EQ(back.beta_names, r.beta_names);
  EXPECT_EQ(back.f_coeffs, r.f_coeffs);
  EXPECT_EQ(*back.phi_hat, 0.1);
  EXPECT_EQ(back.gcv, 3.25);
  EXPECT_EQ(back.iterations, 5);
  EXPECT_TRUE(back.converged);
  EXPECT_EQ(back.mesh_checksum, "abcdef");

  r.phi_hat.reset();
  r.gcv = std::numeric_limits<double>::infinity();
  const auto json = record_to_json(r);
  EXPECT_NE(json.find("\"gcv\": null"), std::string::npos);
  const auto again = parse_record_json(json);
  EXPECT_FALSE(again.phi_hat);
  EXPECT_TRUE(std::isinf(again.gcv));
}

TEST(FitJson, Malformed) {
  EXPECT_THROW(parse_record_json("{"), ParseError);
  EXPECT_THROW(parse_record_json("{\"family\": \"gamma\"}"), ParseError);
  EXPECT_THROW(parse_record_json("[]"), ParseError);
}

}  // namespace
}  // namespace gsr
