#pragma once

#include "gsr/core.hpp"

#include <string_view>

namespace gsr {

// C-shaped benchmark domain: two straight arms of length 3 joined by an annular
// bend at x < 0 and closed by half-disk caps at x > 3. The tube has centerline at
// distance r from the origin and half width r - r0.
struct HorseshoeSpec {
  double r = 0.5;
  double r0 = 0.1;

  double q() const;  // pi r / 2
  void validate() const;
};

enum class HorseshoePart { A, B, C, UpperArm, LowerArm, Outside };

std::string_view part_name(HorseshoePart part);

HorseshoePart horseshoe_contains(const HorseshoeSpec& spec, const Point2& p);

enum class FieldVariant { Geostat, Areal };

// Piecewise test field; throws DomainError outside the horseshoe.
double test_field(const HorseshoeSpec& spec, FieldVariant variant, const Point2& p);

// The same closed form continued to any point (bend formula for x < 0, upper arm
// formula for y >= 0, lower arm formula otherwise). Used for quadrature over mesh
// triangles that stick slightly out of the curved boundary.
double test_field_extended(const HorseshoeSpec& spec, FieldVariant variant, const Point2& p);

}  // namespace gsr
