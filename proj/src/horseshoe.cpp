#include "gsr/horseshoe.hpp"

#include "gsr/text.hpp"

#include <cmath>
#include <numbers>

namespace gsr {

double HorseshoeSpec::q() const { return std::numbers::pi * r / 2.0; }

void HorseshoeSpec::validate() const {
  if (!(r0 > 0.0) || !(r0 < r) || !std::isfinite(r)) {
    throw ValidationError("horseshoe needs 0 < r0 < r, got r = " + text::format_double(r) +
                          ", r0 = " + text::format_double(r0));
  }
}

std::string_view part_name(HorseshoePart part) {
  switch (part) {
    case HorseshoePart::A: return "A";
    case HorseshoePart::B: return "B";
    case HorseshoePart::C: return "C";
    case HorseshoePart::UpperArm: return "upper-arm";
    case HorseshoePart::LowerArm: return "lower-arm";
    case HorseshoePart::Outside: return "outside";
  }
  return "outside";
}

HorseshoePart horseshoe_contains(const HorseshoeSpec& spec, const Point2& p) {
  const double r = spec.r;
  const double r0 = spec.r0;
  const double x = p.x;
  const double y = p.y;
  const double cap = (r - r0) * (r - r0);
  if (x > 3.0) {
    if ((x - 3.0) * (x - 3.0) + (y - r) * (y - r) < cap) return HorseshoePart::A;
    if ((x - 3.0) * (x - 3.0) + (y + r) * (y + r) < cap) return HorseshoePart::C;
    return HorseshoePart::Outside;
  }
  if (x >= 0.0) {
    if (y >= r0 && y <= 2.0 * r - r0) return HorseshoePart::UpperArm;
    if (y <= -r0 && y >= -2.0 * r + r0) return HorseshoePart::LowerArm;
    return HorseshoePart::Outside;
  }
  const double rho2 = x * x + y * y;
  if (rho2 >= r0 * r0 && rho2 <= (2.0 * r - r0) * (2.0 * r - r0)) return HorseshoePart::B;
  return HorseshoePart::Outside;
}

namespace {

// Along-tube coordinate a and signed distance d from the centerline; the areal
// field is a + d^2.
double areal_value(const HorseshoeSpec& spec, double x, double y, bool bend, bool upper) {
  const double r = spec.r;
  if (bend) {
    const double d = std::sqrt(x * x + y * y) - r;
    return -std::atan(y / x) * r + d * d;
  }
  if (upper) return spec.q() + x + (y - r) * (y - r);
  return -spec.q() - x + (y + r) * (y + r);
}

double finish(FieldVariant variant, double areal) {
  return variant == FieldVariant::Areal ? areal : -(areal + 10.0) / 8.0;
}

}  // namespace

double test_field(const HorseshoeSpec& spec, FieldVariant variant, const Point2& p) {
  switch (horseshoe_contains(spec, p)) {
    case HorseshoePart::A:
    case HorseshoePart::UpperArm: return finish(variant, areal_value(spec, p.x, p.y, false, true));
    case HorseshoePart::C:
    case HorseshoePart::LowerArm: return finish(variant, areal_value(spec, p.x, p.y, false, false));
    case HorseshoePart::B: return finish(variant, areal_value(spec, p.x, p.y, true, false));
    case HorseshoePart::Outside: break;
  }
  throw DomainError("test field evaluated outside the horseshoe at (" + text::format_double(p.x) + ", " +
                    text::format_double(p.y) + ")");
}

double test_field_extended(const HorseshoeSpec& spec, FieldVariant variant, const Point2& p) {
  return finish(variant, areal_value(spec, p.x, p.y, p.x < 0.0, p.y >= 0.0));
}

}  // namespace gsr
