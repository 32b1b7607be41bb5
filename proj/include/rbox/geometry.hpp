#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>

#include <Eigen/Core>

namespace rbox {

using Vec2 = Eigen::Vector2d;

// Side lengths at or below this floor are rejected as degenerate.
inline constexpr double kMinSideLen = 1e-12;

// Negative distance values closer to zero than this are round-off and get
// clamped to 0; anything more negative is a genuine bug and is left visible.
inline constexpr double kNegativeDistanceTol = 1e-12;

struct SizeDegenerateError : std::domain_error {
  using std::domain_error::domain_error;
};

// Oriented rectangle: center (x, y), full side lengths w and h, rotation
// theta in radians measured counter-clockwise from the x axis to the w side.
// theta lives in (-pi/2, pi/2]; the parameterization is pi-periodic, and
// (w, h, theta) describes the same rectangle as (h, w, theta + pi/2).
struct RotatedBox {
  double x = 0;
  double y = 0;
  double w = 1;
  double h = 1;
  double theta = 0;
};

// Wraps an angle into (-pi/2, pi/2] modulo pi.
double normalize_angle(double theta);

// Validates sides and normalizes the angle. Throws SizeDegenerateError when
// w or h <= kMinSideLen, std::invalid_argument on non-finite input.
RotatedBox make_box(double x, double y, double w, double h, double theta);

// Scales x, y, w, h by k (theta unchanged).
RotatedBox scaled(const RotatedBox& b, double k);

// Convex quadrilateral, counter-clockwise vertex order.
struct ConvexQuad {
  std::array<Vec2, 4> v;
};

ConvexQuad box_to_quad(const RotatedBox& b);

// Shoelace area; non-negative for counter-clockwise quads.
double quad_area(const ConvexQuad& q);

// Area of the intersection via Sutherland-Hodgman clipping. Points within
// 1e-12 of a clip edge count as inside; the result is bit-identical under
// argument swap.
double quad_intersection_area(const ConvexQuad& a, const ConvexQuad& b);

// Intersection over union of the two rectangles, clamped to [0, 1].
double rotated_iou(const RotatedBox& a, const RotatedBox& b);

// Point-sampling IoU estimate over the joint bounding rectangle, with the
// delta-method standard error. Independent cross-check for rotated_iou.
struct SampledIou {
  double value = 0;
  double se = 0;
  std::int64_t union_hits = 0;
};

SampledIou sampled_iou(const RotatedBox& a, const RotatedBox& b,
                       std::int64_t samples, std::uint64_t seed);

}  // namespace rbox
