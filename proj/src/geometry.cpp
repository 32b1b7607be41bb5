#include "rbox/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <vector>

namespace rbox {
namespace {

constexpr double kPi = std::numbers::pi;

// Clip-edge tolerance: points this close to an edge count as inside.
constexpr double kEdgeEps = 1e-12;

double polygon_area(const std::vector<Vec2>& poly) {
  if (poly.size() < 3) return 0.0;
  // Shoelace relative to the first vertex; the translation removes the
  // catastrophic cancellation that large absolute coordinates would cause.
  double twice = 0.0;
  const Vec2 o = poly[0];
  for (std::size_t i = 1; i + 1 < poly.size(); ++i) {
    const Vec2 a = poly[i] - o;
    const Vec2 b = poly[i + 1] - o;
    twice += a.x() * b.y() - a.y() * b.x();
  }
  return std::max(0.5 * twice, 0.0);
}

// Signed distance of p from the directed edge e0->e1; positive on the
// interior side of a counter-clockwise polygon.
double edge_distance(const Vec2& e0, const Vec2& e1, const Vec2& p) {
  const Vec2 d = e1 - e0;
  return (d.x() * (p.y() - e0.y()) - d.y() * (p.x() - e0.x())) / d.norm();
}

bool quad_less(const ConvexQuad& a, const ConvexQuad& b) {
  for (int i = 0; i < 4; ++i) {
    if (a.v[i].x() != b.v[i].x()) return a.v[i].x() < b.v[i].x();
    if (a.v[i].y() != b.v[i].y()) return a.v[i].y() < b.v[i].y();
  }
  return false;
}

// Vertex-wise containment test used by the sampler. Edge normals are
// precomputed so the hot loop is four dot products.
struct QuadTester {
  std::array<Vec2, 4> origin;
  std::array<Vec2, 4> normal;

  explicit QuadTester(const ConvexQuad& q) {
    for (int i = 0; i < 4; ++i) {
      const Vec2 d = q.v[(i + 1) & 3] - q.v[i];
      origin[i] = q.v[i];
      normal[i] = Vec2(-d.y(), d.x());
    }
  }

  bool contains(const Vec2& p) const {
    for (int i = 0; i < 4; ++i) {
      if (normal[i].dot(p - origin[i]) < 0.0) return false;
    }
    return true;
  }
};

}  // namespace

double normalize_angle(double theta) {
  if (!std::isfinite(theta)) {
    throw std::invalid_argument("angle is not finite");
  }
  double t = std::fmod(theta, kPi);
  if (t > kPi / 2) {
    t -= kPi;
  } else if (t <= -kPi / 2) {
    t += kPi;
  }
  return t;
}

RotatedBox make_box(double x, double y, double w, double h, double theta) {
  if (!std::isfinite(x) || !std::isfinite(y) || !std::isfinite(w) ||
      !std::isfinite(h)) {
    throw std::invalid_argument("box parameter is not finite");
  }
  if (!(w > kMinSideLen) || !(h > kMinSideLen)) {
    throw SizeDegenerateError("box side at or below 1e-12");
  }
  return RotatedBox{x, y, w, h, normalize_angle(theta)};
}

RotatedBox scaled(const RotatedBox& b, double k) {
  return RotatedBox{b.x * k, b.y * k, b.w * k, b.h * k, b.theta};
}

ConvexQuad box_to_quad(const RotatedBox& b) {
  const double c = std::cos(b.theta);
  const double s = std::sin(b.theta);
  const Vec2 ex(c, s);    // direction of the w side
  const Vec2 ey(-s, c);   // direction of the h side
  const Vec2 ctr(b.x, b.y);
  const Vec2 dw = 0.5 * b.w * ex;
  const Vec2 dh = 0.5 * b.h * ey;
  ConvexQuad q;
  q.v[0] = ctr - dw - dh;
  q.v[1] = ctr + dw - dh;
  q.v[2] = ctr + dw + dh;
  q.v[3] = ctr - dw + dh;
  return q;
}

double quad_area(const ConvexQuad& q) {
  return polygon_area({q.v.begin(), q.v.end()});
}

double quad_intersection_area(const ConvexQuad& a, const ConvexQuad& b) {
  // Canonical argument order makes the result symmetric down to the bit.
  const ConvexQuad& subject = quad_less(a, b) ? a : b;
  const ConvexQuad& clip = quad_less(a, b) ? b : a;

  std::vector<Vec2> poly(subject.v.begin(), subject.v.end());
  std::vector<Vec2> next;
  for (int e = 0; e < 4 && !poly.empty(); ++e) {
    const Vec2& e0 = clip.v[e];
    const Vec2& e1 = clip.v[(e + 1) & 3];
    next.clear();
    const std::size_t n = poly.size();
    for (std::size_t i = 0; i < n; ++i) {
      const Vec2& cur = poly[i];
      const Vec2& nxt = poly[(i + 1) % n];
      const double dc = edge_distance(e0, e1, cur);
      const double dn = edge_distance(e0, e1, nxt);
      const bool cur_in = dc >= -kEdgeEps;
      const bool nxt_in = dn >= -kEdgeEps;
      if (cur_in) next.push_back(cur);
      if (cur_in != nxt_in) {
        // dc and dn straddle the tolerance band, so dc != dn.
        const double t = dc / (dc - dn);
        next.push_back(cur + t * (nxt - cur));
      }
    }
    poly.swap(next);
  }
  return polygon_area(poly);
}

double rotated_iou(const RotatedBox& a, const RotatedBox& b) {
  const double inter = quad_intersection_area(box_to_quad(a), box_to_quad(b));
  const double uni = a.w * a.h + b.w * b.h - inter;
  return std::clamp(inter / uni, 0.0, 1.0);
}

SampledIou sampled_iou(const RotatedBox& a, const RotatedBox& b,
                       std::int64_t samples, std::uint64_t seed) {
  const ConvexQuad qa = box_to_quad(a);
  const ConvexQuad qb = box_to_quad(b);
  Vec2 lo = qa.v[0];
  Vec2 hi = qa.v[0];
  for (const ConvexQuad* q : {&qa, &qb}) {
    for (const Vec2& v : q->v) {
      lo = lo.cwiseMin(v);
      hi = hi.cwiseMax(v);
    }
  }

  const QuadTester ta(qa);
  const QuadTester tb(qb);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ux(lo.x(), hi.x());
  std::uniform_real_distribution<double> uy(lo.y(), hi.y());

  std::int64_t inter_hits = 0;
  std::int64_t union_hits = 0;
  for (std::int64_t i = 0; i < samples; ++i) {
    const Vec2 p(ux(rng), uy(rng));
    const bool ina = ta.contains(p);
    const bool inb = tb.contains(p);
    if (ina && inb) ++inter_hits;
    if (ina || inb) ++union_hits;
  }

  SampledIou out;
  out.union_hits = union_hits;
  if (union_hits == 0) {
    out.se = 1.0;
    return out;
  }
  const double r = static_cast<double>(inter_hits) / union_hits;
  out.value = r;
  // Ratio-of-counts variance by the delta method: Var(r) ~= r(1-r)/U.
  out.se = std::sqrt(std::max(r * (1.0 - r), 0.0) / union_hits);
  return out;
}

}  // namespace rbox
