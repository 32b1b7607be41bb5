#include "rbox/gaussian.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace rbox {
namespace {

using Eigen::Matrix2d;
using Eigen::Vector2d;

constexpr double kPi = std::numbers::pi;

// Eigenvalues at or below this are degenerate (side length <= 1e-12 squared
// over 4, with slack).
constexpr double kMinEigenvalue = 1e-24;

double det2(const Matrix2d& m) {
  return m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0);
}

Matrix2d inverse2(const Matrix2d& m) {
  const double d = det2(m);
  Matrix2d inv;
  inv << m(1, 1), -m(0, 1), -m(1, 0), m(0, 0);
  return inv / d;
}

bool same_gaussian(const Gaussian2D& p, const Gaussian2D& t) {
  return p.mu == t.mu && p.sigma == t.sigma;
}

double clamp_distance(double d) {
  // Round-off just below zero snaps to zero; anything worse stays visible.
  return (d < 0.0 && d >= -kNegativeDistanceTol) ? 0.0 : d;
}

double js_divergence(const Gaussian2D& p, const Gaussian2D& t) {
  // The two-component mixture is moment-matched to a single Gaussian and the
  // two KL terms are taken against that in closed form.
  const Vector2d d = p.mu - t.mu;
  Gaussian2D mix;
  mix.mu = 0.5 * (p.mu + t.mu);
  mix.sigma = 0.5 * (p.sigma + t.sigma) + 0.25 * (d * d.transpose());
  return clamp_distance(0.5 * (kld_forward(p, mix) + kld_forward(t, mix)));
}

}  // namespace

const char* to_string(DistanceKind kind) {
  switch (kind) {
    case DistanceKind::KldForward: return "kld_forward";
    case DistanceKind::KldReverse: return "kld_reverse";
    case DistanceKind::KldMin: return "kld_min";
    case DistanceKind::KldMax: return "kld_max";
    case DistanceKind::Js: return "js";
    case DistanceKind::Jeffreys: return "jeffreys";
    case DistanceKind::Gwd: return "gwd";
  }
  return "unknown";
}

std::optional<DistanceKind> parse_distance_kind(std::string_view name) {
  for (DistanceKind k : kAllDistanceKinds) {
    if (name == to_string(k)) return k;
  }
  return std::nullopt;
}

Gaussian2D box_to_gaussian(const RotatedBox& b) {
  if (!(b.w > kMinSideLen) || !(b.h > kMinSideLen)) {
    throw SizeDegenerateError("box side at or below 1e-12");
  }
  const double c = std::cos(b.theta);
  const double s = std::sin(b.theta);
  const double a = 0.25 * b.w * b.w;   // eigenvalue along the w side
  const double d = 0.25 * b.h * b.h;   // eigenvalue along the h side
  Gaussian2D g;
  g.mu = Vector2d(b.x, b.y);
  if (b.w == b.h) {
    // a square is exactly isotropic; skipping the trig keeps sigma
    // bitwise identical across angles so identity checks hit exact zero
    g.sigma << a, 0.0, 0.0, a;
    return g;
  }
  const double off = (a - d) * c * s;
  g.sigma << a * c * c + d * s * s, off, off, a * s * s + d * c * c;
  return g;
}

RotatedBox gaussian_to_box(const Gaussian2D& g) {
  if (!g.mu.allFinite() || !g.sigma.allFinite()) {
    throw std::invalid_argument("gaussian has non-finite entries");
  }
  const double a = g.sigma(0, 0);
  const double c = g.sigma(1, 1);
  const double b01 = g.sigma(0, 1);
  const double b10 = g.sigma(1, 0);
  const double scale = std::max({1.0, std::abs(a), std::abs(c),
                                 std::abs(b01), std::abs(b10)});
  if (std::abs(b01 - b10) > 1e-12 * scale) {
    throw std::invalid_argument("sigma is not symmetric");
  }
  const double b = 0.5 * (b01 + b10);
  const double mean = 0.5 * (a + c);
  const double disc = std::hypot(0.5 * (a - c), b);
  const double lo = mean - disc;
  const double hi = mean + disc;
  if (!(lo > kMinEigenvalue)) {
    throw SizeDegenerateError("sigma eigenvalue at or below 1e-24");
  }
  // theta follows the larger eigenvalue; an isotropic sigma pins theta = 0.
  const double theta =
      disc == 0.0 ? 0.0 : normalize_angle(0.5 * std::atan2(2.0 * b, a - c));
  return RotatedBox{g.mu.x(), g.mu.y(), 2.0 * std::sqrt(hi),
                    2.0 * std::sqrt(lo), theta};
}

double kld_forward(const Gaussian2D& p, const Gaussian2D& t) {
  if (same_gaussian(p, t)) return 0.0;
  const Matrix2d ti = inverse2(t.sigma);
  const Vector2d d = p.mu - t.mu;
  const double quad = d.dot(ti * d);
  const double trace = (ti * p.sigma).trace();
  const double logdet = std::log(det2(t.sigma) / det2(p.sigma));
  return clamp_distance(0.5 * (quad + trace + logdet) - 1.0);
}

double kld_reverse(const Gaussian2D& p, const Gaussian2D& t) {
  return kld_forward(t, p);
}

double gwd(const Gaussian2D& p, const Gaussian2D& t) {
  if (same_gaussian(p, t)) return 0.0;
  const double center = (p.mu - t.mu).squaredNorm();
  const double root_dets = std::sqrt(std::max(det2(p.sigma) * det2(t.sigma), 0.0));
  // tr((Sp^1/2 St Sp^1/2)^1/2) collapses to a scalar square root in 2-d.
  const double cross =
      std::sqrt(std::max((p.sigma * t.sigma).trace() + 2.0 * root_dets, 0.0));
  const double d2 =
      center + p.sigma.trace() + t.sigma.trace() - 2.0 * cross;
  return std::sqrt(std::max(clamp_distance(d2), 0.0));
}

double distance(DistanceKind kind, const Gaussian2D& p, const Gaussian2D& t) {
  switch (kind) {
    case DistanceKind::KldForward:
      return kld_forward(p, t);
    case DistanceKind::KldReverse:
      return kld_reverse(p, t);
    case DistanceKind::KldMin:
      return std::min(kld_forward(p, t), kld_reverse(p, t));
    case DistanceKind::KldMax:
      return std::max(kld_forward(p, t), kld_reverse(p, t));
    case DistanceKind::Js:
      return js_divergence(p, t);
    case DistanceKind::Jeffreys:
      return kld_forward(p, t) + kld_reverse(p, t);
    case DistanceKind::Gwd:
      return gwd(p, t);
  }
  throw std::invalid_argument("unknown distance kind");
}

namespace {

// true when t is p re-encoded with the sides swapped and the angle turned a
// quarter turn, the alternate parameterization of the same rectangle
bool quarter_turn_alias(const RotatedBox& p, const RotatedBox& t) {
  if (p.w != t.h || p.h != t.w) return false;
  return p.theta == normalize_angle(t.theta + kPi / 2) ||
         p.theta == normalize_angle(t.theta - kPi / 2) ||
         t.theta == normalize_angle(p.theta + kPi / 2) ||
         t.theta == normalize_angle(p.theta - kPi / 2);
}

// true when the two parameter tuples denote the same rectangle exactly
bool same_box(const RotatedBox& p, const RotatedBox& t) {
  if (p.x != t.x || p.y != t.y) return false;
  if (p.w == t.w && p.h == t.h && p.theta == t.theta) return true;
  return quarter_turn_alias(p, t);
}

}  // namespace

double distance(DistanceKind kind, const RotatedBox& p, const RotatedBox& t) {
  if (same_box(p, t)) {
    (void)box_to_gaussian(p);  // still reject degenerate sides
    return 0.0;
  }
  return distance(kind, box_to_gaussian(p), box_to_gaussian(t));
}

}  // namespace rbox
