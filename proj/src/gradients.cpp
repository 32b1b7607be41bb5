#include "rbox/gradients.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <vector>

namespace rbox {
namespace {

using Eigen::Matrix2d;
using Eigen::Vector2d;

constexpr double kPi = std::numbers::pi;

// Below this the Gwd gradient (a unit-vector-like quantity as the distance
// approaches its kink at zero) is reported as zero.
constexpr double kGwdGradFloor = 1e-12;

double det2(const Matrix2d& m) {
  return m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0);
}

Matrix2d inverse2(const Matrix2d& m) {
  const double d = det2(m);
  Matrix2d inv;
  inv << m(1, 1), -m(0, 1), -m(1, 0), m(0, 0);
  return inv / d;
}

// Center offset of p rotated into the frame of the box at angle `frame`:
// u along the w side, v along the h side.
struct FrameOffset {
  double u;
  double v;
};

FrameOffset frame_offset(const RotatedBox& p, const RotatedBox& t,
                         double frame) {
  const double dx = p.x - t.x;
  const double dy = p.y - t.y;
  const double c = std::cos(frame);
  const double s = std::sin(frame);
  return {dx * c + dy * s, dy * c - dx * s};
}

ParamGradient kld_forward_grad(const RotatedBox& p, const RotatedBox& t) {
  const double c = std::cos(t.theta);
  const double s = std::sin(t.theta);
  const auto [u, v] = frame_offset(p, t, t.theta);
  const double iw2 = 1.0 / (t.w * t.w);
  const double ih2 = 1.0 / (t.h * t.h);
  const double dth = p.theta - t.theta;
  const double sin2 = std::sin(dth) * std::sin(dth);
  const double cos2 = std::cos(dth) * std::cos(dth);

  // side terms grouped as ratios so identical boxes give exact zeros
  const double ww = p.w / t.w;
  const double wh = p.w / t.h;
  const double hw = p.h / t.w;
  const double hh = p.h / t.h;

  ParamGradient g;
  g.d_x = 4.0 * u * c * iw2 - 4.0 * v * s * ih2;
  g.d_y = 4.0 * u * s * iw2 + 4.0 * v * c * ih2;
  g.d_lnw = wh * wh * sin2 + ww * ww * cos2 - 1.0;
  g.d_lnh = hw * hw * sin2 + hh * hh * cos2 - 1.0;
  g.d_theta = 0.5 * std::sin(2.0 * dth) *
              ((p.h * p.h - p.w * p.w) * iw2 + (p.w * p.w - p.h * p.h) * ih2);
  return g;
}

ParamGradient kld_reverse_grad(const RotatedBox& p, const RotatedBox& t) {
  const double c = std::cos(p.theta);
  const double s = std::sin(p.theta);
  const auto [u, v] = frame_offset(p, t, p.theta);
  const double iw2 = 1.0 / (p.w * p.w);
  const double ih2 = 1.0 / (p.h * p.h);
  const double dth = p.theta - t.theta;
  const double sin2 = std::sin(dth) * std::sin(dth);
  const double cos2 = std::cos(dth) * std::cos(dth);
  const double wt2 = t.w * t.w;
  const double ht2 = t.h * t.h;

  const double hw = t.h / p.w;
  const double ww = t.w / p.w;
  const double wh = t.w / p.h;
  const double hh = t.h / p.h;

  ParamGradient g;
  g.d_x = 4.0 * u * c * iw2 - 4.0 * v * s * ih2;
  g.d_y = 4.0 * u * s * iw2 + 4.0 * v * c * ih2;
  g.d_lnw = 1.0 - 4.0 * u * u * iw2 - (hw * hw * sin2 + ww * ww * cos2);
  g.d_lnh = 1.0 - 4.0 * v * v * ih2 - (wh * wh * sin2 + hh * hh * cos2);
  // u, v rotate with the predicted frame: du/dtheta = v, dv/dtheta = -u.
  g.d_theta = 4.0 * u * v * (iw2 - ih2) +
              0.5 * std::sin(2.0 * dth) *
                  ((ht2 - wt2) * iw2 + (wt2 - ht2) * ih2);
  return g;
}

// d sigma / d(ln w), d(ln h), d(theta) for the predicted box.
struct SigmaDerivs {
  Matrix2d dlnw;
  Matrix2d dlnh;
  Matrix2d dtheta;
};

SigmaDerivs sigma_derivs(const RotatedBox& b, const Matrix2d& sigma) {
  const double c = std::cos(b.theta);
  const double s = std::sin(b.theta);
  const double a = 0.5 * b.w * b.w;  // d(w^2/4)/d(ln w) = w^2/2
  const double d = 0.5 * b.h * b.h;
  SigmaDerivs out;
  out.dlnw << a * c * c, a * c * s, a * c * s, a * s * s;
  out.dlnh << d * s * s, -d * c * s, -d * c * s, d * c * c;
  // d sigma/d theta = J sigma - sigma J with J the 90-degree rotation
  // generator; symmetric by construction.
  out.dtheta << -2.0 * sigma(0, 1), sigma(0, 0) - sigma(1, 1),
      sigma(0, 0) - sigma(1, 1), 2.0 * sigma(0, 1);
  return out;
}

// Chains a matrix-valued gradient G (df = tr(G dSigma)) plus a mean-space
// gradient onto the box parameters.
ParamGradient chain_to_params(const RotatedBox& p, const Matrix2d& sigma_p,
                              const Vector2d& dmu, const Matrix2d& G) {
  const SigmaDerivs ds = sigma_derivs(p, sigma_p);
  ParamGradient g;
  g.d_x = dmu.x();
  g.d_y = dmu.y();
  g.d_lnw = (G * ds.dlnw).trace();
  g.d_lnh = (G * ds.dlnh).trace();
  g.d_theta = (G * ds.dtheta).trace();
  return g;
}

ParamGradient gwd_grad(const RotatedBox& p, const RotatedBox& t) {
  const Gaussian2D P = box_to_gaussian(p);
  const Gaussian2D T = box_to_gaussian(t);
  const double dist = gwd(P, T);
  if (dist < kGwdGradFloor) return {};

  const double dp = det2(P.sigma);
  const double dt = det2(T.sigma);
  const double root_dets = std::sqrt(std::max(dp * dt, 0.0));
  const double g2 = (P.sigma * T.sigma).trace() + 2.0 * root_dets;
  const double root_g = std::sqrt(std::max(g2, 0.0));

  // Gradient of the squared distance, then the chain rule through sqrt.
  const Vector2d dmu2 = 2.0 * (P.mu - T.mu);
  const Matrix2d G2 = Matrix2d::Identity() -
                      (T.sigma + root_dets * inverse2(P.sigma)) / root_g;
  ParamGradient g = chain_to_params(p, P.sigma, dmu2, G2);
  const double inv2d = 0.5 / dist;
  g.d_x *= inv2d;
  g.d_y *= inv2d;
  g.d_lnw *= inv2d;
  g.d_lnh *= inv2d;
  g.d_theta *= inv2d;
  return g;
}

ParamGradient js_grad(const RotatedBox& p, const RotatedBox& t) {
  const Gaussian2D P = box_to_gaussian(p);
  const Gaussian2D T = box_to_gaussian(t);
  const Vector2d d = P.mu - T.mu;
  const Matrix2d S =
      0.5 * (P.sigma + T.sigma) + 0.25 * (d * d.transpose());
  const Matrix2d Sinv = inverse2(S);
  // JS collapses to ln|S|/2 - ln|Sp|/4 - ln|St|/4 for the moment-matched
  // mixture, which differentiates to the two terms below.
  const Vector2d dmu = 0.25 * (Sinv * d);
  const Matrix2d G = 0.25 * (Sinv - inverse2(P.sigma));
  return chain_to_params(p, P.sigma, dmu, G);
}

ParamGradient sum(const ParamGradient& a, const ParamGradient& b) {
  return {a.d_x + b.d_x, a.d_y + b.d_y, a.d_lnw + b.d_lnw, a.d_lnh + b.d_lnh,
          a.d_theta + b.d_theta};
}

RotatedBox random_box(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> center(-2.0, 2.0);
  std::uniform_real_distribution<double> side(0.5, 20.0);
  std::uniform_real_distribution<double> angle(-kPi / 2, kPi / 2);
  return RotatedBox{center(rng), center(rng), side(rng), side(rng),
                    normalize_angle(angle(rng))};
}

}  // namespace

double kld_forward_expanded(const RotatedBox& p, const RotatedBox& t) {
  const auto [u, v] = frame_offset(p, t, t.theta);
  const double iw2 = 1.0 / (t.w * t.w);
  const double ih2 = 1.0 / (t.h * t.h);
  const double dth = p.theta - t.theta;
  const double sin2 = std::sin(dth) * std::sin(dth);
  const double cos2 = std::cos(dth) * std::cos(dth);
  const double quad = 4.0 * u * u * iw2 + 4.0 * v * v * ih2;
  const double trace = (p.h * p.h * iw2 + p.w * p.w * ih2) * sin2 +
                       (p.h * p.h * ih2 + p.w * p.w * iw2) * cos2;
  const double logs = std::log(t.w * t.w / (p.w * p.w)) +
                      std::log(t.h * t.h / (p.h * p.h));
  return 0.5 * (quad + trace + logs) - 1.0;
}

double kld_reverse_expanded(const RotatedBox& p, const RotatedBox& t) {
  return kld_forward_expanded(t, p);
}

ParamGradient distance_grad(DistanceKind kind, const RotatedBox& p,
                            const RotatedBox& t) {
  switch (kind) {
    case DistanceKind::KldForward:
      return kld_forward_grad(p, t);
    case DistanceKind::KldReverse:
      return kld_reverse_grad(p, t);
    case DistanceKind::KldMin: {
      const Gaussian2D P = box_to_gaussian(p);
      const Gaussian2D T = box_to_gaussian(t);
      return kld_forward(P, T) <= kld_reverse(P, T) ? kld_forward_grad(p, t)
                                                    : kld_reverse_grad(p, t);
    }
    case DistanceKind::KldMax: {
      const Gaussian2D P = box_to_gaussian(p);
      const Gaussian2D T = box_to_gaussian(t);
      return kld_forward(P, T) >= kld_reverse(P, T) ? kld_forward_grad(p, t)
                                                    : kld_reverse_grad(p, t);
    }
    case DistanceKind::Js:
      return js_grad(p, t);
    case DistanceKind::Jeffreys:
      return sum(kld_forward_grad(p, t), kld_reverse_grad(p, t));
    case DistanceKind::Gwd:
      return gwd_grad(p, t);
  }
  throw std::invalid_argument("unknown distance kind");
}

ParamGradient finite_diff_grad(DistanceKind kind, const RotatedBox& p,
                               const RotatedBox& t, double step) {
  const auto eval = [&](const RotatedBox& b) { return distance(kind, b, t); };
  const auto central = [&](RotatedBox hi, RotatedBox lo) {
    return (eval(hi) - eval(lo)) / (2.0 * step);
  };
  ParamGradient g;
  {
    RotatedBox hi = p, lo = p;
    hi.x += step;
    lo.x -= step;
    g.d_x = central(hi, lo);
  }
  {
    RotatedBox hi = p, lo = p;
    hi.y += step;
    lo.y -= step;
    g.d_y = central(hi, lo);
  }
  {
    RotatedBox hi = p, lo = p;
    hi.w *= std::exp(step);
    lo.w *= std::exp(-step);
    g.d_lnw = central(hi, lo);
  }
  {
    RotatedBox hi = p, lo = p;
    hi.h *= std::exp(step);
    lo.h *= std::exp(-step);
    g.d_lnh = central(hi, lo);
  }
  {
    RotatedBox hi = p, lo = p;
    hi.theta += step;  // distances are pi-periodic; no rewrap needed
    lo.theta -= step;
    g.d_theta = central(hi, lo);
  }
  return g;
}

std::pair<RotatedBox, RotatedBox> random_box_pair(std::uint64_t seed,
                                                  int index) {
  std::mt19937_64 rng(seed + 0x9e3779b97f4a7c15ull * (index + 1));
  RotatedBox t = random_box(rng);
  std::uniform_real_distribution<double> doff(-1.2, 1.2);
  std::uniform_real_distribution<double> side(0.5, 20.0);
  std::uniform_real_distribution<double> center(-2.0, 2.0);
  RotatedBox p;
  p.x = t.x + center(rng);
  p.y = t.y + center(rng);
  p.w = side(rng);
  p.h = side(rng);
  p.theta = normalize_angle(t.theta + doff(rng));
  return {p, t};
}

GradCheckReport grad_check(DistanceKind kind, int trials, double tol,
                           std::uint64_t seed) {
  GradCheckReport report;
  report.kind = kind;
  report.trials = trials;

  // All trial errors are computed first, then reduced, so a parallel
  // evaluation order could never change the report.
  std::vector<double> errs(trials);
  for (int i = 0; i < trials; ++i) {
    const auto [p, t] = random_box_pair(seed, i);
    const ParamGradient a = distance_grad(kind, p, t);
    const ParamGradient n = finite_diff_grad(kind, p, t);
    const double comp[5][2] = {{a.d_x, n.d_x},
                               {a.d_y, n.d_y},
                               {a.d_lnw, n.d_lnw},
                               {a.d_lnh, n.d_lnh},
                               {a.d_theta, n.d_theta}};
    double err = 0;
    for (const auto& [av, nv] : comp) {
      const double denom = std::max({1.0, std::abs(av), std::abs(nv)});
      err = std::max(err, std::abs(av - nv) / denom);
    }
    errs[i] = err;
  }
  for (int i = 0; i < trials; ++i) {
    if (errs[i] > tol) ++report.failures;
    if (errs[i] > report.max_rel_err) {
      report.max_rel_err = errs[i];
      report.worst_trial = i;
    }
  }
  return report;
}

}  // namespace rbox
