#include "rbox/selftest.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "rbox/fitter.hpp"
#include "rbox/gaussian.hpp"
#include "rbox/geometry.hpp"
#include "rbox/gradients.hpp"
#include "rbox/loss.hpp"

namespace rbox {
namespace {

constexpr double kPi = std::numbers::pi;
constexpr std::uint64_t kSeed = 0x5e1f7e57;

std::string fmt(double v) {
  std::ostringstream out;
  out.precision(3);
  out << v;
  return out.str();
}

struct Runner {
  const SelftestOptions& opts;
  std::vector<PropertyResult> results;

  Gaussian2D to_gaussian(const RotatedBox& b) const {
    Gaussian2D g = box_to_gaussian(b);
    if (opts.break_sigma) g.sigma(0, 1) += 1e-6;
    return g;
  }

  void add(const std::string& name, bool pass, const std::string& detail) {
    results.push_back({name, pass, detail});
  }
};

void check_angles(Runner& r) {
  bool ok = true;
  double worst = 0;
  for (int i = -40; i <= 40; ++i) {
    const double a = 0.37 * i;
    const double n = normalize_angle(a);
    ok = ok && n > -kPi / 2 - 1e-15 && n <= kPi / 2 + 1e-15;
    // pi-periodic: the normalized angle describes the same box
    const RotatedBox b1 = make_box(0, 0, 3, 1, a);
    const RotatedBox b2 = make_box(0, 0, 3, 1, a + kPi);
    worst = std::max(worst, std::abs(1.0 - rotated_iou(b1, b2)));
  }
  ok = ok && worst < 1e-12;
  r.add("angle-normalization", ok, "max |1-iou| " + fmt(worst));
}

void check_quad_area(Runner& r) {
  std::mt19937_64 rng(kSeed);
  std::uniform_real_distribution<double> center(-50, 50);
  std::uniform_real_distribution<double> side(0.01, 30);
  std::uniform_real_distribution<double> angle(-kPi / 2, kPi / 2);
  double worst = 0;
  for (int i = 0; i < 200; ++i) {
    const RotatedBox b =
        make_box(center(rng), center(rng), side(rng), side(rng), angle(rng));
    const double area = quad_area(box_to_quad(b));
    worst = std::max(worst, std::abs(area - b.w * b.h) / (b.w * b.h));
  }
  r.add("quad-area", worst < 1e-12, "max rel err " + fmt(worst));
}

void check_iou_identity(Runner& r) {
  std::mt19937_64 rng(kSeed + 1);
  std::uniform_real_distribution<double> center(-20, 20);
  std::uniform_real_distribution<double> side(0.1, 15);
  std::uniform_real_distribution<double> angle(-kPi / 2, kPi / 2);
  double worst = 0;
  bool ok = true;
  for (int i = 0; i < 200; ++i) {
    const RotatedBox b =
        make_box(center(rng), center(rng), side(rng), side(rng), angle(rng));
    worst = std::max(worst, std::abs(1.0 - rotated_iou(b, b)));
    const RotatedBox far = make_box(b.x + 100, b.y, b.w, b.h, b.theta);
    ok = ok && rotated_iou(b, far) == 0.0;
  }
  ok = ok && worst < 1e-12;
  r.add("iou-identity", ok, "max |1-iou| " + fmt(worst));
}

void check_expansion_equivalence(Runner& r) {
  double worst = 0;
  for (int i = 0; i < 500; ++i) {
    const auto [p, t] = random_box_pair(kSeed + 2, i);
    const double fwd_matrix = kld_forward(r.to_gaussian(p), r.to_gaussian(t));
    const double rev_matrix = kld_reverse(r.to_gaussian(p), r.to_gaussian(t));
    worst = std::max(worst, std::abs(fwd_matrix - kld_forward_expanded(p, t)));
    worst = std::max(worst, std::abs(rev_matrix - kld_reverse_expanded(p, t)));
  }
  r.add("expansion-equivalence", worst < 1e-10, "max abs err " + fmt(worst));
}

void check_degeneration(Runner& r) {
  std::mt19937_64 rng(kSeed + 3);
  std::uniform_real_distribution<double> center(-2, 2);
  std::uniform_real_distribution<double> side(0.5, 20);
  double worst = 0;
  for (int i = 0; i < 500; ++i) {
    const RotatedBox p =
        make_box(center(rng), center(rng), side(rng), side(rng), 0);
    const RotatedBox t =
        make_box(center(rng), center(rng), side(rng), side(rng), 0);
    const double dx = p.x - t.x;
    const double dy = p.y - t.y;
    // axis-aligned closed form of the forward KL
    const double horizontal =
        0.5 * (p.w * p.w / (t.w * t.w) + p.h * p.h / (t.h * t.h) +
               4.0 * dx * dx / (t.w * t.w) + 4.0 * dy * dy / (t.h * t.h) +
               std::log(t.w * t.w / (p.w * p.w)) +
               std::log(t.h * t.h / (p.h * p.h)) - 2.0);
    const double kld = kld_forward(r.to_gaussian(p), r.to_gaussian(t));
    worst = std::max(worst, std::abs(kld - horizontal));
    // axis-aligned Wasserstein collapses to an l2 norm of the box deltas
    const double l2 = std::sqrt(dx * dx + dy * dy +
                                0.25 * (p.w - t.w) * (p.w - t.w) +
                                0.25 * (p.h - t.h) * (p.h - t.h));
    const double w2 = gwd(r.to_gaussian(p), r.to_gaussian(t));
    worst = std::max(worst, std::abs(w2 - l2));
  }
  r.add("degeneration-identity", worst < 1e-10, "max abs err " + fmt(worst));
}

void check_scale_invariance(Runner& r) {
  double worst_kld = 0;
  double worst_gwd = 0;
  const double factors[] = {0.1, 3.0, 100.0};
  for (int i = 0; i < 50; ++i) {
    const auto [p, t] = random_box_pair(kSeed + 4, i);
    for (const DistanceKind kind :
         {DistanceKind::KldForward, DistanceKind::KldReverse,
          DistanceKind::KldMin, DistanceKind::KldMax, DistanceKind::Js,
          DistanceKind::Jeffreys}) {
      const double base = distance(kind, p, t);
      for (const double k : factors) {
        const double scaled_d = distance(kind, scaled(p, k), scaled(t, k));
        worst_kld = std::max(worst_kld,
                             std::abs(scaled_d - base) / std::abs(base));
      }
    }
    const double base = distance(DistanceKind::Gwd, p, t);
    for (const double k : factors) {
      const double scaled_d =
          distance(DistanceKind::Gwd, scaled(p, k), scaled(t, k));
      worst_gwd =
          std::max(worst_gwd, std::abs(scaled_d - k * base) / (k * base));
    }
  }
  const bool ok = worst_kld < 1e-9 && worst_gwd < 1e-9;
  r.add("scale-invariance", ok,
        "kld " + fmt(worst_kld) + ", gwd homogeneity " + fmt(worst_gwd));
}

void check_square_identities(Runner& r) {
  std::mt19937_64 rng(kSeed + 5);
  std::uniform_real_distribution<double> side(0.5, 20);
  std::uniform_real_distribution<double> angle(-kPi / 2, kPi / 2);
  double worst = 0;
  for (int i = 0; i < 100; ++i) {
    const double s = side(rng);
    const RotatedBox a = make_box(1, -2, s, s, angle(rng));
    const RotatedBox b = make_box(1, -2, s, s, angle(rng));
    for (const DistanceKind kind : kAllDistanceKinds) {
      worst = std::max(worst, distance(kind, a, b));
    }
    // swapped sides plus a quarter turn is the same rectangle
    const RotatedBox c = make_box(0.5, 3, s, 2 * s, angle(rng));
    const RotatedBox d = make_box(0.5, 3, 2 * s, s, c.theta + kPi / 2);
    for (const DistanceKind kind : kAllDistanceKinds) {
      worst = std::max(worst, distance(kind, c, d));
    }
  }
  r.add("square-identities", worst < 1e-12, "max distance " + fmt(worst));
}

void check_gradients(Runner& r) {
  for (const DistanceKind kind : kAllDistanceKinds) {
    const GradCheckReport rep = grad_check(kind, 300, 1e-5, kSeed + 6);
    r.add(std::string("gradcheck-") + to_string(kind), rep.failures == 0,
          "max rel err " + fmt(rep.max_rel_err));
  }
}

void check_loss_normalization(Runner& r) {
  const RotatedBox p = make_box(0.3, -0.7, 2, 5, 0.4);
  bool ok = true;
  for (const double tau : {1.0, 2.0, 3.0, 5.0}) {
    LossConfig cfg;
    cfg.tau = tau;
    ok = ok && gaussian_loss(p, p, cfg) == 1.0 - 1.0 / tau;
    cfg.transform = LossTransform::Sqrt;
    ok = ok && gaussian_loss(p, p, cfg) == 1.0 - 1.0 / tau;
  }
  // strictly increasing in the distance
  LossConfig cfg;
  double prev = -1;
  for (int i = 0; i <= 20; ++i) {
    const RotatedBox q = make_box(0.2 * i, 0, 1, 1, 0);
    const double l = gaussian_loss(q, make_box(0, 0, 1, 1, 0), cfg);
    ok = ok && l > prev && l < 1.0;
    prev = l;
  }
  r.add("loss-normalization", ok, ok ? "exact at tau 1,2,3,5" : "mismatch");
}

void check_offsets(Runner& r) {
  const RotatedBox anchor = make_box(0, 0, 2, 2, 0);
  const EncodedOffsets zero = encode_offsets(anchor, anchor);
  bool ok = zero.t_x == 0 && zero.t_y == 0 && zero.t_w == 0 &&
            zero.t_h == 0 && zero.t_theta == 0;
  const EncodedOffsets off =
      encode_offsets(make_box(1, 0, 4, 2, 0), anchor);
  ok = ok && std::abs(off.t_x - 0.5) < 1e-15 && std::abs(off.t_y) < 1e-15 &&
       std::abs(off.t_w - std::log(2.0)) < 1e-15 &&
       std::abs(off.t_h) < 1e-15 && std::abs(off.t_theta) < 1e-15;
  ok = ok && smooth_l1_loss(zero, zero) == 0.0;
  EncodedOffsets half = zero;
  half.t_x = 0.5;
  ok = ok && std::abs(smooth_l1_loss(half, zero) - 0.125) < 1e-15;
  EncodedOffsets two = zero;
  two.t_y = 2.0;
  ok = ok && std::abs(smooth_l1_loss(two, zero) - 1.5) < 1e-15;
  r.add("offsets-smooth-l1", ok, ok ? "fixtures hold" : "fixture mismatch");
}

void check_iou_mc(Runner& r) {
  std::mt19937_64 rng(kSeed + 7);
  std::uniform_real_distribution<double> center(-1.5, 1.5);
  std::uniform_real_distribution<double> side(0.5, 6);
  std::uniform_real_distribution<double> angle(-kPi / 2, kPi / 2);
  double worst_sigma = 0;
  for (int i = 0; i < 30; ++i) {
    const RotatedBox a =
        make_box(center(rng), center(rng), side(rng), side(rng), angle(rng));
    const RotatedBox b =
        make_box(center(rng), center(rng), side(rng), side(rng), angle(rng));
    const double exact = rotated_iou(a, b);
    const SampledIou mc = sampled_iou(a, b, 200000, kSeed + 100 + i);
    if (mc.se > 0) {
      worst_sigma = std::max(worst_sigma, std::abs(exact - mc.value) / mc.se);
    } else {
      worst_sigma = std::max(worst_sigma, exact == mc.value ? 0.0 : 1e9);
    }
  }
  // the rotated-square octagon, pinned in closed form
  const double analytic = 2.0 * (std::numbers::sqrt2 - 1.0) /
                          (2.0 - 2.0 * (std::numbers::sqrt2 - 1.0));
  const double square = rotated_iou(make_box(0, 0, 2, 2, 0),
                                    make_box(0, 0, 2, 2, kPi / 4));
  const bool ok = worst_sigma <= 3.0 && std::abs(square - analytic) < 1e-6;
  r.add("iou-mc-crosscheck", ok, "worst deviation " + fmt(worst_sigma) + " se");
}

}  // namespace

std::vector<PropertyResult> run_selftest(const SelftestOptions& opts) {
  Runner r{opts, {}};
  check_angles(r);
  check_quad_area(r);
  check_iou_identity(r);
  check_expansion_equivalence(r);
  check_degeneration(r);
  check_scale_invariance(r);
  check_square_identities(r);
  check_gradients(r);
  check_loss_normalization(r);
  check_offsets(r);
  check_iou_mc(r);
  return r.results;
}

}  // namespace rbox
