#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

#include "rbox/gaussian.hpp"
#include "rbox/geometry.hpp"
#include "rbox/gradients.hpp"

namespace rbox {

// Anchor-relative regression targets: centers divided by the anchor sides,
// sides as log ratios, angle wrapped into (-pi/2, pi/2].
struct EncodedOffsets {
  double t_x = 0;
  double t_y = 0;
  double t_w = 0;
  double t_h = 0;
  double t_theta = 0;
};

EncodedOffsets encode_offsets(const RotatedBox& b, const RotatedBox& anchor);

// Standard smooth-L1 over the five offset deltas (0.5 d^2 below 1, |d| - 0.5
// above). Zero iff pred == target.
double smooth_l1_loss(const EncodedOffsets& pred, const EncodedOffsets& target);

// Convenience for the fitter: encodes both boxes against the anchor first.
double smooth_l1_box_loss(const RotatedBox& p, const RotatedBox& t,
                          const RotatedBox& anchor);
ParamGradient smooth_l1_box_grad(const RotatedBox& p, const RotatedBox& t,
                                 const RotatedBox& anchor);

enum class LossTransform {
  Sqrt,
  Log1p,
  Identity,  // raw distance, no normalization; not the default
};

struct LossConfig {
  DistanceKind kind = DistanceKind::KldForward;
  LossTransform transform = LossTransform::Log1p;
  double tau = 1.0;  // must be >= 1
};

const char* to_string(LossTransform t);

// key=value lines (kind, transform, tau). parse_loss_config throws
// std::invalid_argument on unknown keys or values, or tau < 1.
std::string serialize(const LossConfig& cfg);
LossConfig parse_loss_config(std::string_view text);

// Thrown by the Sqrt transform's gradient when the distance is below 1e-12;
// the derivative of sqrt is unbounded there and the caller should treat the
// gradient as zero (converged).
struct SqrtAtZeroError : std::domain_error {
  using std::domain_error::domain_error;
};

// 1 - 1/(tau + f(D)) for Sqrt/Log1p, the bare distance for Identity.
// Range [1 - 1/tau, 1), strictly increasing in D, exactly 1 - 1/tau at p == t.
double gaussian_loss(const RotatedBox& p, const RotatedBox& t,
                     const LossConfig& cfg);

struct LossGrad {
  double value = 0;
  ParamGradient grad;
};

LossGrad gaussian_loss_grad(const RotatedBox& p, const RotatedBox& t,
                            const LossConfig& cfg);

}  // namespace rbox
