#pragma once

#include <cstdint>
#include <utility>

#include "rbox/gaussian.hpp"
#include "rbox/geometry.hpp"

namespace rbox {

// Gradient of a distance with respect to the predicted box in the
// (x, y, ln w, ln h, theta) parameterization. Log-size components keep the
// sides positive under plain gradient descent.
struct ParamGradient {
  double d_x = 0;
  double d_y = 0;
  double d_lnw = 0;
  double d_lnh = 0;
  double d_theta = 0;
};

// Analytic gradient of distance(kind, p, t) with respect to p. For KldMin /
// KldMax the gradient of the achieving direction is returned, forward on
// ties. Gwd returns zeros when the distance is below 1e-12 (the square root
// has a kink at zero; callers treat that as converged).
ParamGradient distance_grad(DistanceKind kind, const RotatedBox& p,
                            const RotatedBox& t);

// Central differences around p. x, y, theta take additive steps; w and h are
// perturbed multiplicatively (w * exp(+-step)) so the quotient is exactly the
// ln-size derivative.
ParamGradient finite_diff_grad(DistanceKind kind, const RotatedBox& p,
                               const RotatedBox& t, double step = 1e-5);

struct GradCheckReport {
  DistanceKind kind = DistanceKind::KldForward;
  int trials = 0;
  int failures = 0;
  double max_rel_err = 0;
  int worst_trial = -1;
};

// Compares analytic against finite-difference gradients on seeded random
// pairs (sides in [0.5, 20], angle offsets within 1.2 rad, centers within 2
// units). The per-component error is |a - n| / max(1, |a|, |n|). Results are
// deterministic for a fixed seed.
GradCheckReport grad_check(DistanceKind kind, int trials, double tol,
                           std::uint64_t seed);

// The random pair distribution used by grad_check, exposed for the other
// self-checks.
std::pair<RotatedBox, RotatedBox> random_box_pair(std::uint64_t seed,
                                                  int index);

// Scalar expansions of the two KL directions, written directly on the box
// parameters. Independent of the matrix route in gaussian.cpp; the two must
// agree to 1e-10 and the gradient code differentiates these forms.
double kld_forward_expanded(const RotatedBox& p, const RotatedBox& t);
double kld_reverse_expanded(const RotatedBox& p, const RotatedBox& t);

}  // namespace rbox
