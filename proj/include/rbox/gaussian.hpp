#pragma once

#include <array>
#include <optional>
#include <string_view>

#include <Eigen/Core>

#include "rbox/geometry.hpp"

namespace rbox {

// 2-d Gaussian with mean mu and SPD covariance sigma.
struct Gaussian2D {
  Eigen::Vector2d mu = Eigen::Vector2d::Zero();
  Eigen::Matrix2d sigma = Eigen::Matrix2d::Identity();
};

// Every distance evaluation names exactly one of these.
enum class DistanceKind {
  KldForward,   // KL(pred || target)
  KldReverse,   // KL(target || pred)
  KldMin,
  KldMax,
  Js,           // Jensen-Shannon with a moment-matched mixture
  Jeffreys,     // sum of both KL directions
  Gwd,          // Wasserstein-2, in length units
};

inline constexpr std::array<DistanceKind, 7> kAllDistanceKinds = {
    DistanceKind::KldForward, DistanceKind::KldReverse, DistanceKind::KldMin,
    DistanceKind::KldMax,     DistanceKind::Js,         DistanceKind::Jeffreys,
    DistanceKind::Gwd,
};

const char* to_string(DistanceKind kind);
std::optional<DistanceKind> parse_distance_kind(std::string_view name);

// Box -> Gaussian: mean at the center, covariance R diag(w^2/4, h^2/4) R^T.
// The half side lengths become the principal standard deviations.
Gaussian2D box_to_gaussian(const RotatedBox& b);

// Inverse of box_to_gaussian via the eigendecomposition; w takes the larger
// eigenvalue axis and an isotropic sigma maps to theta = 0, w = h.
// Throws std::invalid_argument when sigma is asymmetric or non-finite and
// SizeDegenerateError when an eigenvalue is at or below 1e-24.
RotatedBox gaussian_to_box(const Gaussian2D& g);

// KL(p || t) in closed form. Non-negative, zero iff p == t; affine invariant.
double kld_forward(const Gaussian2D& p, const Gaussian2D& t);

// KL(t || p); exactly kld_forward with the arguments swapped.
double kld_reverse(const Gaussian2D& p, const Gaussian2D& t);

// 2-Wasserstein distance (not squared), so it carries length units and
// scales linearly with the boxes.
double gwd(const Gaussian2D& p, const Gaussian2D& t);

double distance(DistanceKind kind, const Gaussian2D& p, const Gaussian2D& t);
double distance(DistanceKind kind, const RotatedBox& p, const RotatedBox& t);

}  // namespace rbox
