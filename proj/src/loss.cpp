#include "rbox/loss.hpp"

#include <cmath>
#include <sstream>

namespace rbox {
namespace {

double smooth_l1_term(double d) {
  const double a = std::abs(d);
  return a < 1.0 ? 0.5 * d * d : a - 0.5;
}

double smooth_l1_slope(double d) {
  return std::abs(d) < 1.0 ? d : (d > 0 ? 1.0 : -1.0);
}

void check_tau(const LossConfig& cfg) {
  if (!(cfg.tau >= 1.0)) {
    throw std::invalid_argument("tau must be >= 1");
  }
}

std::string trimmed(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return "";
  return s.substr(first, s.find_last_not_of(" \t\r") - first + 1);
}

}  // namespace

EncodedOffsets encode_offsets(const RotatedBox& b, const RotatedBox& anchor) {
  EncodedOffsets o;
  o.t_x = (b.x - anchor.x) / anchor.w;
  o.t_y = (b.y - anchor.y) / anchor.h;
  o.t_w = std::log(b.w / anchor.w);
  o.t_h = std::log(b.h / anchor.h);
  o.t_theta = normalize_angle(b.theta - anchor.theta);
  return o;
}

double smooth_l1_loss(const EncodedOffsets& pred,
                      const EncodedOffsets& target) {
  return smooth_l1_term(pred.t_x - target.t_x) +
         smooth_l1_term(pred.t_y - target.t_y) +
         smooth_l1_term(pred.t_w - target.t_w) +
         smooth_l1_term(pred.t_h - target.t_h) +
         smooth_l1_term(pred.t_theta - target.t_theta);
}

double smooth_l1_box_loss(const RotatedBox& p, const RotatedBox& t,
                          const RotatedBox& anchor) {
  return smooth_l1_loss(encode_offsets(p, anchor), encode_offsets(t, anchor));
}

ParamGradient smooth_l1_box_grad(const RotatedBox& p, const RotatedBox& t,
                                 const RotatedBox& anchor) {
  const EncodedOffsets pp = encode_offsets(p, anchor);
  const EncodedOffsets tt = encode_offsets(t, anchor);
  ParamGradient g;
  g.d_x = smooth_l1_slope(pp.t_x - tt.t_x) / anchor.w;
  g.d_y = smooth_l1_slope(pp.t_y - tt.t_y) / anchor.h;
  g.d_lnw = smooth_l1_slope(pp.t_w - tt.t_w);
  g.d_lnh = smooth_l1_slope(pp.t_h - tt.t_h);
  g.d_theta = smooth_l1_slope(pp.t_theta - tt.t_theta);
  return g;
}

const char* to_string(LossTransform t) {
  switch (t) {
    case LossTransform::Sqrt: return "sqrt";
    case LossTransform::Log1p: return "log1p";
    case LossTransform::Identity: return "identity";
  }
  return "unknown";
}

std::string serialize(const LossConfig& cfg) {
  std::ostringstream out;
  out.precision(17);
  out << "kind=" << to_string(cfg.kind) << "\n"
      << "transform=" << to_string(cfg.transform) << "\n"
      << "tau=" << cfg.tau << "\n";
  return out.str();
}

LossConfig parse_loss_config(std::string_view text) {
  LossConfig cfg;
  std::istringstream in{std::string(text)};
  std::string raw;
  while (std::getline(in, raw)) {
    const std::string line = trimmed(raw);
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("config line without '=': " + line);
    }
    const std::string key = trimmed(line.substr(0, eq));
    const std::string value = trimmed(line.substr(eq + 1));
    if (key == "kind") {
      const auto k = parse_distance_kind(value);
      if (!k) throw std::invalid_argument("unknown distance kind: " + value);
      cfg.kind = *k;
    } else if (key == "transform") {
      if (value == "sqrt") {
        cfg.transform = LossTransform::Sqrt;
      } else if (value == "log1p") {
        cfg.transform = LossTransform::Log1p;
      } else if (value == "identity") {
        cfg.transform = LossTransform::Identity;
      } else {
        throw std::invalid_argument("unknown transform: " + value);
      }
    } else if (key == "tau") {
      std::size_t used = 0;
      cfg.tau = std::stod(value, &used);
      if (used != value.size()) {
        throw std::invalid_argument("bad tau value: " + value);
      }
    } else {
      throw std::invalid_argument("unknown config key: " + key);
    }
  }
  check_tau(cfg);
  return cfg;
}

double gaussian_loss(const RotatedBox& p, const RotatedBox& t,
                     const LossConfig& cfg) {
  check_tau(cfg);
  const double d = distance(cfg.kind, p, t);
  switch (cfg.transform) {
    case LossTransform::Identity:
      return d;
    case LossTransform::Sqrt:
      return 1.0 - 1.0 / (cfg.tau + std::sqrt(d));
    case LossTransform::Log1p:
      return 1.0 - 1.0 / (cfg.tau + std::log1p(d));
  }
  throw std::invalid_argument("unknown transform");
}

LossGrad gaussian_loss_grad(const RotatedBox& p, const RotatedBox& t,
                            const LossConfig& cfg) {
  check_tau(cfg);
  const double d = distance(cfg.kind, p, t);
  const ParamGradient dd = distance_grad(cfg.kind, p, t);

  double scale = 1.0;
  LossGrad out;
  switch (cfg.transform) {
    case LossTransform::Identity:
      out.value = d;
      scale = 1.0;
      break;
    case LossTransform::Sqrt: {
      if (d < 1e-12) {
        throw SqrtAtZeroError("sqrt transform gradient at zero distance");
      }
      const double f = std::sqrt(d);
      out.value = 1.0 - 1.0 / (cfg.tau + f);
      const double denom = cfg.tau + f;
      scale = (0.5 / f) / (denom * denom);
      break;
    }
    case LossTransform::Log1p: {
      const double f = std::log1p(d);
      out.value = 1.0 - 1.0 / (cfg.tau + f);
      const double denom = cfg.tau + f;
      scale = (1.0 / (1.0 + d)) / (denom * denom);
      break;
    }
  }
  out.grad = {scale * dd.d_x, scale * dd.d_y, scale * dd.d_lnw,
              scale * dd.d_lnh, scale * dd.d_theta};
  return out;
}

}  // namespace rbox
