#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rbox/fitter.hpp"
#include "rbox/gaussian.hpp"
#include "rbox/geometry.hpp"
#include "rbox/gradients.hpp"
#include "rbox/io.hpp"
#include "rbox/loss.hpp"
#include "rbox/selftest.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitCheckFailed = 1;
constexpr int kExitUsage = 2;
constexpr int kExitDomain = 3;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void write_output(const std::string& path, const std::string& content) {
  if (path.empty()) {
    std::cout << content;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw UsageError("cannot open output file: " + path);
  out << content;
}

rbox::DistanceKind parse_kind_or_throw(const std::string& name) {
  const auto k = rbox::parse_distance_kind(name);
  if (!k) throw UsageError("unknown distance kind: " + name);
  return *k;
}

std::vector<rbox::DistanceKind> parse_kind_list(const std::string& csv) {
  std::vector<rbox::DistanceKind> kinds;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) kinds.push_back(parse_kind_or_throw(item));
  }
  if (kinds.empty()) throw UsageError("empty kind list");
  return kinds;
}

std::pair<double, double> parse_range(const std::string& text) {
  const auto colon = text.find(':');
  if (colon == std::string::npos) {
    throw UsageError("range must be lo:hi, got: " + text);
  }
  try {
    const double lo = std::stod(text.substr(0, colon));
    const double hi = std::stod(text.substr(colon + 1));
    if (!(lo < hi)) throw UsageError("range must satisfy lo < hi: " + text);
    return {lo, hi};
  } catch (const std::invalid_argument&) {
    throw UsageError("bad range: " + text);
  }
}

// ---- distance ----

struct DistanceArgs {
  std::string kind = "kld_forward";
  std::string pairs_file;
  std::string out;
  std::vector<std::string> inline_boxes;
};

int run_distance(const DistanceArgs& args) {
  const rbox::DistanceKind kind = parse_kind_or_throw(args.kind);
  std::vector<rbox::BoxPair> pairs;
  if (!args.pairs_file.empty()) {
    if (!args.inline_boxes.empty()) {
      throw UsageError("give either --pairs or two inline boxes, not both");
    }
    std::ifstream in(args.pairs_file);
    if (!in) throw UsageError("cannot open pairs file: " + args.pairs_file);
    pairs = rbox::read_pairs_jsonl(in);
  } else if (args.inline_boxes.size() == 2) {
    rbox::BoxPair pair{rbox::parse_box_record(args.inline_boxes[0]),
                       rbox::parse_box_record(args.inline_boxes[1])};
    if (pair.a.id.empty()) pair.a.id = "a";
    if (pair.b.id.empty()) pair.b.id = "b";
    pairs.push_back(std::move(pair));
  } else {
    throw UsageError("need --pairs FILE or exactly two inline box records");
  }

  std::string csv = "id_a,id_b,kind,distance\n";
  for (const rbox::BoxPair& pair : pairs) {
    csv += pair.a.id + "," + pair.b.id + "," + rbox::to_string(kind) + "," +
           rbox::format_csv_value(rbox::distance(kind, pair.a.box,
                                                 pair.b.box)) +
           "\n";
  }
  write_output(args.out, csv);
  return kExitOk;
}

// ---- iou ----

int run_iou(const std::vector<std::string>& inline_boxes) {
  const rbox::BoxRecord a = rbox::parse_box_record(inline_boxes[0]);
  const rbox::BoxRecord b = rbox::parse_box_record(inline_boxes[1]);
  std::printf("%.12g\n", rbox::rotated_iou(a.box, b.box));
  return kExitOk;
}

// ---- landscape ----

struct LandscapeArgs {
  std::string target_json;
  std::string pred_json;
  std::string sweep = "theta";
  std::string range = "-1.5:1.5";
  int steps = 41;
  std::string kinds =
      "kld_forward,kld_reverse,kld_min,kld_max,js,jeffreys,gwd";
  std::string angle_unit = "rad";
  std::string out;
  std::string svg;
  bool figure_ls = false;
  bool figure_pr = false;
};

rbox::RotatedBox apply_sweep(const rbox::RotatedBox& base,
                             const std::string& sweep, double value,
                             bool degrees) {
  rbox::RotatedBox b = base;
  if (sweep == "x") b.x = value;
  else if (sweep == "y") b.y = value;
  else if (sweep == "w") b.w = value;
  else if (sweep == "h") b.h = value;
  else if (sweep == "theta")
    b.theta = degrees ? value * std::numbers::pi / 180.0 : value;
  else throw UsageError("unknown sweep parameter: " + sweep);
  return rbox::make_box(b.x, b.y, b.w, b.h, b.theta);
}

int run_landscape(const LandscapeArgs& args) {
  if (args.angle_unit != "rad" && args.angle_unit != "deg") {
    throw UsageError("angle-unit must be rad or deg");
  }
  const bool degrees = args.angle_unit == "deg";
  const auto [lo, hi] = parse_range(args.range);
  if (args.steps < 2) throw UsageError("steps must be at least 2");
  const std::vector<rbox::DistanceKind> kinds = parse_kind_list(args.kinds);

  // (pred base, target base, column suffix) per curve group
  struct Fixture {
    rbox::RotatedBox pred;
    rbox::RotatedBox target;
    std::string suffix;
  };
  const double deg5 = 5.0 * std::numbers::pi / 180.0;
  std::vector<Fixture> fixtures;
  std::string sweep = args.sweep;
  if (args.figure_ls && args.figure_pr) {
    throw UsageError("--figure-ls and --figure-pr are exclusive");
  }
  if (args.figure_ls) {
    // joint-scale fixture: two fixed boxes, both scaled by the sweep value
    sweep = "scale";
    fixtures.push_back({rbox::make_box(1, 1, 1.1, 2.2, deg5),
                        rbox::make_box(0, 0, 1, 2, deg5), ""});
  } else if (args.figure_pr) {
    // aspect-ratio family: targets 1 x h for h = 1..4
    for (int h = 1; h <= 4; ++h) {
      const rbox::RotatedBox t = rbox::make_box(0, 0, 1, h, 0);
      fixtures.push_back({t, t, "_ar" + std::to_string(h)});
    }
  } else {
    if (args.target_json.empty()) {
      throw UsageError("landscape needs --target (or a --figure-* fixture)");
    }
    const rbox::RotatedBox target =
        rbox::parse_box_record(args.target_json).box;
    const rbox::RotatedBox pred =
        args.pred_json.empty() ? target
                               : rbox::parse_box_record(args.pred_json).box;
    fixtures.push_back({pred, target, ""});
  }
  if (sweep == "scale" && lo <= 0) {
    throw UsageError("scale sweep needs a positive range");
  }

  std::vector<double> xs(args.steps);
  for (int i = 0; i < args.steps; ++i) {
    xs[i] = lo + (hi - lo) * i / (args.steps - 1);
  }

  std::vector<std::string> names;
  std::vector<std::vector<double>> columns;
  for (const Fixture& fx : fixtures) {
    for (const rbox::DistanceKind kind : kinds) {
      names.push_back(std::string(rbox::to_string(kind)) + fx.suffix);
      std::vector<double> col(xs.size());
      for (std::size_t i = 0; i < xs.size(); ++i) {
        rbox::RotatedBox p;
        rbox::RotatedBox t;
        if (sweep == "scale") {
          p = rbox::scaled(fx.pred, xs[i]);
          t = rbox::scaled(fx.target, xs[i]);
        } else {
          p = apply_sweep(fx.pred, sweep, xs[i], degrees);
          t = fx.target;
        }
        col[i] = rbox::distance(kind, p, t);
      }
      columns.push_back(std::move(col));
    }
  }

  std::string csv = sweep;
  for (const std::string& n : names) csv += "," + n;
  csv += "\n";
  for (std::size_t i = 0; i < xs.size(); ++i) {
    csv += rbox::format_csv_value(xs[i]);
    for (const auto& col : columns) csv += "," + rbox::format_csv_value(col[i]);
    csv += "\n";
  }
  write_output(args.out, csv);
  if (!args.svg.empty()) {
    write_output(args.svg,
                 rbox::svg_line_chart("distance vs " + sweep, xs, names,
                                      columns));
  }
  return kExitOk;
}

// ---- gradcheck ----

struct GradcheckArgs {
  std::string kind = "all";
  int trials = 1000;
  double tol = 1e-5;
  std::uint64_t seed = 20240817;
};

int run_gradcheck(const GradcheckArgs& args) {
  std::vector<rbox::DistanceKind> kinds;
  if (args.kind == "all") {
    kinds.assign(rbox::kAllDistanceKinds.begin(),
                 rbox::kAllDistanceKinds.end());
  } else {
    kinds.push_back(parse_kind_or_throw(args.kind));
  }
  bool ok = true;
  for (const rbox::DistanceKind kind : kinds) {
    const rbox::GradCheckReport rep =
        rbox::grad_check(kind, args.trials, args.tol, args.seed);
    ok = ok && rep.failures == 0;
    std::printf("kind=%s trials=%d failures=%d max_rel_err=%.3g\n",
                rbox::to_string(kind), rep.trials, rep.failures,
                rep.max_rel_err);
  }
  return ok ? kExitOk : kExitCheckFailed;
}

// ---- fit ----

struct FitArgs {
  std::string init_json;
  std::string target_json;
  std::string config_file;
  bool smooth_l1 = false;
  int steps = 2000;
  double stop_iou = 0.95;
  double lr_center = rbox::kDefaultLrCenter;
  double lr_size = rbox::kDefaultLrSize;
  double lr_angle = rbox::kDefaultLrAngle;
  std::string out;
  std::string svg;
};

int run_fit(const FitArgs& args) {
  rbox::FitConfig cfg;
  if (!args.config_file.empty()) {
    std::ifstream in(args.config_file);
    if (!in) throw UsageError("cannot open config file: " + args.config_file);
    std::stringstream buf;
    buf << in.rdbuf();
    cfg.loss = rbox::parse_loss_config(buf.str());
  }
  if (args.smooth_l1) cfg.objective = rbox::FitObjective::SmoothL1;
  cfg.max_steps = args.steps;
  cfg.stop_iou = args.stop_iou;
  cfg.lr_center = args.lr_center;
  cfg.lr_size = args.lr_size;
  cfg.lr_angle = args.lr_angle;

  const rbox::RotatedBox init = rbox::parse_box_record(args.init_json).box;
  const rbox::RotatedBox target =
      rbox::parse_box_record(args.target_json).box;
  const rbox::FitTrace trace = rbox::fit_box(init, target, cfg);
  const rbox::FitRecord& last = trace.final();
  std::printf("fit: status=%s steps=%d final_iou=%.12g final_loss=%.12g\n",
              rbox::to_string(trace.status), last.step, last.iou, last.loss);
  if (!args.out.empty()) write_output(args.out, rbox::trace_csv(trace));
  if (!args.svg.empty()) {
    std::vector<double> xs;
    std::vector<double> loss_col;
    std::vector<double> iou_col;
    for (const rbox::FitRecord& rec : trace.records) {
      xs.push_back(rec.step);
      loss_col.push_back(rec.loss);
      iou_col.push_back(rec.iou);
    }
    write_output(args.svg, rbox::svg_line_chart("fit trace", xs,
                                                {"loss", "iou"},
                                                {loss_col, iou_col}));
  }
  return kExitOk;
}

// ---- selftest ----

int run_selftest_cmd(bool break_sigma) {
  rbox::SelftestOptions opts;
  opts.break_sigma = break_sigma;
  const std::vector<rbox::PropertyResult> results = rbox::run_selftest(opts);
  int failed = 0;
  std::string first_fail;
  for (const rbox::PropertyResult& res : results) {
    std::printf("%s %s (%s)\n", res.pass ? "ok  " : "FAIL", res.name.c_str(),
                res.detail.c_str());
    if (!res.pass && failed++ == 0) first_fail = res.name;
  }
  if (failed > 0) {
    std::printf("selftest: FAILED at %s (%d of %zu properties failed)\n",
                first_fail.c_str(), failed, results.size());
    return kExitCheckFailed;
  }
  std::printf("selftest: all %zu properties passed\n", results.size());
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"rotated-box Gaussian distances, losses and fitting"};
  app.require_subcommand(1);

  DistanceArgs dist;
  CLI::App* cmd_distance =
      app.add_subcommand("distance", "distance between box pairs");
  cmd_distance->add_option("--kind", dist.kind, "distance kind");
  cmd_distance->add_option("--pairs", dist.pairs_file,
                           "JSON-lines file of {\"a\":{...},\"b\":{...}}");
  cmd_distance->add_option("--out", dist.out, "CSV output path");
  cmd_distance->add_option("boxes", dist.inline_boxes,
                           "two inline box records")
      ->expected(0, 2);

  std::vector<std::string> iou_boxes;
  CLI::App* cmd_iou = app.add_subcommand("iou", "exact rotated IoU");
  cmd_iou->add_option("boxes", iou_boxes, "two inline box records")
      ->expected(2);

  LandscapeArgs land;
  CLI::App* cmd_landscape =
      app.add_subcommand("landscape", "sweep one parameter, tabulate kinds");
  cmd_landscape->add_option("--target", land.target_json, "target box record");
  cmd_landscape->add_option("--pred", land.pred_json,
                            "predicted box record (defaults to target)");
  cmd_landscape->add_option("--sweep", land.sweep,
                            "x, y, w, h, theta or scale");
  cmd_landscape->add_option("--range", land.range, "sweep range lo:hi");
  cmd_landscape->add_option("--steps", land.steps, "sample count");
  cmd_landscape->add_option("--kinds", land.kinds, "comma-separated kinds");
  cmd_landscape->add_option("--angle-unit", land.angle_unit,
                            "theta sweep unit: rad or deg");
  cmd_landscape->add_option("--out", land.out, "CSV output path");
  cmd_landscape->add_option("--svg", land.svg, "SVG chart path");
  cmd_landscape->add_flag("--figure-ls", land.figure_ls,
                          "joint-scale fixture pair");
  cmd_landscape->add_flag("--figure-pr", land.figure_pr,
                          "aspect-ratio 1..4 target family");

  GradcheckArgs gc;
  CLI::App* cmd_gradcheck =
      app.add_subcommand("gradcheck", "analytic vs numeric gradients");
  cmd_gradcheck->add_option("--kind", gc.kind, "distance kind or 'all'");
  cmd_gradcheck->add_option("--trials", gc.trials, "random pairs per kind");
  cmd_gradcheck->add_option("--tol", gc.tol, "relative error tolerance");
  cmd_gradcheck->add_option("--seed", gc.seed, "RNG seed");

  FitArgs fit;
  CLI::App* cmd_fit =
      app.add_subcommand("fit", "gradient-descend a box onto a target");
  cmd_fit->add_option("--init", fit.init_json, "initial box record")
      ->required();
  cmd_fit->add_option("--target", fit.target_json, "target box record")
      ->required();
  cmd_fit->add_option("--config", fit.config_file,
                      "loss config (kind=..., transform=..., tau=...)");
  cmd_fit->add_flag("--smooth-l1", fit.smooth_l1,
                    "offset smooth-L1 baseline instead of a Gaussian loss");
  cmd_fit->add_option("--steps", fit.steps, "step budget");
  cmd_fit->add_option("--stop-iou", fit.stop_iou, "stop once IoU reaches");
  cmd_fit->add_option("--lr-center", fit.lr_center, "center step size");
  cmd_fit->add_option("--lr-size", fit.lr_size, "log-size step size");
  cmd_fit->add_option("--lr-angle", fit.lr_angle, "angle step size");
  cmd_fit->add_option("--out", fit.out, "trace CSV path");
  cmd_fit->add_option("--svg", fit.svg, "SVG chart path");

  bool break_sigma = false;
  CLI::App* cmd_selftest =
      app.add_subcommand("selftest", "run the full invariant suite");
  cmd_selftest->add_flag("--break-sigma", break_sigma,
                         "test hook: skew sigma to force a failure")
      ->group("");  // hidden

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (cmd_distance->parsed()) return run_distance(dist);
    if (cmd_iou->parsed()) return run_iou(iou_boxes);
    if (cmd_landscape->parsed()) return run_landscape(land);
    if (cmd_gradcheck->parsed()) return run_gradcheck(gc);
    if (cmd_fit->parsed()) return run_fit(fit);
    if (cmd_selftest->parsed()) return run_selftest_cmd(break_sigma);
    std::fprintf(stderr, "no subcommand\n");
    return kExitUsage;
  } catch (const UsageError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUsage;
  } catch (const rbox::ParseError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUsage;
  } catch (const rbox::SizeDegenerateError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitDomain;
  } catch (const std::domain_error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitDomain;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUsage;
  }
}
