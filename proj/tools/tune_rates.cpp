// Coarse grid search behind the frozen defaults in fitter.hpp. Runs the
// three objectives over the aspect-ratio suite at the full step budget (the
// comparison the ordering fixture pins) and over the square suite with the
// default stop threshold (the easy-case sanity fixture), printing mean final
// IoU per objective, so a rate change is a deliberate, documented act rather
// than a tweak inside a test.

#include <cstdio>
#include <vector>

#include "rbox/fitter.hpp"

int main() {
  const auto aspect = rbox::aspect_suite_pairs(50, 42);
  const auto squares = rbox::square_suite_pairs(50, 43);

  const double centers[] = {0.02, 0.05, 0.1, 0.2};
  const double sizes[] = {0.01, 0.02, 0.05, 0.1};
  const double angles[] = {2e-4, 5e-4, 1e-3, 2e-3};

  std::printf(
      "lr_center lr_size lr_angle | aspect@budget: kld gwd sl1 | "
      "square@0.95: kld gwd sl1 conv\n");
  for (const double lrc : centers) {
    for (const double lrs : sizes) {
      for (const double lra : angles) {
        rbox::FitConfig kld;
        kld.loss.kind = rbox::DistanceKind::KldForward;
        rbox::FitConfig gwd = kld;
        gwd.loss.kind = rbox::DistanceKind::Gwd;
        rbox::FitConfig sl1 = kld;
        sl1.objective = rbox::FitObjective::SmoothL1;
        for (rbox::FitConfig* cfg : {&kld, &gwd, &sl1}) {
          cfg->lr_center = lrc;
          cfg->lr_size = lrs;
          cfg->lr_angle = lra;
        }

        // ordering fixture: stop out of reach, every run uses the budget
        std::vector<std::pair<std::string, rbox::FitConfig>> budget;
        for (const auto& [name, cfg] : {std::pair{"kld", kld},
                                        std::pair{"gwd", gwd},
                                        std::pair{"sl1", sl1}}) {
          rbox::FitConfig full = cfg;
          full.stop_iou = 1.0;
          budget.emplace_back(name, full);
        }
        const auto rows_a = rbox::fit_suite(aspect, budget);

        // easy-case fixture: default stop, count how many runs reach it
        std::vector<std::pair<std::string, rbox::FitConfig>> easy;
        easy.emplace_back("kld", kld);
        easy.emplace_back("gwd", gwd);
        easy.emplace_back("sl1", sl1);
        const auto rows_s = rbox::fit_suite(squares, easy);

        const bool ordered =
            rows_a[0].mean_final_iou >= rows_a[1].mean_final_iou &&
            rows_a[1].mean_final_iou >= rows_a[2].mean_final_iou &&
            rows_a[0].mean_final_iou >= 0.9;
        const int conv =
            rows_s[0].converged + rows_s[1].converged + rows_s[2].converged;
        std::printf(
            "%9.4g %7.4g %8.4g | %5.3f %5.3f %5.3f | %5.3f %5.3f %5.3f "
            "%3d/150%s%s\n",
            lrc, lrs, lra, rows_a[0].mean_final_iou, rows_a[1].mean_final_iou,
            rows_a[2].mean_final_iou, rows_s[0].mean_final_iou,
            rows_s[1].mean_final_iou, rows_s[2].mean_final_iou, conv,
            ordered ? "  <- ordered" : "",
            conv == 150 ? " easy-ok" : "");
      }
    }
  }
  return 0;
}
