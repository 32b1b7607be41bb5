#pragma once

#include <string>
#include <vector>

namespace rbox {

struct SelftestOptions {
  // Test-harness hook: skews sigma(0,1) after box->Gaussian conversion so
  // the dual-route checks must catch it. Never set outside tests.
  bool break_sigma = false;
};

struct PropertyResult {
  std::string name;
  bool pass = false;
  std::string detail;
};

// Runs the whole invariant suite with fixed seeds: scale invariance,
// horizontal degeneration, matrix-vs-expanded equivalence, gradient checks
// for every distance kind, the Monte-Carlo IoU cross-check, and the loss
// normalization identities. Deterministic output, a few seconds of runtime.
std::vector<PropertyResult> run_selftest(const SelftestOptions& opts = {});

}  // namespace rbox
