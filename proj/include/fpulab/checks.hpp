#pragma once

#include <string>
#include <vector>

namespace fpulab {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

/// Built-in invariant suite: transform round-trip, Parseval, force-gradient
/// consistency, and split-step convergence order. Deterministic (fixed seed),
/// runs in seconds.
std::vector<CheckResult> run_self_checks();

}  // namespace fpulab
