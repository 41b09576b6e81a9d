#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace mcn {

struct LayerCheckSummary {
  std::string name;
  double max_rel_error = 0.0;
  bool pass = true;
  /// Per-parameter breakdown of the worst failing instance, empty while passing.
  std::string failure_detail;
};

/// Finite-difference verification of every analytic backward pass: the bare
/// layers (linear, relu, lstm), the two-layer visual branch, and the full
/// combined ranking loss on a tiny two-video batch. Each instance redraws its
/// random point until no hinge argument or relu pre-activation sits close
/// enough to a kink for the probe to cross it. `corrupt_linear` perturbs one
/// analytic entry to prove the checker can fail.
std::vector<LayerCheckSummary> run_gradient_suite(int instances, std::uint64_t seed,
                                                  bool corrupt_linear = false);

}  // namespace mcn
