#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "mcn/params.hpp"

namespace mcn {

struct GradCheckConfig {
  /// Central differences: truncation error shrinks as step^2 while rounding
  /// noise grows as 1/step; 1e-5 keeps both near 1e-8 for losses of order 1.
  double step = 1e-5;
  double tolerance = 1e-4;
  /// 0 checks every coordinate; otherwise a random sample per parameter.
  std::size_t max_coords_per_param = 0;
  std::uint64_t seed = 1;
  /// Coordinates with |analytic| + |numeric| below this are skipped.
  double exempt_below = 1e-8;
  /// Error denominator is max(|analytic|, |numeric|, this floor). Gradients
  /// smaller than the floor are compared against it instead, so rounding
  /// noise in the difference quotient cannot dominate the ratio.
  double denominator_floor = 1e-3;
};

struct GradCheckEntry {
  std::string name;
  std::size_t coords_checked = 0;
  double max_rel_error = 0.0;
  std::size_t worst_row = 0, worst_col = 0;
  double worst_analytic = 0.0, worst_numeric = 0.0;
};

struct GradCheckReport {
  std::vector<GradCheckEntry> per_param;
  double max_rel_error = 0.0;
  bool pass = false;

  std::string summary() const;
};

/// Central finite differences against a precomputed analytic gradient table.
/// `loss` re-evaluates the objective at the current (perturbed) parameter
/// values; parameters are restored exactly after probing. Failures are
/// reported, never thrown.
GradCheckReport grad_check(const ParamRefs& params,
                           const std::function<double()>& loss,
                           const GradTable& analytic,
                           const GradCheckConfig& config = {});

}  // namespace mcn
