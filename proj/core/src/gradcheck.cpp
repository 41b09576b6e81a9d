#include "mcn/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "mcn/rng.hpp"

namespace mcn {

namespace {

double relative_error(double a, double n, double floor) {
  const double denom = std::max({std::abs(a), std::abs(n), floor, 1e-12});
  return std::abs(a - n) / denom;
}

}  // namespace

GradCheckReport grad_check(const ParamRefs& params, const std::function<double()>& loss,
                           const GradTable& analytic, const GradCheckConfig& config) {
  GradCheckReport report;
  Rng rng(config.seed);

  for (const auto& p : params) {
    GradCheckEntry entry;
    entry.name = p.name;
    Tensor2& t = *p.tensor;

    std::vector<std::size_t> coords(t.size());
    for (std::size_t i = 0; i < coords.size(); ++i) coords[i] = i;
    if (config.max_coords_per_param > 0 && coords.size() > config.max_coords_per_param) {
      rng.shuffle(coords);
      coords.resize(config.max_coords_per_param);
      std::sort(coords.begin(), coords.end());
    }

    const bool have_analytic = analytic.contains(p.name);
    for (const std::size_t flat : coords) {
      const double saved = t.raw()[flat];
      t.raw()[flat] = saved + config.step;
      const double up = loss();
      t.raw()[flat] = saved - config.step;
      const double down = loss();
      t.raw()[flat] = saved;

      const double numeric = (up - down) / (2.0 * config.step);
      const double analytic_v = have_analytic ? analytic.at(p.name).raw()[flat] : 0.0;
      if (std::abs(analytic_v) + std::abs(numeric) < config.exempt_below) continue;

      ++entry.coords_checked;
      const double rel = relative_error(analytic_v, numeric, config.denominator_floor);
      if (rel > entry.max_rel_error) {
        entry.max_rel_error = rel;
        entry.worst_row = flat / t.cols();
        entry.worst_col = flat % t.cols();
        entry.worst_analytic = analytic_v;
        entry.worst_numeric = numeric;
      }
    }

    report.max_rel_error = std::max(report.max_rel_error, entry.max_rel_error);
    report.per_param.push_back(std::move(entry));
  }

  report.pass = report.max_rel_error <= config.tolerance;
  return report;
}

std::string GradCheckReport::summary() const {
  std::ostringstream out;
  for (const auto& e : per_param) {
    out << e.name << ": checked=" << e.coords_checked << " max_rel_error=" << e.max_rel_error;
    if (e.coords_checked > 0) {
      out << " worst=(" << e.worst_row << "," << e.worst_col << ") analytic=" << e.worst_analytic
          << " numeric=" << e.worst_numeric;
    }
    out << "\n";
  }
  out << (pass ? "PASS" : "FAIL") << " max_rel_error=" << max_rel_error << "\n";
  return out.str();
}

}  // namespace mcn
