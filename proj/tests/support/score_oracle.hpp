#pragma once

// Reference scorer for the leave-one-annotator-out protocol: enumerate the
// four triples explicitly and average each one directly. Deliberately written
// without reference to the library's implementation.

#include <algorithm>
#include <cstddef>
#include <vector>

#include "mcn/moments.hpp"

namespace testsupport {

enum class OracleMetric { r1, r5, miou };

inline double oracle_annotation_value(const std::vector<mcn::Span>& ranking,
                                      mcn::Span annotation, OracleMetric metric) {
  switch (metric) {
    case OracleMetric::r1:
      return ranking[0] == annotation ? 1.0 : 0.0;
    case OracleMetric::r5: {
      const std::size_t top = std::min<std::size_t>(5, ranking.size());
      for (std::size_t r = 0; r < top; ++r) {
        if (ranking[r] == annotation) return 1.0;
      }
      return 0.0;
    }
    case OracleMetric::miou:
      return mcn::temporal_iou(ranking[0], annotation);
  }
  return 0.0;
}

inline double oracle_score(const std::vector<mcn::Span>& ranking,
                           const std::vector<mcn::Span>& annotations,
                           OracleMetric metric) {
  double best = 0.0;
  for (std::size_t dropped = 0; dropped < 4; ++dropped) {
    double total = 0.0;
    for (std::size_t i = 0; i < 4; ++i) {
      if (i == dropped) continue;
      total += oracle_annotation_value(ranking, annotations[i], metric);
    }
    best = std::max(best, total / 3.0);
  }
  return best;
}

}  // namespace testsupport
