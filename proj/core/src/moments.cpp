#include "mcn/moments.hpp"

#include <algorithm>
#include <cstdlib>
#include <map>

#include "mcn/errors.hpp"

namespace mcn {

CandidateSet enumerate_candidates(int num_segments) {
  if (num_segments <= 0) throw DataError("candidate enumeration needs at least one segment");
  CandidateSet out;
  out.reserve(static_cast<std::size_t>(num_segments) * (num_segments + 1) / 2);
  for (int s = 0; s < num_segments; ++s) {
    for (int e = s; e < num_segments; ++e) out.push_back({s, e});
  }
  return out;
}

double temporal_iou(Span a, Span b) {
  const int inter_lo = std::max(a.start, b.start);
  const int inter_hi = std::min(a.end, b.end);
  const int inter = std::max(0, inter_hi - inter_lo + 1);
  const int uni = a.length() + b.length() - inter;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

std::pair<double, double> temporal_endpoint_feature(Span span, int num_segments) {
  if (num_segments <= 0) throw DataError("endpoint feature needs at least one segment");
  const double n = static_cast<double>(num_segments);
  return {static_cast<double>(span.start) / n, static_cast<double>(span.end + 1) / n};
}

namespace {

bool spans_agree(Span a, Span b) {
  return std::abs(a.start - b.start) <= 1 && std::abs(a.end - b.end) <= 1;
}

}  // namespace

bool check_agreement(const std::vector<Span>& annotations) {
  if (annotations.size() != 4) throw DataError("agreement check needs exactly 4 annotations");
  // With 4 annotators a pairwise-agreeing subset of size >= 3 exists iff
  // some triple agrees; check all four triples directly.
  for (std::size_t skip = 0; skip < 4; ++skip) {
    bool ok = true;
    for (std::size_t i = 0; i < 4 && ok; ++i) {
      if (i == skip) continue;
      for (std::size_t j = i + 1; j < 4; ++j) {
        if (j == skip) continue;
        if (!spans_agree(annotations[i], annotations[j])) {
          ok = false;
          break;
        }
      }
    }
    if (ok) return true;
  }
  return false;
}

Span consensus_span(const std::vector<Span>& spans) {
  if (spans.empty()) throw DataError("consensus of an empty span list");
  std::map<Span, int> counts;
  for (const Span& s : spans) ++counts[s];
  Span best = counts.begin()->first;
  int best_count = counts.begin()->second;
  for (const auto& [span, count] : counts) {
    if (count > best_count) {
      best = span;
      best_count = count;
    }
  }
  return best;
}

}  // namespace mcn
