#pragma once

#include <compare>
#include <utility>
#include <vector>

namespace mcn {

/// Inclusive range of segment indices identifying one candidate moment.
struct Span {
  int start = 0;
  int end = 0;

  int length() const { return end - start + 1; }
  auto operator<=>(const Span&) const = default;
};

using CandidateSet = std::vector<Span>;

/// All contiguous spans of an n-segment video, ordered by (start, end).
/// n(n+1)/2 entries; n == 0 is an empty-video error.
CandidateSet enumerate_candidates(int num_segments);

/// Intersection over union counted in whole segments.
double temporal_iou(Span a, Span b);

/// (start/n, (end+1)/n): the full video maps to (0, 1) and a single segment
/// has width 1/n.
std::pair<double, double> temporal_endpoint_feature(Span span, int num_segments);

/// Accept when some subset of >= 3 of the 4 annotator spans is pairwise
/// agreeing, two spans agreeing when both endpoints differ by at most one
/// segment. Exactly 4 spans required.
bool check_agreement(const std::vector<Span>& annotations);

/// Most frequent exact span, ties broken by (start, end) order.
Span consensus_span(const std::vector<Span>& spans);

}  // namespace mcn
