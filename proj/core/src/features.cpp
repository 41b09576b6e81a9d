#include "mcn/features.hpp"

#include <algorithm>

#include "mcn/errors.hpp"

namespace mcn {

const char* modality_name(Modality m) { return m == Modality::rgb ? "rgb" : "flow"; }

std::pair<int, int> VideoFeatures::segment_frame_range(int segment) const {
  if (segment < 0 || segment >= num_segments) {
    throw DimensionError("segment " + std::to_string(segment) + " out of range for " +
                         std::to_string(num_segments) + " segments");
  }
  const int first = segment * frames_per_segment;
  const int last =
      segment == num_segments - 1 ? frame_count() : (segment + 1) * frames_per_segment;
  return {first, last};
}

void VideoFeatures::validate() const {
  if (num_segments <= 0) throw DataError(video_id + ": num_segments must be positive");
  if (frames_per_segment <= 0) throw DataError(video_id + ": frames_per_segment must be positive");
  if (frame_count() < num_segments * frames_per_segment) {
    throw DataError(video_id + ": " + std::to_string(frame_count()) + " frames cannot cover " +
                    std::to_string(num_segments) + " segments of " +
                    std::to_string(frames_per_segment));
  }
  if (!frames.all_finite()) throw DataError(video_id + ": non-finite feature value");
}

namespace {

Vec mean_of_frames(const VideoFeatures& vf, int first, int last) {
  Vec acc(vf.frames.cols(), 0.0);
  for (int f = first; f < last; ++f) {
    for (std::size_t d = 0; d < acc.size(); ++d) acc[d] += vf.frames.at(f, d);
  }
  const double inv = 1.0 / static_cast<double>(last - first);
  for (double& v : acc) v *= inv;
  return acc;
}

}  // namespace

Vec pool_local(const VideoFeatures& vf, Span span) {
  if (span.start < 0 || span.end >= vf.num_segments || span.start > span.end) {
    throw DimensionError(vf.video_id + ": span [" + std::to_string(span.start) + "," +
                         std::to_string(span.end) + "] out of range for " +
                         std::to_string(vf.num_segments) + " segments");
  }
  const int first = vf.segment_frame_range(span.start).first;
  const int last = vf.segment_frame_range(span.end).second;
  return mean_of_frames(vf, first, last);
}

Vec pool_global(const VideoFeatures& vf) {
  if (vf.frame_count() == 0) throw DataError(vf.video_id + ": no frames to pool");
  return mean_of_frames(vf, 0, vf.frame_count());
}

std::size_t context_input_dim(std::size_t feature_dim, const ContextFlags& flags) {
  if (!flags.compact) return 2 * feature_dim + 2;
  std::size_t dim = feature_dim;
  if (flags.use_global) dim += feature_dim;
  if (flags.use_tef) dim += 2;
  return dim;
}

Vec build_context_input(const VideoFeatures& vf, Span span, const ContextFlags& flags) {
  const Vec local = pool_local(vf, span);
  Vec out;
  out.reserve(context_input_dim(local.size(), flags));
  out.insert(out.end(), local.begin(), local.end());

  if (flags.use_global) {
    const Vec global = pool_global(vf);
    out.insert(out.end(), global.begin(), global.end());
  } else if (!flags.compact) {
    out.insert(out.end(), local.size(), 0.0);
  }

  if (flags.use_tef) {
    const auto [a, b] = temporal_endpoint_feature(span, vf.num_segments);
    out.push_back(a);
    out.push_back(b);
  } else if (!flags.compact) {
    out.push_back(0.0);
    out.push_back(0.0);
  }
  return out;
}

std::vector<WindowFeature> sliding_windows(const VideoFeatures& vf, int window_frames,
                                           int stride_frames) {
  if (window_frames <= 0 || stride_frames <= 0) {
    throw ConfigError("window and stride must be positive");
  }
  const int total = vf.frame_count();
  if (total == 0) throw DataError(vf.video_id + ": no frames to window");

  std::vector<WindowFeature> out;
  if (window_frames > total) {
    WindowFeature w;
    w.begin_frame = 0;
    w.end_frame = total;
    w.local = mean_of_frames(vf, 0, total);
    w.tef = {0.0, 1.0};
    out.push_back(std::move(w));
    return out;
  }

  for (int begin = 0; begin + window_frames <= total; begin += stride_frames) {
    WindowFeature w;
    w.begin_frame = begin;
    w.end_frame = begin + window_frames;
    w.local = mean_of_frames(vf, w.begin_frame, w.end_frame);
    w.tef = {static_cast<double>(begin) / total,
             static_cast<double>(begin + window_frames) / total};
    out.push_back(std::move(w));
  }
  return out;
}

}  // namespace mcn
