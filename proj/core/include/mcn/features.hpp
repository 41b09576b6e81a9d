#pragma once

#include <string>
#include <utility>
#include <vector>

#include "mcn/moments.hpp"
#include "mcn/tensor.hpp"

namespace mcn {

enum class Modality { rgb, flow };

const char* modality_name(Modality m);

/// Per-frame feature matrix for one video and one modality. Frames map onto
/// segments uniformly: segment s owns frames [s*fps, (s+1)*fps) and the last
/// segment absorbs any remainder.
struct VideoFeatures {
  std::string video_id;
  Modality modality = Modality::rgb;
  Tensor2 frames;  // T x D
  int num_segments = 0;
  int frames_per_segment = 1;

  int frame_count() const { return static_cast<int>(frames.rows()); }
  int dim() const { return static_cast<int>(frames.cols()); }
  /// Half-open frame range [first, last) of one segment.
  std::pair<int, int> segment_frame_range(int segment) const;
  void validate() const;
};

/// Mean of the frame vectors whose segment lies inside the span.
Vec pool_local(const VideoFeatures& vf, Span span);

/// Mean over every frame of the video.
Vec pool_global(const VideoFeatures& vf);

struct ContextFlags {
  bool use_global = true;
  bool use_tef = true;
  /// Zero-fill keeps the input at 2D+2 for every ablation; compact drops the
  /// disabled slices so the first layer shrinks instead.
  bool compact = false;
};

std::size_t context_input_dim(std::size_t feature_dim, const ContextFlags& flags);

/// [local ; global ; tef] with disabled parts zero-filled (or dropped when
/// flags.compact).
Vec build_context_input(const VideoFeatures& vf, Span span, const ContextFlags& flags);

struct WindowFeature {
  int begin_frame = 0;
  int end_frame = 0;  // exclusive
  Vec local;
  std::pair<double, double> tef;
};

/// Frame-level windows for fine-grained scoring: starts 0, stride, 2*stride...
/// while start + window <= T, so floor((T-window)/stride)+1 windows. A window
/// larger than the video degenerates to the single whole-video window.
std::vector<WindowFeature> sliding_windows(const VideoFeatures& vf, int window_frames,
                                           int stride_frames);

}  // namespace mcn
