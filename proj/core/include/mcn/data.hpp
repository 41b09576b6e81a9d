#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mcn/features.hpp"
#include "mcn/moments.hpp"

namespace mcn {

struct AnnotationRecord {
  std::string annotation_id;
  std::string video_id;
  std::string description;
  std::vector<Span> times;  // 1..4 annotator spans after ingestion policy
  int num_segments = 0;
  bool padded = false;  // repeated the modal span to reach 4 annotations
};

/// Primary key names for the annotation JSON; built-in aliases (id, video_id,
/// desc) are always accepted in addition.
struct AnnotationKeys {
  std::string id = "annotation_id";
  std::string video = "video";
  std::string description = "description";
  std::string times = "times";
  std::string segments = "num_segments";
  int default_num_segments = 6;
};

struct IngestReport {
  std::size_t records_read = 0;
  std::size_t records_kept = 0;
  std::size_t records_dropped = 0;   // no valid span survived
  std::size_t spans_rejected = 0;
  std::size_t spans_clipped = 0;
  std::size_t records_padded = 0;
};

/// UTF-8 JSON array of annotation objects. Invalid spans are rejected (start >
/// end or start out of range) or end-clipped, with warnings; surviving records
/// are padded to 4 spans by repeating the modal span and sorted by
/// annotation_id. Malformed records raise FormatError naming index and field.
std::vector<AnnotationRecord> load_annotations(const std::string& path,
                                               const AnnotationKeys& keys = {},
                                               IngestReport* report = nullptr);

void save_annotations(const std::string& path, const std::vector<AnnotationRecord>& records);

// ---- feature container -----------------------------------------------------
//
// MCNF, little-endian: magic "MCNF", u32 version = 1, u8 modality (0 rgb,
// 1 flow), u32 T, u32 D, u32 frames_per_segment, then T*D float32 row-major.

VideoFeatures load_features(const std::string& path);
void save_features(const std::string& path, const VideoFeatures& vf);

// ---- corpus ----------------------------------------------------------------

enum class SplitId { train, val, test };

const char* split_name(SplitId split);
SplitId parse_split(const std::string& name);

struct FeaturePaths {
  std::string rgb;
  std::string flow;
};

/// Reads "video_id<TAB>rgb_path<TAB>flow_path" lines. Relative paths are
/// resolved against the index file's directory so a corpus tree can move.
std::map<std::string, FeaturePaths> load_feature_index(const std::string& path);

struct Corpus {
  std::vector<AnnotationRecord> records;
  std::map<std::string, SplitId> splits;            // video -> split
  std::map<std::string, FeaturePaths> feature_index;  // video -> files
  IngestReport ingest;

  std::vector<const AnnotationRecord*> split(SplitId id) const;
  std::vector<std::string> split_videos(SplitId id) const;
};

/// Annotations + split file (+ optional feature index). Verifies that every
/// video id appears in exactly one split.
Corpus load_corpus(const std::string& annotations_path, const std::string& splits_path,
                   const std::string& feature_index_path = "",
                   const AnnotationKeys& keys = {});

void save_split_file(const std::string& path,
                     const std::vector<std::pair<std::string, SplitId>>& assignments);
void save_feature_index(const std::string& path,
                        const std::vector<std::pair<std::string, FeaturePaths>>& entries);

/// Loads and caches per-(video, modality) features.
class FeatureStore {
 public:
  explicit FeatureStore(std::map<std::string, FeaturePaths> index);

  const VideoFeatures& get(const std::string& video_id, Modality modality);
  bool has(const std::string& video_id) const;
  /// Loads everything the given videos need; missing files raise DataError
  /// listing every absent video id.
  void preload(const std::vector<std::string>& video_ids, bool rgb, bool flow);

 private:
  std::map<std::string, FeaturePaths> index_;
  std::map<std::pair<std::string, Modality>, VideoFeatures> cache_;
};

}  // namespace mcn
