#pragma once

#include <cstdint>
#include <string>

namespace mcn {

/// Planted-concept corpus for desk-scale verification. Every segment carries
/// a latent concept vector; queries name the concepts of their target span.
/// Position queries ("first X" / "last X") plant the same concept twice so
/// only the temporal endpoints disambiguate. All four annotations are
/// identical, making the evaluation upper bound 100%.
struct SyntheticSpec {
  std::uint64_t seed = 7;
  int num_videos = 100;
  int num_val = 20;
  int num_test = 0;  // remainder after val/test goes to train
  int min_segments = 5;
  int max_segments = 6;
  int frames_per_segment = 4;
  int feature_dim = 16;
  int embed_dim = 16;
  int concept_vocab = 24;
  int queries_per_video = 2;
  double noise_sigma = 0.1;
  double positional_rate = 0.2;
  /// Probability mass pulled toward early start segments, mirroring how
  /// annotators favor the beginning of a video. 0 = uniform.
  double start_bias = 0.4;
  /// All segments of a video share one concept; position queries become the
  /// only informative kind.
  bool shared_concepts = false;

  void validate() const;
};

struct SyntheticSummary {
  int videos = 0;
  int queries = 0;
  int position_queries = 0;
};

/// Writes annotations.json, features/*.mcnf, index.tsv, splits.tsv,
/// wordvecs.txt and the planted concept tables (concepts_{rgb,flow}.txt)
/// under out_dir. Byte-identical for identical specs.
SyntheticSummary generate_synthetic(const SyntheticSpec& spec, const std::string& out_dir);

}  // namespace mcn
