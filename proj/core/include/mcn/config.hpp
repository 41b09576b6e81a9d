#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>

namespace mcn {

/// One flat configuration for every command. Serialized as `key = value`
/// lines; command-line flags override file values.
struct RunConfig {
  // paths
  std::string annotations;
  std::string feature_index;
  std::string splits;
  std::string word_vectors;
  std::string checkpoint;
  std::string out_dir;

  // model shape
  int joint_dim = 100;
  int hidden_dim = 500;
  int lstm_hidden = 1000;

  // loss and optimization
  double late_fusion = 2.33;  // weight on the flow-branch squared distance
  double margin = 0.1;
  double intra_weight = 0.5;  // external key/flag name: lambda
  double learning_rate = 0.05;
  int batch_size = 120;
  int epochs = 30;
  int inter_negatives = 1;
  int patience = 5;  // early stop on validation R@1; 0 disables
  std::uint64_t seed = 1;
  int max_tokens = 50;

  // feature flags
  bool use_global = true;
  bool use_tef = true;
  bool use_rgb = true;
  bool use_flow = true;
  bool compact_input = false;
  bool language_free = false;
  bool finetune_embeddings = false;

  // evaluation
  int trials = 10000;
  int jobs = 1;
  std::string split = "test";
  std::string baseline;
  int default_num_segments = 6;

  // annotation key overrides (primary names; built-in aliases still apply)
  std::string ann_key_id;
  std::string ann_key_video;
  std::string ann_key_description;
  std::string ann_key_times;
  std::string ann_key_segments;

  /// Canonical `key = value` text, fixed key order.
  std::string to_text() const;

  void apply_line(const std::string& line, int line_number);
  static RunConfig from_text(const std::string& text);
  static RunConfig from_file(const std::string& path);

  /// Range checks shared by every command.
  void validate() const;
  /// Fields that fix the parameter tensors; evaluation must take these from
  /// the checkpoint, not the caller.
  void adopt_model_structure(const RunConfig& from);
};

}  // namespace mcn
