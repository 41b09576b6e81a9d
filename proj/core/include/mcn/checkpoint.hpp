#pragma once

#include <map>
#include <string>

#include "mcn/config.hpp"
#include "mcn/model.hpp"
#include "mcn/tensor.hpp"

namespace mcn {

/// Binary checkpoint: a config echo plus every named tensor. Writing the
/// same parameters twice yields byte-identical files.
void save_checkpoint(const std::string& path, const RunConfig& config, ModelParams& params);

struct Checkpoint {
  RunConfig config;
  std::map<std::string, Tensor2> tensors;
};

Checkpoint load_checkpoint(const std::string& path);

/// Rebuilds a full model from a checkpoint. The vocabulary is restored from
/// the word-vector file recorded in the checkpoint config; the stored
/// embedding table (which includes learned updates) overrides file contents.
ModelParams restore_model(const Checkpoint& ckpt);

}  // namespace mcn
