#pragma once

#include <string>
#include <vector>

#include "mcn/config.hpp"
#include "mcn/data.hpp"
#include "mcn/model.hpp"

namespace mcn {

struct EpochLog {
  int epoch = 0;
  double train_loss = 0.0;  // mean combined loss per example
  double intra = 0.0;
  double inter = 0.0;
  double val_r1 = 0.0;
};

struct TrainStats {
  std::size_t inter_sample_calls = 0;
  std::size_t inter_skipped = 0;  // no eligible in-batch negative after resampling
};

struct TrainResult {
  ModelParams best_params;
  int best_epoch = -1;  // -1 when epochs == 0
  double best_val_r1 = 0.0;
  std::vector<EpochLog> log;
  TrainStats stats;
};

std::vector<TrainingExample> build_training_examples(
    const std::vector<const AnnotationRecord*>& records, const ModelParams& params,
    FeatureStore& store);

/// Minibatch SGD on the combined ranking loss with in-batch inter-video
/// negatives. Deterministic given (config, seed); keeps the best-validation
/// parameters. Non-finite loss raises DivergenceError.
TrainResult train(const RunConfig& config, const Corpus& corpus, FeatureStore& store,
                  ModelParams initial);

}  // namespace mcn
