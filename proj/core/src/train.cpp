#include "mcn/train.hpp"

#include <cmath>

#include "mcn/errors.hpp"
#include "mcn/eval.hpp"
#include "mcn/log.hpp"
#include "mcn/rng.hpp"

namespace mcn {

std::vector<TrainingExample> build_training_examples(
    const std::vector<const AnnotationRecord*>& records, const ModelParams& params,
    FeatureStore& store) {
  std::vector<TrainingExample> examples;
  examples.reserve(records.size());
  for (const AnnotationRecord* rec : records) {
    TrainingExample ex;
    ex.query.raw_text = rec->description;
    ex.query.video_id = rec->video_id;
    ex.query.tokens = params.vocab.lookup_all(tokenize(rec->description));
    ex.query.annotations = rec->times;
    ex.positive = consensus_span(rec->times);
    if (params.use_rgb) ex.rgb = &store.get(rec->video_id, Modality::rgb);
    if (params.use_flow) ex.flow = &store.get(rec->video_id, Modality::flow);
    examples.push_back(std::move(ex));
  }
  return examples;
}

namespace {

int example_segments(const TrainingExample& ex) {
  return ex.rgb != nullptr ? ex.rgb->num_segments : ex.flow->num_segments;
}

}  // namespace

TrainResult train(const RunConfig& config, const Corpus& corpus, FeatureStore& store,
                  ModelParams initial) {
  config.validate();
  TrainResult result;
  result.best_params = initial;

  const auto train_records = corpus.split(SplitId::train);
  if (train_records.empty()) throw ConfigError("training split is empty");
  const auto val_records = corpus.split(SplitId::val);
  if (val_records.empty() && config.epochs > 0) {
    warn("validation split is empty; keeping the last epoch");
  }

  ModelParams params = std::move(initial);
  const std::vector<TrainingExample> examples =
      build_training_examples(train_records, params, store);

  Rng master(config.seed);
  Rng shuffle_rng = master.fork(1);
  Rng sample_rng = master.fork(2);

  const ParamRefs trainable = params.trainable_tensors();
  const RankingSource ranker = model_ranker(params, store);
  const bool intra_only = config.intra_weight == 1.0;

  std::vector<std::size_t> order(examples.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  double best_val = -1.0;
  int epochs_since_best = 0;

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    shuffle_rng.shuffle(order);

    double epoch_total = 0.0, epoch_intra = 0.0, epoch_inter = 0.0;
    for (std::size_t begin = 0; begin < order.size();
         begin += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t end =
          std::min(order.size(), begin + static_cast<std::size_t>(config.batch_size));

      std::vector<LossBatchItem> batch;
      batch.reserve(end - begin);
      for (std::size_t i = begin; i < end; ++i) {
        LossBatchItem item;
        item.example = &examples[order[i]];

        // In-batch negatives: another video of this batch that contains the
        // positive span. With lambda = 1 the inter term carries no weight and
        // the sampler must not consume randomness.
        if (!intra_only) {
          for (int neg = 0; neg < config.inter_negatives; ++neg) {
            ++result.stats.inter_sample_calls;
            bool found = false;
            for (int attempt = 0; attempt < 10 && !found; ++attempt) {
              const std::size_t pick = begin + sample_rng.index(end - begin);
              const TrainingExample& other = examples[order[pick]];
              if (other.query.video_id == item.example->query.video_id) continue;
              if (item.example->positive.end >= example_segments(other)) continue;
              item.negatives.push_back({other.rgb, other.flow});
              found = true;
            }
            if (!found) ++result.stats.inter_skipped;
          }
        }
        batch.push_back(std::move(item));
      }

      GradTable grads(trainable);
      const LossBreakdown loss =
          combined_loss(params, batch, config.margin, config.intra_weight, &grads);
      if (!std::isfinite(loss.total)) {
        throw DivergenceError("non-finite loss at epoch " + std::to_string(epoch) + " batch " +
                              std::to_string(begin / config.batch_size));
      }
      epoch_total += loss.total;
      epoch_intra += loss.intra;
      epoch_inter += loss.inter;
      sgd_step(trainable, grads, config.learning_rate);
    }

    EpochLog row;
    row.epoch = epoch;
    const double inv = 1.0 / static_cast<double>(examples.size());
    row.train_loss = epoch_total * inv;
    row.intra = epoch_intra * inv;
    row.inter = epoch_inter * inv;
    if (!val_records.empty()) {
      row.val_r1 = evaluate(ranker, val_records, config.jobs).r1;
    }
    result.log.push_back(row);

    const bool improved = val_records.empty() || row.val_r1 > best_val;
    if (improved) {
      best_val = row.val_r1;
      result.best_params = params;
      result.best_epoch = epoch;
      result.best_val_r1 = row.val_r1;
      epochs_since_best = 0;
    } else {
      ++epochs_since_best;
      if (config.patience > 0 && epochs_since_best >= config.patience) break;
    }
  }

  if (config.epochs == 0) {
    warn("epochs = 0: parameters left at initialization");
    result.best_params = std::move(params);
  }
  return result;
}

}  // namespace mcn
