#pragma once

#include <optional>
#include <string>
#include <vector>

#include "mcn/config.hpp"
#include "mcn/features.hpp"
#include "mcn/language.hpp"
#include "mcn/layers.hpp"
#include "mcn/moments.hpp"
#include "mcn/params.hpp"
#include "mcn/rng.hpp"

namespace mcn {

/// linear -> ReLU -> linear from a temporal context input to the joint space.
struct VisualBranch {
  Tensor2 w1, b1;  // hidden x input, 1 x hidden
  Tensor2 w2, b2;  // joint x hidden, 1 x joint
  bool identity_activation = false;  // linearized variant for analysis tests
};

VisualBranch make_visual_branch(std::size_t input_dim, std::size_t hidden_dim,
                                std::size_t joint_dim);

struct VisualCache {
  Vec input, pre_hidden, hidden;
};

Vec visual_branch_forward(const VisualBranch& branch, const Vec& input,
                          VisualCache* cache = nullptr);

struct VisualBranchGrads {
  Tensor2 w1, b1, w2, b2;
};

VisualBranchGrads make_visual_branch_grads(const VisualBranch& branch);

void visual_branch_backward(const VisualBranch& branch, const VisualCache& cache,
                            const Vec& upstream, VisualBranchGrads& acc);

/// Every trainable weight of the joint model. The embedding table rides along
/// for checkpointing even when frozen.
struct ModelParams {
  VisualBranch rgb;
  VisualBranch flow;
  Vocabulary vocab;
  LanguageParams language;
  Tensor2 language_free_embedding;  // 1 x joint, used instead of the encoder

  ContextFlags flags;
  bool use_rgb = true;
  bool use_flow = true;
  bool language_free = false;
  bool finetune_embeddings = false;
  double late_fusion = 2.33;
  std::size_t rgb_dim = 0;   // per-frame feature width per modality
  std::size_t flow_dim = 0;

  std::size_t joint_dim() const { return language.proj_w.rows(); }

  /// All tensors in checkpoint order.
  ParamRefs named_tensors();
  /// Tensors SGD may touch (drops the frozen embedding table).
  ParamRefs trainable_tensors();
};

/// Builds and initializes a model from config plus a loaded vocabulary.
/// Weights are uniform(-0.08, 0.08), biases zero, LSTM forget bias +1.
ModelParams build_model(const RunConfig& config, Vocabulary vocab,
                        std::size_t rgb_dim, std::size_t flow_dim, Rng& rng);

Vec embed_visual(const ModelParams& params, const VideoFeatures& vf, Span span,
                 Modality modality, VisualCache* cache = nullptr);

/// Language-side embedding for a query (encoder or the shared learned vector).
Vec embed_language(const ModelParams& params, const std::vector<int>& tokens,
                   LanguageCache* cache = nullptr);

/// Squared-distance fusion of the enabled modalities:
///   |V - L|^2 + late_fusion * |F - L|^2.
double distance(const ModelParams& params, const Vec& sentence_embedding,
                const VideoFeatures* rgb, const VideoFeatures* flow, Span span);

struct ScoredSpan {
  Span span;
  double distance = 0.0;
};

/// Scores every candidate moment and sorts ascending by distance, ties broken
/// by (start, end).
std::vector<ScoredSpan> localize(const ModelParams& params, const Query& query,
                                 const VideoFeatures* rgb, const VideoFeatures* flow);

std::vector<Span> ranking_of(const std::vector<ScoredSpan>& scored);

double hinge(double positive, double negative, double margin);

struct TrainingExample {
  Query query;
  Span positive;
  const VideoFeatures* rgb = nullptr;
  const VideoFeatures* flow = nullptr;
};

struct InterNegative {
  const VideoFeatures* rgb = nullptr;
  const VideoFeatures* flow = nullptr;
};

/// Sum over all candidates except the positive of
/// hinge(D(s,v,positive), D(s,v,negative), margin).
double intra_loss(const ModelParams& params, const TrainingExample& example,
                  double margin);

/// Sum over sampled other videos of the hinge against the identical span.
/// Caller guarantees each negative video holds the positive span.
double inter_loss(const ModelParams& params, const TrainingExample& example,
                  const std::vector<InterNegative>& negatives, double margin);

struct LossBatchItem {
  const TrainingExample* example = nullptr;
  std::vector<InterNegative> negatives;
};

struct LossBreakdown {
  double total = 0.0;
  double intra = 0.0;
  double inter = 0.0;
};

/// intra_weight * sum(intra) + (1 - intra_weight) * sum(inter) over the batch.
/// With grads != nullptr also accumulates d(loss)/d(theta).
LossBreakdown combined_loss(const ModelParams& params, const std::vector<LossBatchItem>& batch,
                            double margin, double intra_weight, GradTable* grads = nullptr);

}  // namespace mcn
