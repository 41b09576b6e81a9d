#include "mcn/model.hpp"

#include <algorithm>

#include "mcn/errors.hpp"

namespace mcn {

VisualBranch make_visual_branch(std::size_t input_dim, std::size_t hidden_dim,
                                std::size_t joint_dim) {
  VisualBranch b;
  b.w1 = Tensor2(hidden_dim, input_dim);
  b.b1 = Tensor2(1, hidden_dim);
  b.w2 = Tensor2(joint_dim, hidden_dim);
  b.b2 = Tensor2(1, joint_dim);
  return b;
}

Vec visual_branch_forward(const VisualBranch& branch, const Vec& input, VisualCache* cache) {
  Vec pre = linear_forward(branch.w1, branch.b1, input);
  Vec hidden = branch.identity_activation ? pre : relu(pre);
  Vec out = linear_forward(branch.w2, branch.b2, hidden);
  if (cache != nullptr) {
    cache->input = input;
    cache->pre_hidden = std::move(pre);
    cache->hidden = std::move(hidden);
  }
  return out;
}

VisualBranchGrads make_visual_branch_grads(const VisualBranch& branch) {
  VisualBranchGrads g;
  g.w1 = Tensor2(branch.w1.rows(), branch.w1.cols());
  g.b1 = Tensor2(1, branch.b1.cols());
  g.w2 = Tensor2(branch.w2.rows(), branch.w2.cols());
  g.b2 = Tensor2(1, branch.b2.cols());
  return g;
}

void visual_branch_backward(const VisualBranch& branch, const VisualCache& cache,
                            const Vec& upstream, VisualBranchGrads& acc) {
  const LinearGrads top = linear_backward(branch.w2, branch.b2, cache.hidden, upstream);
  for (std::size_t i = 0; i < top.weight.size(); ++i) acc.w2.raw()[i] += top.weight.raw()[i];
  for (std::size_t i = 0; i < top.bias.size(); ++i) acc.b2.raw()[i] += top.bias.raw()[i];

  const Vec d_pre = branch.identity_activation
                        ? top.input
                        : relu_backward(cache.pre_hidden, top.input);
  const LinearGrads bottom = linear_backward(branch.w1, branch.b1, cache.input, d_pre);
  for (std::size_t i = 0; i < bottom.weight.size(); ++i) acc.w1.raw()[i] += bottom.weight.raw()[i];
  for (std::size_t i = 0; i < bottom.bias.size(); ++i) acc.b1.raw()[i] += bottom.bias.raw()[i];
}

ParamRefs ModelParams::named_tensors() {
  ParamRefs refs;
  refs.push_back({"rgb.w1", &rgb.w1});
  refs.push_back({"rgb.b1", &rgb.b1});
  refs.push_back({"rgb.w2", &rgb.w2});
  refs.push_back({"rgb.b2", &rgb.b2});
  refs.push_back({"flow.w1", &flow.w1});
  refs.push_back({"flow.b1", &flow.b1});
  refs.push_back({"flow.w2", &flow.w2});
  refs.push_back({"flow.b2", &flow.b2});
  refs.push_back({"lang.lstm.w_input", &language.lstm.w_input});
  refs.push_back({"lang.lstm.w_hidden", &language.lstm.w_hidden});
  refs.push_back({"lang.lstm.bias", &language.lstm.bias});
  refs.push_back({"lang.proj_w", &language.proj_w});
  refs.push_back({"lang.proj_b", &language.proj_b});
  refs.push_back({"lang.free", &language_free_embedding});
  refs.push_back({"embeddings", &vocab.table});
  return refs;
}

ParamRefs ModelParams::trainable_tensors() {
  ParamRefs refs;
  if (use_rgb) {
    refs.push_back({"rgb.w1", &rgb.w1});
    refs.push_back({"rgb.b1", &rgb.b1});
    refs.push_back({"rgb.w2", &rgb.w2});
    refs.push_back({"rgb.b2", &rgb.b2});
  }
  if (use_flow) {
    refs.push_back({"flow.w1", &flow.w1});
    refs.push_back({"flow.b1", &flow.b1});
    refs.push_back({"flow.w2", &flow.w2});
    refs.push_back({"flow.b2", &flow.b2});
  }
  if (language_free) {
    refs.push_back({"lang.free", &language_free_embedding});
  } else {
    refs.push_back({"lang.lstm.w_input", &language.lstm.w_input});
    refs.push_back({"lang.lstm.w_hidden", &language.lstm.w_hidden});
    refs.push_back({"lang.lstm.bias", &language.lstm.bias});
    refs.push_back({"lang.proj_w", &language.proj_w});
    refs.push_back({"lang.proj_b", &language.proj_b});
    if (finetune_embeddings) refs.push_back({"embeddings", &vocab.table});
  }
  return refs;
}

namespace {

void init_uniform(Tensor2& t, Rng& rng) {
  for (double& v : t.raw()) v = rng.uniform(-0.08, 0.08);
}

}  // namespace

ModelParams build_model(const RunConfig& config, Vocabulary vocab, std::size_t rgb_dim,
                        std::size_t flow_dim, Rng& rng) {
  ModelParams p;
  p.flags.use_global = config.use_global;
  p.flags.use_tef = config.use_tef;
  p.flags.compact = config.compact_input;
  p.use_rgb = config.use_rgb;
  p.use_flow = config.use_flow;
  p.language_free = config.language_free;
  p.finetune_embeddings = config.finetune_embeddings;
  p.late_fusion = config.late_fusion;
  p.rgb_dim = rgb_dim;
  p.flow_dim = flow_dim;
  p.vocab = std::move(vocab);

  const auto hidden = static_cast<std::size_t>(config.hidden_dim);
  const auto joint = static_cast<std::size_t>(config.joint_dim);
  p.rgb = make_visual_branch(context_input_dim(rgb_dim, p.flags), hidden, joint);
  p.flow = make_visual_branch(context_input_dim(flow_dim, p.flags), hidden, joint);
  p.language.lstm = make_lstm(p.vocab.dim(), static_cast<std::size_t>(config.lstm_hidden));
  p.language.proj_w = Tensor2(joint, static_cast<std::size_t>(config.lstm_hidden));
  p.language.proj_b = Tensor2(1, joint);
  p.language.max_tokens = config.max_tokens;
  p.language_free_embedding = Tensor2(1, joint);

  // Fixed draw order so a given seed always produces the same weights.
  init_uniform(p.rgb.w1, rng);
  init_uniform(p.rgb.w2, rng);
  init_uniform(p.flow.w1, rng);
  init_uniform(p.flow.w2, rng);
  init_lstm(p.language.lstm, rng);
  init_uniform(p.language.proj_w, rng);
  init_uniform(p.language_free_embedding, rng);
  return p;
}

Vec embed_visual(const ModelParams& params, const VideoFeatures& vf, Span span,
                 Modality modality, VisualCache* cache) {
  const Vec input = build_context_input(vf, span, params.flags);
  const VisualBranch& branch = modality == Modality::rgb ? params.rgb : params.flow;
  return visual_branch_forward(branch, input, cache);
}

Vec embed_language(const ModelParams& params, const std::vector<int>& tokens,
                   LanguageCache* cache) {
  if (params.language_free) {
    if (cache != nullptr) {
      cache->tokens.clear();
      cache->steps.clear();
      cache->last_hidden.clear();
    }
    return params.language_free_embedding.row(0);
  }
  return encode_sentence(params.language, params.vocab.table, tokens, cache);
}

namespace {

void require_features(const ModelParams& params, const VideoFeatures* rgb,
                      const VideoFeatures* flow) {
  if (params.use_rgb && rgb == nullptr) throw DataError("rgb features required but missing");
  if (params.use_flow && flow == nullptr) throw DataError("flow features required but missing");
  if (params.use_rgb && params.use_flow && rgb->num_segments != flow->num_segments) {
    throw DataError(rgb->video_id + ": rgb has " + std::to_string(rgb->num_segments) +
                    " segments but flow has " + std::to_string(flow->num_segments));
  }
}

int segments_of(const ModelParams& params, const VideoFeatures* rgb, const VideoFeatures* flow) {
  return params.use_rgb ? rgb->num_segments : flow->num_segments;
}

}  // namespace

double distance(const ModelParams& params, const Vec& sentence_embedding,
                const VideoFeatures* rgb, const VideoFeatures* flow, Span span) {
  require_features(params, rgb, flow);
  double d = 0.0;
  if (params.use_rgb) {
    d += squared_distance(embed_visual(params, *rgb, span, Modality::rgb), sentence_embedding);
  }
  if (params.use_flow) {
    d += params.late_fusion *
         squared_distance(embed_visual(params, *flow, span, Modality::flow), sentence_embedding);
  }
  return d;
}

std::vector<ScoredSpan> localize(const ModelParams& params, const Query& query,
                                 const VideoFeatures* rgb, const VideoFeatures* flow) {
  require_features(params, rgb, flow);
  const Vec sentence = embed_language(params, query.tokens);
  const CandidateSet candidates = enumerate_candidates(segments_of(params, rgb, flow));
  std::vector<ScoredSpan> scored;
  scored.reserve(candidates.size());
  for (const Span& span : candidates) {
    scored.push_back({span, distance(params, sentence, rgb, flow, span)});
  }
  // Candidates are generated in (start, end) order; a stable sort keeps that
  // order among equal distances.
  std::stable_sort(scored.begin(), scored.end(),
                   [](const ScoredSpan& a, const ScoredSpan& b) { return a.distance < b.distance; });
  return scored;
}

std::vector<Span> ranking_of(const std::vector<ScoredSpan>& scored) {
  std::vector<Span> spans;
  spans.reserve(scored.size());
  for (const auto& s : scored) spans.push_back(s.span);
  return spans;
}

double hinge(double positive, double negative, double margin) {
  return std::max(0.0, positive - negative + margin);
}

double intra_loss(const ModelParams& params, const TrainingExample& example, double margin) {
  require_features(params, example.rgb, example.flow);
  const Vec sentence = embed_language(params, example.query.tokens);
  const double positive =
      distance(params, sentence, example.rgb, example.flow, example.positive);
  double loss = 0.0;
  for (const Span& span : enumerate_candidates(segments_of(params, example.rgb, example.flow))) {
    if (span == example.positive) continue;
    loss += hinge(positive, distance(params, sentence, example.rgb, example.flow, span), margin);
  }
  return loss;
}

double inter_loss(const ModelParams& params, const TrainingExample& example,
                  const std::vector<InterNegative>& negatives, double margin) {
  require_features(params, example.rgb, example.flow);
  const Vec sentence = embed_language(params, example.query.tokens);
  const double positive =
      distance(params, sentence, example.rgb, example.flow, example.positive);
  double loss = 0.0;
  for (const InterNegative& neg : negatives) {
    loss += hinge(positive, distance(params, sentence, neg.rgb, neg.flow, example.positive),
                  margin);
  }
  return loss;
}

namespace {

/// One scored comparison point: the visual caches for a (video, span) pair and
/// the accumulated d(loss)/d(distance) coefficient.
struct DistancePoint {
  VisualCache rgb_cache;
  VisualCache flow_cache;
  Vec rgb_embedding;
  Vec flow_embedding;
  double coefficient = 0.0;
};

double forward_point(const ModelParams& params, const Vec& sentence, const VideoFeatures* rgb,
                     const VideoFeatures* flow, Span span, DistancePoint& point) {
  double d = 0.0;
  if (params.use_rgb) {
    point.rgb_embedding = embed_visual(params, *rgb, span, Modality::rgb, &point.rgb_cache);
    d += squared_distance(point.rgb_embedding, sentence);
  }
  if (params.use_flow) {
    point.flow_embedding = embed_visual(params, *flow, span, Modality::flow, &point.flow_cache);
    d += params.late_fusion * squared_distance(point.flow_embedding, sentence);
  }
  return d;
}

void backward_point(const ModelParams& params, const Vec& sentence, const DistancePoint& point,
                    VisualBranchGrads& rgb_acc, VisualBranchGrads& flow_acc, Vec& d_sentence) {
  if (point.coefficient == 0.0) return;
  if (params.use_rgb) {
    Vec upstream(sentence.size());
    for (std::size_t i = 0; i < upstream.size(); ++i) {
      upstream[i] = point.coefficient * 2.0 * (point.rgb_embedding[i] - sentence[i]);
      d_sentence[i] -= upstream[i];
    }
    visual_branch_backward(params.rgb, point.rgb_cache, upstream, rgb_acc);
  }
  if (params.use_flow) {
    Vec upstream(sentence.size());
    for (std::size_t i = 0; i < upstream.size(); ++i) {
      upstream[i] = point.coefficient * 2.0 * params.late_fusion *
                    (point.flow_embedding[i] - sentence[i]);
      d_sentence[i] -= upstream[i];
    }
    visual_branch_backward(params.flow, point.flow_cache, upstream, flow_acc);
  }
}

void add_branch_grads(GradTable& grads, const std::string& prefix, const VisualBranchGrads& g) {
  auto add = [&grads](const std::string& name, const Tensor2& t) {
    Tensor2& dst = grads[name];
    if (dst.size() == 0) dst = Tensor2(t.rows(), t.cols());
    for (std::size_t i = 0; i < t.size(); ++i) dst.raw()[i] += t.raw()[i];
  };
  add(prefix + ".w1", g.w1);
  add(prefix + ".b1", g.b1);
  add(prefix + ".w2", g.w2);
  add(prefix + ".b2", g.b2);
}

void add_tensor(GradTable& grads, const std::string& name, const Tensor2& t) {
  Tensor2& dst = grads[name];
  if (dst.size() == 0) dst = Tensor2(t.rows(), t.cols());
  for (std::size_t i = 0; i < t.size(); ++i) dst.raw()[i] += t.raw()[i];
}

}  // namespace

LossBreakdown combined_loss(const ModelParams& params, const std::vector<LossBatchItem>& batch,
                            double margin, double intra_weight, GradTable* grads) {
  LossBreakdown out;
  const double inter_weight = 1.0 - intra_weight;

  for (const LossBatchItem& item : batch) {
    const TrainingExample& example = *item.example;
    require_features(params, example.rgb, example.flow);
    for (const InterNegative& neg : item.negatives) {
      require_features(params, neg.rgb, neg.flow);
    }

    LanguageCache language_cache;
    const Vec sentence = embed_language(params, example.query.tokens,
                                        grads != nullptr ? &language_cache : nullptr);

    const CandidateSet candidates =
        enumerate_candidates(segments_of(params, example.rgb, example.flow));

    DistancePoint positive_point;
    const double positive = forward_point(params, sentence, example.rgb, example.flow,
                                          example.positive, positive_point);

    std::vector<DistancePoint> intra_points;
    intra_points.reserve(candidates.size() - 1);
    double example_intra = 0.0;
    for (const Span& span : candidates) {
      if (span == example.positive) continue;
      DistancePoint point;
      const double d = forward_point(params, sentence, example.rgb, example.flow, span, point);
      if (positive - d + margin > 0.0) {
        example_intra += positive - d + margin;
        point.coefficient = -intra_weight;
        positive_point.coefficient += intra_weight;
      }
      if (grads != nullptr) intra_points.push_back(std::move(point));
    }

    std::vector<DistancePoint> inter_points;
    inter_points.reserve(item.negatives.size());
    double example_inter = 0.0;
    for (const InterNegative& neg : item.negatives) {
      DistancePoint point;
      const double d =
          forward_point(params, sentence, neg.rgb, neg.flow, example.positive, point);
      if (positive - d + margin > 0.0) {
        example_inter += positive - d + margin;
        point.coefficient = -inter_weight;
        positive_point.coefficient += inter_weight;
      }
      if (grads != nullptr) inter_points.push_back(std::move(point));
    }

    out.intra += example_intra;
    out.inter += example_inter;

    if (grads == nullptr) continue;

    VisualBranchGrads rgb_acc = make_visual_branch_grads(params.rgb);
    VisualBranchGrads flow_acc = make_visual_branch_grads(params.flow);
    Vec d_sentence(sentence.size(), 0.0);
    backward_point(params, sentence, positive_point, rgb_acc, flow_acc, d_sentence);
    for (const DistancePoint& point : intra_points) {
      backward_point(params, sentence, point, rgb_acc, flow_acc, d_sentence);
    }
    for (const DistancePoint& point : inter_points) {
      backward_point(params, sentence, point, rgb_acc, flow_acc, d_sentence);
    }

    if (params.use_rgb) add_branch_grads(*grads, "rgb", rgb_acc);
    if (params.use_flow) add_branch_grads(*grads, "flow", flow_acc);

    if (params.language_free) {
      Tensor2 g(1, d_sentence.size());
      g.set_row(0, d_sentence);
      add_tensor(*grads, "lang.free", g);
    } else {
      LanguageGrads lang_acc = make_language_grads(params.language);
      encode_sentence_backward(params.language, params.vocab.table, language_cache, d_sentence,
                               lang_acc, params.finetune_embeddings);
      add_tensor(*grads, "lang.lstm.w_input", lang_acc.lstm.w_input);
      add_tensor(*grads, "lang.lstm.w_hidden", lang_acc.lstm.w_hidden);
      add_tensor(*grads, "lang.lstm.bias", lang_acc.lstm.bias);
      add_tensor(*grads, "lang.proj_w", lang_acc.proj_w);
      add_tensor(*grads, "lang.proj_b", lang_acc.proj_b);
      if (params.finetune_embeddings) {
        Tensor2& emb = (*grads)["embeddings"];
        if (emb.size() == 0) emb = Tensor2(params.vocab.table.rows(), params.vocab.table.cols());
        for (const auto& [row, g] : lang_acc.embedding_rows) {
          for (std::size_t c = 0; c < g.size(); ++c) {
            emb.at(static_cast<std::size_t>(row), c) += g[c];
          }
        }
      }
    }
  }

  out.total = intra_weight * out.intra + inter_weight * out.inter;
  return out;
}

}  // namespace mcn
