#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "mcn/data.hpp"
#include "mcn/model.hpp"
#include "mcn/moments.hpp"

namespace mcn {

enum class Metric { r_at_1, r_at_5, miou };

/// Per-query score against exactly 4 annotator spans: the best 4-choose-3
/// triple of the per-annotation metric means. R@k scores an annotation 1 when
/// its exact span sits in the top-k of the ranking; mIoU scores the IoU of the
/// top-1 span against the annotation.
double score_prediction(const std::vector<Span>& ranking,
                        const std::vector<Span>& annotations, Metric metric);

struct PerQueryScore {
  std::string annotation_id;
  double r1 = 0.0, r5 = 0.0, miou = 0.0;
};

struct EvalReport {
  std::string name;
  double r1 = 0.0, r5 = 0.0, miou = 0.0;  // in [0,1]; tables print x100
  std::vector<PerQueryScore> per_query;
  std::string config_echo;
};

using RankingSource = std::function<std::vector<Span>(const AnnotationRecord&)>;

/// Mean of score_prediction over the split's queries, per metric. Query order
/// and the reduction order are fixed, so reports are byte-stable for any
/// worker count.
EvalReport evaluate(const RankingSource& source,
                    const std::vector<const AnnotationRecord*>& queries, int jobs = 1);

/// Ranking source backed by a trained model; features come from the store.
RankingSource model_ranker(const ModelParams& params, FeatureStore& store);

/// Best achievable score per query given annotator disagreement: brute force
/// over candidate top-1 spans for R@1/mIoU, over annotation triples for R@5.
EvalReport baseline_upper_bound(const std::vector<const AnnotationRecord*>& queries);

/// Monte-Carlo uniform rankings, `trials` per query, averaged.
EvalReport baseline_chance(const std::vector<const AnnotationRecord*>& queries,
                           std::uint64_t seed, int trials, int jobs = 1);

/// Candidates ordered by training-set annotation frequency of the exact span,
/// unseen spans after all seen ones, ties by (start, end).
EvalReport baseline_moment_prior(const std::vector<const AnnotationRecord*>& train_queries,
                                 const std::vector<const AnnotationRecord*>& eval_queries);

struct RetrievalHit {
  std::string video_id;
  Span span;
  double distance = 0.0;
};

/// Global top-k moments across every video of the corpus split for one text
/// query; ties broken by (video id, start, end).
std::vector<RetrievalHit> retrieve_corpus(const ModelParams& params, const std::string& text,
                                          const std::vector<std::string>& video_ids,
                                          FeatureStore& store, std::size_t k);

void write_report_json(std::ostream& out, const EvalReport& report);
/// One aligned row per report, percentage scale.
void write_report_table(std::ostream& out, const std::vector<EvalReport>& reports);

}  // namespace mcn
