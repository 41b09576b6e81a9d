#include "mcn/eval.hpp"

#include <algorithm>
#include <exception>
#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "mcn/errors.hpp"
#include "mcn/rng.hpp"

namespace mcn {

namespace {

double annotation_metric(const std::vector<Span>& ranking, Span annotation, Metric metric) {
  switch (metric) {
    case Metric::r_at_1:
      return ranking[0] == annotation ? 1.0 : 0.0;
    case Metric::r_at_5: {
      const std::size_t k = std::min<std::size_t>(5, ranking.size());
      for (std::size_t i = 0; i < k; ++i) {
        if (ranking[i] == annotation) return 1.0;
      }
      return 0.0;
    }
    case Metric::miou:
      return temporal_iou(ranking[0], annotation);
  }
  return 0.0;
}

}  // namespace

double score_prediction(const std::vector<Span>& ranking, const std::vector<Span>& annotations,
                        Metric metric) {
  if (annotations.size() != 4) {
    throw DataError("score_prediction needs exactly 4 annotations, got " +
                    std::to_string(annotations.size()));
  }
  if (ranking.empty()) throw DataError("score_prediction: empty ranking");

  double per_annotation[4];
  for (std::size_t a = 0; a < 4; ++a) {
    per_annotation[a] = annotation_metric(ranking, annotations[a], metric);
  }
  // Max over the four 3-subsets = drop each annotation once. Each triple is
  // summed directly in index order so the result is reproducible bit for bit.
  double best = 0.0;
  for (std::size_t skip = 0; skip < 4; ++skip) {
    double total = 0.0;
    for (std::size_t a = 0; a < 4; ++a) {
      if (a != skip) total += per_annotation[a];
    }
    best = std::max(best, total / 3.0);
  }
  return best;
}

namespace {

using QueryScorer = std::function<PerQueryScore(const AnnotationRecord&, std::size_t index)>;

/// Runs the scorer over every query, optionally on several threads, and
/// reduces in query order so the report does not depend on the worker count.
EvalReport run_scored(const QueryScorer& scorer,
                      const std::vector<const AnnotationRecord*>& queries, int jobs,
                      const std::string& name) {
  EvalReport report;
  report.name = name;
  report.per_query.resize(queries.size());

  auto worker = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      report.per_query[i] = scorer(*queries[i], i);
    }
  };

  const std::size_t n = queries.size();
  const std::size_t workers = std::min<std::size_t>(std::max(jobs, 1), std::max<std::size_t>(n, 1));
  if (workers <= 1) {
    worker(0, n);
  } else {
    std::vector<std::thread> threads;
    std::vector<std::exception_ptr> errors(workers);
    const std::size_t chunk = (n + workers - 1) / workers;
    for (std::size_t w = 0; w < workers; ++w) {
      const std::size_t begin = w * chunk;
      const std::size_t end = std::min(n, begin + chunk);
      threads.emplace_back([&, w, begin, end] {
        try {
          worker(begin, end);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
    for (auto& t : threads) t.join();
    for (const auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }

  for (const auto& q : report.per_query) {
    report.r1 += q.r1;
    report.r5 += q.r5;
    report.miou += q.miou;
  }
  if (!report.per_query.empty()) {
    const double inv = 1.0 / static_cast<double>(report.per_query.size());
    report.r1 *= inv;
    report.r5 *= inv;
    report.miou *= inv;
  }
  return report;
}

}  // namespace

EvalReport evaluate(const RankingSource& source,
                    const std::vector<const AnnotationRecord*>& queries, int jobs) {
  return run_scored(
      [&source](const AnnotationRecord& rec, std::size_t) {
        const std::vector<Span> ranking = source(rec);
        PerQueryScore s;
        s.annotation_id = rec.annotation_id;
        s.r1 = score_prediction(ranking, rec.times, Metric::r_at_1);
        s.r5 = score_prediction(ranking, rec.times, Metric::r_at_5);
        s.miou = score_prediction(ranking, rec.times, Metric::miou);
        return s;
      },
      queries, jobs, "model");
}

RankingSource model_ranker(const ModelParams& params, FeatureStore& store) {
  // Callers preload the store before evaluating with jobs > 1; a warm cache
  // makes get() read-only.
  return [&params, &store](const AnnotationRecord& rec) {
    Query query;
    query.video_id = rec.video_id;
    query.raw_text = rec.description;
    query.tokens = params.vocab.lookup_all(tokenize(rec.description));
    const VideoFeatures* rgb = params.use_rgb ? &store.get(rec.video_id, Modality::rgb) : nullptr;
    const VideoFeatures* flow =
        params.use_flow ? &store.get(rec.video_id, Modality::flow) : nullptr;
    return ranking_of(localize(params, query, rgb, flow));
  };
}

EvalReport baseline_upper_bound(const std::vector<const AnnotationRecord*>& queries) {
  return run_scored(
      [](const AnnotationRecord& rec, std::size_t) {
        const CandidateSet candidates = enumerate_candidates(rec.num_segments);
        PerQueryScore s;
        s.annotation_id = rec.annotation_id;

        // R@1 and mIoU depend only on the top-1 span: try every candidate.
        std::vector<Span> ranking(candidates.begin(), candidates.end());
        for (const Span& top : candidates) {
          std::swap(ranking[0], ranking[&top - candidates.data()]);
          s.r1 = std::max(s.r1, score_prediction(ranking, rec.times, Metric::r_at_1));
          s.miou = std::max(s.miou, score_prediction(ranking, rec.times, Metric::miou));
          std::swap(ranking[0], ranking[&top - candidates.data()]);
        }

        // R@5: for each triple, front-load its (at most 3 distinct) spans.
        for (std::size_t skip = 0; skip < 4; ++skip) {
          std::vector<Span> favored;
          for (std::size_t a = 0; a < 4; ++a) {
            if (a == skip) continue;
            if (std::find(favored.begin(), favored.end(), rec.times[a]) == favored.end()) {
              favored.push_back(rec.times[a]);
            }
          }
          std::vector<Span> prefix = favored;
          for (const Span& c : candidates) {
            if (std::find(favored.begin(), favored.end(), c) == favored.end()) {
              prefix.push_back(c);
            }
          }
          s.r5 = std::max(s.r5, score_prediction(prefix, rec.times, Metric::r_at_5));
        }
        return s;
      },
      queries, 1, "upper_bound");
}

EvalReport baseline_chance(const std::vector<const AnnotationRecord*>& queries,
                           std::uint64_t seed, int trials, int jobs) {
  if (trials < 1) throw ConfigError("chance baseline needs at least one trial");
  const Rng base(seed);
  return run_scored(
      [&base, trials](const AnnotationRecord& rec, std::size_t index) {
        Rng rng = base.fork(index);
        std::vector<Span> ranking = enumerate_candidates(rec.num_segments);
        PerQueryScore s;
        s.annotation_id = rec.annotation_id;
        for (int t = 0; t < trials; ++t) {
          rng.shuffle(ranking);
          s.r1 += score_prediction(ranking, rec.times, Metric::r_at_1);
          s.r5 += score_prediction(ranking, rec.times, Metric::r_at_5);
          s.miou += score_prediction(ranking, rec.times, Metric::miou);
        }
        const double inv = 1.0 / trials;
        s.r1 *= inv;
        s.r5 *= inv;
        s.miou *= inv;
        return s;
      },
      queries, jobs, "chance");
}

EvalReport baseline_moment_prior(const std::vector<const AnnotationRecord*>& train_queries,
                                 const std::vector<const AnnotationRecord*>& eval_queries) {
  // Frequencies per video length; a span is only comparable within its own
  // candidate set.
  std::map<int, std::map<Span, std::size_t>> counts;
  for (const AnnotationRecord* rec : train_queries) {
    auto& bucket = counts[rec->num_segments];
    for (const Span& s : rec->times) ++bucket[s];
  }

  std::map<int, std::vector<Span>> rankings;
  auto ranking_for = [&](int num_segments) -> const std::vector<Span>& {
    auto it = rankings.find(num_segments);
    if (it != rankings.end()) return it->second;
    std::vector<Span> ranking = enumerate_candidates(num_segments);
    const auto& bucket = counts[num_segments];
    std::stable_sort(ranking.begin(), ranking.end(), [&bucket](Span a, Span b) {
      const auto fa = bucket.find(a);
      const auto fb = bucket.find(b);
      const std::size_t ca = fa == bucket.end() ? 0 : fa->second;
      const std::size_t cb = fb == bucket.end() ? 0 : fb->second;
      return ca > cb;  // stable: ties stay in (start, end) order
    });
    return rankings.emplace(num_segments, std::move(ranking)).first->second;
  };

  return run_scored(
      [&ranking_for](const AnnotationRecord& rec, std::size_t) {
        const std::vector<Span>& ranking = ranking_for(rec.num_segments);
        PerQueryScore s;
        s.annotation_id = rec.annotation_id;
        s.r1 = score_prediction(ranking, rec.times, Metric::r_at_1);
        s.r5 = score_prediction(ranking, rec.times, Metric::r_at_5);
        s.miou = score_prediction(ranking, rec.times, Metric::miou);
        return s;
      },
      eval_queries, 1, "moment_prior");
}

std::vector<RetrievalHit> retrieve_corpus(const ModelParams& params, const std::string& text,
                                          const std::vector<std::string>& video_ids,
                                          FeatureStore& store, std::size_t k) {
  const std::vector<int> tokens = params.vocab.lookup_all(tokenize(text));
  const Vec sentence = embed_language(params, tokens);

  std::vector<RetrievalHit> hits;
  for (const std::string& video : video_ids) {
    const VideoFeatures* rgb = params.use_rgb ? &store.get(video, Modality::rgb) : nullptr;
    const VideoFeatures* flow = params.use_flow ? &store.get(video, Modality::flow) : nullptr;
    const int n = params.use_rgb ? rgb->num_segments : flow->num_segments;
    for (const Span& span : enumerate_candidates(n)) {
      hits.push_back({video, span, distance(params, sentence, rgb, flow, span)});
    }
  }
  std::sort(hits.begin(), hits.end(), [](const RetrievalHit& a, const RetrievalHit& b) {
    if (a.distance != b.distance) return a.distance < b.distance;
    if (a.video_id != b.video_id) return a.video_id < b.video_id;
    return a.span < b.span;
  });
  if (hits.size() > k) hits.resize(k);
  return hits;
}

void write_report_json(std::ostream& out, const EvalReport& report) {
  nlohmann::json doc;
  doc["name"] = report.name;
  doc["metrics"] = {{"r1", report.r1}, {"r5", report.r5}, {"miou", report.miou}};
  nlohmann::json per_query = nlohmann::json::array();
  for (const auto& q : report.per_query) {
    per_query.push_back(
        {{"annotation_id", q.annotation_id}, {"r1", q.r1}, {"r5", q.r5}, {"miou", q.miou}});
  }
  doc["per_query"] = std::move(per_query);
  nlohmann::json config = nlohmann::json::object();
  std::istringstream echo(report.config_echo);
  std::string line;
  while (std::getline(echo, line)) {
    const auto eq = line.find(" = ");
    if (eq != std::string::npos) config[line.substr(0, eq)] = line.substr(eq + 3);
  }
  doc["config"] = std::move(config);
  out << doc.dump(2) << "\n";
}

void write_report_table(std::ostream& out, const std::vector<EvalReport>& reports) {
  std::size_t name_width = 6;
  for (const auto& r : reports) name_width = std::max(name_width, r.name.size());
  out << std::left << std::setw(static_cast<int>(name_width) + 2) << "Method" << std::right
      << std::setw(8) << "R@1" << std::setw(8) << "R@5" << std::setw(8) << "mIoU" << "\n";
  for (const auto& r : reports) {
    out << std::left << std::setw(static_cast<int>(name_width) + 2) << r.name << std::right
        << std::fixed << std::setprecision(2) << std::setw(8) << r.r1 * 100.0 << std::setw(8)
        << r.r5 * 100.0 << std::setw(8) << r.miou * 100.0 << "\n";
    out.unsetf(std::ios::fixed);
    out << std::setprecision(6);
  }
}

}  // namespace mcn
