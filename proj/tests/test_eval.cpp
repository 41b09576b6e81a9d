#include <doctest.h>

#include <algorithm>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mcn/data.hpp"
#include "mcn/errors.hpp"
#include "mcn/eval.hpp"
#include "mcn/model.hpp"
#include "mcn/rng.hpp"
#include "support/score_oracle.hpp"
#include "support/temp_dir.hpp"

using testsupport::OracleMetric;
using testsupport::oracle_score;

namespace {

mcn::AnnotationRecord make_record(const std::string& id, const std::string& video,
                                  std::vector<mcn::Span> times, int num_segments) {
  mcn::AnnotationRecord rec;
  rec.annotation_id = id;
  rec.video_id = video;
  rec.description = "about " + id;
  rec.times = std::move(times);
  rec.num_segments = num_segments;
  return rec;
}

std::vector<const mcn::AnnotationRecord*> pointers(
    const std::vector<mcn::AnnotationRecord>& records) {
  std::vector<const mcn::AnnotationRecord*> out;
  for (const auto& rec : records) out.push_back(&rec);
  return out;
}

/// Ranking that puts `top` first and fills in the other candidates after it.
std::vector<mcn::Span> ranking_with_top(mcn::Span top, int num_segments) {
  std::vector<mcn::Span> ranking{top};
  for (const mcn::Span& s : mcn::enumerate_candidates(num_segments)) {
    if (!(s == top)) ranking.push_back(s);
  }
  return ranking;
}

}  // namespace

TEST_CASE("per-query scores on hand-checked annotation sets") {
  const std::vector<mcn::Span> unanimous{{3, 3}, {3, 3}, {3, 3}, {3, 3}};
  const std::vector<mcn::Span> ranking = ranking_with_top({3, 3}, 6);
  CHECK(mcn::score_prediction(ranking, unanimous, mcn::Metric::r_at_1) == 1.0);
  CHECK(mcn::score_prediction(ranking, unanimous, mcn::Metric::r_at_5) == 1.0);
  CHECK(mcn::score_prediction(ranking, unanimous, mcn::Metric::miou) == 1.0);

  // One annotator disagrees: dropping them still leaves a perfect triple.
  const std::vector<mcn::Span> one_off{{3, 3}, {3, 3}, {3, 3}, {3, 4}};
  CHECK(mcn::score_prediction(ranking, one_off, mcn::Metric::r_at_1) == 1.0);
  CHECK(mcn::score_prediction(ranking, one_off, mcn::Metric::miou) == 1.0);

  // Predicting the outlier instead only ever matches one annotation.
  const std::vector<mcn::Span> outlier_first = ranking_with_top({3, 4}, 6);
  CHECK(mcn::score_prediction(outlier_first, one_off, mcn::Metric::r_at_1) == 1.0 / 3.0);
  // Best mIoU triple keeps the exact hit and two half-overlaps.
  CHECK(mcn::score_prediction(outlier_first, one_off, mcn::Metric::miou) == 2.0 / 3.0);

  // A span ranked fifth still counts for R@5; sixth does not.
  std::vector<mcn::Span> deep = ranking_with_top({0, 0}, 6);
  auto hit = std::find(deep.begin(), deep.end(), mcn::Span{3, 3});
  std::swap(*hit, deep[4]);
  CHECK(mcn::score_prediction(deep, unanimous, mcn::Metric::r_at_5) == 1.0);
  CHECK(mcn::score_prediction(deep, unanimous, mcn::Metric::r_at_1) == 0.0);
  hit = std::find(deep.begin(), deep.end(), mcn::Span{3, 3});
  std::swap(*hit, deep[5]);
  CHECK(mcn::score_prediction(deep, unanimous, mcn::Metric::r_at_5) == 0.0);

  // Last-ranked truth scores zero everywhere (no overlap with the top).
  const std::vector<mcn::Span> tail{{5, 5}, {5, 5}, {5, 5}, {5, 5}};
  const std::vector<mcn::Span> plain = mcn::enumerate_candidates(6);
  CHECK(mcn::score_prediction(plain, tail, mcn::Metric::r_at_1) == 0.0);
  CHECK(mcn::score_prediction(plain, tail, mcn::Metric::r_at_5) == 0.0);
  CHECK(mcn::score_prediction(plain, tail, mcn::Metric::miou) == 0.0);
}

TEST_CASE("scoring demands four annotations and a non-empty ranking") {
  const std::vector<mcn::Span> ranking = mcn::enumerate_candidates(4);
  CHECK_THROWS_AS(
      (void)mcn::score_prediction(ranking, {{0, 0}, {0, 0}, {0, 0}}, mcn::Metric::r_at_1),
      mcn::DataError);
  CHECK_THROWS_AS((void)mcn::score_prediction(
                      ranking, {{0, 0}, {0, 0}, {0, 0}, {0, 0}, {0, 0}}, mcn::Metric::r_at_1),
                  mcn::DataError);
  CHECK_THROWS_AS(
      (void)mcn::score_prediction({}, {{0, 0}, {0, 0}, {0, 0}, {0, 0}}, mcn::Metric::miou),
      mcn::DataError);
}

TEST_CASE("the score ignores annotation order") {
  mcn::Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = rng.uniform_int(2, 6);
    std::vector<mcn::Span> ranking = mcn::enumerate_candidates(n);
    rng.shuffle(ranking);
    const mcn::CandidateSet candidates = mcn::enumerate_candidates(n);
    std::vector<mcn::Span> annotations;
    for (int a = 0; a < 4; ++a) annotations.push_back(candidates[rng.index(candidates.size())]);

    const double r1 = mcn::score_prediction(ranking, annotations, mcn::Metric::r_at_1);
    const double r5 = mcn::score_prediction(ranking, annotations, mcn::Metric::r_at_5);
    const double miou = mcn::score_prediction(ranking, annotations, mcn::Metric::miou);
    CHECK(r1 <= r5);
    for (int p = 0; p < 5; ++p) {
      rng.shuffle(annotations);
      CHECK(mcn::score_prediction(ranking, annotations, mcn::Metric::r_at_1) == r1);
      CHECK(mcn::score_prediction(ranking, annotations, mcn::Metric::r_at_5) == r5);
      CHECK(mcn::score_prediction(ranking, annotations, mcn::Metric::miou) == miou);
    }
  }
}

TEST_CASE("ten thousand random instances match the reference scorer exactly") {
  mcn::Rng rng(9);
  for (int trial = 0; trial < 10000; ++trial) {
    const int n = rng.uniform_int(1, 8);
    std::vector<mcn::Span> ranking = mcn::enumerate_candidates(n);
    rng.shuffle(ranking);
    const mcn::CandidateSet candidates = mcn::enumerate_candidates(n);
    std::vector<mcn::Span> annotations;
    for (int a = 0; a < 4; ++a) annotations.push_back(candidates[rng.index(candidates.size())]);

    REQUIRE(mcn::score_prediction(ranking, annotations, mcn::Metric::r_at_1) ==
            oracle_score(ranking, annotations, OracleMetric::r1));
    REQUIRE(mcn::score_prediction(ranking, annotations, mcn::Metric::r_at_5) ==
            oracle_score(ranking, annotations, OracleMetric::r5));
    REQUIRE(mcn::score_prediction(ranking, annotations, mcn::Metric::miou) ==
            oracle_score(ranking, annotations, OracleMetric::miou));
  }
}

TEST_CASE("evaluate reduces per-query scores in a fixed order") {
  std::vector<mcn::AnnotationRecord> records;
  records.push_back(make_record("q1", "v1", {{0, 0}, {0, 0}, {0, 0}, {0, 0}}, 3));
  records.push_back(make_record("q2", "v2", {{1, 2}, {1, 2}, {1, 2}, {2, 2}}, 3));
  records.push_back(make_record("q3", "v3", {{2, 2}, {2, 2}, {2, 2}, {2, 2}}, 3));

  const mcn::RankingSource source = [](const mcn::AnnotationRecord& rec) {
    // q1 and q2 get their consensus on top; q3 gets the worst possible top.
    if (rec.annotation_id == "q1") return ranking_with_top({0, 0}, 3);
    if (rec.annotation_id == "q2") return ranking_with_top({1, 2}, 3);
    return ranking_with_top({0, 0}, 3);
  };

  const auto queries = pointers(records);
  const mcn::EvalReport report = mcn::evaluate(source, queries, 1);
  CHECK(report.name == "model");
  REQUIRE(report.per_query.size() == 3);
  CHECK(report.per_query[0].annotation_id == "q1");
  CHECK(report.per_query[1].annotation_id == "q2");
  CHECK(report.per_query[2].annotation_id == "q3");
  CHECK(report.per_query[0].r1 == 1.0);
  CHECK(report.per_query[1].r1 == 1.0);
  CHECK(report.per_query[2].r1 == 0.0);
  CHECK(report.per_query[2].miou == 0.0);
  CHECK(report.r1 == (1.0 + 1.0 + 0.0) / 3.0);
  CHECK(report.r1 <= report.r5);

  // The worker count may change the schedule but never the report.
  const mcn::EvalReport parallel = mcn::evaluate(source, queries, 4);
  CHECK(parallel.r1 == report.r1);
  CHECK(parallel.r5 == report.r5);
  CHECK(parallel.miou == report.miou);
  REQUIRE(parallel.per_query.size() == report.per_query.size());
  for (std::size_t i = 0; i < report.per_query.size(); ++i) {
    CHECK(parallel.per_query[i].annotation_id == report.per_query[i].annotation_id);
    CHECK(parallel.per_query[i].r1 == report.per_query[i].r1);
    CHECK(parallel.per_query[i].r5 == report.per_query[i].r5);
    CHECK(parallel.per_query[i].miou == report.per_query[i].miou);
  }

  const mcn::EvalReport empty = mcn::evaluate(source, {}, 1);
  CHECK(empty.r1 == 0.0);
  CHECK(empty.per_query.empty());
}

TEST_CASE("the upper bound is perfect when annotators agree") {
  std::vector<mcn::AnnotationRecord> records;
  records.push_back(make_record("q1", "v1", {{1, 2}, {1, 2}, {1, 2}, {1, 2}}, 5));
  records.push_back(make_record("q2", "v2", {{0, 0}, {0, 0}, {0, 0}, {0, 0}}, 6));
  const mcn::EvalReport report = mcn::baseline_upper_bound(pointers(records));
  CHECK(report.name == "upper_bound");
  CHECK(report.r1 == 1.0);
  CHECK(report.r5 == 1.0);
  CHECK(report.miou == 1.0);
}

TEST_CASE("upper bound on a split annotation set") {
  // Two annotators say [3,3], one [3,4], one [2,3]. The best top-1 serves the
  // [3,3] pair: R@1 = 2/3 and mIoU = (1 + 1 + 1/2) / 3. Any triple fits in
  // the top five, so R@5 is always 1.
  std::vector<mcn::AnnotationRecord> records;
  records.push_back(make_record("q", "v", {{3, 3}, {3, 3}, {3, 4}, {2, 3}}, 6));
  const mcn::EvalReport report = mcn::baseline_upper_bound(pointers(records));
  CHECK(report.r1 == 2.0 / 3.0);
  CHECK(report.r5 == 1.0);
  CHECK(report.miou == 2.5 / 3.0);
}

TEST_CASE("upper bound properties hold on random annotation sets") {
  mcn::Rng rng(11);
  std::vector<mcn::AnnotationRecord> records;
  for (int q = 0; q < 60; ++q) {
    const int n = rng.uniform_int(1, 7);
    const mcn::CandidateSet candidates = mcn::enumerate_candidates(n);
    std::vector<mcn::Span> times;
    for (int a = 0; a < 4; ++a) times.push_back(candidates[rng.index(candidates.size())]);
    records.push_back(make_record("q" + std::to_string(q), "v", std::move(times), n));
  }
  const auto queries = pointers(records);
  const mcn::EvalReport report = mcn::baseline_upper_bound(queries);

  REQUIRE(report.per_query.size() == records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    const mcn::AnnotationRecord& rec = records[i];

    // R@5 is always perfect: each triple holds at most three distinct spans.
    CHECK(report.per_query[i].r5 == 1.0);

    // R@1 is decided by the most repeated span, capped by the triple size.
    std::map<std::pair<int, int>, int> counts;
    int modal = 0;
    for (const mcn::Span& s : rec.times) {
      modal = std::max(modal, ++counts[{s.start, s.end}]);
    }
    CHECK(report.per_query[i].r1 ==
          static_cast<double>(std::min(modal, 3)) / 3.0);

    // Consensus-first ranking attains the R@1 bound.
    const mcn::Span consensus = mcn::consensus_span(rec.times);
    CHECK(mcn::score_prediction(ranking_with_top(consensus, rec.num_segments), rec.times,
                                mcn::Metric::r_at_1) == report.per_query[i].r1);

    // Independent mIoU bound: try every candidate top span with the oracle.
    double best_miou = 0.0;
    for (const mcn::Span& top : mcn::enumerate_candidates(rec.num_segments)) {
      best_miou = std::max(best_miou, oracle_score(ranking_with_top(top, rec.num_segments),
                                                   rec.times, OracleMetric::miou));
    }
    CHECK(report.per_query[i].miou == best_miou);
    CHECK(report.per_query[i].r1 <= report.per_query[i].miou);
  }
}

TEST_CASE("chance converges to the combinatorial expectation") {
  std::vector<mcn::AnnotationRecord> records;
  for (int q = 0; q < 10; ++q) {
    records.push_back(
        make_record("q" + std::to_string(q), "v", {{2, 2}, {2, 2}, {2, 2}, {2, 2}}, 6));
  }
  const auto queries = pointers(records);
  const mcn::EvalReport report = mcn::baseline_chance(queries, 17, 10000, 1);
  CHECK(report.name == "chance");

  // 21 candidates; a uniform ranking hits the unanimous span first 1/21 of
  // the time and within the top five 5/21 of the time.
  CHECK(report.r1 == doctest::Approx(1.0 / 21.0).epsilon(0.15));
  CHECK(report.r5 == doctest::Approx(5.0 / 21.0).epsilon(0.08));

  double expected_miou = 0.0;
  for (const mcn::Span& s : mcn::enumerate_candidates(6)) {
    expected_miou += mcn::temporal_iou(s, {2, 2});
  }
  expected_miou /= 21.0;
  CHECK(report.miou == doctest::Approx(expected_miou).epsilon(0.05));

  // Same seed, same report, for any worker count; a new seed moves it.
  const mcn::EvalReport again = mcn::baseline_chance(queries, 17, 10000, 3);
  CHECK(again.r1 == report.r1);
  CHECK(again.r5 == report.r5);
  CHECK(again.miou == report.miou);
  const mcn::EvalReport other = mcn::baseline_chance(queries, 18, 10000, 1);
  CHECK(other.r1 != report.r1);

  CHECK_THROWS_AS((void)mcn::baseline_chance(queries, 17, 0, 1), mcn::ConfigError);
}

TEST_CASE("the moment prior ranks by training frequency") {
  std::vector<mcn::AnnotationRecord> train;
  train.push_back(make_record("t1", "x", {{0, 1}, {0, 1}, {0, 1}, {2, 2}}, 4));
  train.push_back(make_record("t2", "y", {{0, 1}, {0, 1}, {0, 1}, {0, 1}}, 4));

  std::vector<mcn::AnnotationRecord> eval_recs;
  eval_recs.push_back(make_record("e1", "z", {{0, 1}, {0, 1}, {0, 1}, {0, 1}}, 4));
  eval_recs.push_back(make_record("e2", "z", {{2, 2}, {2, 2}, {2, 2}, {2, 2}}, 4));
  eval_recs.push_back(make_record("e3", "z", {{3, 3}, {3, 3}, {3, 3}, {3, 3}}, 4));

  const mcn::EvalReport report =
      mcn::baseline_moment_prior(pointers(train), pointers(eval_recs));
  CHECK(report.name == "moment_prior");
  REQUIRE(report.per_query.size() == 3);
  // e1: the dominant span tops the ranking.
  CHECK(report.per_query[0].r1 == 1.0);
  CHECK(report.per_query[0].miou == 1.0);
  // e2: seen once, so it sits right after the dominant span.
  CHECK(report.per_query[1].r1 == 0.0);
  CHECK(report.per_query[1].r5 == 1.0);
  // e3: never seen; every seen span and three unseen ones outrank it.
  CHECK(report.per_query[2].r1 == 0.0);
  CHECK(report.per_query[2].r5 == 0.0);
}

TEST_CASE("moment prior ties and unseen lengths fall back to enumeration order") {
  std::vector<mcn::AnnotationRecord> train;
  train.push_back(make_record("t1", "x", {{2, 2}, {2, 2}, {1, 1}, {1, 1}}, 4));

  std::vector<mcn::AnnotationRecord> eval_recs;
  eval_recs.push_back(make_record("e1", "z", {{1, 1}, {1, 1}, {1, 1}, {1, 1}}, 4));
  eval_recs.push_back(make_record("e2", "z", {{2, 2}, {2, 2}, {2, 2}, {2, 2}}, 4));
  // different segment count: the training bucket is empty for n = 3
  eval_recs.push_back(make_record("e3", "z", {{0, 0}, {0, 0}, {0, 0}, {0, 0}}, 3));

  const mcn::EvalReport report =
      mcn::baseline_moment_prior(pointers(train), pointers(eval_recs));
  REQUIRE(report.per_query.size() == 3);
  // [1,1] and [2,2] tie at two observations; enumeration order keeps [1,1] first.
  CHECK(report.per_query[0].r1 == 1.0);
  CHECK(report.per_query[1].r1 == 0.0);
  CHECK(report.per_query[1].r5 == 1.0);
  // n = 3 has no statistics, so its ranking is plain enumeration: [0,0] first.
  CHECK(report.per_query[2].r1 == 1.0);
}

TEST_CASE("corpus retrieval orders moments globally") {
  testsupport::TempDir dir("retrieve");
  mcn::Rng frames(5);
  auto save = [&](const std::string& video, std::uint64_t seed) {
    mcn::VideoFeatures rgb;
    rgb.video_id = video;
    rgb.modality = mcn::Modality::rgb;
    rgb.num_segments = 3;
    rgb.frames_per_segment = 2;
    rgb.frames = mcn::Tensor2(6, 2);
    mcn::Rng r(seed);
    for (double& v : rgb.frames.raw()) {
      v = static_cast<double>(static_cast<float>(r.gaussian()));
    }
    mcn::VideoFeatures flow = rgb;
    flow.modality = mcn::Modality::flow;
    for (double& v : flow.frames.raw()) {
      v = static_cast<double>(static_cast<float>(r.gaussian()));
    }
    mcn::save_features(dir.file(video + "_rgb.mcnf"), rgb);
    mcn::save_features(dir.file(video + "_flow.mcnf"), flow);
  };
  save("va", 100);
  save("vb", 200);
  std::map<std::string, mcn::FeaturePaths> index;
  index["va"] = {dir.file("va_rgb.mcnf"), dir.file("va_flow.mcnf")};
  index["vb"] = {dir.file("vb_rgb.mcnf"), dir.file("vb_flow.mcnf")};
  mcn::FeatureStore store(index);

  mcn::RunConfig config;
  config.joint_dim = 2;
  config.hidden_dim = 3;
  config.lstm_hidden = 4;
  mcn::Rng rng(7);
  mcn::Vocabulary vocab;
  vocab.table = mcn::Tensor2(3, 2);
  for (double& v : vocab.table.raw()) v = rng.gaussian();
  vocab.index["cat"] = 0;
  vocab.index["runs"] = 1;
  vocab.index[mcn::kUnknownToken] = 2;
  vocab.unknown_index = 2;
  mcn::ModelParams model = mcn::build_model(config, vocab, 2, 2, rng);

  const std::vector<std::string> videos{"va", "vb"};
  const auto hits = mcn::retrieve_corpus(model, "cat runs", videos, store, 5);
  REQUIRE(hits.size() == 5);
  for (std::size_t i = 0; i + 1 < hits.size(); ++i) {
    CHECK(hits[i].distance <= hits[i + 1].distance);
  }

  // Top hit equals the exhaustive minimum over both videos.
  const mcn::Vec sentence =
      mcn::embed_language(model, model.vocab.lookup_all(mcn::tokenize("cat runs")));
  double best = 0.0;
  bool first = true;
  for (const std::string& video : videos) {
    const mcn::VideoFeatures* rgb = &store.get(video, mcn::Modality::rgb);
    const mcn::VideoFeatures* flow = &store.get(video, mcn::Modality::flow);
    for (const mcn::Span& span : mcn::enumerate_candidates(3)) {
      const double d = mcn::distance(model, sentence, rgb, flow, span);
      if (first || d < best) {
        best = d;
        first = false;
      }
    }
  }
  CHECK(hits[0].distance == best);

  // Asking for more than exists returns everything, in order.
  const auto all = mcn::retrieve_corpus(model, "cat runs", videos, store, 100);
  CHECK(all.size() == 12);
  const auto none = mcn::retrieve_corpus(model, "cat runs", videos, store, 0);
  CHECK(none.empty());

  // With every weight zero all distances tie, so the order falls back to
  // (video id, start, end).
  mcn::ModelParams flat = mcn::build_model(config, model.vocab, 2, 2, rng);
  for (const mcn::NamedParam& ref : flat.named_tensors()) {
    if (ref.name != "embeddings") ref.tensor->fill(0.0);
  }
  const auto tied = mcn::retrieve_corpus(flat, "cat runs", videos, store, 8);
  const mcn::CandidateSet order = mcn::enumerate_candidates(3);
  REQUIRE(tied.size() == 8);
  for (std::size_t i = 0; i < 6; ++i) {
    CHECK(tied[i].video_id == "va");
    CHECK(tied[i].span == order[i]);
  }
  CHECK(tied[6].video_id == "vb");
  CHECK(tied[6].span == order[0]);
}

TEST_CASE("report json carries metrics, per-query rows and the config echo") {
  mcn::EvalReport report;
  report.name = "model";
  report.r1 = 0.5;
  report.r5 = 0.75;
  report.miou = 0.25;
  report.per_query.push_back({"q1", 1.0, 1.0, 1.0});
  report.per_query.push_back({"q2", 0.0, 0.5, 0.25});
  report.config_echo = "joint_dim = 8\nsplit = test\n";

  std::ostringstream out;
  mcn::write_report_json(out, report);
  const nlohmann::json doc = nlohmann::json::parse(out.str());
  CHECK(doc["name"] == "model");
  CHECK(doc["metrics"]["r1"] == 0.5);
  CHECK(doc["metrics"]["r5"] == 0.75);
  CHECK(doc["metrics"]["miou"] == 0.25);
  REQUIRE(doc["per_query"].size() == 2);
  CHECK(doc["per_query"][0]["annotation_id"] == "q1");
  CHECK(doc["per_query"][1]["r5"] == 0.5);
  CHECK(doc["config"]["joint_dim"] == "8");
  CHECK(doc["config"]["split"] == "test");

  std::ostringstream again;
  mcn::write_report_json(again, report);
  CHECK(again.str() == out.str());
}

TEST_CASE("the report table is aligned and scaled to percent") {
  mcn::EvalReport ub;
  ub.name = "upper_bound";
  ub.r1 = ub.r5 = ub.miou = 1.0;
  mcn::EvalReport chance;
  chance.name = "chance";
  chance.r1 = 0.0375;
  chance.r5 = 0.225;
  chance.miou = 0.2264;

  std::ostringstream out;
  mcn::write_report_table(out, {ub, chance});
  CHECK(out.str() ==
        "Method            R@1     R@5    mIoU\n"
        "upper_bound    100.00  100.00  100.00\n"
        "chance           3.75   22.50   22.64\n");
}
