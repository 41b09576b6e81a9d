// Microbenchmarks for the scoring hot path: feature pooling, the sentence
// encoder and whole-video moment ranking, at dimensions close to the real
// appearance features rather than the toy sizes the unit tests use.
#include <benchmark/benchmark.h>

#include <vector>

#include "mcn/config.hpp"
#include "mcn/eval.hpp"
#include "mcn/features.hpp"
#include "mcn/language.hpp"
#include "mcn/layers.hpp"
#include "mcn/model.hpp"
#include "mcn/moments.hpp"
#include "mcn/rng.hpp"

namespace {

mcn::VideoFeatures make_features(std::size_t dim, int segments, int frames_per_segment,
                                 std::uint64_t seed) {
  mcn::VideoFeatures vf;
  vf.video_id = "bench";
  vf.modality = mcn::Modality::rgb;
  vf.num_segments = segments;
  vf.frames_per_segment = frames_per_segment;
  vf.frames = mcn::Tensor2(static_cast<std::size_t>(segments * frames_per_segment), dim);
  mcn::Rng rng(seed);
  for (double& v : vf.frames.raw()) v = rng.gaussian();
  return vf;
}

void bm_pool_local(benchmark::State& state) {
  const auto vf = make_features(1024, 6, 30, 1);
  for (auto _ : state) {
    benchmark::DoNotOptimize(mcn::pool_local(vf, {1, 4}));
  }
}
BENCHMARK(bm_pool_local)->Unit(benchmark::kMicrosecond);

void bm_pool_global(benchmark::State& state) {
  const auto vf = make_features(1024, 6, 30, 2);
  for (auto _ : state) {
    benchmark::DoNotOptimize(mcn::pool_global(vf));
  }
}
BENCHMARK(bm_pool_global)->Unit(benchmark::kMicrosecond);

void bm_sliding_windows(benchmark::State& state) {
  const auto vf = make_features(1024, 6, 30, 3);
  for (auto _ : state) {
    benchmark::DoNotOptimize(mcn::sliding_windows(vf, 30, 5));
  }
}
BENCHMARK(bm_sliding_windows)->Unit(benchmark::kMicrosecond);

void bm_lstm_step(benchmark::State& state) {
  const auto hidden = static_cast<std::size_t>(state.range(0));
  mcn::Rng rng(4);
  mcn::LstmParams lstm = mcn::make_lstm(300, hidden);
  mcn::init_lstm(lstm, rng);
  mcn::Vec x(300);
  for (double& v : x) v = rng.gaussian();
  mcn::LstmState prev{mcn::Vec(hidden, 0.0), mcn::Vec(hidden, 0.0)};
  for (auto _ : state) {
    benchmark::DoNotOptimize(mcn::lstm_step(lstm, x, prev));
  }
}
BENCHMARK(bm_lstm_step)->Arg(256)->Arg(1000)->Unit(benchmark::kMicrosecond);

/// Full query-against-video ranking at paper-scale widths.
void bm_localize(benchmark::State& state) {
  mcn::RunConfig config;  // joint 100, hidden 500, lstm 1000
  mcn::Vocabulary vocab;
  vocab.table = mcn::Tensor2(50, 300);
  mcn::Rng rng(5);
  for (double& v : vocab.table.raw()) v = rng.gaussian();
  for (int w = 0; w < 49; ++w) vocab.index["w" + std::to_string(w)] = w;
  vocab.index[mcn::kUnknownToken] = 49;
  vocab.unknown_index = 49;
  const mcn::ModelParams model = mcn::build_model(config, std::move(vocab), 1024, 1024, rng);

  const auto rgb = make_features(1024, 6, 30, 6);
  auto flow = make_features(1024, 6, 30, 7);
  flow.modality = mcn::Modality::flow;
  mcn::Query query;
  query.video_id = "bench";
  query.tokens = {1, 7, 21, 3, 40};

  for (auto _ : state) {
    benchmark::DoNotOptimize(mcn::localize(model, query, &rgb, &flow));
  }
}
BENCHMARK(bm_localize)->Unit(benchmark::kMillisecond);

void bm_score_prediction(benchmark::State& state) {
  mcn::Rng rng(8);
  std::vector<mcn::Span> ranking = mcn::enumerate_candidates(6);
  rng.shuffle(ranking);
  const std::vector<mcn::Span> annotations{{1, 2}, {1, 2}, {0, 2}, {1, 1}};
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        mcn::score_prediction(ranking, annotations, mcn::Metric::r_at_1));
    benchmark::DoNotOptimize(
        mcn::score_prediction(ranking, annotations, mcn::Metric::miou));
  }
}
BENCHMARK(bm_score_prediction)->Unit(benchmark::kNanosecond);

}  // namespace

BENCHMARK_MAIN();
