#include <doctest.h>

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "mcn/data.hpp"
#include "mcn/errors.hpp"
#include "mcn/features.hpp"
#include "mcn/language.hpp"
#include "mcn/synthetic.hpp"
#include "mcn/tensor.hpp"
#include "support/temp_dir.hpp"

namespace fs = std::filesystem;
using testsupport::TempDir;
using testsupport::read_file;

namespace {

mcn::SyntheticSpec small_spec() {
  mcn::SyntheticSpec spec;
  spec.seed = 11;
  spec.num_videos = 6;
  spec.num_val = 2;
  spec.num_test = 1;
  spec.min_segments = 4;
  spec.max_segments = 5;
  spec.frames_per_segment = 2;
  spec.feature_dim = 4;
  spec.embed_dim = 4;
  spec.concept_vocab = 8;
  spec.queries_per_video = 2;
  return spec;
}

std::map<std::string, std::string> snapshot(const fs::path& root) {
  std::map<std::string, std::string> files;
  for (const auto& entry : fs::recursive_directory_iterator(root)) {
    if (!entry.is_regular_file()) continue;
    files[fs::relative(entry.path(), root).string()] = read_file(entry.path().string());
  }
  return files;
}

}  // namespace

TEST_CASE("generation is a pure function of the spec") {
  TempDir dir("synth_det");
  const mcn::SyntheticSpec spec = small_spec();
  mcn::generate_synthetic(spec, dir.file("a"));
  mcn::generate_synthetic(spec, dir.file("b"));

  const auto a = snapshot(dir.path() / "a");
  const auto b = snapshot(dir.path() / "b");
  REQUIRE(a.size() == b.size());
  CHECK(a.size() >= 6 + 2 * 6);  // metadata files plus two feature files per video
  for (const auto& [name, bytes] : a) {
    REQUIRE(b.count(name) == 1);
    CHECK_MESSAGE(bytes == b.at(name), name);
  }

  mcn::SyntheticSpec other = spec;
  other.seed = 12;
  mcn::generate_synthetic(other, dir.file("c"));
  const auto c = snapshot(dir.path() / "c");
  bool any_differ = false;
  for (const auto& [name, bytes] : a) {
    any_differ = any_differ || c.count(name) == 0 || c.at(name) != bytes;
  }
  CHECK(any_differ);
}

TEST_CASE("the generated corpus loads and counts line up") {
  TempDir dir("synth_load");
  const mcn::SyntheticSpec spec = small_spec();
  const mcn::SyntheticSummary summary = mcn::generate_synthetic(spec, dir.file("out"));
  CHECK(summary.videos == 6);
  CHECK(summary.queries == 12);
  CHECK(summary.position_queries >= 0);
  CHECK(summary.position_queries <= summary.queries);

  const fs::path out = dir.path() / "out";
  const mcn::Corpus corpus =
      mcn::load_corpus((out / "annotations.json").string(), (out / "splits.tsv").string(),
                       (out / "index.tsv").string());
  CHECK(corpus.records.size() == 12);
  CHECK(corpus.ingest.records_padded == 0);
  CHECK(corpus.ingest.spans_rejected == 0);
  CHECK(corpus.ingest.spans_clipped == 0);

  CHECK(corpus.split_videos(mcn::SplitId::train).size() == 3);
  CHECK(corpus.split_videos(mcn::SplitId::val).size() == 2);
  CHECK(corpus.split_videos(mcn::SplitId::test).size() == 1);

  // Every query carries four identical annotator spans inside its video.
  for (const mcn::AnnotationRecord& rec : corpus.records) {
    REQUIRE(rec.times.size() == 4);
    for (const mcn::Span& s : rec.times) CHECK(s == rec.times[0]);
    CHECK(rec.times[0].start >= 0);
    CHECK(rec.times[0].end < rec.num_segments);
    CHECK(corpus.feature_index.count(rec.video_id) == 1);
  }

  mcn::FeatureStore store(corpus.feature_index);
  for (const std::string& video : corpus.split_videos(mcn::SplitId::train)) {
    const mcn::VideoFeatures& rgb = store.get(video, mcn::Modality::rgb);
    const mcn::VideoFeatures& flow = store.get(video, mcn::Modality::flow);
    CHECK(rgb.num_segments >= 4);
    CHECK(rgb.num_segments <= 5);
    CHECK(rgb.num_segments == flow.num_segments);
    CHECK(rgb.dim() == 4);
    CHECK(rgb.frames_per_segment == 2);
  }

  // Word vectors cover the concept tokens plus the positional markers.
  const mcn::Vocabulary vocab = mcn::load_word_vectors((out / "wordvecs.txt").string());
  CHECK(vocab.size() == 8 + 2 + 1);  // concepts, first/last, unknown
  CHECK(vocab.lookup("first") != vocab.unknown_index);
  CHECK(vocab.lookup("last") != vocab.unknown_index);
  CHECK(vocab.lookup("c0") != vocab.unknown_index);
}

TEST_CASE("without noise the planted concepts decode every answer") {
  // An independent matcher: read the published concept tables, decode each
  // segment by nearest concept, and resolve the query text. It must agree
  // with the stored annotation on every query, so a perfect localizer exists
  // and the corpus really is learnable.
  TempDir dir("synth_oracle");
  mcn::SyntheticSpec spec = small_spec();
  spec.seed = 77;
  spec.num_videos = 12;
  spec.num_val = 3;
  spec.noise_sigma = 0.0;
  spec.positional_rate = 0.4;
  mcn::generate_synthetic(spec, dir.file("out"));

  const fs::path out = dir.path() / "out";
  const mcn::Corpus corpus =
      mcn::load_corpus((out / "annotations.json").string(), (out / "splits.tsv").string(),
                       (out / "index.tsv").string());
  const mcn::Vocabulary concepts = mcn::load_word_vectors((out / "concepts_rgb.txt").string());
  mcn::FeatureStore store(corpus.feature_index);

  int checked = 0;
  for (const mcn::AnnotationRecord& rec : corpus.records) {
    const mcn::VideoFeatures& vf = store.get(rec.video_id, mcn::Modality::rgb);
    const int n = vf.num_segments;

    std::vector<int> decoded(static_cast<std::size_t>(n), -1);
    for (int s = 0; s < n; ++s) {
      const mcn::Vec pooled = mcn::pool_local(vf, {s, s});
      double best = 0.0;
      for (int c = 0; c < spec.concept_vocab; ++c) {
        const double d =
            mcn::squared_distance(pooled, concepts.table.row(concepts.lookup("c" + std::to_string(c))));
        if (decoded[static_cast<std::size_t>(s)] < 0 || d < best) {
          decoded[static_cast<std::size_t>(s)] = c;
          best = d;
        }
      }
    }

    const std::vector<std::string> words = mcn::tokenize(rec.description);
    mcn::Span predicted{-1, -1};
    if (words[0] == "first" || words[0] == "last") {
      REQUIRE(words.size() == 2);
      predicted = words[0] == "first" ? mcn::Span{0, 0} : mcn::Span{n - 1, n - 1};
      // the named concept really does sit at that end
      CHECK(decoded[static_cast<std::size_t>(predicted.start)] ==
            std::stoi(words[1].substr(1)));
    } else {
      std::vector<int> wanted;
      for (const std::string& w : words) wanted.push_back(std::stoi(w.substr(1)));
      const int len = static_cast<int>(wanted.size());
      int matches = 0;
      for (int s = 0; s + len <= n; ++s) {
        bool hit = true;
        for (int k = 0; k < len; ++k) hit = hit && decoded[static_cast<std::size_t>(s + k)] == wanted[static_cast<std::size_t>(k)];
        if (hit) {
          predicted = {s, s + len - 1};
          ++matches;
        }
      }
      CHECK(matches == 1);  // the query text pins down exactly one window
    }
    CHECK(predicted == rec.times[0]);
    ++checked;
  }
  CHECK(checked == spec.num_videos * spec.queries_per_video);
}

TEST_CASE("shared-concept videos leave position as the only signal") {
  TempDir dir("synth_shared");
  mcn::SyntheticSpec spec = small_spec();
  spec.shared_concepts = true;
  spec.concept_vocab = 3;  // may be smaller than max_segments here
  spec.positional_rate = 1.0;
  spec.noise_sigma = 0.0;
  const mcn::SyntheticSummary summary = mcn::generate_synthetic(spec, dir.file("out"));
  CHECK(summary.position_queries == summary.queries);

  const fs::path out = dir.path() / "out";
  const mcn::Corpus corpus =
      mcn::load_corpus((out / "annotations.json").string(), (out / "splits.tsv").string(),
                       (out / "index.tsv").string());
  for (const mcn::AnnotationRecord& rec : corpus.records) {
    const std::vector<std::string> words = mcn::tokenize(rec.description);
    CHECK((words[0] == "first" || words[0] == "last"));
    const mcn::Span truth = rec.times[0];
    if (words[0] == "first") {
      CHECK(truth == mcn::Span{0, 0});
    } else {
      CHECK(truth.start == truth.end);
      CHECK(truth.start == rec.num_segments - 1);
    }
  }
}

TEST_CASE("impossible specs are rejected") {
  auto reject = [](void (*mutate)(mcn::SyntheticSpec&)) {
    mcn::SyntheticSpec spec;
    mutate(spec);
    CHECK_THROWS_AS(spec.validate(), mcn::ConfigError);
  };
  reject([](mcn::SyntheticSpec& s) { s.num_videos = 0; });
  reject([](mcn::SyntheticSpec& s) { s.num_val = -1; });
  reject([](mcn::SyntheticSpec& s) { s.num_videos = 5; s.num_val = 3; s.num_test = 2; });
  reject([](mcn::SyntheticSpec& s) { s.min_segments = 6; s.max_segments = 5; });
  reject([](mcn::SyntheticSpec& s) { s.frames_per_segment = 0; });
  reject([](mcn::SyntheticSpec& s) { s.feature_dim = 0; });
  reject([](mcn::SyntheticSpec& s) { s.concept_vocab = 4; s.max_segments = 8; });
  reject([](mcn::SyntheticSpec& s) { s.queries_per_video = 0; });
  reject([](mcn::SyntheticSpec& s) { s.noise_sigma = -0.1; });
  reject([](mcn::SyntheticSpec& s) { s.positional_rate = 1.5; });
  reject([](mcn::SyntheticSpec& s) { s.min_segments = 1; s.positional_rate = 0.5; });
  CHECK_NOTHROW(mcn::SyntheticSpec{}.validate());
}
