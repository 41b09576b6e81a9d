#include "mcn/synthetic.hpp"

#include <filesystem>
#include <string>
#include <vector>

#include "mcn/data.hpp"
#include "mcn/errors.hpp"
#include "mcn/language.hpp"
#include "mcn/rng.hpp"

namespace mcn {

namespace fs = std::filesystem;

void SyntheticSpec::validate() const {
  if (num_videos <= 0) throw ConfigError("num_videos must be positive");
  if (num_val < 0 || num_test < 0) throw ConfigError("split counts must be non-negative");
  if (num_val + num_test >= num_videos) {
    throw ConfigError("val + test must leave at least one training video");
  }
  if (min_segments <= 0 || max_segments < min_segments) {
    throw ConfigError("need 1 <= min_segments <= max_segments");
  }
  if (frames_per_segment <= 0) throw ConfigError("frames_per_segment must be positive");
  if (feature_dim <= 0 || embed_dim <= 0) throw ConfigError("dimensions must be positive");
  if (concept_vocab <= 0) throw ConfigError("concept_vocab must be positive");
  if (!shared_concepts && concept_vocab < max_segments) {
    throw ConfigError("concept_vocab must cover max_segments when segments are distinct");
  }
  if (queries_per_video <= 0) throw ConfigError("queries_per_video must be positive");
  if (noise_sigma < 0.0) throw ConfigError("noise_sigma must be non-negative");
  if (positional_rate < 0.0 || positional_rate > 1.0) {
    throw ConfigError("positional_rate must be in [0, 1]");
  }
  if (start_bias < 0.0 || start_bias > 1.0) throw ConfigError("start_bias must be in [0, 1]");
  // Positional queries need distinct first/last segments.
  if (min_segments < 2 && positional_rate > 0.0) {
    throw ConfigError("positional queries need at least 2 segments");
  }
}

namespace {

std::string pad_number(int value, int width) {
  std::string s = std::to_string(value);
  while (static_cast<int>(s.size()) < width) s.insert(s.begin(), '0');
  return s;
}

Tensor2 draw_table(std::size_t rows, std::size_t cols, Rng& rng) {
  Tensor2 t(rows, cols);
  for (double& v : t.raw()) v = rng.gaussian();
  return t;
}

}  // namespace

SyntheticSummary generate_synthetic(const SyntheticSpec& spec, const std::string& out_dir) {
  spec.validate();
  fs::create_directories(fs::path(out_dir) / "features");

  Rng rng(spec.seed);
  const auto vocab = static_cast<std::size_t>(spec.concept_vocab);
  const auto fdim = static_cast<std::size_t>(spec.feature_dim);

  // Latent appearance of each concept, one table per modality so the two
  // streams are informative but not identical.
  const Tensor2 rgb_concepts = draw_table(vocab, fdim, rng);
  const Tensor2 flow_concepts = draw_table(vocab, fdim, rng);

  // Word vectors: one token per concept plus the two positional markers.
  std::vector<std::string> tokens;
  for (int c = 0; c < spec.concept_vocab; ++c) tokens.push_back("c" + std::to_string(c));
  tokens.push_back("first");
  tokens.push_back("last");
  const Tensor2 word_table =
      draw_table(tokens.size(), static_cast<std::size_t>(spec.embed_dim), rng);

  SyntheticSummary summary;
  std::vector<AnnotationRecord> records;
  std::vector<std::pair<std::string, SplitId>> split_rows;
  std::vector<std::pair<std::string, FeaturePaths>> index_rows;

  std::vector<int> concept_pool(vocab);
  for (std::size_t c = 0; c < vocab; ++c) concept_pool[static_cast<std::size_t>(c)] = static_cast<int>(c);

  int query_serial = 0;
  for (int v = 0; v < spec.num_videos; ++v) {
    const std::string video_id = "v" + pad_number(v, 5);
    const int n = spec.min_segments == spec.max_segments
                      ? spec.min_segments
                      : rng.uniform_int(spec.min_segments, spec.max_segments);

    // Decide query kinds first; a positional query forces a duplicated
    // concept at the two ends so only the endpoints can tell them apart.
    std::vector<bool> positional(static_cast<std::size_t>(spec.queries_per_video));
    bool any_positional = false;
    for (auto&& flag : positional) {
      flag = rng.uniform() < spec.positional_rate;
      any_positional = any_positional || flag;
    }

    std::vector<int> concepts(static_cast<std::size_t>(n));
    if (spec.shared_concepts) {
      const int c = static_cast<int>(rng.index(vocab));
      std::fill(concepts.begin(), concepts.end(), c);
    } else {
      rng.shuffle(concept_pool);
      std::copy_n(concept_pool.begin(), n, concepts.begin());
      if (any_positional) concepts.back() = concepts.front();
    }

    // Frame features per modality: segment concept plus isotropic noise.
    auto make_features = [&](const Tensor2& table, Modality modality) {
      VideoFeatures vf;
      vf.video_id = video_id;
      vf.modality = modality;
      vf.num_segments = n;
      vf.frames_per_segment = spec.frames_per_segment;
      vf.frames = Tensor2(static_cast<std::size_t>(n * spec.frames_per_segment), fdim);
      for (int s = 0; s < n; ++s) {
        const Vec base = table.row(static_cast<std::size_t>(concepts[static_cast<std::size_t>(s)]));
        for (int f = 0; f < spec.frames_per_segment; ++f) {
          Vec frame(fdim);
          for (std::size_t d = 0; d < fdim; ++d) {
            frame[d] = base[d] + (spec.noise_sigma > 0.0 ? rng.gaussian(0.0, spec.noise_sigma) : 0.0);
          }
          vf.frames.set_row(static_cast<std::size_t>(s * spec.frames_per_segment + f), frame);
        }
      }
      return vf;
    };
    const VideoFeatures rgb = make_features(rgb_concepts, Modality::rgb);
    const VideoFeatures flow = make_features(flow_concepts, Modality::flow);

    const std::string rgb_path = "features/" + video_id + "_rgb.mcnf";
    const std::string flow_path = "features/" + video_id + "_flow.mcnf";
    save_features((fs::path(out_dir) / rgb_path).string(), rgb);
    save_features((fs::path(out_dir) / flow_path).string(), flow);
    index_rows.emplace_back(video_id, FeaturePaths{rgb_path, flow_path});

    SplitId split = SplitId::train;
    if (v >= spec.num_videos - spec.num_test) {
      split = SplitId::test;
    } else if (v >= spec.num_videos - spec.num_test - spec.num_val) {
      split = SplitId::val;
    }
    split_rows.emplace_back(video_id, split);

    for (int q = 0; q < spec.queries_per_video; ++q) {
      AnnotationRecord rec;
      rec.annotation_id = "q" + pad_number(query_serial++, 6);
      rec.video_id = video_id;
      rec.num_segments = n;

      Span truth;
      if (positional[static_cast<std::size_t>(q)]) {
        const bool first = rng.uniform() < 0.5;
        const int marked = concepts.front();  // same concept sits at both ends
        rec.description =
            std::string(first ? "first" : "last") + " c" + std::to_string(marked);
        truth = first ? Span{0, 0} : Span{n - 1, n - 1};
        ++summary.position_queries;
      } else {
        // Duplicated ends are off limits for content queries; their concept
        // appears twice and the text alone could not pin the span down.
        const int lo = (!spec.shared_concepts && any_positional) ? 1 : 0;
        const int hi = (!spec.shared_concepts && any_positional) ? n - 2 : n - 1;
        const int start = rng.uniform() < spec.start_bias ? lo : rng.uniform_int(lo, hi);
        const int max_len = hi - start + 1;
        const double u = rng.uniform();
        int len = u < 0.6 ? 1 : (u < 0.9 ? 2 : 3);
        if (len > max_len) len = max_len;
        truth = Span{start, start + len - 1};
        std::string text;
        for (int s = truth.start; s <= truth.end; ++s) {
          if (!text.empty()) text += ' ';
          text += "c" + std::to_string(concepts[static_cast<std::size_t>(s)]);
        }
        rec.description = text;
      }
      rec.times.assign(4, truth);
      records.push_back(std::move(rec));
      ++summary.queries;
    }
    ++summary.videos;
  }
  summary.videos = spec.num_videos;

  save_annotations((fs::path(out_dir) / "annotations.json").string(), records);
  save_split_file((fs::path(out_dir) / "splits.tsv").string(), split_rows);
  save_feature_index((fs::path(out_dir) / "index.tsv").string(), index_rows);
  save_word_vectors((fs::path(out_dir) / "wordvecs.txt").string(), tokens, word_table);

  // Ground-truth concept appearance, so an external matcher can decode the
  // planted segments without touching the generator.
  std::vector<std::string> concept_tokens(tokens.begin(), tokens.begin() + spec.concept_vocab);
  save_word_vectors((fs::path(out_dir) / "concepts_rgb.txt").string(), concept_tokens,
                    rgb_concepts);
  save_word_vectors((fs::path(out_dir) / "concepts_flow.txt").string(), concept_tokens,
                    flow_concepts);
  return summary;
}

}  // namespace mcn
