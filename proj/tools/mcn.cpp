// Command-line front end: corpus synthesis, training, evaluation,
// localization, baselines and gradient checking over one shared config.
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "mcn/checkpoint.hpp"
#include "mcn/config.hpp"
#include "mcn/data.hpp"
#include "mcn/errors.hpp"
#include "mcn/eval.hpp"
#include "mcn/selfcheck.hpp"
#include "mcn/model.hpp"
#include "mcn/synthetic.hpp"
#include "mcn/train.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitCheckFailed = 1;
constexpr int kExitUsage = 2;
constexpr int kExitDivergence = 3;

/// Deferred config assembly: file first, then flags in the order given.
struct ConfigArgs {
  std::string config_path;
  std::vector<std::pair<std::string, std::string>> overrides;

  mcn::RunConfig resolve() const {
    mcn::RunConfig config;
    if (!config_path.empty()) config = mcn::RunConfig::from_file(config_path);
    for (const auto& [key, value] : overrides) {
      config.apply_line(key + " = " + value, 0);
    }
    return config;
  }
};

void add_config_options(CLI::App* cmd, ConfigArgs& args) {
  cmd->add_option("--config", args.config_path, "key = value config file; flags override it")
      ->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

  static const std::vector<std::string> keys = {
      "annotations", "feature_index", "splits", "word_vectors", "checkpoint", "out_dir",
      "joint_dim", "hidden_dim", "lstm_hidden", "late_fusion", "margin", "lambda",
      "learning_rate", "batch_size", "epochs", "inter_negatives", "patience", "seed",
      "max_tokens", "use_global", "use_tef", "use_rgb", "use_flow", "compact_input",
      "language_free", "finetune_embeddings", "trials", "jobs", "split", "baseline",
      "default_num_segments", "ann_key_id", "ann_key_video", "ann_key_description",
      "ann_key_times", "ann_key_segments"};
  for (const std::string& key : keys) {
    std::string flag = "--" + key;
    for (char& c : flag) {
      if (c == '_') c = '-';
    }
    if (key == "learning_rate") flag += ",--lr";
    // repeated flags behave like repeated config lines: the last one wins
    cmd->add_option_function<std::string>(
           flag,
           [&args, key](const std::string& value) { args.overrides.emplace_back(key, value); },
           "config key " + key)
        ->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  }
}

mcn::AnnotationKeys annotation_keys(const mcn::RunConfig& config) {
  mcn::AnnotationKeys keys;
  if (!config.ann_key_id.empty()) keys.id = config.ann_key_id;
  if (!config.ann_key_video.empty()) keys.video = config.ann_key_video;
  if (!config.ann_key_description.empty()) keys.description = config.ann_key_description;
  if (!config.ann_key_times.empty()) keys.times = config.ann_key_times;
  if (!config.ann_key_segments.empty()) keys.segments = config.ann_key_segments;
  keys.default_num_segments = config.default_num_segments;
  return keys;
}

void require_path(const std::string& value, const char* what) {
  if (value.empty()) throw mcn::ConfigError(std::string(what) + " path required");
}

std::string checkpoint_path(const mcn::RunConfig& config) {
  if (!config.checkpoint.empty()) return config.checkpoint;
  const fs::path dir = config.out_dir.empty() ? fs::path(".") : fs::path(config.out_dir);
  return (dir / "checkpoint.mcnp").string();
}

// ---- synth -----------------------------------------------------------------

struct SynthArgs {
  mcn::SyntheticSpec spec;
  std::string out_dir;
};

int cmd_synth(const SynthArgs& args) {
  require_path(args.out_dir, "--out");
  const mcn::SyntheticSummary summary = mcn::generate_synthetic(args.spec, args.out_dir);
  std::printf("videos=%d queries=%d position_queries=%d\n", summary.videos, summary.queries,
              summary.position_queries);
  return kExitOk;
}

// ---- train -----------------------------------------------------------------

int cmd_train(const ConfigArgs& args) {
  mcn::RunConfig config = args.resolve();
  config.validate();
  require_path(config.annotations, "annotations");
  require_path(config.splits, "splits");
  require_path(config.feature_index, "feature index");
  require_path(config.word_vectors, "word vectors");

  const mcn::Corpus corpus =
      mcn::load_corpus(config.annotations, config.splits, config.feature_index,
                       annotation_keys(config));
  mcn::FeatureStore store(corpus.feature_index);
  std::vector<std::string> needed = corpus.split_videos(mcn::SplitId::train);
  const auto val_videos = corpus.split_videos(mcn::SplitId::val);
  needed.insert(needed.end(), val_videos.begin(), val_videos.end());
  store.preload(needed, config.use_rgb, config.use_flow);

  const auto train_records = corpus.split(mcn::SplitId::train);
  if (train_records.empty()) throw mcn::ConfigError("training split is empty");
  const std::string& probe = train_records.front()->video_id;
  const std::size_t rgb_dim =
      config.use_rgb ? static_cast<std::size_t>(store.get(probe, mcn::Modality::rgb).dim()) : 0;
  const std::size_t flow_dim =
      config.use_flow ? static_cast<std::size_t>(store.get(probe, mcn::Modality::flow).dim()) : 0;

  mcn::Vocabulary vocab = mcn::load_word_vectors(config.word_vectors);
  mcn::Rng rng(config.seed);
  mcn::ModelParams model =
      mcn::build_model(config, std::move(vocab), rgb_dim, flow_dim, rng);

  mcn::TrainResult result = mcn::train(config, corpus, store, std::move(model));
  for (const mcn::EpochLog& row : result.log) {
    std::printf("epoch=%d train_loss=%.6g intra=%.6g inter=%.6g val_r1=%.6g\n", row.epoch,
                row.train_loss, row.intra, row.inter, row.val_r1);
  }

  const std::string out = checkpoint_path(config);
  if (!fs::path(out).parent_path().empty()) fs::create_directories(fs::path(out).parent_path());
  mcn::save_checkpoint(out, config, result.best_params);
  std::printf("best_epoch=%d best_val_r1=%.6g checkpoint=%s\n", result.best_epoch,
              result.best_val_r1, out.c_str());
  return kExitOk;
}

// ---- eval ------------------------------------------------------------------

int run_eval(mcn::RunConfig config) {
  config.validate();
  require_path(config.annotations, "annotations");
  require_path(config.splits, "splits");

  const bool use_model = config.baseline.empty();
  mcn::Checkpoint ckpt;
  if (use_model) {
    if (config.checkpoint.empty()) throw mcn::ConfigError("need --checkpoint or --baseline");
    ckpt = mcn::load_checkpoint(config.checkpoint);
    config.adopt_model_structure(ckpt.config);
  }

  const mcn::Corpus corpus =
      mcn::load_corpus(config.annotations, config.splits,
                       use_model ? config.feature_index : std::string(), annotation_keys(config));
  const auto queries = corpus.split(mcn::parse_split(config.split));

  mcn::EvalReport report;
  if (!use_model) {
    if (config.baseline == "upper_bound") {
      report = mcn::baseline_upper_bound(queries);
    } else if (config.baseline == "chance") {
      report = mcn::baseline_chance(queries, config.seed, config.trials, config.jobs);
    } else if (config.baseline == "prior" || config.baseline == "moment_prior") {
      report = mcn::baseline_moment_prior(corpus.split(mcn::SplitId::train), queries);
      report.name = "moment_prior";
    } else {
      throw mcn::ConfigError("unknown baseline '" + config.baseline +
                             "' (try upper_bound, chance, prior)");
    }
  } else {
    require_path(config.feature_index, "feature index");
    const mcn::ModelParams model = mcn::restore_model(ckpt);
    mcn::FeatureStore store(corpus.feature_index);
    std::vector<std::string> needed;
    for (const auto* rec : queries) needed.push_back(rec->video_id);
    store.preload(needed, model.use_rgb, model.use_flow);
    report = mcn::evaluate(mcn::model_ranker(model, store), queries, config.jobs);
    report.name = "mcn";
  }
  report.config_echo = config.to_text();

  if (!config.out_dir.empty()) {
    fs::create_directories(config.out_dir);
    std::ofstream out(fs::path(config.out_dir) / "report.json");
    if (!out) throw mcn::DataError("cannot write report under " + config.out_dir);
    mcn::write_report_json(out, report);
  }
  mcn::write_report_table(std::cout, {report});
  return kExitOk;
}

int cmd_eval(const ConfigArgs& args) { return run_eval(args.resolve()); }

int cmd_baseline(const ConfigArgs& args, const std::string& name) {
  mcn::RunConfig config = args.resolve();
  config.baseline = name;
  return run_eval(std::move(config));
}

// ---- localize --------------------------------------------------------------

struct LocalizeArgs {
  ConfigArgs config;
  std::string text;
  std::string video;
  bool fine_grained = false;
  int window_frames = 0;  // 0: one segment's worth of frames
  int stride_frames = 1;
  int corpus_topk = 0;
};

int cmd_localize(const LocalizeArgs& args) {
  mcn::RunConfig config = args.config.resolve();
  if (config.checkpoint.empty()) throw mcn::ConfigError("localize needs --checkpoint");
  if (args.text.empty()) throw mcn::ConfigError("localize needs --text");
  const mcn::Checkpoint ckpt = mcn::load_checkpoint(config.checkpoint);
  config.adopt_model_structure(ckpt.config);
  const mcn::ModelParams model = mcn::restore_model(ckpt);

  if (args.corpus_topk > 0) {
    require_path(config.annotations, "annotations");
    require_path(config.splits, "splits");
    require_path(config.feature_index, "feature index");
    const mcn::Corpus corpus = mcn::load_corpus(config.annotations, config.splits,
                                                config.feature_index, annotation_keys(config));
    mcn::FeatureStore store(corpus.feature_index);
    const auto videos = corpus.split_videos(mcn::parse_split(config.split));
    store.preload(videos, model.use_rgb, model.use_flow);
    const auto hits = mcn::retrieve_corpus(model, args.text, videos, store,
                                           static_cast<std::size_t>(args.corpus_topk));
    for (const auto& hit : hits) {
      std::printf("%s\t[%d,%d]\t%.17g\n", hit.video_id.c_str(), hit.span.start, hit.span.end,
                  hit.distance);
    }
    return kExitOk;
  }

  if (args.video.empty()) throw mcn::ConfigError("localize needs --video (or --corpus-topk)");
  require_path(config.feature_index, "feature index");
  mcn::FeatureStore store(mcn::load_feature_index(config.feature_index));
  if (!store.has(args.video)) throw mcn::DataError("unknown video id " + args.video);
  const mcn::VideoFeatures* rgb =
      model.use_rgb ? &store.get(args.video, mcn::Modality::rgb) : nullptr;
  const mcn::VideoFeatures* flow =
      model.use_flow ? &store.get(args.video, mcn::Modality::flow) : nullptr;

  mcn::Query query;
  query.raw_text = args.text;
  query.video_id = args.video;
  query.tokens = model.vocab.lookup_all(mcn::tokenize(args.text));

  if (args.fine_grained) {
    const mcn::VideoFeatures& lead = model.use_rgb ? *rgb : *flow;
    const int window = args.window_frames > 0 ? args.window_frames : lead.frames_per_segment;
    const mcn::Vec sentence = mcn::embed_language(model, query.tokens);

    auto window_scores = [&](const mcn::VideoFeatures& vf) {
      std::vector<std::pair<int, mcn::Vec>> embedded;
      const mcn::Vec global = mcn::pool_global(vf);
      for (const auto& w : mcn::sliding_windows(vf, window, args.stride_frames)) {
        mcn::Vec input;
        input.insert(input.end(), w.local.begin(), w.local.end());
        if (model.flags.use_global) {
          input.insert(input.end(), global.begin(), global.end());
        } else if (!model.flags.compact) {
          input.insert(input.end(), global.size(), 0.0);
        }
        if (model.flags.use_tef) {
          input.push_back(w.tef.first);
          input.push_back(w.tef.second);
        } else if (!model.flags.compact) {
          input.push_back(0.0);
          input.push_back(0.0);
        }
        const mcn::VisualBranch& branch =
            vf.modality == mcn::Modality::rgb ? model.rgb : model.flow;
        embedded.emplace_back(w.begin_frame, mcn::visual_branch_forward(branch, input));
      }
      return embedded;
    };

    std::vector<std::pair<int, double>> trace;
    if (model.use_rgb) {
      for (const auto& [frame, v] : window_scores(*rgb)) {
        trace.emplace_back(frame, mcn::squared_distance(v, sentence));
      }
    }
    if (model.use_flow) {
      const auto flow_scores = window_scores(*flow);
      if (trace.empty()) {
        for (const auto& [frame, v] : flow_scores) {
          trace.emplace_back(frame, model.late_fusion * mcn::squared_distance(v, sentence));
        }
      } else {
        if (flow_scores.size() != trace.size()) {
          throw mcn::DataError(args.video + ": rgb and flow disagree on frame count");
        }
        for (std::size_t i = 0; i < trace.size(); ++i) {
          trace[i].second +=
              model.late_fusion * mcn::squared_distance(flow_scores[i].second, sentence);
        }
      }
    }
    for (const auto& [frame, score] : trace) {
      std::printf("%d\t%.17g\n", frame, score);
    }
    return kExitOk;
  }

  for (const mcn::ScoredSpan& s : mcn::localize(model, query, rgb, flow)) {
    std::printf("[%d,%d]\t%.17g\n", s.span.start, s.span.end, s.distance);
  }
  return kExitOk;
}

// ---- gradcheck -------------------------------------------------------------

struct GradcheckArgs {
  ConfigArgs config;
  int instances = 20;
  bool negative_control = false;
};

int cmd_gradcheck(const GradcheckArgs& args) {
  const mcn::RunConfig config = args.config.resolve();
  const std::vector<mcn::LayerCheckSummary> results =
      mcn::run_gradient_suite(args.instances, config.seed, args.negative_control);

  bool all_pass = true;
  for (const mcn::LayerCheckSummary& r : results) {
    if (!r.pass) std::fputs(r.failure_detail.c_str(), stderr);
    std::printf("%s: max_rel_error=%.3g %s\n", r.name.c_str(), r.max_rel_error,
                r.pass ? "pass" : "FAIL");
    all_pass = all_pass && r.pass;
  }
  std::printf("%s\n", all_pass ? "gradcheck: all layers pass" : "gradcheck: FAILED");
  return all_pass ? kExitOk : kExitCheckFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Natural-language moment localization in video"};
  app.require_subcommand(1);

  SynthArgs synth;
  CLI::App* synth_cmd = app.add_subcommand("synth", "Generate a planted synthetic corpus");
  synth_cmd->add_option("--out", synth.out_dir, "output directory")->required();
  synth_cmd->add_option("--seed", synth.spec.seed);
  synth_cmd->add_option("--videos", synth.spec.num_videos);
  synth_cmd->add_option("--val", synth.spec.num_val);
  synth_cmd->add_option("--test", synth.spec.num_test);
  synth_cmd->add_option("--min-segments", synth.spec.min_segments);
  synth_cmd->add_option("--max-segments", synth.spec.max_segments);
  synth_cmd->add_option("--frames-per-segment", synth.spec.frames_per_segment);
  synth_cmd->add_option("--feature-dim", synth.spec.feature_dim);
  synth_cmd->add_option("--embed-dim", synth.spec.embed_dim);
  synth_cmd->add_option("--concepts", synth.spec.concept_vocab);
  synth_cmd->add_option("--queries-per-video", synth.spec.queries_per_video);
  synth_cmd->add_option("--sigma", synth.spec.noise_sigma);
  synth_cmd->add_option("--positional-rate", synth.spec.positional_rate);
  synth_cmd->add_option("--start-bias", synth.spec.start_bias);
  synth_cmd->add_flag("--shared-concepts", synth.spec.shared_concepts);

  ConfigArgs train_args;
  CLI::App* train_cmd = app.add_subcommand("train", "Train the joint embedding");
  add_config_options(train_cmd, train_args);

  ConfigArgs eval_args;
  CLI::App* eval_cmd = app.add_subcommand("eval", "Score a checkpoint or baseline on a split");
  add_config_options(eval_cmd, eval_args);

  ConfigArgs baseline_args;
  std::string baseline_name;
  CLI::App* baseline_cmd = app.add_subcommand("baseline", "Score an annotation-only baseline");
  baseline_cmd->add_option("name", baseline_name, "upper_bound | chance | prior")->required();
  add_config_options(baseline_cmd, baseline_args);

  LocalizeArgs localize;
  CLI::App* localize_cmd =
      app.add_subcommand("localize", "Rank the moments of one video for a text query");
  add_config_options(localize_cmd, localize.config);
  localize_cmd->add_option("--text", localize.text, "natural-language query")->required();
  localize_cmd->add_option("--video", localize.video, "video id from the feature index");
  localize_cmd->add_flag("--fine-grained", localize.fine_grained,
                         "score frame windows instead of segment spans");
  localize_cmd->add_option("--window", localize.window_frames, "window length in frames");
  localize_cmd->add_option("--stride", localize.stride_frames, "window stride in frames");
  localize_cmd->add_option("--corpus-topk", localize.corpus_topk,
                           "retrieve the k best moments across the whole split");

  GradcheckArgs gradcheck;
  CLI::App* gradcheck_cmd =
      app.add_subcommand("gradcheck", "Finite-difference check of every layer and the loss");
  add_config_options(gradcheck_cmd, gradcheck.config);
  gradcheck_cmd->add_option("--instances", gradcheck.instances, "random instances per layer");
  gradcheck_cmd->add_flag("--negative-control", gradcheck.negative_control)->group("");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (synth_cmd->parsed()) return cmd_synth(synth);
    if (train_cmd->parsed()) return cmd_train(train_args);
    if (eval_cmd->parsed()) return cmd_eval(eval_args);
    if (baseline_cmd->parsed()) return cmd_baseline(baseline_args, baseline_name);
    if (localize_cmd->parsed()) return cmd_localize(localize);
    if (gradcheck_cmd->parsed()) return cmd_gradcheck(gradcheck);
  } catch (const mcn::DivergenceError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitDivergence;
  } catch (const mcn::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUsage;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUsage;
  }
  return kExitUsage;
}
