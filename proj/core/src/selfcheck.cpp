#include "mcn/selfcheck.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <utility>

#include "mcn/gradcheck.hpp"
#include "mcn/model.hpp"
#include "mcn/rng.hpp"

namespace mcn {

namespace {

Tensor2 random_tensor(std::size_t rows, std::size_t cols, Rng& rng, double scale = 1.0) {
  Tensor2 t(rows, cols);
  for (double& v : t.raw()) v = rng.gaussian(0.0, scale);
  return t;
}

}  // namespace

std::vector<LayerCheckSummary> run_gradient_suite(int instances, std::uint64_t seed,
                                                  bool corrupt_linear) {
  const GradCheckConfig check_config;
  std::vector<LayerCheckSummary> results;

  int instance = 0;
  auto record = [&results, &instance](const std::string& name, const GradCheckReport& report) {
    LayerCheckSummary* summary = nullptr;
    for (LayerCheckSummary& r : results) {
      if (r.name == name) summary = &r;
    }
    if (summary == nullptr) {
      results.push_back({name, 0.0, true, ""});
      summary = &results.back();
    }
    if (!report.pass && report.max_rel_error > summary->max_rel_error) {
      summary->failure_detail =
          "instance " + std::to_string(instance) + "\n" + report.summary();
    }
    summary->max_rel_error = std::max(summary->max_rel_error, report.max_rel_error);
    summary->pass = summary->pass && report.pass;
  };

  for (instance = 0; instance < instances; ++instance) {
    Rng rng = Rng(seed).fork(static_cast<std::uint64_t>(instance));

    {  // linear: loss = c . (W x + b)
      Tensor2 w = random_tensor(5, 4, rng, 0.5);
      Tensor2 b = random_tensor(1, 5, rng, 0.5);
      Tensor2 x = random_tensor(1, 4, rng);
      const Vec c = random_tensor(1, 5, rng).row(0);
      auto loss = [&] { return dot(c, linear_forward(w, b, x.row(0))); };
      GradTable analytic;
      const LinearGrads g = linear_backward(w, b, x.row(0), c);
      analytic["w"] = g.weight;
      analytic["b"] = g.bias;
      analytic["x"] = Tensor2(1, 4);
      analytic["x"].set_row(0, g.input);
      if (corrupt_linear && instance == 0) analytic["w"].at(0, 0) += 0.5;
      record("linear",
             grad_check({{"w", &w}, {"b", &b}, {"x", &x}}, loss, analytic, check_config));
    }

    {  // relu: loss = c . relu(x)
      Tensor2 x = random_tensor(1, 8, rng);
      // A probe stepping across x = 0 would sample both relu pieces.
      for (double& v : x.raw())
        if (std::abs(v) < 1e-3) v = v < 0.0 ? v - 1e-3 : v + 1e-3;
      const Vec c = random_tensor(1, 8, rng).row(0);
      auto loss = [&] { return dot(c, relu(x.row(0))); };
      GradTable analytic;
      analytic["x"] = Tensor2(1, 8);
      analytic["x"].set_row(0, relu_backward(x.row(0), c));
      record("relu", grad_check({{"x", &x}}, loss, analytic, check_config));
    }

    {  // lstm over a short sequence: loss = c . h_last
      LstmParams lstm = make_lstm(3, 4);
      init_lstm(lstm, rng);
      for (double& v : lstm.w_input.raw()) v *= 10.0;  // spread the gates out
      for (double& v : lstm.w_hidden.raw()) v *= 10.0;
      std::vector<Vec> xs;
      for (int t = 0; t < 3; ++t) xs.push_back(random_tensor(1, 3, rng).row(0));
      const Vec c = random_tensor(1, 4, rng).row(0);
      auto loss = [&] {
        LstmState state{Vec(4, 0.0), Vec(4, 0.0)};
        for (const auto& x : xs) state = lstm_step(lstm, x, state);
        return dot(c, state.h);
      };
      std::vector<LstmCache> caches(xs.size());
      LstmState state{Vec(4, 0.0), Vec(4, 0.0)};
      for (std::size_t t = 0; t < xs.size(); ++t) {
        state = lstm_step(lstm, xs[t], state, &caches[t]);
      }
      LstmGrads acc = make_lstm_grads(lstm);
      Vec d_h = c, d_c(4, 0.0);
      for (std::size_t t = xs.size(); t-- > 0;) {
        const LstmStepGrads step = lstm_backward(lstm, caches[t], d_h, d_c, acc);
        d_h = step.h_prev;
        d_c = step.c_prev;
      }
      GradTable analytic;
      analytic["w_input"] = acc.w_input;
      analytic["w_hidden"] = acc.w_hidden;
      analytic["bias"] = acc.bias;
      record("lstm", grad_check({{"w_input", &lstm.w_input},
                                 {"w_hidden", &lstm.w_hidden},
                                 {"bias", &lstm.bias}},
                                loss, analytic, check_config));
    }

    {  // two-layer visual branch: loss = c . branch(x)
      VisualBranch branch = make_visual_branch(6, 5, 3);
      Vec x;
      VisualCache cache;
      // Redraw until no hidden pre-activation sits on the relu kink.
      for (int attempt = 0; attempt < 50; ++attempt) {
        Rng draw = rng.fork(static_cast<std::uint64_t>(attempt));
        branch.w1 = random_tensor(5, 6, draw, 0.5);
        branch.b1 = random_tensor(1, 5, draw, 0.5);
        branch.w2 = random_tensor(3, 5, draw, 0.5);
        branch.b2 = random_tensor(1, 3, draw, 0.5);
        x = random_tensor(1, 6, draw).row(0);
        visual_branch_forward(branch, x, &cache);
        bool clear = true;
        for (const double pre : cache.pre_hidden) clear = clear && std::abs(pre) > 1e-3;
        if (clear) break;
      }
      const Vec c = random_tensor(1, 3, rng).row(0);
      auto loss = [&] { return dot(c, visual_branch_forward(branch, x)); };
      VisualBranchGrads acc = make_visual_branch_grads(branch);
      visual_branch_backward(branch, cache, c, acc);
      GradTable analytic;
      analytic["w1"] = acc.w1;
      analytic["b1"] = acc.b1;
      analytic["w2"] = acc.w2;
      analytic["b2"] = acc.b2;
      record("visual_branch", grad_check({{"w1", &branch.w1},
                                          {"b1", &branch.b1},
                                          {"w2", &branch.w2},
                                          {"b2", &branch.b2}},
                                         loss, analytic, check_config));
    }

    {  // full combined loss on a tiny in-memory batch
      RunConfig tiny;
      tiny.joint_dim = 4;
      tiny.hidden_dim = 6;
      tiny.lstm_hidden = 5;
      tiny.finetune_embeddings = true;
      const double margin = 0.1;

      ModelParams model;
      VideoFeatures features[4];
      TrainingExample ex1, ex2;
      std::vector<LossBatchItem> batch(2);
      auto build_instance = [&](Rng draw) {
        Vocabulary vocab;
        vocab.table = random_tensor(6, 3, draw, 0.5);
        vocab.unknown_index = 5;
        vocab.index = {{"a", 0}, {"b", 1}, {"c", 2}, {"d", 3}, {"e", 4}, {"<unk>", 5}};
        Rng init = draw.fork(99);
        model = build_model(tiny, std::move(vocab), 3, 3, init);
        for (double& v : model.language.lstm.w_input.raw()) v *= 10.0;
        for (double& v : model.language.lstm.w_hidden.raw()) v *= 10.0;

        for (int i = 0; i < 4; ++i) {
          features[i].video_id = i < 2 ? "a" : "b";
          features[i].modality = i % 2 == 0 ? Modality::rgb : Modality::flow;
          features[i].num_segments = 3;
          features[i].frames_per_segment = 2;
          features[i].frames = random_tensor(6, 3, draw);
        }
        ex1 = {};
        ex1.query.video_id = "a";
        ex1.query.tokens = {0, 2, 1};
        ex1.positive = {0, 1};
        ex1.rgb = &features[0];
        ex1.flow = &features[1];
        ex2 = {};
        ex2.query.video_id = "b";
        ex2.query.tokens = {3, 4};
        ex2.positive = {2, 2};
        ex2.rgb = &features[2];
        ex2.flow = &features[3];
        batch[0] = {};
        batch[0].example = &ex1;
        batch[0].negatives = {{ex2.rgb, ex2.flow}};
        batch[1] = {};
        batch[1].example = &ex2;
        batch[1].negatives = {{ex1.rgb, ex1.flow}};
      };

      // Finite differences are only meaningful away from the kinks, and the
      // loss has two kinds: hinge arguments and relu pre-activations inside
      // the visual branches. Draws where either sits near zero are redrawn.
      auto clear_of_kinks = [&] {
        double hinge_closest = 1e30;
        double relu_closest = 1e30;
        auto probe_branches = [&](const VideoFeatures* rgb, const VideoFeatures* flow,
                                  Span span) {
          for (const VideoFeatures* vf : {rgb, flow}) {
            VisualCache cache;
            embed_visual(model, *vf, span, vf->modality, &cache);
            for (const double pre : cache.pre_hidden)
              relu_closest = std::min(relu_closest, std::abs(pre));
          }
        };
        for (const LossBatchItem& item : batch) {
          const TrainingExample& ex = *item.example;
          const Vec sentence = embed_language(model, ex.query.tokens);
          const double pos = distance(model, sentence, ex.rgb, ex.flow, ex.positive);
          probe_branches(ex.rgb, ex.flow, ex.positive);
          for (const Span& span : enumerate_candidates(ex.rgb->num_segments)) {
            if (span == ex.positive) continue;
            const double d = distance(model, sentence, ex.rgb, ex.flow, span);
            hinge_closest = std::min(hinge_closest, std::abs(pos - d + margin));
            probe_branches(ex.rgb, ex.flow, span);
          }
          for (const InterNegative& neg : item.negatives) {
            const double d = distance(model, sentence, neg.rgb, neg.flow, ex.positive);
            hinge_closest = std::min(hinge_closest, std::abs(pos - d + margin));
            probe_branches(neg.rgb, neg.flow, ex.positive);
          }
        }
        return hinge_closest > 1e-2 && relu_closest > 1e-3;
      };
      for (int attempt = 0; attempt < 50; ++attempt) {
        build_instance(rng.fork(static_cast<std::uint64_t>(attempt)));
        if (clear_of_kinks()) break;
      }

      auto loss = [&] { return combined_loss(model, batch, margin, 0.4).total; };
      GradTable analytic(model.trainable_tensors());
      combined_loss(model, batch, margin, 0.4, &analytic);
      record("combined_loss",
             grad_check(model.trainable_tensors(), loss, analytic, check_config));
    }
  }

  return results;
}

}  // namespace mcn
