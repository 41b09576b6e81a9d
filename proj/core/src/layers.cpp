#include "mcn/layers.hpp"

#include <cmath>

#include "mcn/errors.hpp"

namespace mcn {

Vec linear_forward(const Tensor2& w, const Tensor2& b, const Vec& x) {
  if (b.rows() != 1 || b.cols() != w.rows()) {
    throw DimensionError("linear bias " + b.shape_str() + " does not match weight " +
                         w.shape_str());
  }
  Vec y = matvec(w, x);
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += b.at(0, i);
  return y;
}

LinearGrads linear_backward(const Tensor2& w, const Tensor2& b, const Vec& x,
                            const Vec& upstream) {
  if (upstream.size() != w.rows()) {
    throw DimensionError("linear_backward: upstream length " + std::to_string(upstream.size()) +
                         " vs weight " + w.shape_str());
  }
  LinearGrads g;
  g.weight = Tensor2(w.rows(), w.cols());
  add_outer(g.weight, upstream, x);
  g.bias = Tensor2(b.rows(), b.cols());
  g.bias.set_row(0, upstream);
  g.input = matvec_transposed(w, upstream);
  return g;
}

Vec relu(const Vec& x) {
  Vec y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] > 0.0 ? x[i] : 0.0;
  return y;
}

Vec relu_backward(const Vec& x, const Vec& upstream) {
  if (x.size() != upstream.size()) throw DimensionError("relu_backward: length mismatch");
  Vec g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) g[i] = x[i] > 0.0 ? upstream[i] : 0.0;
  return g;
}

LstmParams make_lstm(std::size_t input_size, std::size_t hidden_size) {
  LstmParams p;
  p.w_input = Tensor2(4 * hidden_size, input_size);
  p.w_hidden = Tensor2(4 * hidden_size, hidden_size);
  p.bias = Tensor2(1, 4 * hidden_size);
  return p;
}

void init_lstm(LstmParams& params, Rng& rng) {
  for (double& v : params.w_input.raw()) v = rng.uniform(-0.08, 0.08);
  for (double& v : params.w_hidden.raw()) v = rng.uniform(-0.08, 0.08);
  params.bias.fill(0.0);
  const std::size_t h = params.hidden_size();
  // A positive forget bias keeps early-cell memory alive at the start of
  // training; without it long sentences wash out before the gates learn.
  for (std::size_t i = h; i < 2 * h; ++i) params.bias.at(0, i) = 1.0;
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

LstmState lstm_step(const LstmParams& params, const Vec& x, const LstmState& prev,
                    LstmCache* cache) {
  const std::size_t h = params.hidden_size();
  if (x.size() != params.input_size()) {
    throw DimensionError("lstm_step: input length " + std::to_string(x.size()) + " vs " +
                         std::to_string(params.input_size()));
  }
  if (prev.h.size() != h || prev.c.size() != h) {
    throw DimensionError("lstm_step: state size mismatch");
  }

  Vec pre = matvec(params.w_input, x);
  const Vec from_hidden = matvec(params.w_hidden, prev.h);
  for (std::size_t i = 0; i < pre.size(); ++i) pre[i] += from_hidden[i] + params.bias.at(0, i);

  Vec gi(h), gf(h), cand(h), go(h);
  for (std::size_t i = 0; i < h; ++i) {
    gi[i] = sigmoid(pre[i]);
    gf[i] = sigmoid(pre[h + i]);
    cand[i] = std::tanh(pre[2 * h + i]);
    go[i] = sigmoid(pre[3 * h + i]);
  }

  LstmState next;
  next.c.resize(h);
  next.h.resize(h);
  Vec tanh_c(h);
  for (std::size_t i = 0; i < h; ++i) {
    next.c[i] = gf[i] * prev.c[i] + gi[i] * cand[i];
    tanh_c[i] = std::tanh(next.c[i]);
    next.h[i] = go[i] * tanh_c[i];
  }

  if (cache != nullptr) {
    cache->x = x;
    cache->h_prev = prev.h;
    cache->c_prev = prev.c;
    cache->gate_in = std::move(gi);
    cache->gate_forget = std::move(gf);
    cache->gate_out = std::move(go);
    cache->candidate = std::move(cand);
    cache->c = next.c;
    cache->tanh_c = std::move(tanh_c);
  }
  return next;
}

LstmGrads make_lstm_grads(const LstmParams& params) {
  LstmGrads g;
  g.w_input = Tensor2(params.w_input.rows(), params.w_input.cols());
  g.w_hidden = Tensor2(params.w_hidden.rows(), params.w_hidden.cols());
  g.bias = Tensor2(1, params.bias.cols());
  return g;
}

LstmStepGrads lstm_backward(const LstmParams& params, const LstmCache& cache,
                            const Vec& d_h, const Vec& d_c, LstmGrads& acc) {
  const std::size_t h = params.hidden_size();
  if (d_h.size() != h || d_c.size() != h) {
    throw DimensionError("lstm_backward: upstream size mismatch");
  }

  // d wrt cell state, fed both by this step's hidden output and downstream.
  Vec dc(h);
  for (std::size_t i = 0; i < h; ++i) {
    const double through_h = d_h[i] * cache.gate_out[i] * (1.0 - cache.tanh_c[i] * cache.tanh_c[i]);
    dc[i] = d_c[i] + through_h;
  }

  // Pre-activation gradients, packed like the forward gate block.
  Vec d_pre(4 * h);
  for (std::size_t i = 0; i < h; ++i) {
    const double gi = cache.gate_in[i];
    const double gf = cache.gate_forget[i];
    const double go = cache.gate_out[i];
    const double cand = cache.candidate[i];
    d_pre[i] = dc[i] * cand * gi * (1.0 - gi);
    d_pre[h + i] = dc[i] * cache.c_prev[i] * gf * (1.0 - gf);
    d_pre[2 * h + i] = dc[i] * gi * (1.0 - cand * cand);
    d_pre[3 * h + i] = d_h[i] * cache.tanh_c[i] * go * (1.0 - go);
  }

  add_outer(acc.w_input, d_pre, cache.x);
  add_outer(acc.w_hidden, d_pre, cache.h_prev);
  for (std::size_t i = 0; i < 4 * h; ++i) acc.bias.at(0, i) += d_pre[i];

  LstmStepGrads out;
  out.input = matvec_transposed(params.w_input, d_pre);
  out.h_prev = matvec_transposed(params.w_hidden, d_pre);
  out.c_prev.resize(h);
  for (std::size_t i = 0; i < h; ++i) out.c_prev[i] = dc[i] * cache.gate_forget[i];
  return out;
}

}  // namespace mcn
