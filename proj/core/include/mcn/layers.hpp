#pragma once

#include "mcn/rng.hpp"
#include "mcn/tensor.hpp"

namespace mcn {

// ---- fully connected -------------------------------------------------------

/// y = W x + b.  b is a 1 x out tensor.
Vec linear_forward(const Tensor2& w, const Tensor2& b, const Vec& x);

struct LinearGrads {
  Tensor2 weight;  // upstream * x^T
  Tensor2 bias;    // upstream
  Vec input;       // W^T * upstream
};

LinearGrads linear_backward(const Tensor2& w, const Tensor2& b, const Vec& x,
                            const Vec& upstream);

// ---- relu ------------------------------------------------------------------

Vec relu(const Vec& x);
/// Passes upstream where x > 0, zero elsewhere.
Vec relu_backward(const Vec& x, const Vec& upstream);

// ---- lstm cell -------------------------------------------------------------

/// Standard uncoupled-gate LSTM without peepholes. Gate blocks are packed
/// row-wise in the order input, forget, candidate, output, so w_input is
/// 4H x E, w_hidden is 4H x H and bias is 1 x 4H.
struct LstmParams {
  Tensor2 w_input;
  Tensor2 w_hidden;
  Tensor2 bias;

  std::size_t hidden_size() const { return w_hidden.cols(); }
  std::size_t input_size() const { return w_input.cols(); }
};

LstmParams make_lstm(std::size_t input_size, std::size_t hidden_size);
/// uniform(-0.08, 0.08) weights, zero biases except forget gate at +1.
void init_lstm(LstmParams& params, Rng& rng);

struct LstmState {
  Vec h;
  Vec c;
};

/// Everything the backward pass needs from one step.
struct LstmCache {
  Vec x, h_prev, c_prev;
  Vec gate_in, gate_forget, gate_out, candidate;  // post-activation
  Vec c, tanh_c;
};

LstmState lstm_step(const LstmParams& params, const Vec& x, const LstmState& prev,
                    LstmCache* cache = nullptr);

struct LstmGrads {
  Tensor2 w_input;
  Tensor2 w_hidden;
  Tensor2 bias;
};

LstmGrads make_lstm_grads(const LstmParams& params);

struct LstmStepGrads {
  Vec input;
  Vec h_prev;
  Vec c_prev;
};

/// One step of backprop-through-time. d_h/d_c are the upstream gradients on
/// this step's outputs; parameter gradients accumulate into `acc`.
LstmStepGrads lstm_backward(const LstmParams& params, const LstmCache& cache,
                            const Vec& d_h, const Vec& d_c, LstmGrads& acc);

double sigmoid(double x);

}  // namespace mcn
