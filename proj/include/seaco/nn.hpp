#ifndef SEACO_NN_HPP
#define SEACO_NN_HPP

#include <functional>
#include <random>
#include <string>
#include <vector>

#include "seaco/autograd.hpp"
#include "seaco/params.hpp"

namespace seaco::nn {

// y = x * W + b, parameters at prefix + ".w" / ".b".
ag::NodePtr linear(const ag::NodePtr& x, ParamStore& ps, const std::string& prefix);
void init_linear(ParamStore& ps, const std::string& prefix, size_t in, size_t out,
                 std::mt19937_64& rng);

struct AttentionOut {
    ag::NodePtr context;                // Lq x d_model
    std::vector<ag::NodePtr> weights;   // per head, Lq x Lk, rows sum to 1
};

// Scaled dot-product multi-head attention with per-projection biases.
// Scale is 1/sqrt(head_dim).
AttentionOut multi_head_attention(const ag::NodePtr& q, const ag::NodePtr& k,
                                  const ag::NodePtr& v, ParamStore& ps,
                                  const std::string& prefix, size_t n_heads);
void init_attention(ParamStore& ps, const std::string& prefix, size_t d_model,
                    std::mt19937_64& rng);

// Heads-averaged weight matrix (value only, Lq x Lk).
Tensor average_heads(const std::vector<ag::NodePtr>& weights);

struct LstmOut {
    ag::NodePtr hidden;  // steps x hidden_dim; empty tensor for zero-length input
    ag::NodePtr final_h; // 1 x hidden_dim summary (zeros for zero-length input)
};

// Single-layer LSTM, gate order (input, forget, cell, output).
LstmOut lstm_forward(const ag::NodePtr& x, ParamStore& ps, const std::string& prefix);
// Weights uniform in [-0.1, 0.1], biases zero, forget-gate bias +1.
void init_lstm(ParamStore& ps, const std::string& prefix, size_t in, size_t hidden,
               std::mt19937_64& rng);

// Two-layer feed-forward with ReLU, prefix + ".w1/.b1/.w2/.b2".
ag::NodePtr ffn(const ag::NodePtr& x, ParamStore& ps, const std::string& prefix);
void init_ffn(ParamStore& ps, const std::string& prefix, size_t d_model, size_t ffn_dim,
              std::mt19937_64& rng);

void init_layer_norm(ParamStore& ps, const std::string& prefix, size_t d);
ag::NodePtr layer_norm(const ag::NodePtr& x, ParamStore& ps, const std::string& prefix);

// Fixed sinusoidal positional encodings, rows 0..len-1.
Tensor sinusoidal_encoding(size_t len, size_t d_model);
ag::NodePtr add_positional(const ag::NodePtr& x);

// Central finite differences (step 1e-5) of a scalar-valued rebuildable
// function against the analytic gradients; returns max relative error.
// Frozen parameters are reported with gradient identically zero.
double grad_check(const std::function<ag::NodePtr()>& f, ParamStore& ps,
                  double step = 1e-5);

}  // namespace seaco::nn

#endif
