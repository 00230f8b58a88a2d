#ifndef SEACO_CIF_HPP
#define SEACO_CIF_HPP

#include <random>
#include <string>

#include "seaco/autograd.hpp"
#include "seaco/params.hpp"

namespace seaco::cif {

// Per-frame firing weights, sigmoid of a linear projection of the encoder
// output. Returns a T x 1 tensor with entries in (0, 1).
ag::NodePtr predict_weights(const ag::NodePtr& e, ParamStore& ps,
                            const std::string& prefix);
void init_predictor(ParamStore& ps, const std::string& prefix, size_t d_model,
                    std::mt19937_64& rng);

struct Fired {
    ag::NodePtr embeddings;  // fired_count x d
    size_t fired_count = 0;
};

// Accumulates weights along the frame axis and emits one integrated embedding
// each time the running sum crosses the threshold; the crossing frame's weight
// is split between the completed integration and the next one. Trailing
// residual below the threshold is discarded, except that a residual within
// tail_tol of the threshold still fires (used with scaled training weights so
// the fired count matches the target length despite rounding).
Fired integrate_and_fire(const ag::NodePtr& e, const ag::NodePtr& alpha,
                         double threshold = 1.0, double tail_tol = 0.0);

// alpha * (target_len / sum(alpha)); the scale factor is differentiable.
ag::NodePtr scale_weights(const ag::NodePtr& alpha, size_t target_len);

// |sum(alpha) - target_len|
ag::NodePtr quantity_loss(const ag::NodePtr& alpha, size_t target_len);

}  // namespace seaco::cif

#endif
