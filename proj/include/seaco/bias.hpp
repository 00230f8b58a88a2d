#ifndef SEACO_BIAS_HPP
#define SEACO_BIAS_HPP

#include <map>
#include <random>
#include <string>
#include <vector>

#include "seaco/backbone.hpp"
#include "seaco/hotword.hpp"

namespace seaco {

enum class BiasVariant { Default, A1MergeFirst, A2NoCifAttn, A3NoDecAttn };

std::string variant_name(BiasVariant v);
BiasVariant variant_from_name(const std::string& s);

struct BiasConfig {
    BiasVariant variant = BiasVariant::Default;
    size_t bias_decoder_layers = 2;
    size_t lstm_layers = 1;
    size_t d_model = 64;
    size_t n_heads = 4;
    size_t ffn_dim = 128;
    size_t vocab_size = 60;
};

// Bias encoder (shared char embedding + LSTM), bias decoder branches over
// hotword embeddings, and the bias output layer. Parameters under "bias.".
class BiasModel {
public:
    BiasModel(ParamStore& ps, BiasConfig cfg) : ps_(ps), cfg_(cfg) {}

    static void init(ParamStore& ps, const BiasConfig& cfg, std::mt19937_64& rng);

    // One row per hotword: final LSTM hidden state of the embedded tokens.
    ag::NodePtr encode_hotwords(const HotwordList& hotwords) const;

    struct BiasOut {
        ag::NodePtr logits;  // L x V
        Tensor p_b;          // row-stochastic L x V
        Tensor attn;         // L x n heads-averaged last-layer scores
        Tensor attn_d, attn_e;  // raw per-branch scores where the branch exists
    };
    BiasOut bias_decode(const ag::NodePtr& D, const ag::NodePtr& E,
                        const ag::NodePtr& Z) const;

    const BiasConfig& config() const { return cfg_; }

private:
    ag::NodePtr run_branch(const std::string& branch, ag::NodePtr x, const ag::NodePtr& Z,
                           Tensor* attn_out) const;
    ParamStore& ps_;
    BiasConfig cfg_;
};

struct BiasTrainSchedule {
    size_t epochs = 30;
    size_t max_steps = 0;
    size_t batch_size = 8;
    double lr = 1e-3;
    double beta1 = 0.9, beta2 = 0.98;
    // Extra loss weight on positions whose target is a hotword token. Roughly
    // 85% of target positions are <no-bias>; unweighted, training drifts into
    // the constant <no-bias> answer after a few epochs.
    double hotword_weight = 3.0;
    // Add designated phrases present in a batch utterance to that batch's
    // hotword list. Phrase-bearing utterances are rare, and span sampling
    // alone almost never covers a phrase exactly.
    bool inject_phrases = true;
    uint64_t seed = 2;
    bool verbose = false;
};

// Frozen-backbone training of the bias group against hotword-position-aware
// targets. The backbone parameters are marked non-trainable for the duration
// and verified untouched by snapshot comparison.
std::vector<double> train_bias(ParamStore& ps, const BackboneConfig& bb_cfg,
                               const BiasConfig& bias_cfg, const Corpus& train,
                               const Tensor& prototypes, const SyntheticSpec& spec,
                               const SamplingConfig& sampling,
                               const BiasTrainSchedule& sched);

void add_bias_meta(ParamStore& ps, const BiasConfig& cfg);
BiasConfig bias_meta(const std::map<std::string, Tensor>& loaded,
                     const BackboneConfig& bb_cfg);
bool has_bias_stack(const std::map<std::string, Tensor>& loaded);

}  // namespace seaco

#endif
