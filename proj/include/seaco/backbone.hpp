#ifndef SEACO_BACKBONE_HPP
#define SEACO_BACKBONE_HPP

#include <map>
#include <random>
#include <string>
#include <vector>

#include "seaco/autograd.hpp"
#include "seaco/cif.hpp"
#include "seaco/corpus.hpp"
#include "seaco/params.hpp"

namespace seaco {

// Frames visible to the encoder input projection at each position (centered,
// zero-padded). Wide enough to span any single token's frame run.
constexpr size_t kInWindow = 7;

struct BackboneConfig {
    size_t d_model = 64;
    size_t n_heads = 4;
    size_t encoder_layers = 2;
    size_t decoder_layers = 2;
    size_t ffn_dim = 128;
    size_t vocab_size = 60;
    size_t max_frames = 256;
    size_t feature_dim = 16;
};

// Toy Paraformer: encoder -> CIF -> two-pass sampler -> parallel decoder.
// All parameters live under the "bb." prefix of the shared store.
class BackboneModel {
public:
    BackboneModel(ParamStore& ps, BackboneConfig cfg) : ps_(ps), cfg_(cfg) {}

    static void init(ParamStore& ps, const BackboneConfig& cfg, std::mt19937_64& rng);

    ag::NodePtr encode(const Tensor& feats) const;
    ag::NodePtr char_embed(const std::vector<int>& ids) const;
    ag::NodePtr predict_alpha(const ag::NodePtr& e) const;

    struct DecodeOut {
        ag::NodePtr hidden;  // L x d, pre-output-layer state
        ag::NodePtr logits;  // L x V
    };
    // Non-causal self-attention over s plus cross-attention to e.
    DecodeOut decode(const ag::NodePtr& s, const ag::NodePtr& e) const;

    // Two-pass semantic sampling: gradient-free greedy pass over E, then char
    // embeddings of the truth injected at a sampled subset of error positions.
    ag::NodePtr sample_semantic(const ag::NodePtr& E, const ag::NodePtr& e,
                                const std::vector<int>& y, double sampling_factor,
                                std::mt19937_64& rng) const;

    struct InferOut {
        std::vector<int> hyp;
        Tensor E, D, p_asr;  // empty when CIF fires zero steps
        Tensor enc;          // T x d encoder output
        size_t fired = 0;
    };
    InferOut infer(const Tensor& feats) const;

    const BackboneConfig& config() const { return cfg_; }
    ParamStore& params() const { return ps_; }

private:
    ParamStore& ps_;
    BackboneConfig cfg_;
};

std::vector<int> greedy_rows(const Tensor& probs_or_logits);

struct TrainSchedule {
    size_t epochs = 10;
    size_t max_steps = 0;  // 0 = bounded by epochs only
    size_t batch_size = 8;
    double lr = 1e-3;
    double beta1 = 0.9, beta2 = 0.98;
    // Fraction of pass-1 error positions replaced by truth embeddings. Keep
    // below 1.0: replacing every error row starves the decoder of acoustic
    // input and inference never improves.
    double sampling_factor = 0.5;
    double quantity_weight = 1.0;
    // Per-frame alignment regression. The quantity term alone has the same
    // gradient on every frame, so the predictor collapses to a constant and
    // inference lengths drift; frame runs recovered from consecutive-frame
    // distances give each frame its own target weight 1/run_length.
    double align_weight = 5.0;
    // Consecutive frames closer than this (squared L2) belong to one run.
    double align_gap = 2.0;
    // Re-draw frame counts and noise each epoch; with fixed features the
    // weight predictor memorizes per-utterance sums. Off for deterministic
    // overfit checks.
    bool resynthesize = true;
    double target_dev_cer = -1.0;  // early stop when dev CER drops below
    uint64_t seed = 1;
    bool verbose = false;
};

// Minimizes CE + quantity loss with Adam; returns the per-step loss trace.
// Aborts with diagnostics on a non-finite loss.
std::vector<double> train_backbone(ParamStore& ps, const BackboneConfig& cfg,
                                   const Corpus& train, const Corpus* dev,
                                   const Tensor& prototypes, const SyntheticSpec& spec,
                                   const TrainSchedule& sched);

// Backbone hyper-parameters stored as a pseudo-parameter so checkpoints are
// self-describing.
void add_backbone_meta(ParamStore& ps, const BackboneConfig& cfg);
BackboneConfig backbone_meta(const std::map<std::string, Tensor>& loaded);
ParamStore store_from_checkpoint(const std::map<std::string, Tensor>& loaded);

}  // namespace seaco

#endif
