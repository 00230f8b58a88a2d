#ifndef SEACO_INFERENCE_HPP
#define SEACO_INFERENCE_HPP

#include <string>
#include <vector>

#include "seaco/bias.hpp"

namespace seaco {

struct MergeConfig {
    double lambda = 1.0;   // trust in the bias output at detected steps
    bool asf_enabled = true;
    size_t asf_k = 50;
};

struct AttentionScoreMatrix {
    Tensor scores;  // L x n, nonnegative
    std::vector<std::string> hotword_labels;
};

// Per step: plain ASR probabilities when the bias argmax is <no-bias>,
// otherwise the lambda-interpolation of biased and plain probabilities.
Tensor merge_probabilities(const Tensor& p_asr, const Tensor& p_b, double lambda);

struct AsfResult {
    HotwordList filtered;
    std::vector<double> column_scores;  // summed attention per hotword, full list
    std::vector<size_t> kept;           // indices into the full list, original order
};

// Selection given a score matrix: top-k non-default columns by summed
// attention (ties by list index), default hotword always retained.
AsfResult asf_select(const Tensor& attn, const HotwordList& full, size_t k);

// First-pass bias decode over the full list followed by selection.
AsfResult asf_filter(const Tensor& D, const Tensor& E, const BiasModel& bias,
                     const HotwordList& full, size_t k);

struct ContextualOut {
    std::vector<int> hyp;
    AttentionScoreMatrix attn;  // second-pass matrix
    Tensor p_asr, p_b, p_m;
    size_t fired = 0;
    HotwordList effective;  // list actually used in the second pass
};

// Full contextual decoding path: encode -> unscaled CIF -> parallel decode ->
// optional ASF -> bias decode -> probability merge -> greedy argmax.
// bias == nullptr decodes the plain backbone.
ContextualOut decode_contextual(const Tensor& feats, const HotwordList& hotwords,
                                const BackboneModel& backbone, const BiasModel* bias,
                                const MergeConfig& cfg, const Vocab& v);

// First line: tab-separated hotword labels; then one line per output step of
// tab-separated scores with 6 significant digits.
std::string format_attention(const AttentionScoreMatrix& m);

}  // namespace seaco

#endif
