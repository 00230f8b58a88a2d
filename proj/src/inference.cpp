#include "seaco/inference.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>
#include <stdexcept>

namespace seaco {

Tensor merge_probabilities(const Tensor& p_asr, const Tensor& p_b, double lambda) {
    if (!p_asr.same_shape(p_b))
        throw std::invalid_argument("merge_probabilities: shape mismatch " +
                                    p_asr.shape_str() + " vs " + p_b.shape_str());
    if (lambda < 0.0 || lambda > 1.0)
        throw std::invalid_argument("merge_probabilities: lambda outside [0,1]");
    size_t L = p_asr.rows(), V = p_asr.cols();
    Tensor out({L, V});
    for (size_t i = 0; i < L; ++i) {
        const double* pb = &p_b.data[i * V];
        const double* pa = &p_asr.data[i * V];
        size_t am = size_t(std::max_element(pb, pb + V) - pb);
        double* po = &out.data[i * V];
        if (am == size_t(Vocab::kNoBias)) {
            std::copy_n(pa, V, po);
        } else {
            for (size_t j = 0; j < V; ++j) po[j] = lambda * pb[j] + (1.0 - lambda) * pa[j];
        }
    }
    return out;
}

AsfResult asf_select(const Tensor& attn, const HotwordList& full, size_t k) {
    if (k < 1) throw std::invalid_argument("asf_select: k must be >= 1");
    size_t n = full.size();
    if (attn.cols() != n)
        throw std::invalid_argument("asf_select: score columns != hotword count");
    AsfResult res;
    res.column_scores.assign(n, 0.0);
    for (size_t i = 0; i < attn.rows(); ++i)
        for (size_t j = 0; j < n; ++j) res.column_scores[j] += attn.data[i * n + j];

    std::vector<size_t> cand;
    for (size_t j = 1; j < n; ++j) cand.push_back(j);
    std::stable_sort(cand.begin(), cand.end(), [&](size_t a, size_t b) {
        if (res.column_scores[a] != res.column_scores[b])
            return res.column_scores[a] > res.column_scores[b];
        return a < b;
    });
    if (cand.size() > k) cand.resize(k);
    cand.push_back(0);  // default hotword always retained
    std::sort(cand.begin(), cand.end());
    res.kept = cand;
    for (size_t j : cand) res.filtered.entries.push_back(full.entries[j]);
    return res;
}

AsfResult asf_filter(const Tensor& D, const Tensor& E, const BiasModel& bias,
                     const HotwordList& full, size_t k) {
    ag::NoGradGuard ng;
    ag::NodePtr Z = bias.encode_hotwords(full);
    BiasModel::BiasOut out =
        bias.bias_decode(ag::constant(D), ag::constant(E), Z);
    return asf_select(out.attn, full, k);
}

ContextualOut decode_contextual(const Tensor& feats, const HotwordList& hotwords,
                                const BackboneModel& backbone, const BiasModel* bias,
                                const MergeConfig& cfg, const Vocab& v) {
    if (feats.rows() == 0)
        throw std::invalid_argument("decode_contextual: empty input audio");
    for (const auto& hw : hotwords.entries)
        for (int t : hw)
            if (t < 0 || size_t(t) >= v.size())
                throw std::invalid_argument("decode_contextual: hotword token " +
                                            std::to_string(t) + " outside vocabulary");
    ag::NoGradGuard ng;
    ContextualOut out;
    BackboneModel::InferOut base = backbone.infer(feats);
    out.fired = base.fired;
    if (base.fired == 0) return out;  // empty hypothesis is a valid output
    out.p_asr = base.p_asr;
    if (!bias) {
        out.hyp = base.hyp;
        return out;
    }
    HotwordList effective = hotwords;
    if (cfg.asf_enabled) {
        AsfResult sel = asf_filter(base.D, base.E, *bias, hotwords, cfg.asf_k);
        effective = sel.filtered;
    }
    ag::NodePtr Z = bias->encode_hotwords(effective);
    BiasModel::BiasOut bout =
        bias->bias_decode(ag::constant(base.D), ag::constant(base.E), Z);
    out.p_b = bout.p_b;
    out.p_m = merge_probabilities(base.p_asr, bout.p_b, cfg.lambda);
    out.hyp = greedy_rows(out.p_m);
    out.effective = effective;
    out.attn.scores = bout.attn;
    for (const auto& hw : effective.entries)
        out.attn.hotword_labels.push_back(hw == std::vector<int>{Vocab::kBlank}
                                              ? "<blank>"
                                              : hotword_label(hw, v));
    return out;
}

std::string format_attention(const AttentionScoreMatrix& m) {
    std::string s;
    for (size_t j = 0; j < m.hotword_labels.size(); ++j) {
        if (j) s += "\t";
        s += m.hotword_labels[j];
    }
    s += "\n";
    char buf[64];
    size_t n = m.scores.data.empty() ? 0 : m.scores.cols();
    for (size_t i = 0; i < (n ? m.scores.rows() : 0); ++i) {
        for (size_t j = 0; j < n; ++j) {
            if (j) s += "\t";
            std::snprintf(buf, sizeof buf, "%.6g", m.scores.data[i * n + j]);
            s += buf;
        }
        s += "\n";
    }
    return s;
}

}  // namespace seaco
