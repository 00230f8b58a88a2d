#include "seaco/bias.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numeric>
#include <stdexcept>

#include "seaco/nn.hpp"

namespace seaco {

using ag::NodePtr;

std::string variant_name(BiasVariant v) {
    switch (v) {
        case BiasVariant::Default: return "default";
        case BiasVariant::A1MergeFirst: return "a1";
        case BiasVariant::A2NoCifAttn: return "a2";
        case BiasVariant::A3NoDecAttn: return "a3";
    }
    throw std::invalid_argument("bad variant");
}

BiasVariant variant_from_name(const std::string& s) {
    if (s == "default") return BiasVariant::Default;
    if (s == "a1") return BiasVariant::A1MergeFirst;
    if (s == "a2") return BiasVariant::A2NoCifAttn;
    if (s == "a3") return BiasVariant::A3NoDecAttn;
    throw std::invalid_argument("unknown bias variant: " + s +
                                " (expected default|a1|a2|a3)");
}

namespace {

std::vector<std::string> branches_for(BiasVariant v) {
    switch (v) {
        case BiasVariant::Default: return {"d", "e"};
        case BiasVariant::A1MergeFirst: return {"m"};
        case BiasVariant::A2NoCifAttn: return {"d"};
        case BiasVariant::A3NoDecAttn: return {"e"};
    }
    throw std::invalid_argument("bad variant");
}

}  // namespace

void BiasModel::init(ParamStore& ps, const BiasConfig& cfg, std::mt19937_64& rng) {
    for (size_t l = 0; l < cfg.lstm_layers; ++l)
        nn::init_lstm(ps, "bias.enc.lstm" + std::to_string(l), cfg.d_model, cfg.d_model,
                      rng);
    for (const auto& br : branches_for(cfg.variant)) {
        for (size_t l = 0; l < cfg.bias_decoder_layers; ++l) {
            std::string p = "bias.dec." + br + ".l" + std::to_string(l);
            nn::init_layer_norm(ps, p + ".ln1", cfg.d_model);
            nn::init_attention(ps, p + ".attn", cfg.d_model, rng);
            nn::init_layer_norm(ps, p + ".ln2", cfg.d_model);
            nn::init_ffn(ps, p + ".ffn", cfg.d_model, cfg.ffn_dim, rng);
        }
    }
    nn::init_linear(ps, "bias.out", cfg.d_model, cfg.vocab_size, rng);
}

NodePtr BiasModel::encode_hotwords(const HotwordList& hotwords) const {
    if (hotwords.size() == 0)
        throw std::invalid_argument("encode_hotwords: empty hotword list");
    std::vector<NodePtr> rows;
    rows.reserve(hotwords.size());
    for (const auto& hw : hotwords.entries) {
        NodePtr x = ag::gather_rows(ps_.get("bb.emb"), hw);
        NodePtr h;
        for (size_t l = 0; l < cfg_.lstm_layers; ++l) {
            nn::LstmOut out = nn::lstm_forward(x, ps_, "bias.enc.lstm" + std::to_string(l));
            x = out.hidden;
            h = out.final_h;
        }
        rows.push_back(h);
    }
    return ag::concat_rows(rows);
}

NodePtr BiasModel::run_branch(const std::string& branch, NodePtr x, const NodePtr& Z,
                              Tensor* attn_out) const {
    for (size_t l = 0; l < cfg_.bias_decoder_layers; ++l) {
        std::string p = "bias.dec." + branch + ".l" + std::to_string(l);
        NodePtr h = nn::layer_norm(x, ps_, p + ".ln1");
        nn::AttentionOut att =
            nn::multi_head_attention(h, Z, Z, ps_, p + ".attn", cfg_.n_heads);
        x = ag::add(x, att.context);
        NodePtr h2 = nn::layer_norm(x, ps_, p + ".ln2");
        x = ag::add(x, nn::ffn(h2, ps_, p + ".ffn"));
        if (l + 1 == cfg_.bias_decoder_layers && attn_out)
            *attn_out = nn::average_heads(att.weights);
    }
    return x;
}

BiasModel::BiasOut BiasModel::bias_decode(const NodePtr& D, const NodePtr& E,
                                          const NodePtr& Z) const {
    if (D->value.rows() != E->value.rows())
        throw std::invalid_argument("bias_decode: D length " +
                                    std::to_string(D->value.rows()) + " != E length " +
                                    std::to_string(E->value.rows()));
    BiasOut out;
    NodePtr merged;
    switch (cfg_.variant) {
        case BiasVariant::Default: {
            NodePtr dp = run_branch("d", D, Z, &out.attn_d);
            NodePtr ep = run_branch("e", E, Z, &out.attn_e);
            merged = ag::add(dp, ep);
            break;
        }
        case BiasVariant::A1MergeFirst: {
            merged = run_branch("m", ag::add(D, E), Z, &out.attn_d);
            break;
        }
        case BiasVariant::A2NoCifAttn: {
            merged = run_branch("d", D, Z, &out.attn_d);
            break;
        }
        case BiasVariant::A3NoDecAttn: {
            merged = run_branch("e", E, Z, &out.attn_e);
            break;
        }
    }
    out.logits = nn::linear(merged, ps_, "bias.out");
    {
        ag::NoGradGuard ng;
        out.p_b = ag::softmax_rows(ag::constant(out.logits->value))->value;
    }
    // ASF and dumps read the D-branch last layer; the E branch substitutes
    // when the D branch is absent.
    out.attn = out.attn_d.data.empty() ? out.attn_e : out.attn_d;
    return out;
}

std::vector<double> train_bias(ParamStore& ps, const BackboneConfig& bb_cfg,
                               const BiasConfig& bias_cfg, const Corpus& train,
                               const Tensor& prototypes, const SyntheticSpec& spec,
                               const SamplingConfig& sampling,
                               const BiasTrainSchedule& sched) {
    if (train.utts.empty()) throw std::invalid_argument("train_bias: empty corpus");
    ps.set_trainable_prefix("bb.", false);
    BackboneModel backbone(ps, bb_cfg);
    BiasModel bias(ps, bias_cfg);

    // The backbone is frozen, so its per-utterance D and E are constants;
    // compute them once. The parallel decoder consumes the CIF output here,
    // exactly as at inference time — D states drawn from the ground-truth char
    // embeddings look nothing like the acoustic states the bias decoder sees
    // later, and a stack trained on them stays inert.
    std::vector<Tensor> Ds(train.utts.size()), Es(train.utts.size());
    {
        ag::NoGradGuard ng;
        for (size_t i = 0; i < train.utts.size(); ++i) {
            const Utterance& u = train.utts[i];
            Tensor feats = synthesize_features(u, prototypes, spec);
            NodePtr e = backbone.encode(feats);
            NodePtr alpha = backbone.predict_alpha(e);
            NodePtr alpha_s = cif::scale_weights(alpha, u.tokens.size());
            cif::Fired fired = cif::integrate_and_fire(e, alpha_s, 1.0, 1e-6);
            Es[i] = fired.embeddings->value;
            BackboneModel::DecodeOut dec = backbone.decode(fired.embeddings, e);
            Ds[i] = dec.hidden->value;
        }
    }

    std::vector<std::vector<int>> phrases;
    if (sched.inject_phrases) phrases = designated_phrases(spec);

    Adam opt;
    opt.lr = sched.lr;
    opt.beta1 = sched.beta1;
    opt.beta2 = sched.beta2;
    std::mt19937_64 rng(sched.seed);
    std::mt19937_64 sample_rng(sampling.seed);
    std::vector<size_t> order(train.utts.size());
    std::iota(order.begin(), order.end(), 0);
    std::vector<double> trace;
    size_t step = 0;
    bool done = false;
    for (size_t epoch = 0; epoch < sched.epochs && !done; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        for (size_t b = 0; b < order.size() && !done; b += sched.batch_size) {
            size_t bs = std::min(sched.batch_size, order.size() - b);
            std::vector<std::vector<int>> batch_targets;
            for (size_t k = 0; k < bs; ++k)
                batch_targets.push_back(train.utts[order[b + k]].tokens);
            HotwordList hws = sample_hotwords(batch_targets, sampling, sample_rng);
            for (const auto& ph : phrases)
                for (const auto& y : batch_targets)
                    if (std::search(y.begin(), y.end(), ph.begin(), ph.end()) != y.end()) {
                        hws.add_unique(ph);
                        break;
                    }
            ps.zero_grads();
            NodePtr Z = bias.encode_hotwords(hws);
            double batch_loss = 0.0;
            for (size_t k = 0; k < bs; ++k) {
                size_t idx = order[b + k];
                BiasModel::BiasOut out = bias.bias_decode(ag::constant(Ds[idx]),
                                                          ag::constant(Es[idx]), Z);
                std::vector<int> target = build_bias_target(batch_targets[k], hws);
                NodePtr ce = ag::cross_entropy_logits(out.logits, target);
                if (sched.hotword_weight > 0.0) {
                    // Re-visit the hotword positions with extra weight so the
                    // dominant <no-bias> class cannot absorb the decoder.
                    std::vector<int> hw_only(target.size(), -1);
                    bool any = false;
                    for (size_t r = 0; r < target.size(); ++r)
                        if (target[r] != Vocab::kNoBias) {
                            hw_only[r] = target[r];
                            any = true;
                        }
                    if (any) {
                        NodePtr ce_hw = ag::cross_entropy_logits(out.logits, hw_only, -1);
                        ce = ag::add(ce, ag::scale(ce_hw, sched.hotword_weight));
                    }
                }
                double lv = ce->value.data[0];
                if (!std::isfinite(lv))
                    throw std::runtime_error("train_bias: non-finite loss at step " +
                                             std::to_string(step));
                batch_loss += lv / double(bs);
                ag::backward(ag::scale(ce, 1.0 / double(bs)));
            }
            opt.step(ps);
            trace.push_back(batch_loss);
            ++step;
            if (sched.max_steps && step >= sched.max_steps) done = true;
        }
        if (sched.verbose)
            std::cerr << "[train-bias] epoch " << epoch + 1 << " loss "
                      << (trace.empty() ? 0.0 : trace.back()) << "\n";
    }
    return trace;
}

void add_bias_meta(ParamStore& ps, const BiasConfig& cfg) {
    Tensor m({3});
    m.data = {double(int(cfg.variant)), double(cfg.bias_decoder_layers),
              double(cfg.lstm_layers)};
    ps.add("zz.bias_meta", std::move(m));
}

BiasConfig bias_meta(const std::map<std::string, Tensor>& loaded,
                     const BackboneConfig& bb_cfg) {
    auto it = loaded.find("zz.bias_meta");
    if (it == loaded.end() || it->second.size() != 3)
        throw std::runtime_error("checkpoint lacks bias metadata");
    BiasConfig cfg;
    cfg.variant = BiasVariant(int(it->second.data[0]));
    cfg.bias_decoder_layers = size_t(it->second.data[1]);
    cfg.lstm_layers = size_t(it->second.data[2]);
    cfg.d_model = bb_cfg.d_model;
    cfg.n_heads = bb_cfg.n_heads;
    cfg.ffn_dim = bb_cfg.ffn_dim;
    cfg.vocab_size = bb_cfg.vocab_size;
    return cfg;
}

bool has_bias_stack(const std::map<std::string, Tensor>& loaded) {
    return loaded.count("zz.bias_meta") > 0;
}

}  // namespace seaco
