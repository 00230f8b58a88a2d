#include "seaco/backbone.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numeric>
#include <stdexcept>

#include "seaco/evaluation.hpp"
#include "seaco/nn.hpp"

namespace seaco {

using ag::NodePtr;

void BackboneModel::init(ParamStore& ps, const BackboneConfig& cfg, std::mt19937_64& rng) {
    if (cfg.d_model % cfg.n_heads != 0)
        throw std::invalid_argument("d_model not divisible by n_heads");
    if (cfg.vocab_size < Vocab::kReserved + 1)
        throw std::invalid_argument("vocab too small");
    ps.add("bb.emb", xavier_uniform({cfg.vocab_size, cfg.d_model}, rng));
    nn::init_linear(ps, "bb.enc.in", kInWindow * cfg.feature_dim, cfg.d_model, rng);
    for (size_t l = 0; l < cfg.encoder_layers; ++l) {
        std::string p = "bb.enc.l" + std::to_string(l);
        nn::init_layer_norm(ps, p + ".ln1", cfg.d_model);
        nn::init_attention(ps, p + ".attn", cfg.d_model, rng);
        nn::init_layer_norm(ps, p + ".ln2", cfg.d_model);
        nn::init_ffn(ps, p + ".ffn", cfg.d_model, cfg.ffn_dim, rng);
    }
    nn::init_layer_norm(ps, "bb.enc.ln_out", cfg.d_model);
    cif::init_predictor(ps, "bb.cif", cfg.d_model, rng);
    for (size_t l = 0; l < cfg.decoder_layers; ++l) {
        std::string p = "bb.dec.l" + std::to_string(l);
        nn::init_layer_norm(ps, p + ".ln1", cfg.d_model);
        nn::init_attention(ps, p + ".self", cfg.d_model, rng);
        nn::init_layer_norm(ps, p + ".ln2", cfg.d_model);
        nn::init_attention(ps, p + ".cross", cfg.d_model, rng);
        nn::init_layer_norm(ps, p + ".ln3", cfg.d_model);
        nn::init_ffn(ps, p + ".ffn", cfg.d_model, cfg.ffn_dim, rng);
    }
    nn::init_layer_norm(ps, "bb.dec.ln_out", cfg.d_model);
    nn::init_linear(ps, "bb.out", cfg.d_model, cfg.vocab_size, rng);
}

NodePtr BackboneModel::encode(const Tensor& feats) const {
    if (feats.rows() < 1) throw std::invalid_argument("encode: empty input");
    if (feats.rows() > cfg_.max_frames)
        throw std::invalid_argument("encode: " + std::to_string(feats.rows()) +
                                    " frames exceed capacity " +
                                    std::to_string(cfg_.max_frames));
    if (feats.cols() != cfg_.feature_dim)
        throw std::invalid_argument("encode: feature dim " +
                                    std::to_string(feats.cols()) + " != configured " +
                                    std::to_string(cfg_.feature_dim));
    // Conv-style input projection: each position sees a zero-padded window of
    // neighbouring frames. A per-frame projection leaves the stack with no
    // usable handle on how many consecutive frames belong to one token, and
    // the CIF weights degenerate to a constant.
    size_t T = feats.rows(), fd = feats.cols();
    const long radius = long(kInWindow) / 2;
    Tensor win({T, kInWindow * fd});
    for (size_t t = 0; t < T; ++t)
        for (long o = -radius; o <= radius; ++o) {
            long src = long(t) + o;
            if (src < 0 || src >= long(T)) continue;
            std::copy_n(&feats.data[size_t(src) * fd], fd,
                        &win.data[t * kInWindow * fd + size_t(o + radius) * fd]);
        }
    NodePtr x = nn::linear(ag::constant(win), ps_, "bb.enc.in");
    x = nn::add_positional(x);
    for (size_t l = 0; l < cfg_.encoder_layers; ++l) {
        std::string p = "bb.enc.l" + std::to_string(l);
        NodePtr h = nn::layer_norm(x, ps_, p + ".ln1");
        x = ag::add(x, nn::multi_head_attention(h, h, h, ps_, p + ".attn", cfg_.n_heads)
                           .context);
        NodePtr h2 = nn::layer_norm(x, ps_, p + ".ln2");
        x = ag::add(x, nn::ffn(h2, ps_, p + ".ffn"));
    }
    return nn::layer_norm(x, ps_, "bb.enc.ln_out");
}

NodePtr BackboneModel::char_embed(const std::vector<int>& ids) const {
    return ag::gather_rows(ps_.get("bb.emb"), ids);
}

NodePtr BackboneModel::predict_alpha(const NodePtr& e) const {
    return cif::predict_weights(e, ps_, "bb.cif");
}

BackboneModel::DecodeOut BackboneModel::decode(const NodePtr& s, const NodePtr& e) const {
    NodePtr x = nn::add_positional(s);
    for (size_t l = 0; l < cfg_.decoder_layers; ++l) {
        std::string p = "bb.dec.l" + std::to_string(l);
        NodePtr h = nn::layer_norm(x, ps_, p + ".ln1");
        x = ag::add(x, nn::multi_head_attention(h, h, h, ps_, p + ".self", cfg_.n_heads)
                           .context);
        NodePtr h2 = nn::layer_norm(x, ps_, p + ".ln2");
        x = ag::add(x, nn::multi_head_attention(h2, e, e, ps_, p + ".cross", cfg_.n_heads)
                           .context);
        NodePtr h3 = nn::layer_norm(x, ps_, p + ".ln3");
        x = ag::add(x, nn::ffn(h3, ps_, p + ".ffn"));
    }
    NodePtr hidden = nn::layer_norm(x, ps_, "bb.dec.ln_out");
    NodePtr logits = nn::linear(hidden, ps_, "bb.out");
    return {hidden, logits};
}

std::vector<int> greedy_rows(const Tensor& t) {
    std::vector<int> out(t.rows());
    for (size_t i = 0; i < t.rows(); ++i) {
        const double* r = &t.data[i * t.cols()];
        out[i] = int(std::max_element(r, r + t.cols()) - r);
    }
    return out;
}

NodePtr BackboneModel::sample_semantic(const NodePtr& E, const NodePtr& e,
                                       const std::vector<int>& y, double sampling_factor,
                                       std::mt19937_64& rng) const {
    size_t L = E->value.rows();
    if (L != y.size())
        throw std::invalid_argument("sample_semantic: CIF length " + std::to_string(L) +
                                    " != target length " + std::to_string(y.size()) +
                                    " (unscaled CIF in training?)");
    std::vector<int> pred;
    {
        ag::NoGradGuard ng;
        DecodeOut first = decode(ag::constant(E->value), ag::constant(e->value));
        pred = greedy_rows(first.logits->value);
    }
    // Each error position is replaced independently with probability
    // sampling_factor. A fixed ceil(factor * #errors) count would pin a lone
    // persistent error to always-replaced, and its acoustic row would never
    // receive gradient.
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<size_t> chosen;
    for (size_t i = 0; i < L; ++i)
        if (pred[i] != y[i] && unit(rng) < sampling_factor) chosen.push_back(i);
    if (chosen.empty()) return E;
    std::vector<int> truth;
    for (size_t p : chosen) truth.push_back(y[p]);
    return ag::scatter_rows(E, char_embed(truth), chosen);
}

BackboneModel::InferOut BackboneModel::infer(const Tensor& feats) const {
    ag::NoGradGuard ng;
    InferOut out;
    NodePtr e = encode(feats);
    out.enc = e->value;
    NodePtr alpha = predict_alpha(e);
    // Round the weight sum to the length estimate and renormalize before
    // integrating. Training always integrates scaled weights, so this keeps
    // the firing boundaries on the distribution the decoder was trained on;
    // raw weights would also drop the final token about half the time, since
    // the trailing accumulation hovers just below the threshold.
    double asum = 0.0;
    for (double v : alpha->value.data) asum += v;
    size_t est = size_t(asum + 0.5);
    if (est == 0) {
        out.fired = 0;
        return out;  // empty hypothesis, valid
    }
    NodePtr alpha_s = cif::scale_weights(alpha, est);
    cif::Fired fired = cif::integrate_and_fire(e, alpha_s, 1.0, 1e-6);
    out.fired = fired.fired_count;
    if (fired.fired_count == 0) return out;  // empty hypothesis, valid
    DecodeOut dec = decode(fired.embeddings, e);
    out.E = fired.embeddings->value;
    out.D = dec.hidden->value;
    out.p_asr = ag::softmax_rows(dec.logits)->value;
    out.hyp = greedy_rows(out.p_asr);
    return out;
}

// Target CIF weights from the feature stream itself: frames whose successor
// jumps by more than gap2 start a new run, and every frame of an n-frame run
// should carry weight 1/n so each run integrates to one firing.
static Tensor alignment_targets(const Tensor& feats, double gap2) {
    size_t T = feats.rows(), d = feats.cols();
    Tensor tgt({T, 1});
    size_t start = 0;
    for (size_t t = 1; t <= T; ++t) {
        double dist = 0.0;
        if (t < T)
            for (size_t j = 0; j < d; ++j) {
                double diff = feats.data[t * d + j] - feats.data[(t - 1) * d + j];
                dist += diff * diff;
            }
        if (t == T || dist > gap2) {
            // Adjacent repeats of one token fuse into a single long run; with
            // 2-4 frames per token, round(m/3) recovers the token count.
            size_t m = t - start;
            double toks = std::max<double>(1.0, double(std::lround(double(m) / 3.0)));
            for (size_t k = start; k < t; ++k) tgt.data[k] = toks / double(m);
            start = t;
        }
    }
    return tgt;
}

std::vector<double> train_backbone(ParamStore& ps, const BackboneConfig& cfg,
                                   const Corpus& train, const Corpus* dev,
                                   const Tensor& prototypes, const SyntheticSpec& spec,
                                   const TrainSchedule& sched) {
    if (train.utts.empty()) throw std::invalid_argument("train_backbone: empty corpus");
    BackboneModel model(ps, cfg);
    Adam opt;
    opt.lr = sched.lr;
    opt.beta1 = sched.beta1;
    opt.beta2 = sched.beta2;
    std::mt19937_64 rng(sched.seed);
    std::vector<double> trace;
    std::vector<size_t> order(train.utts.size());
    std::iota(order.begin(), order.end(), 0);
    size_t step = 0;
    bool done = false;
    for (size_t epoch = 0; epoch < sched.epochs && !done; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        for (size_t b = 0; b < order.size() && !done; b += sched.batch_size) {
            size_t bs = std::min(sched.batch_size, order.size() - b);
            ps.zero_grads();
            double batch_loss = 0.0;
            for (size_t k = 0; k < bs; ++k) {
                const Utterance& u = train.utts[order[b + k]];
                // Fresh frame counts and noise each epoch: with fixed features
                // the weight predictor memorizes per-utterance sums instead of
                // learning to apportion weight across a token's frames.
                Utterance aug = u;
                if (sched.resynthesize)
                    aug.seed = u.seed ^ ((epoch + 1) * 0x9E3779B97F4A7C15ULL);
                Tensor feats = synthesize_features(aug, prototypes, spec);
                NodePtr e = model.encode(feats);
                NodePtr alpha = model.predict_alpha(e);
                NodePtr qloss = cif::quantity_loss(alpha, u.tokens.size());
                NodePtr alpha_s = cif::scale_weights(alpha, u.tokens.size());
                cif::Fired fired = cif::integrate_and_fire(e, alpha_s, 1.0, 1e-6);
                if (fired.fired_count != u.tokens.size())
                    throw std::runtime_error("train_backbone: scaled CIF fired " +
                                             std::to_string(fired.fired_count) +
                                             " steps for " +
                                             std::to_string(u.tokens.size()) + " tokens");
                NodePtr s = model.sample_semantic(fired.embeddings, e, u.tokens,
                                                  sched.sampling_factor, rng);
                BackboneModel::DecodeOut dec = model.decode(s, e);
                NodePtr ce = ag::cross_entropy_logits(dec.logits, u.tokens);
                NodePtr loss = ag::add(ce, ag::scale(qloss, sched.quantity_weight));
                if (sched.align_weight > 0.0) {
                    NodePtr diff = ag::add(
                        alpha, ag::scale(ag::constant(alignment_targets(feats,
                                                                        sched.align_gap)),
                                         -1.0));
                    NodePtr align = ag::scale(ag::sum_all(ag::mul(diff, diff)),
                                              sched.align_weight / double(feats.rows()));
                    loss = ag::add(loss, align);
                }
                double lv = loss->value.data[0];
                if (!std::isfinite(lv))
                    throw std::runtime_error("train_backbone: non-finite loss at step " +
                                             std::to_string(step) + ", utterance " + u.id);
                batch_loss += lv / double(bs);
                ag::backward(ag::scale(loss, 1.0 / double(bs)));
            }
            opt.step(ps);
            trace.push_back(batch_loss);
            ++step;
            if (sched.max_steps && step >= sched.max_steps) done = true;
        }
        if (sched.verbose)
            std::cerr << "[train-asr] epoch " << epoch + 1 << " loss "
                      << (trace.empty() ? 0.0 : trace.back()) << "\n";
        if (dev && sched.target_dev_cer >= 0.0) {
            std::vector<std::vector<int>> refs, hyps;
            for (const auto& u : dev->utts) {
                refs.push_back(u.tokens);
                hyps.push_back(model.infer(synthesize_features(u, prototypes, spec)).hyp);
            }
            double c = eval::corpus_cer(refs, hyps);
            if (sched.verbose) std::cerr << "[train-asr] dev cer " << c << "\n";
            if (c < sched.target_dev_cer) done = true;
        }
    }
    return trace;
}

void add_backbone_meta(ParamStore& ps, const BackboneConfig& cfg) {
    Tensor m({8});
    m.data = {double(cfg.d_model),    double(cfg.n_heads),
              double(cfg.encoder_layers), double(cfg.decoder_layers),
              double(cfg.ffn_dim),    double(cfg.vocab_size),
              double(cfg.max_frames), double(cfg.feature_dim)};
    ps.add("zz.meta", std::move(m));
}

BackboneConfig backbone_meta(const std::map<std::string, Tensor>& loaded) {
    auto it = loaded.find("zz.meta");
    if (it == loaded.end() || it->second.size() != 8)
        throw std::runtime_error("checkpoint lacks backbone metadata");
    const auto& d = it->second.data;
    BackboneConfig cfg;
    cfg.d_model = size_t(d[0]);
    cfg.n_heads = size_t(d[1]);
    cfg.encoder_layers = size_t(d[2]);
    cfg.decoder_layers = size_t(d[3]);
    cfg.ffn_dim = size_t(d[4]);
    cfg.vocab_size = size_t(d[5]);
    cfg.max_frames = size_t(d[6]);
    cfg.feature_dim = size_t(d[7]);
    return cfg;
}

ParamStore store_from_checkpoint(const std::map<std::string, Tensor>& loaded) {
    ParamStore ps;
    for (const auto& [name, t] : loaded) ps.add(name, t);
    return ps;
}

}  // namespace seaco
