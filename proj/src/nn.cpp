#include "seaco/nn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace seaco::nn {

using ag::NodePtr;

NodePtr linear(const NodePtr& x, ParamStore& ps, const std::string& prefix) {
    return ag::add_rowwise(ag::matmul(x, ps.get(prefix + ".w")), ps.get(prefix + ".b"));
}

void init_linear(ParamStore& ps, const std::string& prefix, size_t in, size_t out,
                 std::mt19937_64& rng) {
    ps.add(prefix + ".w", xavier_uniform({in, out}, rng));
    ps.add(prefix + ".b", Tensor({out}));
}

AttentionOut multi_head_attention(const NodePtr& q, const NodePtr& k, const NodePtr& v,
                                  ParamStore& ps, const std::string& prefix,
                                  size_t n_heads) {
    size_t d = q->value.cols();
    if (n_heads == 0 || d % n_heads != 0)
        throw std::invalid_argument("attention: model dim " + std::to_string(d) +
                                    " not divisible by " + std::to_string(n_heads) +
                                    " heads");
    if (k->value.rows() != v->value.rows())
        throw std::invalid_argument("attention: key/value length mismatch");
    size_t hd = d / n_heads;
    NodePtr qp = linear(q, ps, prefix + ".q");
    NodePtr kp = linear(k, ps, prefix + ".k");
    NodePtr vp = linear(v, ps, prefix + ".v");
    std::vector<NodePtr> ctx_heads, weights;
    ctx_heads.reserve(n_heads);
    weights.reserve(n_heads);
    double sc = 1.0 / std::sqrt(double(hd));
    for (size_t h = 0; h < n_heads; ++h) {
        NodePtr qh = ag::cols(qp, h * hd, hd);
        NodePtr kh = ag::cols(kp, h * hd, hd);
        NodePtr vh = ag::cols(vp, h * hd, hd);
        NodePtr w = ag::softmax_rows(ag::scale(ag::matmul_nt(qh, kh), sc));
        weights.push_back(w);
        ctx_heads.push_back(ag::matmul(w, vh));
    }
    NodePtr ctx = linear(ag::concat_cols(ctx_heads), ps, prefix + ".o");
    return {ctx, weights};
}

void init_attention(ParamStore& ps, const std::string& prefix, size_t d_model,
                    std::mt19937_64& rng) {
    init_linear(ps, prefix + ".q", d_model, d_model, rng);
    init_linear(ps, prefix + ".k", d_model, d_model, rng);
    init_linear(ps, prefix + ".v", d_model, d_model, rng);
    init_linear(ps, prefix + ".o", d_model, d_model, rng);
}

Tensor average_heads(const std::vector<NodePtr>& weights) {
    Tensor avg(weights.at(0)->value.shape);
    for (const auto& w : weights)
        for (size_t i = 0; i < avg.size(); ++i) avg.data[i] += w->value.data[i];
    for (double& v : avg.data) v /= double(weights.size());
    return avg;
}

LstmOut lstm_forward(const NodePtr& x, ParamStore& ps, const std::string& prefix) {
    NodePtr wx = ps.get(prefix + ".wx");
    NodePtr wh = ps.get(prefix + ".wh");
    NodePtr b = ps.get(prefix + ".b");
    size_t hidden = wh->value.rows();
    size_t steps = x->value.rows();
    NodePtr h = ag::constant(Tensor({1, hidden}));
    NodePtr c = ag::constant(Tensor({1, hidden}));
    std::vector<NodePtr> hs;
    hs.reserve(steps);
    for (size_t t = 0; t < steps; ++t) {
        NodePtr xt = ag::rows_range(x, t, 1);
        NodePtr gates =
            ag::add_rowwise(ag::add(ag::matmul(xt, wx), ag::matmul(h, wh)), b);
        NodePtr ig = ag::sigmoid(ag::cols(gates, 0, hidden));
        NodePtr fg = ag::sigmoid(ag::cols(gates, hidden, hidden));
        NodePtr gg = ag::tanh_(ag::cols(gates, 2 * hidden, hidden));
        NodePtr og = ag::sigmoid(ag::cols(gates, 3 * hidden, hidden));
        c = ag::add(ag::mul(fg, c), ag::mul(ig, gg));
        h = ag::mul(og, ag::tanh_(c));
        hs.push_back(h);
    }
    if (steps == 0)
        return {ag::constant(Tensor({0, hidden})), ag::constant(Tensor({1, hidden}))};
    return {ag::concat_rows(hs), h};
}

void init_lstm(ParamStore& ps, const std::string& prefix, size_t in, size_t hidden,
               std::mt19937_64& rng) {
    ps.add(prefix + ".wx", uniform_init({in, 4 * hidden}, 0.1, rng));
    ps.add(prefix + ".wh", uniform_init({hidden, 4 * hidden}, 0.1, rng));
    Tensor b({4 * hidden});
    for (size_t i = hidden; i < 2 * hidden; ++i) b.data[i] = 1.0;  // forget gate
    ps.add(prefix + ".b", std::move(b));
}

NodePtr ffn(const NodePtr& x, ParamStore& ps, const std::string& prefix) {
    NodePtr h = ag::relu(ag::add_rowwise(ag::matmul(x, ps.get(prefix + ".w1")),
                                         ps.get(prefix + ".b1")));
    return ag::add_rowwise(ag::matmul(h, ps.get(prefix + ".w2")), ps.get(prefix + ".b2"));
}

void init_ffn(ParamStore& ps, const std::string& prefix, size_t d_model, size_t ffn_dim,
              std::mt19937_64& rng) {
    ps.add(prefix + ".w1", xavier_uniform({d_model, ffn_dim}, rng));
    ps.add(prefix + ".b1", Tensor({ffn_dim}));
    ps.add(prefix + ".w2", xavier_uniform({ffn_dim, d_model}, rng));
    ps.add(prefix + ".b2", Tensor({d_model}));
}

void init_layer_norm(ParamStore& ps, const std::string& prefix, size_t d) {
    ps.add(prefix + ".g", Tensor({d}, 1.0));
    ps.add(prefix + ".b", Tensor({d}));
}

NodePtr layer_norm(const NodePtr& x, ParamStore& ps, const std::string& prefix) {
    return ag::layer_norm(x, ps.get(prefix + ".g"), ps.get(prefix + ".b"));
}

Tensor sinusoidal_encoding(size_t len, size_t d_model) {
    Tensor pe({len, d_model});
    for (size_t pos = 0; pos < len; ++pos) {
        for (size_t i = 0; i < d_model; i += 2) {
            double freq = std::pow(10000.0, -double(i) / double(d_model));
            pe.data[pos * d_model + i] = std::sin(double(pos) * freq);
            if (i + 1 < d_model)
                pe.data[pos * d_model + i + 1] = std::cos(double(pos) * freq);
        }
    }
    return pe;
}

NodePtr add_positional(const NodePtr& x) {
    return ag::add(x, ag::constant(sinusoidal_encoding(x->value.rows(), x->value.cols())));
}

double grad_check(const std::function<NodePtr()>& f, ParamStore& ps, double step) {
    ps.zero_grads();
    NodePtr root = f();
    if (!root->value.all_finite())
        throw std::runtime_error("grad_check: non-finite function value");
    ag::backward(root);
    std::map<std::string, Tensor> analytic;
    for (auto& [name, e] : ps.all()) {
        e.node->ensure_grad();
        analytic.emplace(name, e.node->grad);
    }
    auto eval = [&]() {
        ag::NoGradGuard ng;
        return f()->value.data[0];
    };
    double max_rel = 0.0;
    for (auto& [name, e] : ps.all()) {
        if (!e.trainable) {
            // Freezing contract: gradient identically zero.
            for (double g : analytic[name].data)
                if (g != 0.0) return std::numeric_limits<double>::infinity();
            continue;
        }
        for (size_t i = 0; i < e.node->value.size(); ++i) {
            double saved = e.node->value.data[i];
            e.node->value.data[i] = saved + step;
            double lp = eval();
            e.node->value.data[i] = saved - step;
            double lm = eval();
            e.node->value.data[i] = saved;
            double num = (lp - lm) / (2.0 * step);
            double ana = analytic[name].data[i];
            double denom = std::max({std::fabs(num), std::fabs(ana), 1e-3});
            max_rel = std::max(max_rel, std::fabs(num - ana) / denom);
        }
    }
    ps.zero_grads();
    return max_rel;
}

}  // namespace seaco::nn
