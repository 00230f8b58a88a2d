#include "seaco/cif.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "seaco/nn.hpp"

namespace seaco::cif {

using ag::NodePtr;

NodePtr predict_weights(const NodePtr& e, ParamStore& ps, const std::string& prefix) {
    if (e->value.rows() < 1)
        throw std::invalid_argument("predict_weights: empty input");
    return ag::sigmoid(nn::linear(e, ps, prefix));
}

void init_predictor(ParamStore& ps, const std::string& prefix, size_t d_model,
                    std::mt19937_64& rng) {
    nn::init_linear(ps, prefix, d_model, 1, rng);
}

Fired integrate_and_fire(const NodePtr& e, const NodePtr& alpha, double threshold,
                         double tail_tol) {
    size_t T = e->value.rows();
    size_t d = e->value.cols();
    if (alpha->value.size() != T)
        throw std::invalid_argument("integrate_and_fire: " +
                                    std::to_string(alpha->value.size()) +
                                    " weights for " + std::to_string(T) + " frames");
    for (double a : alpha->value.data)
        if (a < 0.0)
            throw std::invalid_argument("integrate_and_fire: negative weight");

    // Interval view of the scan: frame t occupies [S_{t-1}, S_t] on the
    // accumulated-weight axis and firing l integrates [(l-1)*thr, l*thr].
    std::vector<double> S(T + 1, 0.0);
    for (size_t t = 0; t < T; ++t) S[t + 1] = S[t] + alpha->value.data[t];
    size_t fired = size_t(std::floor(S[T] / threshold + tail_tol / threshold));
    if (fired == 0) return {ag::constant(Tensor({0, d})), 0};

    Tensor coeff({fired, T});
    for (size_t l = 0; l < fired; ++l) {
        double lo = double(l) * threshold, hi = double(l + 1) * threshold;
        for (size_t t = 0; t < T; ++t) {
            double c = std::min(S[t + 1], hi) - std::max(S[t], lo);
            if (c > 0.0) coeff.data[l * T + t] = c;
        }
    }
    Tensor out({fired, d});
    ag::detail::gemm_nn(coeff, e->value, out);

    auto back = [e, alpha, coeff, S, threshold, fired, T, d](ag::Node& self) {
        if (e->requires_grad) {
            e->ensure_grad();
            ag::detail::gemm_tn(coeff, self.grad, e->grad);
        }
        if (alpha->requires_grad) {
            alpha->ensure_grad();
            // dc/dS_t = [S_t < l*thr], dc/dS_{t-1} = -[S_{t-1} > (l-1)*thr];
            // S_t depends on every alpha_u with u <= t, so suffix sums.
            std::vector<double> r(T + 1, 0.0), s(T + 1, 0.0);
            for (size_t l = 0; l < fired; ++l) {
                double lo = double(l) * threshold, hi = double(l + 1) * threshold;
                for (size_t t = 0; t < T; ++t) {
                    if (coeff.data[l * T + t] <= 0.0) continue;
                    double g = 0.0;
                    for (size_t j = 0; j < d; ++j)
                        g += self.grad.data[l * d + j] * e->value.data[t * d + j];
                    if (S[t + 1] < hi) r[t] += g;
                    if (S[t] > lo) s[t] += g;  // subtracts from alpha_u, u <= t-1
                }
            }
            // da[u] = sum_{t >= u} r[t] - sum_{t > u} s[t]
            std::vector<double> da(T, 0.0);
            double acc_r = 0.0, acc_s = 0.0;
            for (size_t u = T; u-- > 0;) {
                acc_r += r[u];
                da[u] = acc_r - acc_s;
                acc_s += s[u];
            }
            for (size_t u = 0; u < T; ++u) alpha->grad.data[u] += da[u];
        }
    };
    return {ag::make_op(std::move(out), {e, alpha}, back), fired};
}

NodePtr scale_weights(const NodePtr& alpha, size_t target_len) {
    if (target_len < 1) throw std::invalid_argument("scale_weights: target_len < 1");
    double s = 0.0;
    for (double a : alpha->value.data) s += a;
    if (s <= 0.0)
        throw std::invalid_argument("scale_weights: weight sum is zero (degenerate input)");
    double f = double(target_len) / s;
    Tensor out = alpha->value;
    for (double& v : out.data) v *= f;
    return ag::make_op(std::move(out), {alpha}, [alpha, s, f, target_len](ag::Node& self) {
        if (!alpha->requires_grad) return;
        alpha->ensure_grad();
        double ga = 0.0;  // sum_t g_t * alpha_t
        for (size_t i = 0; i < self.grad.size(); ++i)
            ga += self.grad.data[i] * alpha->value.data[i];
        double dfds = -double(target_len) / (s * s);
        for (size_t i = 0; i < self.grad.size(); ++i)
            alpha->grad.data[i] += f * self.grad.data[i] + dfds * ga;
    });
}

NodePtr quantity_loss(const NodePtr& alpha, size_t target_len) {
    if (target_len < 1) throw std::invalid_argument("quantity_loss: target_len < 1");
    // Squared error, not |.|: the unit-magnitude gradient of the absolute
    // value keeps the weight sum oscillating around the target under Adam,
    // and the firing count never settles.
    NodePtr d = ag::add_const(ag::sum_all(alpha), -double(target_len));
    return ag::scale(ag::mul(d, d), 0.5);
}

}  // namespace seaco::cif
