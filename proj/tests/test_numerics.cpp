#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <random>

#include "doctest.h"
#include "seaco/autograd.hpp"
#include "seaco/nn.hpp"
#include "seaco/params.hpp"

using namespace seaco;
using ag::NodePtr;

namespace {

Tensor random_tensor(std::vector<size_t> shape, std::mt19937_64& rng, double s = 1.0) {
    Tensor t(std::move(shape));
    std::normal_distribution<double> d(0.0, s);
    for (double& v : t.data) v = d(rng);
    return t;
}

}  // namespace

TEST_CASE("matmul against naive loops") {
    std::mt19937_64 rng(1);
    for (int it = 0; it < 20; ++it) {
        size_t m = 1 + rng() % 7, k = 1 + rng() % 7, n = 1 + rng() % 7;
        Tensor a = random_tensor({m, k}, rng), b = random_tensor({k, n}, rng);
        NodePtr c = ag::matmul(ag::constant(a), ag::constant(b));
        for (size_t i = 0; i < m; ++i)
            for (size_t j = 0; j < n; ++j) {
                double want = 0.0;
                for (size_t p = 0; p < k; ++p) want += a.at2(i, p) * b.at2(p, j);
                CHECK(c->value.at2(i, j) == doctest::Approx(want).epsilon(1e-12));
            }
        Tensor bt({n, k});
        for (size_t i = 0; i < n; ++i)
            for (size_t j = 0; j < k; ++j) bt.at2(i, j) = b.at2(j, i);
        NodePtr c2 = ag::matmul_nt(ag::constant(a), ag::constant(bt));
        for (size_t i = 0; i < m * n; ++i)
            CHECK(c2->value.data[i] == doctest::Approx(c->value.data[i]).epsilon(1e-12));
    }
}

TEST_CASE("softmax rows are stochastic and shift-invariant") {
    std::mt19937_64 rng(2);
    Tensor x = random_tensor({4, 9}, rng, 3.0);
    Tensor shifted = x;
    for (size_t i = 0; i < 4; ++i)
        for (size_t j = 0; j < 9; ++j) shifted.at2(i, j) += 100.0 * double(i);
    Tensor a = ag::softmax_rows(ag::constant(x))->value;
    Tensor b = ag::softmax_rows(ag::constant(shifted))->value;
    for (size_t i = 0; i < 4; ++i) {
        double s = 0.0;
        for (size_t j = 0; j < 9; ++j) {
            s += a.at2(i, j);
            CHECK(a.at2(i, j) == doctest::Approx(b.at2(i, j)).epsilon(1e-12));
        }
        CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("layer norm output has zero mean and unit variance per row") {
    std::mt19937_64 rng(3);
    Tensor x = random_tensor({5, 16}, rng, 2.0);
    NodePtr g = ag::constant(Tensor({16}, 1.0)), b = ag::constant(Tensor({16}, 0.0));
    Tensor y = ag::layer_norm(ag::constant(x), g, b)->value;
    for (size_t i = 0; i < 5; ++i) {
        double mean = 0.0, var = 0.0;
        for (size_t j = 0; j < 16; ++j) mean += y.at2(i, j);
        mean /= 16.0;
        for (size_t j = 0; j < 16; ++j) var += (y.at2(i, j) - mean) * (y.at2(i, j) - mean);
        var /= 16.0;
        CHECK(std::abs(mean) < 1e-10);
        CHECK(var == doctest::Approx(1.0).epsilon(1e-4));
    }
}

TEST_CASE("backward on a diamond graph matches hand derivative") {
    // z = sum((x + x) * x) = sum(2 x^2), dz/dx = 4x.
    Tensor x0 = Tensor::from_rows({{1.5, -2.0, 0.25}});
    NodePtr x = ag::leaf(x0);
    NodePtr z = ag::sum_all(ag::mul(ag::add(x, x), x));
    ag::backward(z);
    for (size_t j = 0; j < 3; ++j)
        CHECK(x->grad.data[j] == doctest::Approx(4.0 * x0.data[j]).epsilon(1e-12));
}

TEST_CASE("no-grad guard suppresses graph recording") {
    NodePtr a = ag::leaf(Tensor::from_rows({{1.0, 2.0}}));
    {
        ag::NoGradGuard ng;
        NodePtr b = ag::mul(a, a);
        CHECK(b->parents.empty());
        CHECK_FALSE(b->requires_grad);
    }
    NodePtr c = ag::mul(a, a);
    CHECK(c->requires_grad);
    CHECK(c->parents.size() == 2);
}

TEST_CASE("gradient check: dense composite ops") {
    std::mt19937_64 rng(4);
    ParamStore ps;
    ps.add("w", random_tensor({6, 5}, rng, 0.3));
    ps.add("b", random_tensor({5}, rng, 0.3));
    ps.add("g", Tensor({5}, 1.0));
    ps.add("be", Tensor({5}, 0.0));
    Tensor x = random_tensor({4, 6}, rng);
    auto f = [&]() {
        NodePtr h = ag::add_rowwise(ag::matmul(ag::constant(x), ps.get("w")), ps.get("b"));
        h = ag::layer_norm(h, ps.get("g"), ps.get("be"));
        NodePtr s = ag::softmax_rows(h);
        NodePtr t = ag::tanh_(ag::sigmoid(h));
        return ag::sum_all(ag::add(ag::mul(s, t), ag::scale(ag::relu(h), 0.5)));
    };
    CHECK(nn::grad_check(f, ps) < 1e-4);
}

TEST_CASE("gradient check: cross entropy with ignored positions") {
    std::mt19937_64 rng(5);
    ParamStore ps;
    ps.add("w", random_tensor({4, 7}, rng, 0.5));
    Tensor x = random_tensor({5, 4}, rng);
    std::vector<int> targets = {2, -1, 0, 6, -1};
    auto f = [&]() {
        NodePtr logits = ag::matmul(ag::constant(x), ps.get("w"));
        return ag::cross_entropy_logits(logits, targets, -1);
    };
    CHECK(nn::grad_check(f, ps) < 1e-4);
}

TEST_CASE("gradient check: attention block") {
    std::mt19937_64 rng(6);
    ParamStore ps;
    nn::init_attention(ps, "att", 8, rng);
    Tensor q = random_tensor({3, 8}, rng), kv = random_tensor({5, 8}, rng);
    auto f = [&]() {
        auto out = nn::multi_head_attention(ag::constant(q), ag::constant(kv),
                                            ag::constant(kv), ps, "att", 2);
        return ag::sum_all(ag::mul(out.context, out.context));
    };
    CHECK(nn::grad_check(f, ps) < 1e-4);
}

TEST_CASE("gradient check: lstm") {
    std::mt19937_64 rng(7);
    ParamStore ps;
    nn::init_lstm(ps, "lstm", 6, 5, rng);
    Tensor x = random_tensor({4, 6}, rng);
    auto f = [&]() {
        nn::LstmOut out = nn::lstm_forward(ag::constant(x), ps, "lstm");
        return ag::sum_all(ag::mul(out.final_h, out.final_h));
    };
    CHECK(nn::grad_check(f, ps) < 1e-4);
}

TEST_CASE("gradient check: ffn with gather/scatter/concat plumbing") {
    std::mt19937_64 rng(8);
    ParamStore ps;
    nn::init_ffn(ps, "ffn", 6, 10, rng);
    ps.add("emb", random_tensor({9, 6}, rng, 0.4));
    auto f = [&]() {
        NodePtr rows = ag::gather_rows(ps.get("emb"), {1, 4, 4, 0});
        NodePtr h = nn::ffn(rows, ps, "ffn");
        NodePtr patched =
            ag::scatter_rows(h, ag::rows_range(rows, 0, 2), {3, 1});
        NodePtr both = ag::concat_rows({patched, ag::concat_cols({ag::cols(h, 0, 3),
                                                                  ag::cols(h, 3, 3)})});
        return ag::mean_all(ag::mul(both, both));
    };
    CHECK(nn::grad_check(f, ps) < 1e-4);
}

TEST_CASE("frozen parameters accumulate no gradient") {
    std::mt19937_64 rng(9);
    ParamStore ps;
    ps.add("frozen.w", random_tensor({3, 3}, rng));
    ps.add("live.w", random_tensor({3, 3}, rng));
    ps.set_trainable_prefix("frozen.", false);
    NodePtr z = ag::sum_all(ag::matmul(ps.get("frozen.w"), ps.get("live.w")));
    ag::backward(z);
    for (double g : ps.get("frozen.w")->grad.data) CHECK(g == 0.0);
    bool any = false;
    for (double g : ps.get("live.w")->grad.data) any = any || g != 0.0;
    CHECK(any);
}

TEST_CASE("adam first step is bias-corrected signed step") {
    ParamStore ps;
    ps.add("p", Tensor::from_rows({{1.0, -2.0}}));
    Adam opt;
    opt.lr = 0.1;
    NodePtr p = ps.get("p");
    p->ensure_grad();
    p->grad.data = {0.5, -0.25};
    opt.step(ps);
    // m_hat = g, v_hat = g^2, so the step is ~lr * sign(g).
    CHECK(p->value.data[0] == doctest::Approx(1.0 - 0.1).epsilon(1e-6));
    CHECK(p->value.data[1] == doctest::Approx(-2.0 + 0.1).epsilon(1e-6));
}

TEST_CASE("adam skips non-trainable entries") {
    ParamStore ps;
    ps.add("a", Tensor::from_rows({{1.0}}));
    ps.set_trainable_prefix("a", false);
    NodePtr p = ps.get("a");
    p->requires_grad = true;  // force a gradient through despite freezing
    NodePtr z = ag::sum_all(ag::mul(p, p));
    ag::backward(z);
    Adam opt;
    opt.step(ps);
    CHECK(p->value.data[0] == 1.0);
}

TEST_CASE("sinusoidal encoding matches closed form") {
    Tensor pe = nn::sinusoidal_encoding(7, 8);
    for (size_t pos = 0; pos < 7; ++pos)
        for (size_t i = 0; i < 4; ++i) {
            double rate = std::pow(10000.0, -2.0 * double(i) / 8.0);
            CHECK(pe.at2(pos, 2 * i) ==
                  doctest::Approx(std::sin(double(pos) * rate)).epsilon(1e-12));
            CHECK(pe.at2(pos, 2 * i + 1) ==
                  doctest::Approx(std::cos(double(pos) * rate)).epsilon(1e-12));
        }
}
