#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "seaco/cif.hpp"
#include "seaco/nn.hpp"

using namespace seaco;
using ag::NodePtr;

namespace {

Tensor random_tensor(std::vector<size_t> shape, std::mt19937_64& rng, double s = 1.0) {
    Tensor t(std::move(shape));
    std::normal_distribution<double> d(0.0, s);
    for (double& v : t.data) v = d(rng);
    return t;
}

Tensor col(const std::vector<double>& v) {
    Tensor t({v.size(), 1});
    t.data = v;
    return t;
}

}  // namespace

TEST_CASE("worked example: weights (.4 .8 .3 .5 .2) fire twice with split frame 2") {
    std::mt19937_64 rng(11);
    Tensor e = random_tensor({5, 3}, rng);
    cif::Fired f = cif::integrate_and_fire(ag::constant(e),
                                           ag::constant(col({0.4, 0.8, 0.3, 0.5, 0.2})));
    REQUIRE(f.fired_count == 2);
    for (size_t j = 0; j < 3; ++j) {
        CHECK(f.embeddings->value.at2(0, j) ==
              doctest::Approx(0.4 * e.at2(0, j) + 0.6 * e.at2(1, j)).epsilon(1e-12));
        CHECK(f.embeddings->value.at2(1, j) ==
              doctest::Approx(0.2 * e.at2(1, j) + 0.3 * e.at2(2, j) + 0.5 * e.at2(3, j))
                  .epsilon(1e-12));
    }
}

TEST_CASE("exact-threshold weights fire one embedding per frame") {
    Tensor e = Tensor::from_rows({{1.0, 2.0}, {3.0, 4.0}});
    cif::Fired f = cif::integrate_and_fire(ag::constant(e), ag::constant(col({1.0, 1.0})));
    REQUIRE(f.fired_count == 2);
    for (size_t i = 0; i < 4; ++i)
        CHECK(f.embeddings->value.data[i] == doctest::Approx(e.data[i]).epsilon(1e-9));
}

TEST_CASE("1000 random instances match the scalar scan-loop oracle") {
    std::mt19937_64 rng(12);
    std::uniform_real_distribution<double> w(0.0, 1.0);
    for (int it = 0; it < 1000; ++it) {
        size_t T = 1 + rng() % 12, d = 1 + rng() % 6;
        Tensor e = random_tensor({T, d}, rng);
        std::vector<double> alpha(T);
        for (double& a : alpha) a = w(rng);
        cif::Fired f = cif::integrate_and_fire(ag::constant(e), ag::constant(col(alpha)));
        auto want = oracle::cif_scan(e, alpha, 1.0, 0.0);
        REQUIRE(f.fired_count == want.size());
        for (size_t i = 0; i < want.size(); ++i)
            for (size_t j = 0; j < d; ++j)
                CHECK(f.embeddings->value.at2(i, j) ==
                      doctest::Approx(want[i][j]).epsilon(1e-12));
    }
}

TEST_CASE("scaled weights fire exactly the target length") {
    std::mt19937_64 rng(13);
    std::uniform_real_distribution<double> w(0.05, 0.95);
    for (int it = 0; it < 200; ++it) {
        size_t T = 4 + rng() % 20;
        size_t target = 1 + rng() % (T / 2);
        Tensor e = random_tensor({T, 4}, rng);
        std::vector<double> alpha(T);
        for (double& a : alpha) a = w(rng);
        NodePtr scaled = cif::scale_weights(ag::constant(col(alpha)), target);
        double sum = 0.0;
        for (double v : scaled->value.data) sum += v;
        CHECK(sum == doctest::Approx(double(target)).epsilon(1e-12));
        cif::Fired f = cif::integrate_and_fire(ag::constant(e), scaled, 1.0, 1e-6);
        CHECK(f.fired_count == target);
    }
}

TEST_CASE("gradient check through integration, scaling, and quantity loss") {
    // Crossing margins are ~0.1 or larger, far beyond the 1e-5 probe step, so
    // the fired count is locally constant and the mapping differentiable.
    std::mt19937_64 rng(14);
    ParamStore ps;
    ps.add("e", random_tensor({5, 3}, rng, 0.5));
    ps.add("a", col({0.4, 0.7, 0.35, 0.62, 0.2}));
    auto f = [&]() {
        cif::Fired fired = cif::integrate_and_fire(ps.get("e"), ps.get("a"));
        return ag::sum_all(ag::mul(fired.embeddings, fired.embeddings));
    };
    CHECK(nn::grad_check(f, ps) < 1e-4);

    ParamStore ps2;
    ps2.add("e", random_tensor({6, 3}, rng, 0.5));
    ps2.add("a", col({0.33, 0.71, 0.42, 0.58, 0.27, 0.64}));
    auto g = [&]() {
        NodePtr scaled = cif::scale_weights(ps2.get("a"), 2);
        cif::Fired fired = cif::integrate_and_fire(ps2.get("e"), scaled, 1.0, 1e-6);
        NodePtr mse = ag::sum_all(ag::mul(fired.embeddings, fired.embeddings));
        return ag::add(mse, cif::quantity_loss(ps2.get("a"), 3));
    };
    CHECK(nn::grad_check(g, ps2) < 1e-4);
}

TEST_CASE("quantity loss value") {
    // sum 1.5 vs target 2 -> 0.5 * 0.5^2
    NodePtr q = cif::quantity_loss(ag::constant(col({0.5, 0.7, 0.3})), 2);
    CHECK(q->value.data[0] == doctest::Approx(0.125).epsilon(1e-12));
}

TEST_CASE("input validation") {
    Tensor e = Tensor::from_rows({{1.0, 2.0}});
    CHECK_THROWS_AS(cif::integrate_and_fire(ag::constant(e), ag::constant(col({-0.1}))),
                    std::invalid_argument);
    CHECK_THROWS_AS(cif::scale_weights(ag::constant(col({0.0, 0.0})), 2),
                    std::invalid_argument);
    cif::Fired f = cif::integrate_and_fire(ag::constant(e), ag::constant(col({0.3})));
    CHECK(f.fired_count == 0);
}

TEST_CASE("predictor emits one weight per frame in (0,1)") {
    std::mt19937_64 rng(15);
    ParamStore ps;
    cif::init_predictor(ps, "cif", 6, rng);
    Tensor e = random_tensor({9, 6}, rng);
    NodePtr a = cif::predict_weights(ag::constant(e), ps, "cif");
    REQUIRE(a->value.rows() == 9);
    REQUIRE(a->value.cols() == 1);
    for (double v : a->value.data) {
        CHECK(v > 0.0);
        CHECK(v < 1.0);
    }
}
