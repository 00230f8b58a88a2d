#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cstdio>
#include <random>

#include "doctest.h"
#include "seaco/hotword.hpp"

using namespace seaco;

namespace {

std::vector<std::vector<int>> random_batch(size_t n, std::mt19937_64& rng) {
    std::vector<std::vector<int>> batch(n);
    std::uniform_int_distribution<int> tok(int(Vocab::kReserved), 59);
    for (auto& u : batch) {
        u.resize(6 + rng() % 7);
        for (int& t : u) t = tok(rng);
    }
    return batch;
}

bool is_contiguous_span(const std::vector<int>& hw,
                        const std::vector<std::vector<int>>& batch) {
    for (const auto& u : batch)
        for (size_t s = 0; s + hw.size() <= u.size(); ++s)
            if (std::equal(hw.begin(), hw.end(), u.begin() + s)) return true;
    return false;
}

}  // namespace

TEST_CASE("sampled lists always start with the default entry") {
    SamplingConfig cfg;
    std::mt19937_64 rng(21);
    for (int it = 0; it < 50; ++it) {
        HotwordList hws = sample_hotwords(random_batch(8, rng), cfg, rng);
        REQUIRE(hws.size() >= 1);
        CHECK(hws.entries[0] == std::vector<int>{Vocab::kBlank});
    }
}

TEST_CASE("sampled spans are contiguous, length-bounded, and hit the target rate") {
    SamplingConfig cfg;  // r_b = r_u = 0.75, lengths 2..8
    std::mt19937_64 rng(22);
    const size_t batches = 5000, B = 20;
    double total = 0.0;
    for (size_t it = 0; it < batches; ++it) {
        auto batch = random_batch(B, rng);
        HotwordList hws = sample_hotwords(batch, cfg, rng);
        total += double(hws.size() - 1);
        for (size_t j = 1; j < hws.size(); ++j) {
            CHECK(hws.entries[j].size() >= cfg.l_min);
            CHECK(hws.entries[j].size() <= cfg.l_max);
            CHECK(is_contiguous_span(hws.entries[j], batch));
        }
    }
    // Expectation r_b * r_u * B = 11.25 before duplicate collapsing; random
    // 57-token spans collide rarely, so allow a one-sided dip plus jitter.
    double mean = total / double(batches);
    CHECK(mean > 10.8);
    CHECK(mean < 11.5);
}

TEST_CASE("inactive batches contribute nothing beyond the default") {
    SamplingConfig cfg;
    cfg.r_b = 0.0;
    std::mt19937_64 rng(23);
    for (int it = 0; it < 20; ++it)
        CHECK(sample_hotwords(random_batch(8, rng), cfg, rng).size() == 1);
}

TEST_CASE("short utterances are skipped") {
    SamplingConfig cfg;
    cfg.r_b = 1.0;
    cfg.r_u = 1.0;
    std::mt19937_64 rng(24);
    std::vector<std::vector<int>> batch = {{5}, {6}, {7}};
    CHECK(sample_hotwords(batch, cfg, rng).size() == 1);
}

TEST_CASE("seeded overload is reproducible") {
    SamplingConfig cfg;
    cfg.r_b = 1.0;
    cfg.r_u = 1.0;
    cfg.seed = 99;
    std::mt19937_64 rng(25);
    auto batch = random_batch(12, rng);
    HotwordList a = sample_hotwords(batch, cfg);
    HotwordList b = sample_hotwords(batch, cfg);
    CHECK(a.entries == b.entries);
    cfg.seed = 100;
    HotwordList c = sample_hotwords(batch, cfg);
    bool same = a.entries == c.entries;
    CHECK_FALSE(same);
}

TEST_CASE("bias target marks hotword spans and no-bias elsewhere") {
    HotwordList hws = HotwordList::default_only();
    hws.add_unique({5, 6});
    hws.add_unique({5, 6, 7});
    hws.add_unique({9, 9});
    std::vector<int> y = {4, 5, 6, 7, 9, 9, 5, 6, 8};
    std::vector<int> t = build_bias_target(y, hws);
    // Longest match wins at position 1: the 3-token entry beats the 2-token one.
    std::vector<int> want = {Vocab::kNoBias, 5, 6, 7, 9, 9, 5, 6, Vocab::kNoBias};
    CHECK(t == want);
}

TEST_CASE("bias target positions agree with the source everywhere marked") {
    std::mt19937_64 rng(26);
    SamplingConfig cfg;
    cfg.r_b = 1.0;
    cfg.r_u = 1.0;
    for (int it = 0; it < 300; ++it) {
        auto batch = random_batch(6, rng);
        HotwordList hws = sample_hotwords(batch, cfg, rng);
        for (const auto& y : batch) {
            std::vector<int> t = build_bias_target(y, hws);
            REQUIRE(t.size() == y.size());
            for (size_t i = 0; i < y.size(); ++i)
                CHECK((t[i] == Vocab::kNoBias || t[i] == y[i]));
        }
    }
}

TEST_CASE("the default entry never matches content") {
    HotwordList hws = HotwordList::default_only();
    std::vector<int> y = {Vocab::kBlank, Vocab::kBlank};
    std::vector<int> t = build_bias_target(y, hws);
    CHECK(t == std::vector<int>{Vocab::kNoBias, Vocab::kNoBias});
}

TEST_CASE("hotword list file round trip") {
    Vocab v = Vocab::make_default(20);
    HotwordList hws = HotwordList::default_only();
    hws.add_unique({4, 5, 6});
    hws.add_unique({10, 11});
    const char* path = "hotwords_roundtrip.txt";
    save_hotword_list(hws, v, path);
    HotwordList back = load_hotword_list(path, v);
    CHECK(back.entries == hws.entries);
    std::remove(path);
}

TEST_CASE("a blank token inside a hotword file is rejected") {
    const char* path = "hotwords_bad.txt";
    FILE* f = std::fopen(path, "w");
    std::fputs("t4 <blank>\n", f);
    std::fclose(f);
    Vocab v = Vocab::make_default(20);
    CHECK_THROWS(load_hotword_list(path, v));
    std::remove(path);
}

TEST_CASE("duplicates collapse") {
    HotwordList hws = HotwordList::default_only();
    CHECK(hws.add_unique({3, 4}));
    CHECK_FALSE(hws.add_unique({3, 4}));
    CHECK(hws.size() == 2);
}
