#ifndef SEACO_HOTWORD_HPP
#define SEACO_HOTWORD_HPP

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "seaco/corpus.hpp"

namespace seaco {

struct SamplingConfig {
    double r_b = 0.75;  // batch activation ratio
    double r_u = 0.75;  // per-utterance contribution ratio inside an active batch
    size_t l_min = 2, l_max = 8;
    uint64_t seed = 0;
};

// Ordered hotword inventory; entry 0 is always the default <blank> hotword.
struct HotwordList {
    std::vector<std::vector<int>> entries;

    static HotwordList default_only();
    size_t size() const { return entries.size(); }
    bool contains(const std::vector<int>& hw) const;
    // Appends unless duplicate; returns whether it was added.
    bool add_unique(std::vector<int> hw);
};

// Draws contiguous spans out of the batch targets per the sampling ratios.
// Utterances shorter than l_min contribute nothing. Duplicates collapse.
HotwordList sample_hotwords(const std::vector<std::vector<int>>& batch_targets,
                            const SamplingConfig& cfg, std::mt19937_64& rng);
// Seeds a fresh generator from cfg.seed (reproducibility surface).
HotwordList sample_hotwords(const std::vector<std::vector<int>>& batch_targets,
                            const SamplingConfig& cfg);

// Hotword-position-aware target: greedy left-to-right scan keeping matched
// hotword spans (longest match, then list order) and writing <no-bias>
// everywhere else.
std::vector<int> build_bias_target(const std::vector<int>& y, const HotwordList& hotwords);

// One hotword per line, tokens space-separated; the default <blank> entry is
// implicit and must not appear in files.
void save_hotword_list(const HotwordList& list, const Vocab& v, const std::string& path);
HotwordList load_hotword_list(const std::string& path, const Vocab& v);

std::string hotword_label(const std::vector<int>& hw, const Vocab& v);

}  // namespace seaco

#endif
