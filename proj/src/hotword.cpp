#include "seaco/hotword.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace seaco {

HotwordList HotwordList::default_only() {
    HotwordList l;
    l.entries.push_back({Vocab::kBlank});
    return l;
}

bool HotwordList::contains(const std::vector<int>& hw) const {
    return std::find(entries.begin(), entries.end(), hw) != entries.end();
}

bool HotwordList::add_unique(std::vector<int> hw) {
    if (contains(hw)) return false;
    entries.push_back(std::move(hw));
    return true;
}

HotwordList sample_hotwords(const std::vector<std::vector<int>>& batch_targets,
                            const SamplingConfig& cfg, std::mt19937_64& rng) {
    if (batch_targets.empty())
        throw std::invalid_argument("sample_hotwords: empty batch");
    if (cfg.l_min < 1 || cfg.l_min > cfg.l_max)
        throw std::invalid_argument("sample_hotwords: bad length bounds");
    HotwordList list = HotwordList::default_only();
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    if (unit(rng) >= cfg.r_b) return list;  // inactive batch
    for (const auto& y : batch_targets) {
        if (unit(rng) >= cfg.r_u) continue;
        if (y.size() < cfg.l_min) continue;
        size_t hi = std::min(cfg.l_max, y.size());
        std::uniform_int_distribution<size_t> len_dist(cfg.l_min, hi);
        size_t len = len_dist(rng);
        std::uniform_int_distribution<size_t> start_dist(0, y.size() - len);
        size_t start = start_dist(rng);
        list.add_unique(std::vector<int>(y.begin() + long(start),
                                         y.begin() + long(start + len)));
    }
    return list;
}

HotwordList sample_hotwords(const std::vector<std::vector<int>>& batch_targets,
                            const SamplingConfig& cfg) {
    std::mt19937_64 rng(cfg.seed);
    return sample_hotwords(batch_targets, cfg, rng);
}

std::vector<int> build_bias_target(const std::vector<int>& y, const HotwordList& hotwords) {
    std::vector<int> out(y.size(), Vocab::kNoBias);
    size_t i = 0;
    while (i < y.size()) {
        size_t best_len = 0;
        for (size_t h = 1; h < hotwords.size(); ++h) {  // entry 0 never matches
            const auto& hw = hotwords.entries[h];
            if (hw.empty() || hw.size() > y.size() - i || hw.size() <= best_len) continue;
            if (std::equal(hw.begin(), hw.end(), y.begin() + long(i))) best_len = hw.size();
        }
        if (best_len > 0) {
            for (size_t k = 0; k < best_len; ++k) out[i + k] = y[i + k];
            i += best_len;
        } else {
            ++i;
        }
    }
    return out;
}

void save_hotword_list(const HotwordList& list, const Vocab& v, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write hotword list: " + path);
    for (size_t h = 1; h < list.size(); ++h) f << hotword_label(list.entries[h], v) << "\n";
}

HotwordList load_hotword_list(const std::string& path, const Vocab& v) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot read hotword list: " + path);
    HotwordList list = HotwordList::default_only();
    std::string line;
    size_t lineno = 0;
    while (std::getline(f, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string tok;
        std::vector<int> hw;
        while (ss >> tok) {
            if (tok == "<blank>")
                throw std::runtime_error(path + ":" + std::to_string(lineno) +
                                         ": the default <blank> hotword is implicit");
            hw.push_back(v.id(tok));
        }
        if (!hw.empty()) list.add_unique(std::move(hw));
    }
    return list;
}

std::string hotword_label(const std::vector<int>& hw, const Vocab& v) {
    std::string s;
    for (size_t i = 0; i < hw.size(); ++i) {
        if (i) s += " ";
        s += v.token(hw[i]);
    }
    return s;
}

}  // namespace seaco
