#include "seaco/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace seaco {

Vocab Vocab::make_default(size_t size) {
    if (size < kReserved + 1)
        throw std::invalid_argument("vocab size must exceed the reserved tokens");
    Vocab v;
    v.tokens = {"<pad>", "<blank>", "<no-bias>"};
    for (size_t i = kReserved; i < size; ++i) v.tokens.push_back("t" + std::to_string(i));
    for (size_t i = 0; i < v.tokens.size(); ++i) v.index[v.tokens[i]] = int(i);
    return v;
}

int Vocab::id(const std::string& tok) const {
    auto it = index.find(tok);
    if (it == index.end()) throw std::invalid_argument("unknown token: " + tok);
    return it->second;
}

const std::string& Vocab::token(int id) const {
    if (id < 0 || size_t(id) >= tokens.size())
        throw std::invalid_argument("token id out of range: " + std::to_string(id));
    return tokens[size_t(id)];
}

void Vocab::save(const std::string& path) const {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write vocab file: " + path);
    for (const auto& t : tokens) f << t << "\n";
}

Vocab Vocab::load(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot read vocab file: " + path);
    Vocab v;
    std::string line;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        if (v.index.count(line)) throw std::runtime_error("duplicate vocab token: " + line);
        v.index[line] = int(v.tokens.size());
        v.tokens.push_back(line);
    }
    if (v.size() <= kReserved || v.tokens[0] != "<pad>" || v.tokens[1] != "<blank>" ||
        v.tokens[2] != "<no-bias>")
        throw std::runtime_error("vocab file missing reserved tokens: " + path);
    return v;
}

std::string SyntheticSpec::to_json() const {
    nlohmann::json j;
    j["vocab_size"] = vocab_size;
    j["feature_dim"] = feature_dim;
    j["frames_min"] = frames_min;
    j["frames_max"] = frames_max;
    j["noise_sigma"] = noise_sigma;
    j["utt_len_min"] = utt_len_min;
    j["utt_len_max"] = utt_len_max;
    j["n_train"] = n_train;
    j["n_dev"] = n_dev;
    j["n_test"] = n_test;
    j["hotword_phrases"] = hotword_phrases;
    j["rare_rate"] = rare_rate;
    j["n_auto_phrases"] = n_auto_phrases;
    j["phrase_proto_offset"] = phrase_proto_offset;
    j["seed"] = seed;
    return j.dump(2);
}

SyntheticSpec SyntheticSpec::from_json(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    SyntheticSpec s;
    s.vocab_size = j.at("vocab_size");
    s.feature_dim = j.at("feature_dim");
    s.frames_min = j.at("frames_min");
    s.frames_max = j.at("frames_max");
    s.noise_sigma = j.at("noise_sigma");
    s.utt_len_min = j.at("utt_len_min");
    s.utt_len_max = j.at("utt_len_max");
    s.n_train = j.at("n_train");
    s.n_dev = j.at("n_dev");
    s.n_test = j.at("n_test");
    s.hotword_phrases = j.at("hotword_phrases").get<std::vector<std::vector<int>>>();
    s.rare_rate = j.at("rare_rate");
    s.n_auto_phrases = j.at("n_auto_phrases");
    s.phrase_proto_offset = j.at("phrase_proto_offset");
    s.seed = j.at("seed");
    return s;
}

std::vector<std::vector<int>> designated_phrases(const SyntheticSpec& spec) {
    if (!spec.hotword_phrases.empty()) return spec.hotword_phrases;
    // Phrase lengths cycle 2,3,4; tokens drawn once each from the top of the
    // content range so phrases never collide with the common pool.
    std::vector<std::vector<int>> phrases;
    int next = int(spec.vocab_size) - 1;
    static const size_t lens[] = {2, 3, 4};
    for (size_t p = 0; p < spec.n_auto_phrases; ++p) {
        size_t len = lens[p % 3];
        std::vector<int> ph;
        for (size_t i = 0; i < len; ++i) {
            if (next < int(Vocab::kReserved))
                throw std::invalid_argument("not enough content tokens for phrases");
            ph.push_back(next--);
        }
        phrases.push_back(std::move(ph));
    }
    return phrases;
}

namespace {

std::vector<int> common_pool(const SyntheticSpec& spec,
                             const std::vector<std::vector<int>>& phrases) {
    std::set<int> phrase_tokens;
    for (const auto& p : phrases)
        for (int t : p) {
            if (t < int(Vocab::kReserved) || t >= int(spec.vocab_size))
                throw std::invalid_argument("phrase token outside content vocabulary: " +
                                            std::to_string(t));
            phrase_tokens.insert(t);
        }
    std::vector<int> pool;
    for (int t = int(Vocab::kReserved); t < int(spec.vocab_size); ++t)
        if (!phrase_tokens.count(t)) pool.push_back(t);
    if (pool.empty()) throw std::invalid_argument("no common tokens left after phrases");
    return pool;
}

}  // namespace

Tensor token_prototypes(const SyntheticSpec& spec,
                        const std::vector<std::vector<int>>& phrases) {
    std::mt19937_64 rng(spec.seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Tensor protos({spec.vocab_size, spec.feature_dim});
    for (double& v : protos.data) v = gauss(rng);

    std::set<int> phrase_tokens;
    for (const auto& p : phrases) phrase_tokens.insert(p.begin(), p.end());
    std::vector<int> pool = common_pool(spec, phrases);
    size_t k = 0;
    for (int t : phrase_tokens) {
        int conf = pool[k++ % pool.size()];
        for (size_t j = 0; j < spec.feature_dim; ++j)
            protos.data[size_t(t) * spec.feature_dim + j] =
                protos.data[size_t(conf) * spec.feature_dim + j] +
                spec.phrase_proto_offset * gauss(rng);
    }
    return protos;
}

GeneratedData generate_corpus(const SyntheticSpec& spec) {
    if (spec.rare_rate < 0.0 || spec.rare_rate > 1.0)
        throw std::invalid_argument("rare_rate outside [0,1]");
    GeneratedData out;
    out.vocab = Vocab::make_default(spec.vocab_size);
    out.phrases = designated_phrases(spec);
    std::vector<int> pool = common_pool(spec, out.phrases);

    std::mt19937_64 rng(spec.seed + 1);
    std::uniform_int_distribution<size_t> len_dist(spec.utt_len_min, spec.utt_len_max);
    std::uniform_int_distribution<size_t> pool_dist(0, pool.size() - 1);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_int_distribution<size_t> phrase_dist(0, out.phrases.size() - 1);

    auto gen_split = [&](const std::string& name, size_t n, double inject_rate,
                         bool round_robin) {
        Corpus c;
        size_t injected = 0;
        for (size_t i = 0; i < n; ++i) {
            Utterance u;
            u.id = name + "-" + std::to_string(i);
            size_t len = len_dist(rng);
            for (size_t t = 0; t < len; ++t) u.tokens.push_back(pool[pool_dist(rng)]);
            if (unit(rng) < inject_rate) {
                const auto& ph = round_robin ? out.phrases[injected % out.phrases.size()]
                                             : out.phrases[phrase_dist(rng)];
                std::uniform_int_distribution<size_t> pos_dist(0, u.tokens.size());
                size_t pos = pos_dist(rng);
                u.tokens.insert(u.tokens.begin() + long(pos), ph.begin(), ph.end());
                ++injected;
            }
            u.seed = rng();
            c.utts.push_back(std::move(u));
        }
        return c;
    };

    out.train = gen_split("train", spec.n_train, spec.rare_rate, false);
    out.dev = gen_split("dev", spec.n_dev, 0.0, false);
    out.test = gen_split("test", spec.n_test, 0.5, true);
    return out;
}

Tensor synthesize_features(const Utterance& utt, const Tensor& prototypes,
                           const SyntheticSpec& spec) {
    std::mt19937_64 rng(utt.seed);
    std::uniform_int_distribution<size_t> frames_dist(spec.frames_min, spec.frames_max);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<double> frames;
    size_t fd = spec.feature_dim;
    for (int tok : utt.tokens) {
        if (tok < 0 || size_t(tok) >= prototypes.rows())
            throw std::invalid_argument("utterance token outside vocabulary: " +
                                        std::to_string(tok));
        size_t n = frames_dist(rng);
        for (size_t f = 0; f < n; ++f)
            for (size_t j = 0; j < fd; ++j)
                frames.push_back(prototypes.data[size_t(tok) * fd + j] +
                                 spec.noise_sigma * gauss(rng));
    }
    Tensor x({frames.size() / fd, fd});
    x.data = std::move(frames);
    return x;
}

void save_corpus(const Corpus& c, const Vocab& v, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write corpus file: " + path);
    for (const auto& u : c.utts) {
        f << u.id << "\t" << u.seed << "\t";
        for (size_t i = 0; i < u.tokens.size(); ++i) {
            if (i) f << " ";
            f << v.token(u.tokens[i]);
        }
        f << "\n";
    }
}

Corpus load_corpus(const std::string& path, const Vocab& v) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot read corpus file: " + path);
    Corpus c;
    std::string line;
    size_t lineno = 0;
    while (std::getline(f, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::istringstream ss(line);
        Utterance u;
        std::string seed_str, toks;
        if (!std::getline(ss, u.id, '\t') || !std::getline(ss, seed_str, '\t') ||
            !std::getline(ss, toks))
            throw std::runtime_error(path + ":" + std::to_string(lineno) +
                                     ": malformed corpus line");
        u.seed = std::stoull(seed_str);
        std::istringstream ts(toks);
        std::string tok;
        while (ts >> tok) u.tokens.push_back(v.id(tok));
        c.utts.push_back(std::move(u));
    }
    return c;
}

}  // namespace seaco
