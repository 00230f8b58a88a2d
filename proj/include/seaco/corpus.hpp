#ifndef SEACO_CORPUS_HPP
#define SEACO_CORPUS_HPP

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "seaco/tensor.hpp"

namespace seaco {

// Token inventory. Index 0..2 are reserved; index 2 is the no-bias marker
// emitted by the bias stack for non-hotword positions.
struct Vocab {
    static constexpr int kPad = 0;
    static constexpr int kBlank = 1;
    static constexpr int kNoBias = 2;
    static constexpr size_t kReserved = 3;

    std::vector<std::string> tokens;
    std::unordered_map<std::string, int> index;

    static Vocab make_default(size_t size);
    int id(const std::string& tok) const;
    const std::string& token(int id) const;
    size_t size() const { return tokens.size(); }

    void save(const std::string& path) const;
    static Vocab load(const std::string& path);
};

struct Utterance {
    std::string id;
    std::vector<int> tokens;
    uint64_t seed = 0;  // drives on-demand feature synthesis
};

struct Corpus {
    std::vector<Utterance> utts;
};

struct SyntheticSpec {
    size_t vocab_size = 60;
    size_t feature_dim = 16;
    size_t frames_min = 2, frames_max = 4;
    double noise_sigma = 0.1;
    size_t utt_len_min = 3, utt_len_max = 12;
    size_t n_train = 2000, n_dev = 200, n_test = 200;
    std::vector<std::vector<int>> hotword_phrases;  // empty: auto-designated
    double rare_rate = 0.02;
    size_t n_auto_phrases = 5;
    // Phrase-only tokens get prototypes this close to a common token's,
    // keeping them genuinely hard for the unbiased backbone.
    double phrase_proto_offset = 0.08;
    uint64_t seed = 12345;

    std::string to_json() const;
    static SyntheticSpec from_json(const std::string& text);
};

struct GeneratedData {
    Vocab vocab;
    Corpus train, dev, test;
    std::vector<std::vector<int>> phrases;
};

GeneratedData generate_corpus(const SyntheticSpec& spec);

// The phrase inventory a spec resolves to: hotword_phrases verbatim when set,
// otherwise the auto-designated ones. Deterministic in the spec.
std::vector<std::vector<int>> designated_phrases(const SyntheticSpec& spec);

// V x feature_dim Gaussian prototypes; phrase-only tokens are near-copies of
// common-token prototypes. Deterministic in spec.seed and the phrase set.
Tensor token_prototypes(const SyntheticSpec& spec,
                        const std::vector<std::vector<int>>& phrases);

Tensor synthesize_features(const Utterance& utt, const Tensor& prototypes,
                           const SyntheticSpec& spec);

void save_corpus(const Corpus& c, const Vocab& v, const std::string& path);
Corpus load_corpus(const std::string& path, const Vocab& v);

}  // namespace seaco

#endif
