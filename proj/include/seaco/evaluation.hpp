#ifndef SEACO_EVALUATION_HPP
#define SEACO_EVALUATION_HPP

#include <optional>
#include <string>
#include <vector>

#include "seaco/hotword.hpp"

namespace seaco::eval {

// Unit-cost Levenshtein distance.
size_t edit_distance(const std::vector<int>& ref, const std::vector<int>& hyp);

// distance / len(ref); an empty reference counts len(hyp) errors against a
// denominator of 1.
double cer(const std::vector<int>& ref, const std::vector<int>& hyp);

// Corpus-level CER: total distance over total reference length.
double corpus_cer(const std::vector<std::vector<int>>& refs,
                  const std::vector<std::vector<int>>& hyps);

struct HotwordRow {
    std::vector<int> hotword;
    std::string label;
    size_t ref_count = 0;
    size_t recalled_count = 0;
    size_t hyp_count = 0;
    size_t matched_hyp_count = 0;
    double recall = 0.0, precision = 0.0, f1 = 0.0;
    bool r1 = false;
    bool has_base = false;
    double base_recall = 0.0;
};

struct EvalReport {
    double cer = 0.0;
    std::vector<HotwordRow> rows;
    double avg_recall = 0.0, avg_precision = 0.0, avg_f1 = 0.0;
    bool has_r1 = false;
    double r1_recall = 0.0, r1_precision = 0.0, r1_f1 = 0.0;
};

size_t count_occurrences(const std::vector<int>& seq, const std::vector<int>& sub);

// Full-match hotword recall/precision, occurrence-matched per utterance with
// multiplicity. Hotwords absent from every ref and hyp are dropped.
std::vector<HotwordRow> hotword_rpf(const std::vector<std::vector<int>>& refs,
                                    const std::vector<std::vector<int>>& hyps,
                                    const HotwordList& hotwords, const Vocab& v);

// R1 flag: base-model recall strictly below 0.40.
std::vector<bool> classify_r1(const std::vector<double>& base_recalls);

// refs/hyps aligned by index; base_hyps, when given, drive the R1 flags.
EvalReport evaluate(const std::vector<std::vector<int>>& refs,
                    const std::vector<std::vector<int>>& hyps,
                    const HotwordList& hotwords, const Vocab& v,
                    const std::vector<std::vector<int>>* base_hyps = nullptr);

std::string format_report(const EvalReport& r);

}  // namespace seaco::eval

#endif
