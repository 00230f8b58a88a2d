#include "seaco/evaluation.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>

namespace seaco::eval {

size_t edit_distance(const std::vector<int>& ref, const std::vector<int>& hyp) {
    size_t n = ref.size(), m = hyp.size();
    std::vector<size_t> prev(m + 1), cur(m + 1);
    for (size_t j = 0; j <= m; ++j) prev[j] = j;
    for (size_t i = 1; i <= n; ++i) {
        cur[0] = i;
        for (size_t j = 1; j <= m; ++j) {
            size_t sub = prev[j - 1] + (ref[i - 1] == hyp[j - 1] ? 0 : 1);
            cur[j] = std::min({sub, prev[j] + 1, cur[j - 1] + 1});
        }
        std::swap(prev, cur);
    }
    return prev[m];
}

double cer(const std::vector<int>& ref, const std::vector<int>& hyp) {
    if (ref.empty()) return double(hyp.size()) / 1.0;
    return double(edit_distance(ref, hyp)) / double(ref.size());
}

double corpus_cer(const std::vector<std::vector<int>>& refs,
                  const std::vector<std::vector<int>>& hyps) {
    if (refs.size() != hyps.size())
        throw std::invalid_argument("corpus_cer: ref/hyp count mismatch");
    size_t errs = 0, len = 0;
    for (size_t i = 0; i < refs.size(); ++i) {
        errs += edit_distance(refs[i], hyps[i]);
        len += refs[i].size();
    }
    return double(errs) / double(std::max<size_t>(1, len));
}

size_t count_occurrences(const std::vector<int>& seq, const std::vector<int>& sub) {
    if (sub.empty() || sub.size() > seq.size()) return 0;
    size_t n = 0;
    for (size_t i = 0; i + sub.size() <= seq.size(); ++i)
        if (std::equal(sub.begin(), sub.end(), seq.begin() + long(i))) ++n;
    return n;
}

std::vector<HotwordRow> hotword_rpf(const std::vector<std::vector<int>>& refs,
                                    const std::vector<std::vector<int>>& hyps,
                                    const HotwordList& hotwords, const Vocab& v) {
    if (refs.size() != hyps.size())
        throw std::invalid_argument("hotword_rpf: ref/hyp count mismatch");
    std::vector<HotwordRow> rows;
    for (size_t h = 1; h < hotwords.size(); ++h) {
        const auto& hw = hotwords.entries[h];
        HotwordRow row;
        row.hotword = hw;
        row.label = hotword_label(hw, v);
        for (size_t i = 0; i < refs.size(); ++i) {
            size_t in_ref = count_occurrences(refs[i], hw);
            size_t in_hyp = count_occurrences(hyps[i], hw);
            row.ref_count += in_ref;
            row.hyp_count += in_hyp;
            row.recalled_count += std::min(in_ref, in_hyp);
            row.matched_hyp_count += std::min(in_hyp, in_ref);
        }
        if (row.ref_count == 0 && row.hyp_count == 0) continue;  // excluded
        row.recall = row.ref_count ? double(row.recalled_count) / double(row.ref_count) : 0.0;
        row.precision =
            row.hyp_count ? double(row.matched_hyp_count) / double(row.hyp_count) : 0.0;
        double pr = row.precision + row.recall;
        row.f1 = pr > 0.0 ? 2.0 * row.precision * row.recall / pr : 0.0;
        rows.push_back(std::move(row));
    }
    return rows;
}

std::vector<bool> classify_r1(const std::vector<double>& base_recalls) {
    std::vector<bool> flags(base_recalls.size());
    for (size_t i = 0; i < base_recalls.size(); ++i) flags[i] = base_recalls[i] < 0.40;
    return flags;
}

EvalReport evaluate(const std::vector<std::vector<int>>& refs,
                    const std::vector<std::vector<int>>& hyps,
                    const HotwordList& hotwords, const Vocab& v,
                    const std::vector<std::vector<int>>* base_hyps) {
    EvalReport r;
    r.cer = corpus_cer(refs, hyps);
    r.rows = hotword_rpf(refs, hyps, hotwords, v);
    if (base_hyps) {
        auto base_rows = hotword_rpf(refs, *base_hyps, hotwords, v);
        for (auto& row : r.rows) {
            for (const auto& b : base_rows) {
                if (b.hotword == row.hotword && b.ref_count > 0) {
                    row.has_base = true;
                    row.base_recall = b.recall;
                    row.r1 = b.recall < 0.40;
                }
            }
            // Hotwords never recognized at all by the base model.
            if (!row.has_base && row.ref_count > 0) {
                row.has_base = true;
                row.base_recall = 0.0;
                row.r1 = true;
            }
        }
        r.has_r1 = true;
    }
    size_t n_rec = 0, n_prec = 0, n_r1 = 0;
    for (const auto& row : r.rows) {
        if (row.ref_count > 0) {
            r.avg_recall += row.recall;
            r.avg_f1 += row.f1;
            ++n_rec;
        }
        if (row.hyp_count > 0) {
            r.avg_precision += row.precision;
            ++n_prec;
        }
        if (r.has_r1 && row.r1 && row.ref_count > 0) {
            r.r1_recall += row.recall;
            r.r1_precision += row.precision;
            r.r1_f1 += row.f1;
            ++n_r1;
        }
    }
    if (n_rec) {
        r.avg_recall /= double(n_rec);
        r.avg_f1 /= double(n_rec);
    }
    if (n_prec) r.avg_precision /= double(n_prec);
    if (n_r1) {
        r.r1_recall /= double(n_r1);
        r.r1_precision /= double(n_r1);
        r.r1_f1 /= double(n_r1);
    }
    return r;
}

std::string format_report(const EvalReport& r) {
    std::ostringstream os;
    os.precision(6);
    os << "# SeACo evaluation report\n";
    os << "# precision = per-utterance min(hyp occurrences, ref occurrences) summed,\n";
    os << "#             divided by total hyp occurrences (full contiguous matches only)\n";
    os << "cer\t" << r.cer << "\n";
    os << "avg_recall\t" << r.avg_recall << "\n";
    os << "avg_precision\t" << r.avg_precision << "\n";
    os << "avg_f1\t" << r.avg_f1 << "\n";
    if (r.has_r1) {
        os << "r1_recall\t" << r.r1_recall << "\n";
        os << "r1_precision\t" << r.r1_precision << "\n";
        os << "r1_f1\t" << r.r1_f1 << "\n";
    }
    os << "# hotword\tref\trecalled\thyp\tmatched\trecall\tprecision\tf1\tr1\n";
    for (const auto& row : r.rows) {
        os << row.label << "\t" << row.ref_count << "\t" << row.recalled_count << "\t"
           << row.hyp_count << "\t" << row.matched_hyp_count << "\t" << row.recall << "\t"
           << row.precision << "\t" << row.f1 << "\t"
           << (r.has_r1 ? (row.r1 ? "1" : "0") : "-") << "\n";
    }
    return os.str();
}

}  // namespace seaco::eval
