#include <cstdint>
#include <fstream>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "seaco/backbone.hpp"
#include "seaco/bias.hpp"
#include "seaco/checkpoint.hpp"
#include "seaco/corpus.hpp"
#include "seaco/evaluation.hpp"
#include "seaco/hotword.hpp"
#include "seaco/inference.hpp"

using namespace seaco;

namespace {

std::string read_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot read " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + path);
    f << content;
}

struct DataDir {
    SyntheticSpec spec;
    Vocab vocab;
    Tensor prototypes;
};

DataDir load_data_dir(const std::string& dir) {
    DataDir d;
    d.spec = SyntheticSpec::from_json(read_file(dir + "/spec.json"));
    d.vocab = Vocab::load(dir + "/vocab.txt");
    d.prototypes = token_prototypes(d.spec, d.spec.hotword_phrases);
    return d;
}

struct LoadedModel {
    ParamStore ps;
    BackboneConfig bb_cfg;
    BiasConfig bias_cfg;
    bool has_bias = false;
};

LoadedModel load_model(const std::string& path) {
    auto loaded = load_checkpoint(path);
    LoadedModel m;
    m.bb_cfg = backbone_meta(loaded);
    m.has_bias = has_bias_stack(loaded);
    if (m.has_bias) m.bias_cfg = bias_meta(loaded, m.bb_cfg);
    m.ps = store_from_checkpoint(loaded);
    return m;
}

std::map<std::string, std::vector<int>> load_hyp_file(const std::string& path,
                                                      const Vocab& v) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot read hypothesis file " + path);
    std::map<std::string, std::vector<int>> out;
    std::string line;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        size_t tab = line.find('\t');
        std::string id = tab == std::string::npos ? line : line.substr(0, tab);
        std::vector<int> toks;
        if (tab != std::string::npos) {
            std::istringstream ts(line.substr(tab + 1));
            std::string tok;
            while (ts >> tok) toks.push_back(v.id(tok));
        }
        out[id] = std::move(toks);
    }
    return out;
}

std::string format_hyps(const Corpus& corpus,
                        const std::map<std::string, std::vector<int>>& hyps,
                        const Vocab& v) {
    std::ostringstream os;
    for (const auto& u : corpus.utts) {
        os << u.id << "\t";
        const auto& h = hyps.at(u.id);
        for (size_t i = 0; i < h.size(); ++i) {
            if (i) os << " ";
            os << v.token(h[i]);
        }
        os << "\n";
    }
    return os.str();
}

std::map<std::string, std::vector<int>> decode_corpus(const Corpus& corpus,
                                                      const DataDir& data,
                                                      const BackboneModel& backbone,
                                                      const BiasModel* bias,
                                                      const HotwordList& hotwords,
                                                      const MergeConfig& cfg) {
    std::map<std::string, std::vector<int>> out;
    for (const auto& u : corpus.utts) {
        Tensor feats = synthesize_features(u, data.prototypes, data.spec);
        out[u.id] = decode_contextual(feats, hotwords, backbone, bias, cfg, data.vocab).hyp;
    }
    return out;
}

HotwordList padded_with_distractors(const HotwordList& base, size_t target_size,
                                    const Corpus& refs, const SyntheticSpec& spec,
                                    std::mt19937_64& rng) {
    HotwordList out = base;
    std::uniform_int_distribution<size_t> len_dist(2, 4);
    std::uniform_int_distribution<int> tok_dist(int(Vocab::kReserved),
                                                int(spec.vocab_size) - 1);
    size_t guard = 0;
    while (out.size() - 1 < target_size) {
        if (++guard > 100000)
            throw std::runtime_error("could not generate enough distractor hotwords");
        std::vector<int> hw(len_dist(rng));
        for (int& t : hw) t = tok_dist(rng);
        bool in_refs = false;
        for (const auto& u : refs.utts)
            if (eval::count_occurrences(u.tokens, hw)) {
                in_refs = true;
                break;
            }
        if (!in_refs) out.add_unique(std::move(hw));
    }
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"SeACo contextual-biasing toolkit"};
    app.require_subcommand(1);

    // ---- gen-data ----
    auto* gen = app.add_subcommand("gen-data", "generate a synthetic corpus");
    std::string gen_out = "data";
    SyntheticSpec spec;
    std::string phrases_arg;
    gen->add_option("--out", gen_out, "output directory (must exist)");
    gen->add_option("--seed", spec.seed);
    gen->add_option("--vocab-size", spec.vocab_size);
    gen->add_option("--feature-dim", spec.feature_dim);
    gen->add_option("--noise-sigma", spec.noise_sigma);
    gen->add_option("--n-train", spec.n_train);
    gen->add_option("--n-dev", spec.n_dev);
    gen->add_option("--n-test", spec.n_test);
    gen->add_option("--rare-rate", spec.rare_rate);
    gen->add_option("--n-phrases", spec.n_auto_phrases);
    gen->add_option("--phrase-offset", spec.phrase_proto_offset,
                    "acoustic offset of phrase tokens from their confusers");
    gen->add_option("--phrases", phrases_arg,
                    "comma-separated phrases, tokens space-separated");

    // ---- train-asr ----
    auto* tasr = app.add_subcommand("train-asr", "train the backbone");
    std::string tasr_data = "data", tasr_out = "backbone.ckpt";
    BackboneConfig bb_cfg;
    TrainSchedule asr_sched;
    asr_sched.target_dev_cer = 0.02;
    tasr->add_option("--data", tasr_data);
    tasr->add_option("--out", tasr_out);
    tasr->add_option("--d-model", bb_cfg.d_model);
    tasr->add_option("--n-heads", bb_cfg.n_heads);
    tasr->add_option("--encoder-layers", bb_cfg.encoder_layers);
    tasr->add_option("--decoder-layers", bb_cfg.decoder_layers);
    tasr->add_option("--ffn-dim", bb_cfg.ffn_dim);
    tasr->add_option("--epochs", asr_sched.epochs);
    tasr->add_option("--batch-size", asr_sched.batch_size);
    tasr->add_option("--lr", asr_sched.lr);
    tasr->add_option("--seed", asr_sched.seed);
    tasr->add_option("--sampling-factor", asr_sched.sampling_factor);
    tasr->add_option("--target-dev-cer", asr_sched.target_dev_cer,
                     "early-stop threshold, negative disables");

    // ---- train-bias ----
    auto* tbias = app.add_subcommand("train-bias", "train the bias stack (frozen backbone)");
    std::string tbias_data = "data", tbias_backbone = "backbone.ckpt",
                tbias_out = "seaco.ckpt", tbias_variant = "default";
    BiasTrainSchedule bias_sched;
    SamplingConfig sampling;
    size_t bias_layers = 2, lstm_layers = 1;
    tbias->add_option("--data", tbias_data);
    tbias->add_option("--backbone", tbias_backbone);
    tbias->add_option("--out", tbias_out);
    tbias->add_option("--variant", tbias_variant, "default|a1|a2|a3");
    tbias->add_option("--bias-layers", bias_layers);
    tbias->add_option("--lstm-layers", lstm_layers);
    tbias->add_option("--epochs", bias_sched.epochs);
    tbias->add_option("--batch-size", bias_sched.batch_size);
    tbias->add_option("--lr", bias_sched.lr);
    tbias->add_option("--seed", bias_sched.seed);
    tbias->add_option("--hotword-weight", bias_sched.hotword_weight,
                      "extra loss weight on hotword positions, 0 disables");
    tbias->add_flag("--no-inject-phrases",
                    [&](size_t) { bias_sched.inject_phrases = false; },
                    "train only on sampled spans");
    tbias->add_option("--r-b", sampling.r_b);
    tbias->add_option("--r-u", sampling.r_u);
    tbias->add_option("--l-min", sampling.l_min);
    tbias->add_option("--l-max", sampling.l_max);

    // ---- decode ----
    auto* dec = app.add_subcommand("decode", "decode a corpus");
    std::string dec_data = "data", dec_model, dec_input, dec_out = "hyp.tsv",
                dec_hotwords;
    MergeConfig merge_cfg;
    bool no_asf = false;
    dec->add_option("--data", dec_data);
    dec->add_option("--model", dec_model)->required();
    dec->add_option("--input", dec_input)->required();
    dec->add_option("--out", dec_out);
    dec->add_option("--hotwords", dec_hotwords);
    dec->add_option("--lambda", merge_cfg.lambda);
    dec->add_option("--asf-k", merge_cfg.asf_k);
    dec->add_flag("--no-asf", no_asf);

    // ---- eval ----
    auto* ev = app.add_subcommand("eval", "score a hypothesis file");
    std::string ev_data = "data", ev_refs, ev_hyp, ev_hotwords, ev_base, ev_out = "report.txt";
    ev->add_option("--data", ev_data);
    ev->add_option("--refs", ev_refs)->required();
    ev->add_option("--hyp", ev_hyp)->required();
    ev->add_option("--hotwords", ev_hotwords);
    ev->add_option("--base-hyp", ev_base, "plain-backbone hypotheses for R1 flags");
    ev->add_option("--out", ev_out);

    // ---- filter-hotwords ----
    auto* fh = app.add_subcommand("filter-hotwords", "write the ASF-selected sublist");
    std::string fh_data = "data", fh_model, fh_input, fh_hotwords, fh_out = "filtered.txt",
                fh_utt;
    size_t fh_k = 50;
    fh->add_option("--data", fh_data);
    fh->add_option("--model", fh_model)->required();
    fh->add_option("--input", fh_input)->required();
    fh->add_option("--hotwords", fh_hotwords)->required();
    fh->add_option("--k", fh_k);
    fh->add_option("--utt", fh_utt, "restrict scoring to one utterance id");
    fh->add_option("--out", fh_out);

    // ---- dump-attention ----
    auto* da = app.add_subcommand("dump-attention", "write the attention matrix for one utterance");
    std::string da_data = "data", da_model, da_input, da_hotwords, da_out = "attention.tsv",
                da_utt;
    size_t da_k = 50;
    bool da_asf = false;
    da->add_option("--data", da_data);
    da->add_option("--model", da_model)->required();
    da->add_option("--input", da_input)->required();
    da->add_option("--hotwords", da_hotwords)->required();
    da->add_option("--utt", da_utt)->required();
    da->add_flag("--asf", da_asf, "apply ASF before the dumped pass");
    da->add_option("--asf-k", da_k);
    da->add_option("--out", da_out);

    // ---- sweep-hotword-count ----
    auto* sw = app.add_subcommand("sweep-hotword-count",
                                  "pad the list with distractors and sweep sizes");
    std::string sw_data = "data", sw_model, sw_refs, sw_hotwords, sw_out = "sweep.csv",
                sw_sizes;
    double sw_lambda = 1.0;
    uint64_t sw_seed = 7;
    size_t sw_k = 0;
    sw->add_option("--data", sw_data);
    sw->add_option("--model", sw_model)->required();
    sw->add_option("--refs", sw_refs)->required();
    sw->add_option("--hotwords", sw_hotwords)->required();
    sw->add_option("--sizes", sw_sizes, "comma-separated list sizes")->required();
    sw->add_option("--lambda", sw_lambda);
    sw->add_option("--asf-k", sw_k, "ASF k (default: original list size)");
    sw->add_option("--seed", sw_seed);
    sw->add_option("--out", sw_out);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*gen) {
            if (!phrases_arg.empty()) {
                Vocab v = Vocab::make_default(spec.vocab_size);
                std::istringstream ps(phrases_arg);
                std::string phrase;
                while (std::getline(ps, phrase, ',')) {
                    std::istringstream ts(phrase);
                    std::string tok;
                    std::vector<int> ids;
                    while (ts >> tok) ids.push_back(v.id(tok));
                    if (!ids.empty()) spec.hotword_phrases.push_back(ids);
                }
            }
            GeneratedData g = generate_corpus(spec);
            spec.hotword_phrases = g.phrases;  // make spec.json self-contained
            g.vocab.save(gen_out + "/vocab.txt");
            save_corpus(g.train, g.vocab, gen_out + "/train.tsv");
            save_corpus(g.dev, g.vocab, gen_out + "/dev.tsv");
            save_corpus(g.test, g.vocab, gen_out + "/test.tsv");
            HotwordList hl = HotwordList::default_only();
            for (const auto& p : g.phrases) hl.add_unique(p);
            save_hotword_list(hl, g.vocab, gen_out + "/hotwords.txt");
            write_file(gen_out + "/spec.json", spec.to_json());
            std::cerr << "[gen-data] wrote " << g.train.utts.size() << "/"
                      << g.dev.utts.size() << "/" << g.test.utts.size()
                      << " utterances to " << gen_out << "\n";
        } else if (*tasr) {
            DataDir data = load_data_dir(tasr_data);
            bb_cfg.vocab_size = data.vocab.size();
            bb_cfg.feature_dim = data.spec.feature_dim;
            Corpus train = load_corpus(tasr_data + "/train.tsv", data.vocab);
            Corpus dev = load_corpus(tasr_data + "/dev.tsv", data.vocab);
            ParamStore ps;
            std::mt19937_64 rng(asr_sched.seed);
            BackboneModel::init(ps, bb_cfg, rng);
            asr_sched.verbose = true;
            train_backbone(ps, bb_cfg, train, &dev, data.prototypes, data.spec, asr_sched);
            add_backbone_meta(ps, bb_cfg);
            save_checkpoint(ps, tasr_out);
            std::cerr << "[train-asr] saved " << tasr_out << "\n";
        } else if (*tbias) {
            DataDir data = load_data_dir(tbias_data);
            LoadedModel m = load_model(tbias_backbone);
            Corpus train = load_corpus(tbias_data + "/train.tsv", data.vocab);
            BiasConfig bias_cfg;
            bias_cfg.variant = variant_from_name(tbias_variant);
            bias_cfg.bias_decoder_layers = bias_layers;
            bias_cfg.lstm_layers = lstm_layers;
            bias_cfg.d_model = m.bb_cfg.d_model;
            bias_cfg.n_heads = m.bb_cfg.n_heads;
            bias_cfg.ffn_dim = m.bb_cfg.ffn_dim;
            bias_cfg.vocab_size = m.bb_cfg.vocab_size;
            std::mt19937_64 rng(bias_sched.seed);
            BiasModel::init(m.ps, bias_cfg, rng);
            bias_sched.verbose = true;
            train_bias(m.ps, m.bb_cfg, bias_cfg, train, data.prototypes, data.spec,
                       sampling, bias_sched);
            add_bias_meta(m.ps, bias_cfg);
            save_checkpoint(m.ps, tbias_out);
            std::cerr << "[train-bias] saved " << tbias_out << "\n";
        } else if (*dec) {
            DataDir data = load_data_dir(dec_data);
            LoadedModel m = load_model(dec_model);
            BackboneModel backbone(m.ps, m.bb_cfg);
            BiasModel bias(m.ps, m.bias_cfg);
            Corpus corpus = load_corpus(dec_input, data.vocab);
            HotwordList hws = dec_hotwords.empty()
                                  ? HotwordList::default_only()
                                  : load_hotword_list(dec_hotwords, data.vocab);
            merge_cfg.asf_enabled = !no_asf;
            auto hyps = decode_corpus(corpus, data, backbone,
                                      m.has_bias ? &bias : nullptr, hws, merge_cfg);
            write_file(dec_out, format_hyps(corpus, hyps, data.vocab));
            std::cerr << "[decode] wrote " << hyps.size() << " hypotheses to " << dec_out
                      << "\n";
        } else if (*ev) {
            DataDir data = load_data_dir(ev_data);
            Corpus refs = load_corpus(ev_refs, data.vocab);
            auto hyp_map = load_hyp_file(ev_hyp, data.vocab);
            HotwordList hws = ev_hotwords.empty()
                                  ? HotwordList::default_only()
                                  : load_hotword_list(ev_hotwords, data.vocab);
            std::vector<std::vector<int>> r, h, base;
            std::map<std::string, std::vector<int>> base_map;
            if (!ev_base.empty()) base_map = load_hyp_file(ev_base, data.vocab);
            for (const auto& u : refs.utts) {
                r.push_back(u.tokens);
                h.push_back(hyp_map.at(u.id));
                if (!ev_base.empty()) base.push_back(base_map.at(u.id));
            }
            eval::EvalReport rep =
                eval::evaluate(r, h, hws, data.vocab, ev_base.empty() ? nullptr : &base);
            write_file(ev_out, eval::format_report(rep));
            std::cerr << "[eval] cer " << rep.cer << " avg recall " << rep.avg_recall
                      << " -> " << ev_out << "\n";
        } else if (*fh) {
            DataDir data = load_data_dir(fh_data);
            LoadedModel m = load_model(fh_model);
            if (!m.has_bias) throw std::runtime_error("model has no bias stack");
            BackboneModel backbone(m.ps, m.bb_cfg);
            BiasModel bias(m.ps, m.bias_cfg);
            Corpus corpus = load_corpus(fh_input, data.vocab);
            HotwordList full = load_hotword_list(fh_hotwords, data.vocab);
            std::vector<double> agg(full.size(), 0.0);
            for (const auto& u : corpus.utts) {
                if (!fh_utt.empty() && u.id != fh_utt) continue;
                Tensor feats = synthesize_features(u, data.prototypes, data.spec);
                BackboneModel::InferOut base = backbone.infer(feats);
                if (base.fired == 0) continue;
                AsfResult r = asf_filter(base.D, base.E, bias, full, full.size());
                for (size_t j = 0; j < agg.size(); ++j) agg[j] += r.column_scores[j];
            }
            Tensor scores({1, full.size()});
            scores.data = agg;
            AsfResult sel = asf_select(scores, full, fh_k);
            std::ostringstream os;
            os.precision(6);
            for (size_t j : sel.kept) {
                if (j == 0) continue;
                os << hotword_label(full.entries[j], data.vocab) << "\t"
                   << sel.column_scores[j] << "\n";
            }
            write_file(fh_out, os.str());
            std::cerr << "[filter-hotwords] kept " << sel.kept.size() - 1 << " of "
                      << full.size() - 1 << "\n";
        } else if (*da) {
            DataDir data = load_data_dir(da_data);
            LoadedModel m = load_model(da_model);
            if (!m.has_bias) throw std::runtime_error("model has no bias stack");
            BackboneModel backbone(m.ps, m.bb_cfg);
            BiasModel bias(m.ps, m.bias_cfg);
            Corpus corpus = load_corpus(da_input, data.vocab);
            HotwordList hws = load_hotword_list(da_hotwords, data.vocab);
            const Utterance* utt = nullptr;
            for (const auto& u : corpus.utts)
                if (u.id == da_utt) utt = &u;
            if (!utt) throw std::runtime_error("utterance id not found: " + da_utt);
            MergeConfig cfg;
            cfg.asf_enabled = da_asf;
            cfg.asf_k = da_k;
            Tensor feats = synthesize_features(*utt, data.prototypes, data.spec);
            ContextualOut out = decode_contextual(feats, hws, backbone, &bias, cfg,
                                                  data.vocab);
            write_file(da_out, format_attention(out.attn));
            std::cerr << "[dump-attention] " << out.fired << " steps x "
                      << out.attn.hotword_labels.size() << " hotwords -> " << da_out
                      << "\n";
        } else if (*sw) {
            DataDir data = load_data_dir(sw_data);
            LoadedModel m = load_model(sw_model);
            if (!m.has_bias) throw std::runtime_error("model has no bias stack");
            BackboneModel backbone(m.ps, m.bb_cfg);
            BiasModel bias(m.ps, m.bias_cfg);
            Corpus refs = load_corpus(sw_refs, data.vocab);
            HotwordList base_list = load_hotword_list(sw_hotwords, data.vocab);
            size_t orig_n = base_list.size() - 1;
            size_t k = sw_k ? sw_k : orig_n;
            std::vector<size_t> sizes;
            std::istringstream ss(sw_sizes);
            std::string part;
            while (std::getline(ss, part, ',')) sizes.push_back(std::stoul(part));
            std::vector<std::vector<int>> r;
            for (const auto& u : refs.utts) r.push_back(u.tokens);
            std::mt19937_64 rng(sw_seed);
            std::ostringstream csv;
            csv << "size,cer_no_asf,recall_no_asf,cer_asf,recall_asf\n";
            for (size_t size : sizes) {
                if (size < orig_n)
                    throw std::runtime_error("sweep size below original list size");
                HotwordList padded =
                    padded_with_distractors(base_list, size, refs, data.spec, rng);
                for (int pass = 0; pass < 2; ++pass) {
                    MergeConfig cfg;
                    cfg.lambda = sw_lambda;
                    cfg.asf_enabled = pass == 1;
                    cfg.asf_k = k;
                    auto hyps = decode_corpus(refs, data, backbone, &bias, padded, cfg);
                    std::vector<std::vector<int>> h;
                    for (const auto& u : refs.utts) h.push_back(hyps.at(u.id));
                    eval::EvalReport rep = eval::evaluate(r, h, base_list, data.vocab);
                    if (pass == 0)
                        csv << size << "," << rep.cer << "," << rep.avg_recall << ",";
                    else
                        csv << rep.cer << "," << rep.avg_recall << "\n";
                }
                std::cerr << "[sweep] size " << size << " done\n";
            }
            write_file(sw_out, csv.str());
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
