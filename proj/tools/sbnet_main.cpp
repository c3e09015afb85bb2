// sbnet command-line harness: synthetic corpus generation, training,
// verification/matching evaluation, gradient checking, and run comparison
// tables.

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "sbnet/checkpoint.hpp"
#include "sbnet/error.hpp"
#include "sbnet/eval.hpp"
#include "sbnet/gradcheck.hpp"
#include "sbnet/train.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace sbnet;

namespace {

constexpr const char* kCodeVersion = "sbnet 1.0.0";

void reject_unknown_keys(const json& j, std::initializer_list<const char*> allowed,
                         const std::string& where) {
    for (const auto& [key, value] : j.items()) {
        bool ok = false;
        for (const char* a : allowed)
            if (key == a) ok = true;
        if (!ok) throw ConfigError("unknown config key '" + key + "' in " + where);
    }
}

struct RunConfig {
    std::string corpus;
    TrainConfig train;
    std::string out_dir = "run";

    json to_json() const {
        return json{
            {"corpus", corpus},
            {"variant", variant_name(train.variant)},
            {"dims", {{"h", train.hidden}, {"d", train.embed_dim}}},
            {"loss",
             {{"loss", loss_kind_name(train.loss.kind)},
              {"alpha", train.loss.alpha},
              {"alpha_c", train.loss.alpha_c},
              {"alpha_g", train.loss.alpha_g},
              {"center_lr", train.loss.center_lr},
              {"pair_reduction",
               train.loss.pair_reduction == PairReduction::Mean ? "mean" : "sum"}}},
            {"optim",
             {{"lr0", train.sched.lr0},
              {"gamma", train.sched.gamma},
              {"beta1", train.beta1},
              {"beta2", train.beta2},
              {"eps_adam", train.eps_adam},
              {"epochs", train.epochs},
              {"batch_size", train.batch_size}}},
            {"strategy", train.strategy.name()},
            {"split",
             {{"train", train.train_frac},
              {"val", train.val_frac},
              {"test", train.test_frac}}},
            {"seed", train.seed},
            {"out", out_dir}};
    }
};

RunConfig parse_run_config(const json& j) {
    reject_unknown_keys(j, {"corpus", "variant", "dims", "loss", "optim", "strategy",
                            "split", "seed", "out"},
                        "run config");
    RunConfig cfg;
    if (j.contains("corpus")) cfg.corpus = j.at("corpus").get<std::string>();
    if (j.contains("variant"))
        cfg.train.variant = parse_variant(j.at("variant").get<std::string>());
    if (j.contains("dims")) {
        const json& d = j.at("dims");
        reject_unknown_keys(d, {"h", "d"}, "dims");
        if (d.contains("h")) cfg.train.hidden = d.at("h").get<std::size_t>();
        if (d.contains("d")) cfg.train.embed_dim = d.at("d").get<std::size_t>();
    }
    if (j.contains("loss")) {
        const json& l = j.at("loss");
        reject_unknown_keys(
            l, {"loss", "alpha", "alpha_c", "alpha_g", "center_lr", "pair_reduction"},
            "loss");
        if (l.contains("loss"))
            cfg.train.loss.kind = parse_loss_kind(l.at("loss").get<std::string>());
        if (l.contains("alpha")) cfg.train.loss.alpha = l.at("alpha").get<double>();
        if (l.contains("alpha_c"))
            cfg.train.loss.alpha_c = l.at("alpha_c").get<double>();
        if (l.contains("alpha_g"))
            cfg.train.loss.alpha_g = l.at("alpha_g").get<double>();
        if (l.contains("center_lr"))
            cfg.train.loss.center_lr = l.at("center_lr").get<double>();
        if (l.contains("pair_reduction")) {
            const auto pr = l.at("pair_reduction").get<std::string>();
            if (pr == "mean")
                cfg.train.loss.pair_reduction = PairReduction::Mean;
            else if (pr == "sum")
                cfg.train.loss.pair_reduction = PairReduction::Sum;
            else
                throw ConfigError("pair_reduction must be mean|sum");
        }
    }
    if (j.contains("optim")) {
        const json& o = j.at("optim");
        reject_unknown_keys(
            o, {"lr0", "gamma", "beta1", "beta2", "eps_adam", "epochs", "batch_size"},
            "optim");
        if (o.contains("lr0")) cfg.train.sched.lr0 = o.at("lr0").get<double>();
        if (o.contains("gamma")) cfg.train.sched.gamma = o.at("gamma").get<double>();
        if (o.contains("beta1")) cfg.train.beta1 = o.at("beta1").get<double>();
        if (o.contains("beta2")) cfg.train.beta2 = o.at("beta2").get<double>();
        if (o.contains("eps_adam")) cfg.train.eps_adam = o.at("eps_adam").get<double>();
        if (o.contains("epochs")) cfg.train.epochs = o.at("epochs").get<std::size_t>();
        if (o.contains("batch_size"))
            cfg.train.batch_size = o.at("batch_size").get<std::size_t>();
    }
    if (j.contains("strategy"))
        cfg.train.strategy = Strategy::parse(j.at("strategy").get<std::string>());
    if (j.contains("split")) {
        const json& s = j.at("split");
        reject_unknown_keys(s, {"train", "val", "test"}, "split");
        cfg.train.train_frac = s.value("train", cfg.train.train_frac);
        cfg.train.val_frac = s.value("val", cfg.train.val_frac);
        cfg.train.test_frac = s.value("test", cfg.train.test_frac);
    }
    if (j.contains("seed")) cfg.train.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("out")) cfg.out_dir = j.at("out").get<std::string>();

    if (cfg.train.sched.lr0 <= 0.0) throw ConfigError("lr0 must be > 0");
    if (cfg.train.sched.gamma <= 0.0 || cfg.train.sched.gamma > 1.0)
        throw ConfigError("gamma must be in (0, 1]");
    return cfg;
}

std::string resolve_corpus_path(const std::string& path) {
    if (path.empty()) throw ConfigError("no corpus path given");
    if (fs::exists(path)) return path;
    if (const char* root = std::getenv("SBNET_DATA_ROOT")) {
        const fs::path joined = fs::path(root) / path;
        if (fs::exists(joined)) return joined.string();
    }
    return path;  // let the loader report the error
}

void write_atomic(const fs::path& path, const std::string& content) {
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::trunc);
        if (!out) throw DataError("cannot write " + path.string());
        out << content;
    }
    fs::rename(tmp, path);
}

json report_to_json(const VerificationReport& r) {
    return json{{"eer", r.eer},
                {"auc", r.auc},
                {"n_trials", r.n_trials},
                {"stratification", r.stratification}};
}

// Default verification triple (cross-modal random + both unimodal rows),
// embedded in the manifest so report merging works off manifests alone.
json default_reports(const TrainedModel& model, const Corpus& corpus,
                     std::size_t n_trials) {
    const Matrix embedded = model.variant == Variant::Single
                                ? embed_corpus(model.single, corpus)
                                : embed_corpus(model.two, corpus);
    json out;
    const struct {
        const char* key;
        Modality probe, cand;
    } rows[] = {{"face_voice", Modality::Face, Modality::Voice},
                {"voice_only", Modality::Voice, Modality::Voice},
                {"face_only", Modality::Face, Modality::Face}};
    for (const auto& row : rows) {
        Rng trial_rng(model.seed ^ 0x5eedbeefULL);
        auto trials =
            make_verification_trials(corpus, model.split.test, n_trials,
                                     Stratify::Random, row.probe, row.cand, trial_rng);
        score_trials(trials, embedded);
        out[row.key] = report_to_json(verification_metrics(trials));
    }
    return out;
}

int cmd_gen_synth(const SynthConfig& synth, const std::string& out_path) {
    const Corpus corpus = gen_synthetic(synth);
    save_corpus(out_path, corpus);
    std::cout << "wrote " << corpus.records.size() << " records (d_in="
              << corpus.d_in << ") to " << out_path << "\n";
    return 0;
}

int cmd_train(RunConfig cfg, const std::string& init_checkpoint) {
    const auto t0 = std::chrono::steady_clock::now();
    const Corpus corpus = load_corpus(resolve_corpus_path(cfg.corpus));

    TrainedModel model;
    if (!init_checkpoint.empty()) {
        const TrainedModel warm = load_checkpoint(init_checkpoint);
        model = train_model(corpus, cfg.train, &warm);
    } else {
        model = train_model(corpus, cfg.train);
    }

    fs::create_directories(cfg.out_dir);
    save_checkpoint((fs::path(cfg.out_dir) / "checkpoint.json").string(), model);

    json manifest;
    manifest["config"] = cfg.to_json();
    manifest["code_version"] = kCodeVersion;
    manifest["seed"] = cfg.train.seed;
    manifest["epoch_mean_loss"] = model.epoch_mean_loss;
    manifest["reports"] = default_reports(model, corpus, 10000);
    const auto t1 = std::chrono::steady_clock::now();
    manifest["wall_clock_sec"] =
        std::chrono::duration<double>(t1 - t0).count();
    write_atomic(fs::path(cfg.out_dir) / "manifest.json", manifest.dump(2) + "\n");

    std::cout << "run complete: " << cfg.out_dir << "\n";
    if (!model.epoch_mean_loss.empty())
        std::cout << "  first/last epoch mean loss: " << model.epoch_mean_loss.front()
                  << " / " << model.epoch_mean_loss.back() << "\n";
    return 0;
}

int cmd_eval_verification(const std::string& checkpoint_path,
                          const std::string& corpus_path, const std::string& out_dir,
                          std::size_t n_trials, const std::vector<std::string>& strata,
                          std::uint64_t trial_seed) {
    const TrainedModel model = load_checkpoint(checkpoint_path);
    const Corpus corpus = load_corpus(resolve_corpus_path(corpus_path));
    const Matrix embedded = model.variant == Variant::Single
                                ? embed_corpus(model.single, corpus)
                                : embed_corpus(model.two, corpus);

    json out;
    out["loss"] = loss_kind_name(model.loss_kind);
    out["variant"] = variant_name(model.variant);

    for (const auto& name : strata) {
        const Stratify s = parse_stratify(name);
        Rng rng(trial_seed);
        auto trials = make_verification_trials(corpus, model.split.test, n_trials, s,
                                               Modality::Face, Modality::Voice, rng);
        score_trials(trials, embedded);
        out["cross_modal"][name] = report_to_json(verification_metrics(trials, s));
    }
    for (Modality m : {Modality::Voice, Modality::Face}) {
        Rng rng(trial_seed);
        auto trials = make_verification_trials(corpus, model.split.test, n_trials,
                                               Stratify::Random, m, m, rng);
        score_trials(trials, embedded);
        out[modality_name(m) + "_only"] = report_to_json(verification_metrics(trials));
    }

    fs::create_directories(out_dir);
    write_atomic(fs::path(out_dir) / "verification.json", out.dump(2) + "\n");

    // Table-2-shaped CSV: one row, AUC per stratum.
    std::string csv = "loss,variant";
    for (const auto& name : strata) csv += "," + name + "_auc";
    csv += "\n" + loss_kind_name(model.loss_kind) + "," + variant_name(model.variant);
    for (const auto& name : strata) {
        char buf[32];
        std::snprintf(buf, sizeof buf, ",%.4f",
                      out["cross_modal"][name]["auc"].get<double>());
        csv += buf;
    }
    csv += "\n";
    write_atomic(fs::path(out_dir) / "verification.csv", csv);

    for (const auto& [key, rep] : out.items()) {
        if (!rep.is_object() || !rep.contains("eer")) continue;
        std::cout << key << ": eer=" << rep["eer"].get<double>()
                  << " auc=" << rep["auc"].get<double>() << "\n";
    }
    if (out.contains("cross_modal"))
        for (const auto& [name, rep] : out["cross_modal"].items())
            std::cout << "cross_modal/" << name << ": eer=" << rep["eer"].get<double>()
                      << " auc=" << rep["auc"].get<double>() << "\n";
    return 0;
}

int cmd_eval_matching(const std::string& checkpoint_path,
                      const std::string& corpus_path, const std::string& out_dir,
                      const std::vector<std::size_t>& gallery_sizes,
                      std::size_t n_trials, const std::string& probe_modality,
                      std::uint64_t trial_seed) {
    const TrainedModel model = load_checkpoint(checkpoint_path);
    const Corpus corpus = load_corpus(resolve_corpus_path(corpus_path));
    const Matrix embedded = model.variant == Variant::Single
                                ? embed_corpus(model.single, corpus)
                                : embed_corpus(model.two, corpus);

    Rng rng(trial_seed);
    const MatchingReport report =
        matching_task(corpus, embedded, model.split.test,
                      parse_modality(probe_modality), gallery_sizes, n_trials, rng);

    fs::create_directories(out_dir);
    std::string csv = "n_c,accuracy,n_trials,ties\n";
    json jout = json::array();
    for (const auto& p : report.points) {
        char buf[96];
        std::snprintf(buf, sizeof buf, "%zu,%.6f,%zu,%zu\n", p.gallery_size,
                      p.accuracy, p.n_trials, p.ties);
        csv += buf;
        jout.push_back({{"n_c", p.gallery_size},
                        {"accuracy", p.accuracy},
                        {"n_trials", p.n_trials},
                        {"ties", p.ties}});
        std::cout << "1:" << p.gallery_size << " accuracy=" << p.accuracy << "\n";
    }
    write_atomic(fs::path(out_dir) / "matching.csv", csv);
    write_atomic(fs::path(out_dir) / "matching.json", jout.dump(2) + "\n");
    return 0;
}

int cmd_gradcheck(std::uint64_t seed, bool inject_fault) {
    const auto results = run_gradient_checks(seed, inject_fault);
    bool all_ok = true;
    for (const auto& r : results) {
        std::printf("%-20s max_rel_err=%-12.3e %s\n", r.name.c_str(), r.max_rel_err,
                    r.passed ? "PASS" : "FAIL");
        all_ok = all_ok && r.passed;
    }
    return all_ok ? 0 : 1;
}

json load_manifest(const std::string& run_dir) {
    const fs::path p = fs::path(run_dir) / "manifest.json";
    std::ifstream in(p);
    if (!in) throw DataError("cannot open manifest " + p.string());
    json j;
    in >> j;
    return j;
}

int cmd_report(const std::vector<std::string>& run_dirs, const std::string& by,
               const std::string& out_path) {
    if (run_dirs.empty()) throw ConfigError("report: need at least one run directory");
    std::vector<json> manifests;
    for (const auto& dir : run_dirs) manifests.push_back(load_manifest(dir));

    auto fv = [](const json& m, const char* field) {
        return m.at("reports").at("face_voice").at(field).get<double>();
    };

    std::string csv, text;
    if (by == "loss") {
        // Table-1 shape: paradigm rows x (variant, loss) metric columns.
        csv = "loss,paradigm,single_eer,single_auc,two_eer,two_auc\n";
        for (const char* loss : {"fop", "center", "git"}) {
            for (const char* paradigm : {"face_voice", "voice_only", "face_only"}) {
                std::string row = std::string(loss) + "," + paradigm;
                bool any = false;
                for (const char* variant : {"single", "two"}) {
                    const json* found = nullptr;
                    for (const auto& m : manifests) {
                        const auto& c = m.at("config");
                        if (c.at("loss").at("loss") == loss && c.at("variant") == variant)
                            found = &m;
                    }
                    if (found && found->at("reports").contains(paradigm)) {
                        const auto& rep = found->at("reports").at(paradigm);
                        char buf[48];
                        std::snprintf(buf, sizeof buf, ",%.4f,%.4f",
                                      rep.at("eer").get<double>(),
                                      rep.at("auc").get<double>());
                        row += buf;
                        any = true;
                    } else {
                        row += ",-,-";
                    }
                }
                if (any) csv += row + "\n";
            }
        }
        text = "verification comparison (rows: loss x paradigm)\n" + csv;
    } else if (by == "strategy") {
        // Table-5 shape, fixed row order.
        csv = "strategy,eer,auc\n";
        for (const char* strat : {"hefhev", "hevhef", "random", "vfvf", "fvfv"}) {
            for (const auto& m : manifests) {
                if (m.at("config").at("strategy") != strat) continue;
                char buf[64];
                std::snprintf(buf, sizeof buf, "%s,%.4f,%.4f\n", strat,
                              fv(m, "eer"), fv(m, "auc"));
                csv += buf;
            }
        }
        text = "input-order strategy sweep\n" + csv;
    } else if (by == "block") {
        // Table-6 shape: rows are block lengths k.
        csv = "block_epochs,eer,auc,voice_only_auc\n";
        for (const auto& m : manifests) {
            const std::string strat = m.at("config").at("strategy");
            if (strat.rfind("block:", 0) != 0) continue;
            const auto k = strat.substr(strat.rfind(':') + 1);
            char buf[96];
            std::snprintf(
                buf, sizeof buf, "%s,%.4f,%.4f,%.4f\n", k.c_str(), fv(m, "eer"),
                fv(m, "auc"),
                m.at("reports").at("voice_only").at("auc").get<double>());
            csv += buf;
        }
        text = "single-modality block sweep\n" + csv;
    } else {
        throw ConfigError("report: --by must be loss|strategy|block");
    }

    std::cout << text;
    if (!out_path.empty()) write_atomic(out_path, csv);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"single-branch vs two-branch multimodal embedding experiments"};
    app.require_subcommand(1);

    // gen-synth
    auto* gen = app.add_subcommand("gen-synth", "generate a synthetic corpus");
    SynthConfig synth;
    std::string gen_out = "corpus.jsonl";
    gen->add_option("--out", gen_out, "output corpus path (.jsonl or .bin)");
    gen->add_option("--n-identities", synth.n_identities);
    gen->add_option("--samples", synth.samples_per_identity_per_modality);
    gen->add_option("--latent-dim", synth.latent_dim);
    gen->add_option("--d-in", synth.d_in);
    gen->add_option("--noise-std", synth.noise_std);
    gen->add_option("--seed", synth.seed);
    gen->add_flag("--shared-projection", synth.shared_projection);

    // train
    auto* train = app.add_subcommand("train", "train a model, write checkpoint+manifest");
    std::string config_path, t_corpus, t_out, t_strategy, t_loss, init_checkpoint;
    std::uint64_t t_seed = 0;
    bool t_seed_set = false;
    long t_epochs = -1;
    double t_lr0 = -1.0;
    train->add_option("--config", config_path, "run config JSON");
    train->add_option("--corpus", t_corpus);
    train->add_option("--out", t_out, "output run directory");
    train->add_option("--strategy", t_strategy);
    train->add_option("--loss", t_loss);
    train->add_option("--epochs", t_epochs);
    train->add_option("--lr0", t_lr0);
    std::string t_variant;
    train->add_option("--model-variant", t_variant, "single|two");
    train->add_option("--init-checkpoint", init_checkpoint,
                      "continue training from this checkpoint");
    train->add_option("--seed", t_seed)->each([&](const std::string&) { t_seed_set = true; });

    // eval-verification
    auto* everif = app.add_subcommand("eval-verification", "EER/AUC reports");
    std::string ev_ckpt, ev_corpus, ev_out = "eval";
    std::size_t ev_trials = 10000;
    std::string ev_strata = "random";
    std::uint64_t ev_seed = 1234;
    everif->add_option("--checkpoint", ev_ckpt)->required();
    everif->add_option("--corpus", ev_corpus)->required();
    everif->add_option("--out", ev_out);
    everif->add_option("--n-trials", ev_trials);
    everif->add_option("--strata", ev_strata, "comma list of random,g,n,a,gna");
    everif->add_option("--trial-seed", ev_seed);

    // eval-matching
    auto* ematch = app.add_subcommand("eval-matching", "1:n matching curves");
    std::string em_ckpt, em_corpus, em_out = "eval", em_probe = "face";
    std::string em_sizes = "2,4,6,8,10";
    std::size_t em_trials = 10000;
    std::uint64_t em_seed = 1234;
    ematch->add_option("--checkpoint", em_ckpt)->required();
    ematch->add_option("--corpus", em_corpus)->required();
    ematch->add_option("--out", em_out);
    ematch->add_option("--gallery-sizes", em_sizes);
    ematch->add_option("--n-trials", em_trials);
    ematch->add_option("--probe-modality", em_probe);
    ematch->add_option("--trial-seed", em_seed);

    // gradcheck
    auto* gcheck = app.add_subcommand("gradcheck", "analytic vs finite-difference");
    std::uint64_t gc_seed = 42;
    bool gc_fault = false;
    gcheck->add_option("--seed", gc_seed);
    gcheck->add_flag("--inject-fault", gc_fault)->group("");  // test fixture

    // report
    auto* report = app.add_subcommand("report", "merge run manifests into tables");
    std::vector<std::string> rp_dirs;
    std::string rp_by = "loss", rp_out;
    report->add_option("dirs", rp_dirs, "run directories")->required();
    report->add_option("--by", rp_by, "loss|strategy|block");
    report->add_option("--out", rp_out, "also write CSV here");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*gen) return cmd_gen_synth(synth, gen_out);
        if (*train) {
            json j = json::object();
            if (!config_path.empty()) {
                std::ifstream in(config_path);
                if (!in) throw DataError("cannot open config " + config_path);
                in >> j;
            }
            RunConfig cfg = parse_run_config(j);
            if (!t_corpus.empty()) cfg.corpus = t_corpus;
            if (!t_out.empty()) cfg.out_dir = t_out;
            if (!t_strategy.empty()) cfg.train.strategy = Strategy::parse(t_strategy);
            if (!t_loss.empty()) cfg.train.loss.kind = parse_loss_kind(t_loss);
            if (!t_variant.empty()) cfg.train.variant = parse_variant(t_variant);
            if (t_epochs >= 0) cfg.train.epochs = std::size_t(t_epochs);
            if (t_lr0 > 0.0) cfg.train.sched.lr0 = t_lr0;
            if (t_seed_set) cfg.train.seed = t_seed;
            return cmd_train(cfg, init_checkpoint);
        }
        if (*everif) {
            std::vector<std::string> strata;
            for (std::size_t pos = 0; pos <= ev_strata.size();) {
                const auto comma = ev_strata.find(',', pos);
                strata.push_back(ev_strata.substr(
                    pos, comma == std::string::npos ? std::string::npos : comma - pos));
                if (comma == std::string::npos) break;
                pos = comma + 1;
            }
            return cmd_eval_verification(ev_ckpt, ev_corpus, ev_out, ev_trials, strata,
                                         ev_seed);
        }
        if (*ematch) {
            std::vector<std::size_t> sizes;
            for (std::size_t pos = 0; pos <= em_sizes.size();) {
                const auto comma = em_sizes.find(',', pos);
                sizes.push_back(std::stoul(em_sizes.substr(pos, comma - pos)));
                if (comma == std::string::npos) break;
                pos = comma + 1;
            }
            return cmd_eval_matching(em_ckpt, em_corpus, em_out, sizes, em_trials,
                                     em_probe, em_seed);
        }
        if (*gcheck) return cmd_gradcheck(gc_seed, gc_fault);
        if (*report) return cmd_report(rp_dirs, rp_by, rp_out);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 3;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 2;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
