// spm_cli: generate signed graphs, cluster edge-list files and run the
// experiment drivers. Exit codes: 0 ok, 1 numeric failure, 2 usage or input.

#include "spm/experiments.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <string>
#include <vector>

namespace {

using namespace spm;

struct ExperimentFlags {
    std::string config;
    std::string out;
    std::string summary;
    std::string embedding_out;
    std::vector<std::string> sets;
    std::vector<std::string> methods;
    std::string shift;
    std::string seed;
    std::string threads;
};

void add_experiment_flags(CLI::App* sub, ExperimentFlags& f, bool with_methods) {
    sub->add_option("--config", f.config, "key = value config file")->check(CLI::ExistingFile);
    sub->add_option("--out", f.out, "output CSV (default: stdout)");
    sub->add_option("--seed", f.seed, "base seed (overrides config)");
    sub->add_option("--threads", f.threads, "worker threads, 0 = all cores (overrides config)");
    sub->add_option("--set", f.sets, "override a config key, KEY=VALUE; repeatable");
    sub->add_option("--shift", f.shift, "power-mean shift: a positive number or 'auto'");
    if (with_methods) {
        sub->add_option("--method", f.methods, "method (pm:<p>[:mf], sn, bn, am, gm, bethe); repeatable");
        sub->add_option("--summary", f.summary, "also write per-cell mean errors to this CSV");
    }
}

Config build_config(const ExperimentFlags& f) {
    Config cfg = f.config.empty() ? Config{} : Config::load(f.config);
    for (const auto& kv : f.sets) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos || eq == 0) throw ParameterError("--set expects KEY=VALUE, got '" + kv + "'");
        cfg.set(detail::trim(kv.substr(0, eq)), detail::trim(kv.substr(eq + 1)));
    }
    if (!f.seed.empty()) cfg.set("seed", f.seed);
    if (!f.threads.empty()) cfg.set("threads", f.threads);
    if (!f.shift.empty()) cfg.set("shift", f.shift);
    if (!f.methods.empty()) {
        std::string joined;
        for (std::size_t i = 0; i < f.methods.size(); ++i) joined += (i ? "," : "") + f.methods[i];
        cfg.set("methods", joined);
    }
    return cfg;
}

void emit(const std::string& path, const Table& t, const Config& cfg) {
    if (path.empty() || path == "-") {
        write_csv(std::cout, t, &cfg);
    } else {
        write_csv_file(path, t, &cfg);
    }
}

void warn_resamples(const Table& t) {
    const double frac = resample_fraction(t);
    if (frac > 0.05)
        std::cerr << "warning: " << fmt(100 * frac) << "% of graph draws had an isolated vertex and were resampled\n";
}

std::optional<double> parse_shift(const std::string& s) {
    if (s.empty() || s == "auto") return std::nullopt;
    const double v = detail::parse_number("--shift", s);
    if (!(v > 0) || !std::isfinite(v)) throw ParameterError("--shift must be positive or 'auto'");
    return v;
}

int run(int argc, char** argv) {
    CLI::App app{"Signed power mean Laplacian clustering"};
    app.require_subcommand(1);

    // generate
    auto* gen = app.add_subcommand("generate", "sample a signed graph from a block model");
    std::string model = "ssbm", gen_out, truth_out;
    std::uint64_t gen_seed = 0;
    Index gen_k = 2, gen_cs = 100;
    SsbmParams sp;
    LsbmParams lp;
    CbmParams cp;
    gen->add_option("--model", model, "ssbm, lsbm or cbm")->check(CLI::IsMember({"ssbm", "lsbm", "cbm"}));
    gen->add_option("--k", gen_k, "number of clusters");
    gen->add_option("--cluster-size", gen_cs, "vertices per cluster");
    gen->add_option("--pin-pos", sp.pin_pos);
    gen->add_option("--pout-pos", sp.pout_pos);
    gen->add_option("--pin-neg", sp.pin_neg);
    gen->add_option("--pout-neg", sp.pout_neg);
    gen->add_option("--p-bar-in", lp.p_bar_in, "lsbm");
    gen->add_option("--p-bar-out", lp.p_bar_out, "lsbm");
    gen->add_option("--mu-pos", lp.mu_pos, "lsbm");
    gen->add_option("--nu-pos", lp.nu_pos, "lsbm");
    gen->add_option("--p-bar", cp.p_bar, "cbm");
    gen->add_option("--eta", cp.eta, "cbm");
    gen->add_option("--seed", gen_seed);
    gen->add_option("--out", gen_out, "edge-list file")->required();
    gen->add_option("--truth-out", truth_out, "ground-truth labels file");

    // cluster
    auto* clu = app.add_subcommand("cluster", "cluster a signed edge-list file");
    std::string input, method_text = "pm:-1", shift_text, labels_out, truth_in;
    Index clu_k = 2;
    ClusterFileOptions co;
    clu->add_option("graph", input, "signed edge-list file")->required()->check(CLI::ExistingFile);
    clu->add_option("--method", method_text, "pm:<p>[:mf], sn, bn, am, gm or bethe");
    clu->add_option("--k", clu_k, "number of clusters")->required();
    clu->add_option("--shift", shift_text, "power-mean shift: a positive number or 'auto'");
    clu->add_option("--seed", co.seed);
    clu->add_option("--restarts", co.restarts, "k-means restarts")->check(CLI::PositiveNumber);
    clu->add_flag("--drop-isolated", co.drop_isolated, "remove vertices isolated in either layer first");
    clu->add_flag("--row-normalize", co.row_normalize, "normalize embedding rows before k-means");
    clu->add_option("--out", labels_out, "labels file (default: stdout)");
    clu->add_option("--truth", truth_in, "ground-truth labels; prints the clustering error to stderr")->check(CLI::ExistingFile);

    // experiments
    struct Exp { const char* name; const char* help; bool methods; };
    const std::vector<Exp> exps{
        {"phase-diagram", "error over the layer-contrast grid", true},
        {"layer-sweep", "one layer fixed, the other swept; plus an embedding", true},
        {"cbm-sweep", "censored block model sweeps", true},
        {"concentration", "measured vs bounded deviation from the expected operator", false},
        {"regions", "proportion of parameter space with expected recovery", false},
        {"timing", "dense vs matrix-free eigensolver wall time", false},
    };
    std::map<std::string, ExperimentFlags> flags;
    std::map<std::string, CLI::App*> subs;
    for (const auto& e : exps) {
        auto* s = app.add_subcommand(e.name, e.help);
        add_experiment_flags(s, flags[e.name], e.methods);
        if (std::string(e.name) == "layer-sweep")
            s->add_option("--embedding-out", flags[e.name].embedding_out, "embedding CSV for the designated cell");
        subs[e.name] = s;
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    if (gen->parsed()) {
        SsbmParams params;
        if (model == "ssbm") {
            params = sp;
            params.k = gen_k;
            params.cluster_size = gen_cs;
        } else if (model == "lsbm") {
            lp.k = gen_k;
            lp.cluster_size = gen_cs;
            params = lsbm_to_ssbm(lp);
        } else {
            cp.k = gen_k;
            cp.cluster_size = gen_cs;
            params = cbm_to_ssbm(cp);
        }
        const auto s = sample(params, gen_seed);
        write_signed_edgelist_file(gen_out, s.graph);
        if (!truth_out.empty()) {
            std::ofstream f(truth_out);
            if (!f) throw ParameterError("cannot open '" + truth_out + "' for writing");
            f << "# model=" << model << "\n# seed=" << gen_seed << "\n";
            for (std::size_t v = 0; v < s.truth.size(); ++v) f << v << " " << s.truth[v] << "\n";
        }
        return 0;
    }

    if (clu->parsed()) {
        auto method = parse_method(method_text);
        if (const auto shift = parse_shift(shift_text)) {
            auto* pm = std::get_if<PowerMeanMethod>(&method);
            if (!pm) throw ParameterError("--shift applies only to pm:<p> methods");
            pm->shift = *shift;
        }
        const auto r = cluster_file(input, method, clu_k, co);
        if (labels_out.empty() || labels_out == "-") {
            write_labels(std::cout, r, method, clu_k, co);
        } else {
            std::ofstream f(labels_out);
            if (!f) throw ParameterError("cannot open '" + labels_out + "' for writing");
            write_labels(f, r, method, clu_k, co);
        }
        if (!truth_in.empty()) {
            std::ifstream f(truth_in);
            std::map<Index, int> truth;
            for (auto [v, c] : read_labels(f)) truth[v] = c;
            Labels t;
            for (Index v : r.vertices) {
                const auto it = truth.find(v);
                if (it == truth.end()) throw ParameterError("truth file has no label for vertex " + std::to_string(v));
                t.push_back(it->second);
            }
            std::cerr << "clustering_error=" << fmt(clustering_error(r.labels, t)) << "\n";
        }
        return 0;
    }

    for (const auto& e : exps) {
        if (!subs[e.name]->parsed()) continue;
        const auto& f = flags[e.name];
        Config cfg = build_config(f);
        const std::string name = e.name;
        if (name == "phase-diagram" || name == "cbm-sweep") {
            const Table t = name == "phase-diagram" ? phase_diagram(cfg) : cbm_sweep(cfg);
            emit(f.out, t, cfg);
            warn_resamples(t);
            if (!f.summary.empty()) {
                const auto keys = name == "phase-diagram"
                                      ? std::vector<std::string>{"ix", "iy", "diff_pos", "diff_neg", "method", "expected_recovered"}
                                      : std::vector<std::string>{"sweep", "eta", "p_bar", "method"};
                write_csv_file(f.summary, mean_table(t, keys, "error"), &cfg);
            }
        } else if (name == "layer-sweep") {
            const auto r = layer_sweep(cfg);
            emit(f.out, r.sweep, cfg);
            warn_resamples(r.sweep);
            if (!f.summary.empty())
                write_csv_file(f.summary, mean_table(r.sweep, {"sweep_layer", "point", "diff", "method", "expected_recovered"}, "error"), &cfg);
            if (!f.embedding_out.empty()) write_csv_file(f.embedding_out, r.embedding, &cfg);
        } else if (name == "concentration") {
            emit(f.out, concentration_experiment(cfg), cfg);
        } else if (name == "regions") {
            emit(f.out, regions_report(cfg), cfg);
        } else if (name == "timing") {
            emit(f.out, timing_benchmark(cfg), cfg);
        }
        return 0;
    }
    return 2;
}

} // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const spm::ParameterError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const spm::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
