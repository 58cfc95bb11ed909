#pragma once

// Experiment drivers behind the command-line tool. Each driver reads a flat
// key=value Config (missing keys are filled with defaults and echoed back),
// fans independent (cell, seed) units out to a worker pool and returns a
// Table whose rows are ordered by unit, so output does not depend on
// scheduling. Only the trailing wall_ms column varies between reruns.

#include "spm/baselines.hpp"
#include "spm/clustering.hpp"
#include "spm/errors.hpp"
#include "spm/power_mean.hpp"
#include "spm/rng.hpp"
#include "spm/signed_graph.hpp"
#include "spm/ssbm.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <exception>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

namespace spm {

// ---------------------------------------------------------------------------
// Formatting

inline std::string fmt(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    return detail::format_double(v);
}
inline std::string fmt(long v) { return std::to_string(v); }
inline std::string fmt(int v) { return std::to_string(v); }
inline std::string fmt(unsigned long v) { return std::to_string(v); }
inline std::string fmt(unsigned long long v) { return std::to_string(v); }
inline std::string fmt(long long v) { return std::to_string(v); }
inline std::string fmt(bool v) { return v ? "1" : "0"; }
inline std::string fmt(const std::optional<double>& v) { return v ? fmt(*v) : "na"; }

namespace detail {

inline std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

inline std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == ',' || c == ';') {
            out.push_back(trim(cur));
            cur.clear();
        } else if (c != '[' && c != ']' && c != '"' && c != '\'') {
            cur += c;
        }
    }
    if (!trim(cur).empty() || !out.empty()) out.push_back(trim(cur));
    out.erase(std::remove(out.begin(), out.end(), std::string()), out.end());
    return out;
}

inline double parse_number(const std::string& key, const std::string& text) {
    const std::string t = trim(text);
    double v = 0;
    const char* b = t.data();
    const char* e = t.data() + t.size();
    if (!t.empty() && *b == '+') ++b;
    auto [ptr, ec] = std::from_chars(b, e, v);
    if (t.empty() || ec != std::errc() || ptr != e)
        throw ParameterError("config key '" + key + "': '" + text + "' is not a number");
    return v;
}

} // namespace detail

// ---------------------------------------------------------------------------
// Config

/// Flat key=value configuration. Typed getters insert the default for a
/// missing key, so entries() is the effective configuration after a run.
class Config {
public:
    /// Parses INI/TOML-style `key = value` lines; `[section]` prefixes keys
    /// with `section.`.
    static Config parse(std::istream& in) {
        Config c;
        std::vector<CLI::ConfigItem> items;
        try {
            items = CLI::ConfigTOML().from_config(in);
        } catch (const CLI::ParseError& e) {
            throw ParameterError(std::string("config: ") + e.what());
        }
        for (const auto& it : items) {
            if (it.name == "++" || it.name == "--") continue;
            std::string value;
            for (std::size_t i = 0; i < it.inputs.size(); ++i) value += (i ? "," : "") + it.inputs[i];
            c.values_[it.fullname()] = value;
        }
        return c;
    }

    static Config load(const std::string& path) {
        std::ifstream f(path);
        if (!f) throw ParameterError("cannot open config file '" + path + "'");
        return parse(f);
    }

    void set(const std::string& key, const std::string& value) { values_[key] = value; }
    bool has(const std::string& key) const { return values_.count(key) > 0; }
    const std::map<std::string, std::string>& entries() const { return values_; }

    std::string str(const std::string& key, const std::string& def) { return values_.try_emplace(key, def).first->second; }

    double num(const std::string& key, double def) {
        auto it = values_.find(key);
        if (it == values_.end()) {
            values_[key] = fmt(def);
            return def;
        }
        return detail::parse_number(key, it->second);
    }

    long integer(const std::string& key, long def) {
        const double v = num(key, static_cast<double>(def));
        if (std::floor(v) != v || std::abs(v) > 9e15) throw ParameterError("config key '" + key + "' must be an integer");
        return static_cast<long>(v);
    }

    std::uint64_t seed(const std::string& key, std::uint64_t def) {
        auto it = values_.find(key);
        if (it == values_.end()) {
            values_[key] = std::to_string(def);
            return def;
        }
        std::uint64_t v = 0;
        const auto& s = it->second;
        auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec != std::errc() || ptr != s.data() + s.size()) throw ParameterError("config key '" + key + "' must be a nonnegative integer");
        return v;
    }

    std::vector<double> nums(const std::string& key, const std::vector<double>& def) {
        auto it = values_.find(key);
        if (it == values_.end()) {
            std::string joined;
            for (std::size_t i = 0; i < def.size(); ++i) joined += (i ? "," : "") + fmt(def[i]);
            values_[key] = joined;
            return def;
        }
        std::vector<double> out;
        for (const auto& s : detail::split_list(it->second)) out.push_back(detail::parse_number(key, s));
        if (out.empty()) throw ParameterError("config key '" + key + "' must list at least one value");
        return out;
    }

    std::vector<std::string> strs(const std::string& key, const std::string& def) {
        auto out = detail::split_list(str(key, def));
        if (out.empty()) throw ParameterError("config key '" + key + "' must list at least one value");
        return out;
    }

    void write_header(std::ostream& os) const {
        for (const auto& [k, v] : values_) os << "# " << k << "=" << v << "\n";
    }

private:
    std::map<std::string, std::string> values_;
};

// ---------------------------------------------------------------------------
// Tables

struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;

    Index column_index(const std::string& name) const {
        for (std::size_t i = 0; i < columns.size(); ++i)
            if (columns[i] == name) return static_cast<Index>(i);
        throw ParameterError("table has no column '" + name + "'");
    }
    std::vector<std::string> column(const std::string& name) const {
        const auto c = static_cast<std::size_t>(column_index(name));
        std::vector<std::string> out;
        for (const auto& r : rows) out.push_back(r[c]);
        return out;
    }
    std::vector<double> numeric(const std::string& name) const {
        std::vector<double> out;
        for (const auto& s : column(name)) out.push_back(s == "na" ? std::nan("") : detail::parse_number(name, s));
        return out;
    }
};

/// Writes `# key=value` header lines, then the CSV.
inline void write_csv(std::ostream& os, const Table& t, const Config* cfg = nullptr) {
    if (cfg) cfg->write_header(os);
    for (std::size_t i = 0; i < t.columns.size(); ++i) os << (i ? "," : "") << t.columns[i];
    os << "\n";
    for (const auto& r : t.rows) {
        for (std::size_t i = 0; i < r.size(); ++i) os << (i ? "," : "") << r[i];
        os << "\n";
    }
}

inline void write_csv_file(const std::string& path, const Table& t, const Config* cfg = nullptr) {
    std::ofstream f(path);
    if (!f) throw ParameterError("cannot open '" + path + "' for writing");
    write_csv(f, t, cfg);
    if (!f) throw Error("write to '" + path + "' failed");
}

// ---------------------------------------------------------------------------
// Worker pool

/// fn(i) for i in [0, count) on up to `threads` workers (0: hardware
/// concurrency); results in index order. The first exception is rethrown.
template <class F>
auto parallel_map(std::size_t count, unsigned threads, F&& fn) -> std::vector<decltype(fn(std::size_t{0}))> {
    using T = decltype(fn(std::size_t{0}));
    std::vector<std::optional<T>> slots(count);
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(count, 1)));
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto work = [&] {
        while (true) {
            const std::size_t i = next.fetch_add(1);
            if (i >= count) return;
            try {
                slots[i].emplace(fn(i));
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
                next = count;
            }
        }
    };
    if (threads <= 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (unsigned t = 0; t < threads; ++t) pool.emplace_back(work);
        for (auto& th : pool) th.join();
    }
    if (failure) std::rethrow_exception(failure);
    std::vector<T> out;
    out.reserve(count);
    for (auto& s : slots) out.push_back(std::move(*s));
    return out;
}

// ---------------------------------------------------------------------------
// Shared pieces

/// A sampled graph ready for every method: no vertex is isolated in either
/// layer. Draws are retried with derived seeds; if all retries fail the last
/// draw is reduced with drop_isolated.
struct DrawnGraph {
    SignedGraph graph;
    Labels truth;
    int resamples = 0;
    Index dropped = 0;
};

inline bool has_isolated_vertex(const SignedGraph& g) {
    const auto d = degrees(g);
    return g.size() > 0 && (d.d_pos.minCoeff() <= 0 || d.d_neg.minCoeff() <= 0);
}

inline DrawnGraph draw_graph(const SsbmParams& params, std::uint64_t seed, int max_resamples = 20) {
    for (int a = 0;; ++a) {
        const std::uint64_t s = a == 0 ? seed : hash_combine({seed, 0x7265ULL, static_cast<std::uint64_t>(a)});
        auto smp = sample(params, s);
        if (!has_isolated_vertex(smp.graph)) return {std::move(smp.graph), std::move(smp.truth), a, 0};
        if (a >= max_resamples) {
            auto red = drop_isolated(smp.graph);
            DrawnGraph d;
            d.dropped = smp.graph.size() - red.graph.size();
            d.graph = std::move(red.graph);
            for (Index v : red.kept) d.truth.push_back(smp.truth[static_cast<std::size_t>(v)]);
            d.resamples = a;
            return d;
        }
    }
}

struct MethodOutcome {
    double error = 0.0;
    std::string status = "ok"; ///< ok | no_signal | unconverged | too_small
    Labels labels;
};

/// Runs one method; structured numerical failures become a status and the
/// all-in-one-cluster labeling rather than an exception.
inline MethodOutcome evaluate_method(const SignedGraph& g, const Labels& truth, const MethodSpec& method, Index k,
                                     std::uint64_t kmeans_seed, int restarts = 10) {
    MethodOutcome out;
    if (g.size() < k) {
        out.status = "too_small";
        out.labels.assign(truth.size(), 0);
        out.error = clustering_error(out.labels, truth);
        return out;
    }
    SpectralOptions opts;
    opts.kmeans.seed = kmeans_seed;
    opts.kmeans.restarts = restarts;
    try {
        auto r = spectral_cluster(g, method, k, opts);
        out.labels = std::move(r.labels);
        if (!r.embedding.converged) out.status = "unconverged";
    } catch (const NoClusterSignalError&) {
        out.status = "no_signal";
        out.labels.assign(truth.size(), 0);
    }
    out.error = clustering_error(out.labels, truth);
    return out;
}

/// Closed-form expected-case verdict for a method, or nullopt if undefined.
inline std::optional<bool> expected_recovery(const SsbmParams& params, const MethodSpec& method) {
    try {
        if (const auto* pm = std::get_if<PowerMeanMethod>(&method)) {
            const auto pp = pm->param();
            return recovery_predicate(params, pp.p, pp.shift).recovered;
        }
        if (std::holds_alternative<SnMethod>(method) || std::holds_alternative<BnMethod>(method))
            return arithmetic_family_predicate(params).holds();
        if (std::holds_alternative<AmMethod>(method)) return recovery_predicate(params, 1, 0).recovered;
        if (const auto* gm = std::get_if<GmMethod>(&method)) return recovery_predicate(params, 0, gm->eps_gm).recovered;
        if (std::holds_alternative<BetheMethod>(method)) return bethe_predicate(params).finite_n;
    } catch (const DomainError&) {
    }
    return std::nullopt;
}

inline std::string fmt(const std::optional<bool>& v) { return v ? fmt(*v) : "na"; }

inline std::vector<MethodSpec> parse_methods(const std::vector<std::string>& names) {
    std::vector<MethodSpec> out;
    for (const auto& n : names) out.push_back(parse_method(n));
    return out;
}

inline const char* kDefaultMethods = "pm:-10,pm:-1,pm:0,pm:1,pm:10,gm,sn,bn,bethe";

/// `methods` list; a numeric `shift` key overrides ε for every power-mean method.
inline std::vector<MethodSpec> read_methods(Config& cfg) {
    auto methods = parse_methods(detail::split_list(cfg.str("methods", kDefaultMethods)));
    if (methods.empty()) throw ParameterError("methods must list at least one method");
    const std::string shift = cfg.str("shift", "auto");
    if (shift != "auto") {
        const double eps = detail::parse_number("shift", shift);
        for (auto& m : methods)
            if (auto* pm = std::get_if<PowerMeanMethod>(&m)) pm->shift = eps;
    }
    return methods;
}

/// Mean of `value` grouped by `keys`, groups in order of first appearance.
inline Table mean_table(const Table& t, const std::vector<std::string>& keys, const std::string& value) {
    std::vector<std::size_t> idx;
    for (const auto& k : keys) idx.push_back(static_cast<std::size_t>(t.column_index(k)));
    const auto vals = t.numeric(value);
    std::map<std::vector<std::string>, std::size_t> slot;
    std::vector<std::vector<std::string>> groups;
    std::vector<double> sums;
    std::vector<long> counts;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        std::vector<std::string> key;
        for (auto i : idx) key.push_back(t.rows[r][i]);
        auto [it, fresh] = slot.try_emplace(key, groups.size());
        if (fresh) {
            groups.push_back(key);
            sums.push_back(0);
            counts.push_back(0);
        }
        sums[it->second] += vals[r];
        counts[it->second] += 1;
    }
    Table out;
    out.columns = keys;
    out.columns.push_back("mean_" + value);
    out.columns.push_back("count");
    for (std::size_t g = 0; g < groups.size(); ++g) {
        auto row = groups[g];
        row.push_back(fmt(sums[g] / static_cast<double>(counts[g])));
        row.push_back(fmt(counts[g]));
        out.rows.push_back(std::move(row));
    }
    return out;
}

/// Fraction of graph draws that were rejected for an isolated vertex. Rows
/// sharing a seed come from one draw.
inline double resample_fraction(const Table& t) {
    const auto seeds = t.column("seed");
    const auto res = t.numeric("resamples");
    std::map<std::string, double> per_draw;
    for (std::size_t i = 0; i < seeds.size(); ++i) per_draw[seeds[i]] = res[i];
    double rejected = 0;
    for (const auto& [s, r] : per_draw) rejected += r;
    const double total = rejected + static_cast<double>(per_draw.size());
    return total > 0 ? rejected / total : 0.0;
}

namespace detail {

inline double elapsed_ms(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
}

inline std::vector<double> linspace(double lo, double hi, long count) {
    if (count < 1) throw ParameterError("grid needs at least one point");
    std::vector<double> v(static_cast<std::size_t>(count));
    for (long i = 0; i < count; ++i) v[static_cast<std::size_t>(i)] = count == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(count - 1);
    return v;
}

/// p_in, p_out from a sum s and difference x = p_in − p_out.
inline std::pair<double, double> split_sum(double s, double x) {
    const double pin = 0.5 * (s + x), pout = 0.5 * (s - x);
    if (!(pin >= 0 && pin <= 1 && pout >= 0 && pout <= 1))
        throw ParameterError("grid point outside [0,1]: sum " + fmt(s) + ", difference " + fmt(x));
    return {pin, pout};
}

struct Common {
    std::uint64_t seed;
    unsigned threads;
    int restarts;
    int max_resamples;
};

inline Common read_common(Config& cfg) {
    Common c;
    c.seed = cfg.seed("seed", 0);
    const long t = cfg.integer("threads", 0);
    if (t < 0) throw ParameterError("threads must be >= 0");
    c.threads = static_cast<unsigned>(t);
    c.restarts = static_cast<int>(cfg.integer("kmeans_restarts", 10));
    c.max_resamples = static_cast<int>(cfg.integer("max_resamples", 20));
    if (c.restarts < 1) throw ParameterError("kmeans_restarts must be >= 1");
    if (c.max_resamples < 0) throw ParameterError("max_resamples must be >= 0");
    return c;
}

inline long positive(Config& cfg, const std::string& key, long def) {
    const long v = cfg.integer(key, def);
    if (v < 1) throw ParameterError(key + " must be >= 1");
    return v;
}

inline std::vector<std::string> graph_columns() {
    return {"pin_pos", "pout_pos", "pin_neg", "pout_neg"};
}

inline std::vector<std::string> graph_cells(const SsbmParams& p) {
    return {fmt(p.pin_pos), fmt(p.pout_pos), fmt(p.pin_neg), fmt(p.pout_neg)};
}

/// One sampled graph evaluated by every method: rows in method order.
struct UnitResult {
    std::vector<std::vector<std::string>> rows;
};

inline UnitResult run_unit(const SsbmParams& params, std::uint64_t unit_seed, const std::vector<MethodSpec>& methods,
                           const std::vector<std::string>& prefix, const Common& c, bool with_expected) {
    const auto d = draw_graph(params, unit_seed, c.max_resamples);
    UnitResult u;
    for (const auto& m : methods) {
        const auto t0 = std::chrono::steady_clock::now();
        const auto o = evaluate_method(d.graph, d.truth, m, params.k, hash_combine({unit_seed, 0x6b6dULL}), c.restarts);
        std::vector<std::string> row = prefix;
        row.push_back(method_name(m));
        row.push_back(std::to_string(unit_seed));
        row.push_back(fmt(static_cast<long>(d.graph.size())));
        row.push_back(fmt(d.resamples));
        row.push_back(fmt(o.error));
        row.push_back(o.status);
        if (with_expected) row.push_back(fmt(expected_recovery(params, m)));
        row.push_back(fmt(elapsed_ms(t0)));
        u.rows.push_back(std::move(row));
    }
    return u;
}

} // namespace detail

// ---------------------------------------------------------------------------
// Phase diagram over (p⁺_in − p⁺_out) × (p⁻_in − p⁻_out) at fixed layer sparsity.

inline Table phase_diagram(Config& cfg) {
    const auto c = detail::read_common(cfg);
    const Index k = detail::positive(cfg, "k", 2);
    const Index cs = detail::positive(cfg, "cluster_size", 100);
    const long samples = detail::positive(cfg, "samples", 10);
    const long grid = detail::positive(cfg, "grid", 9);
    const double dmax = cfg.num("diff_max", 0.08);
    const double s_pos = cfg.num("sparsity_pos", 0.1), s_neg = cfg.num("sparsity_neg", 0.1);
    const auto methods = read_methods(cfg);
    const auto axis = detail::linspace(-dmax, dmax, grid);

    struct Cell { long ix, iy; SsbmParams params; };
    std::vector<Cell> cells;
    for (long ix = 0; ix < grid; ++ix)
        for (long iy = 0; iy < grid; ++iy) {
            SsbmParams p{k, cs};
            std::tie(p.pin_pos, p.pout_pos) = detail::split_sum(s_pos, axis[static_cast<std::size_t>(ix)]);
            std::tie(p.pin_neg, p.pout_neg) = detail::split_sum(s_neg, axis[static_cast<std::size_t>(iy)]);
            p.validate();
            cells.push_back({ix, iy, p});
        }

    const std::size_t units = cells.size() * static_cast<std::size_t>(samples);
    auto results = parallel_map(units, c.threads, [&](std::size_t u) {
        const auto& cell = cells[u / static_cast<std::size_t>(samples)];
        const long smp = static_cast<long>(u % static_cast<std::size_t>(samples));
        const std::uint64_t seed = hash_combine({c.seed, static_cast<std::uint64_t>(cell.ix), static_cast<std::uint64_t>(cell.iy),
                                                 static_cast<std::uint64_t>(smp)});
        std::vector<std::string> prefix{"phase_diagram", fmt(cell.ix), fmt(cell.iy),
                                        fmt(axis[static_cast<std::size_t>(cell.ix)]), fmt(axis[static_cast<std::size_t>(cell.iy)])};
        for (auto& s : detail::graph_cells(cell.params)) prefix.push_back(s);
        prefix.push_back(fmt(smp));
        return detail::run_unit(cell.params, seed, methods, prefix, c, true);
    });

    Table t;
    t.columns = {"experiment", "ix", "iy", "diff_pos", "diff_neg"};
    for (auto& s : detail::graph_columns()) t.columns.push_back(s);
    for (const char* s : {"sample", "method", "seed", "n_used", "resamples", "error", "status", "expected_recovered", "wall_ms"})
        t.columns.push_back(s);
    for (auto& r : results)
        for (auto& row : r.rows) t.rows.push_back(std::move(row));
    return t;
}

// ---------------------------------------------------------------------------
// One layer fixed, the other swept from informative to anti-informative.

struct LayerSweepResult {
    Table sweep;
    Table embedding; ///< long format: method, vertex, truth, component, value
};

inline LayerSweepResult layer_sweep(Config& cfg) {
    const auto c = detail::read_common(cfg);
    const Index k = detail::positive(cfg, "k", 2);
    const Index cs = detail::positive(cfg, "cluster_size", 100);
    const long samples = detail::positive(cfg, "samples", 10);
    const std::string swept = cfg.str("sweep_layer", "neg");
    if (swept != "neg" && swept != "pos") throw ParameterError("sweep_layer must be 'pos' or 'neg'");
    const double fixed_in = cfg.num("fixed_in", swept == "neg" ? 0.09 : 0.01);
    const double fixed_out = cfg.num("fixed_out", swept == "neg" ? 0.01 : 0.09);
    const double sparsity = cfg.num("sparsity", 0.1);
    const auto diffs = cfg.nums("diffs", detail::linspace(-0.08, 0.08, 9));
    const auto methods = read_methods(cfg);
    const auto cell = cfg.nums("embedding_cell", {0.025, 0.075, 0.01, 0.09});
    if (cell.size() != 4) throw ParameterError("embedding_cell needs pin_pos,pout_pos,pin_neg,pout_neg");
    const std::uint64_t emb_seed = cfg.seed("embedding_seed", 0);

    std::vector<SsbmParams> points;
    for (double x : diffs) {
        SsbmParams p{k, cs};
        const auto [pin, pout] = detail::split_sum(sparsity, x);
        if (swept == "neg") {
            p.pin_pos = fixed_in, p.pout_pos = fixed_out, p.pin_neg = pin, p.pout_neg = pout;
        } else {
            p.pin_neg = fixed_in, p.pout_neg = fixed_out, p.pin_pos = pin, p.pout_pos = pout;
        }
        p.validate();
        points.push_back(p);
    }
    const std::size_t units = points.size() * static_cast<std::size_t>(samples);
    auto results = parallel_map(units, c.threads, [&](std::size_t u) {
        const std::size_t ip = u / static_cast<std::size_t>(samples);
        const long smp = static_cast<long>(u % static_cast<std::size_t>(samples));
        const std::uint64_t seed = hash_combine({c.seed, 0x6c73ULL, ip, static_cast<std::uint64_t>(smp)});
        std::vector<std::string> prefix{"layer_sweep", swept, fmt(static_cast<long>(ip)), fmt(diffs[ip])};
        for (auto& s : detail::graph_cells(points[ip])) prefix.push_back(s);
        prefix.push_back(fmt(smp));
        return detail::run_unit(points[ip], seed, methods, prefix, c, true);
    });
    LayerSweepResult out;
    out.sweep.columns = {"experiment", "sweep_layer", "point", "diff"};
    for (auto& s : detail::graph_columns()) out.sweep.columns.push_back(s);
    for (const char* s : {"sample", "method", "seed", "n_used", "resamples", "error", "status", "expected_recovered", "wall_ms"})
        out.sweep.columns.push_back(s);
    for (auto& r : results)
        for (auto& row : r.rows) out.sweep.rows.push_back(std::move(row));

    // Embedding of one graph at the designated cell.
    const SsbmParams ep{k, cs, cell[0], cell[1], cell[2], cell[3]};
    const auto d = draw_graph(ep, hash_combine({emb_seed, 0x656dULL}), c.max_resamples);
    out.embedding.columns = {"experiment", "method", "vertex", "truth", "component", "value", "error"};
    for (const auto& m : methods) {
        std::string err = "na";
        Embedding emb;
        try {
            emb = spectral_embedding(d.graph, m, k);
            KmeansOptions ko;
            ko.seed = hash_combine({emb_seed, 0x6b6dULL});
            ko.restarts = c.restarts;
            err = fmt(clustering_error(cluster_embedding(emb.vectors, k, ko).labels, d.truth));
        } catch (const NoClusterSignalError&) {
            continue;
        }
        for (Index v = 0; v < emb.vectors.rows(); ++v)
            for (Index j = 0; j < emb.vectors.cols(); ++j)
                out.embedding.rows.push_back({"layer_sweep_embedding", method_name(m), fmt(static_cast<long>(v)),
                                              fmt(d.truth[static_cast<std::size_t>(v)]), fmt(static_cast<long>(j)),
                                              fmt(emb.vectors(v, j)), err});
    }
    return out;
}

// ---------------------------------------------------------------------------
// Censored block model: η sweep at fixed p̄ and p̄ sweep at fixed η.

inline Table cbm_sweep(Config& cfg) {
    const auto c = detail::read_common(cfg);
    const Index k = detail::positive(cfg, "k", 2);
    const Index cs = detail::positive(cfg, "cluster_size", 250);
    const long runs = detail::positive(cfg, "runs", 10);
    const double p_bar = cfg.num("p_bar", 0.03);
    const auto etas = cfg.nums("etas", detail::linspace(0.0, 0.5, 11));
    const double eta_fixed = cfg.num("eta_fixed", 0.25);
    const auto p_bars = cfg.nums("p_bars", {0.004, 0.01, 0.02, 0.03, 0.05});
    const auto methods = read_methods(cfg);

    struct Point { std::string sweep; CbmParams cbm; };
    std::vector<Point> points;
    for (double e : etas) points.push_back({"eta", {k, cs, p_bar, e}});
    for (double pb : p_bars) points.push_back({"p_bar", {k, cs, pb, eta_fixed}});
    std::vector<SsbmParams> params;
    for (const auto& pt : points) params.push_back(cbm_to_ssbm(pt.cbm));

    const std::size_t units = points.size() * static_cast<std::size_t>(runs);
    auto results = parallel_map(units, c.threads, [&](std::size_t u) {
        const std::size_t ip = u / static_cast<std::size_t>(runs);
        const long run = static_cast<long>(u % static_cast<std::size_t>(runs));
        const std::uint64_t seed = hash_combine({c.seed, 0x6362ULL, ip, static_cast<std::uint64_t>(run)});
        std::vector<std::string> prefix{"cbm_sweep", points[ip].sweep, fmt(points[ip].cbm.eta), fmt(points[ip].cbm.p_bar), fmt(run)};
        return detail::run_unit(params[ip], seed, methods, prefix, c, false);
    });
    Table t;
    t.columns = {"experiment", "sweep", "eta", "p_bar", "run", "method", "seed", "n_used", "resamples", "error", "status", "wall_ms"};
    for (auto& r : results)
        for (auto& row : r.rows) t.rows.push_back(std::move(row));
    return t;
}

// ---------------------------------------------------------------------------
// Concentration of L_p around the expected operator.

inline Table concentration_experiment(Config& cfg) {
    const auto c = detail::read_common(cfg);
    const Index k = detail::positive(cfg, "k", 2);
    const auto sizes = cfg.nums("sizes", {200, 400, 800});
    const auto ps = cfg.nums("ps", {-1, 1});
    const long seeds = detail::positive(cfg, "seeds", 30);
    const double eps_conf = cfg.num("eps_conf", 0.1);
    const std::string shift_text = cfg.str("shift", "auto");
    const long cap = detail::positive(cfg, "dense_cap", 1200);
    SsbmParams base{k, 1, cfg.num("pin_pos", 0.3), cfg.num("pout_pos", 0.1), cfg.num("pin_neg", 0.1), cfg.num("pout_neg", 0.3)};

    struct Setting { SsbmParams params; int p; double shift; SymMatrix expected; Matrix basis; std::optional<double> bound, eig_bound; bool cond; };
    std::vector<Setting> settings;
    for (double nd : sizes) {
        const Index n = static_cast<Index>(nd);
        if (n != nd || n % k != 0 || n < 2 * k) throw ParameterError("sizes must be integer multiples of k");
        if (n > cap) throw ParameterError("size " + fmt(nd) + " exceeds dense_cap " + fmt(cap));
        for (double pd : ps) {
            if (pd == 0 || std::floor(pd) != pd) throw ParameterError("ps must be nonzero integers");
            const int p = static_cast<int>(pd);
            Setting s{base, p, shift_text == "auto" ? default_shift(p) : detail::parse_number("shift", shift_text), {}, {}, {}, {}, false};
            s.params.cluster_size = n / k;
            s.params.validate();
            const auto m = expected_model(s.params);
            s.expected = expected_spm_laplacian(m, {double(p), s.shift});
            const Index kt = k_prime_for(p, k);
            s.basis = eigh(s.expected).bottom(kt);
            const auto cb = concentration_bound(s.params, p, s.shift, eps_conf);
            s.cond = cb.degree_condition_met;
            s.bound = cb.bound;
            try {
                s.eig_bound = eigenvector_bound(s.params, p, s.shift, eps_conf);
            } catch (const DomainError&) {
            }
            settings.push_back(std::move(s));
        }
    }
    const std::size_t units = settings.size() * static_cast<std::size_t>(seeds);
    auto rows = parallel_map(units, c.threads, [&](std::size_t u) {
        const auto& s = settings[u / static_cast<std::size_t>(seeds)];
        const long si = static_cast<long>(u % static_cast<std::size_t>(seeds));
        const auto t0 = std::chrono::steady_clock::now();
        const std::uint64_t seed = hash_combine({c.seed, 0x636eULL, static_cast<std::uint64_t>(s.params.n()), static_cast<std::uint64_t>(si)});
        // The sampled operator must live on the same vertex set as the expected one.
        const auto d = draw_graph(s.params, seed, c.max_resamples);
        if (d.dropped > 0) throw DegenerateDegreeError("concentration: isolated vertices persisted after resampling", -1);
        const auto lp = dense_spm_laplacian(d.graph, {double(s.p), s.shift});
        const double norm = spectral_norm(lp - s.expected);
        const double dist = subspace_distance(eigh(lp).bottom(s.basis.cols()), s.basis);
        return std::vector<std::string>{"concentration", fmt(static_cast<long>(s.params.n())), fmt(s.p), fmt(s.shift), fmt(si),
                                        std::to_string(seed), fmt(d.resamples), fmt(norm), fmt(dist), fmt(s.cond),
                                        fmt(s.bound), fmt(s.eig_bound), fmt(detail::elapsed_ms(t0))};
    });
    Table t;
    t.columns = {"experiment", "n", "p", "shift", "seed_index", "seed", "resamples", "norm", "subspace", "degree_condition",
                 "bound", "eigenvector_bound", "wall_ms"};
    t.rows = std::move(rows);
    return t;
}

// ---------------------------------------------------------------------------
// Proportion of the parameter cube with expected recovery.

inline Table regions_report(Config& cfg) {
    const auto c = detail::read_common(cfg);
    const auto ps = cfg.nums("ps", {-kInf, -10, -1, 0, 1, 10, kInf});
    const auto ks = cfg.nums("ks", {2});
    const long steps = cfg.integer("steps", 100);
    const std::string shift_text = cfg.str("shift", "auto");
    const double shift_inf = cfg.num("shift_inf", 1e-6);
    const auto scen_names = cfg.strs("scenarios", "all,and,or,average");
    const bool baselines = cfg.integer("baselines", 1) != 0;

    auto scenario = [](const std::string& s) {
        if (s == "all") return Scenario::All;
        if (s == "and") return Scenario::And;
        if (s == "or") return Scenario::Or;
        if (s == "average") return Scenario::Average;
        throw ParameterError("unknown scenario '" + s + "'");
    };
    struct Job { std::string condition; RegionCondition cond; double p; double shift; Index k; std::string scen; };
    std::vector<Job> jobs;
    for (double kd : ks) {
        const Index k = static_cast<Index>(kd);
        for (const auto& sn : scen_names) {
            scenario(sn);
            for (double p : ps) {
                const double shift = shift_text == "auto" ? (std::isfinite(p) ? default_shift(p) : shift_inf)
                                                          : detail::parse_number("shift", shift_text);
                jobs.push_back({"pm", RegionCondition::PowerMean, p, shift, k, sn});
            }
            if (baselines) {
                jobs.push_back({"sn_bn", RegionCondition::SignedLaplacians, std::nan(""), 0, k, sn});
                jobs.push_back({"bethe_limit", RegionCondition::BetheLimit, std::nan(""), 0, k, sn});
            }
        }
    }
    auto rows = parallel_map(jobs.size(), c.threads, [&](std::size_t i) {
        const auto& j = jobs[i];
        const auto t0 = std::chrono::steady_clock::now();
        const double v = region_proportion(j.cond, j.p, j.shift, j.k, static_cast<Index>(steps), scenario(j.scen));
        return std::vector<std::string>{"regions", j.condition, std::isnan(j.p) ? "na" : fmt(j.p),
                                        j.cond == RegionCondition::PowerMean ? fmt(j.shift) : "na",
                                        fmt(static_cast<long>(j.k)), j.scen, fmt(steps), fmt(v), fmt(detail::elapsed_ms(t0))};
    });
    Table t;
    t.columns = {"experiment", "condition", "p", "shift", "k", "scenario", "steps", "proportion", "wall_ms"};
    t.rows = std::move(rows);
    return t;
}

// ---------------------------------------------------------------------------
// Wall time of the dense and matrix-free eigensolvers (single-threaded).

inline Table timing_benchmark(Config& cfg) {
    const auto c = detail::read_common(cfg);
    const auto sizes = cfg.nums("sizes", {2000, 5000, 10000});
    const long runs = detail::positive(cfg, "runs", 10);
    const double p = cfg.num("p", -1);
    const Index k = detail::positive(cfg, "k", 2);
    const long cap = cfg.integer("dense_cap", 2000);
    const double shift = cfg.str("shift", "auto") == "auto" ? default_shift(p) : cfg.num("shift", 0);
    SsbmParams base{k, 1, cfg.num("pin_pos", 0.05), cfg.num("pout_pos", 0.025), cfg.num("pin_neg", 0.025), cfg.num("pout_neg", 0.05)};
    const Index kp = k_prime_for(p, k);

    Table t;
    t.columns = {"experiment", "n", "path", "run", "iterations", "converged", "max_value_diff", "wall_ms"};
    for (double nd : sizes) {
        const Index n = static_cast<Index>(nd);
        if (n != nd || n % k != 0) throw ParameterError("sizes must be integer multiples of k");
        SsbmParams params = base;
        params.cluster_size = n / k;
        const auto d = draw_graph(params, hash_combine({c.seed, 0x746dULL, static_cast<std::uint64_t>(n)}), c.max_resamples);
        std::optional<Vector> dense_values;
        for (long r = 0; r < runs; ++r) {
            BlockIterationOptions bo;
            bo.seed = hash_combine({c.seed, static_cast<std::uint64_t>(r)});
            auto t0 = std::chrono::steady_clock::now();
            const auto mf = smallest_eigs_matrix_free(d.graph, p, shift, kp, bo);
            const double mf_ms = detail::elapsed_ms(t0);
            std::optional<double> diff;
            if (d.graph.size() <= cap) {
                t0 = std::chrono::steady_clock::now();
                const auto dn = smallest_eigs_dense(d.graph, {p, shift}, kp);
                const double dn_ms = detail::elapsed_ms(t0);
                dense_values = dn.values;
                t.rows.push_back({"timing", fmt(static_cast<long>(d.graph.size())), "dense", fmt(r), "na", "1", "na", fmt(dn_ms)});
                diff = (mf.values - dn.values).cwiseAbs().maxCoeff();
            }
            t.rows.push_back({"timing", fmt(static_cast<long>(d.graph.size())), "matrix_free", fmt(r), fmt(mf.iterations),
                              fmt(mf.converged), fmt(diff), fmt(mf_ms)});
        }
    }
    return t;
}

// ---------------------------------------------------------------------------
// Clustering a graph file.

struct ClusterFileOptions {
    std::uint64_t seed = 0;
    int restarts = 10;
    bool drop_isolated = false;
    bool row_normalize = false;
};

struct ClusterFileResult {
    std::vector<Index> vertices; ///< original vertex ids, one per label
    Labels labels;
    Embedding embedding;
    Index n = 0;
    Index dropped = 0;
};

inline ClusterFileResult cluster_graph(const SignedGraph& g, const MethodSpec& method, Index k, const ClusterFileOptions& o) {
    ClusterFileResult r;
    r.n = g.size();
    SignedGraph work = g;
    if (o.drop_isolated) {
        auto red = drop_isolated(g);
        r.vertices = std::move(red.kept);
        work = std::move(red.graph);
    } else {
        for (Index v = 0; v < g.size(); ++v) r.vertices.push_back(v);
    }
    r.dropped = r.n - work.size();
    SpectralOptions so;
    so.kmeans.seed = o.seed;
    so.kmeans.restarts = o.restarts;
    so.row_normalize = o.row_normalize;
    auto cr = spectral_cluster(work, method, k, so);
    r.labels = std::move(cr.labels);
    r.embedding = std::move(cr.embedding);
    return r;
}

inline ClusterFileResult cluster_file(const std::string& path, const MethodSpec& method, Index k, const ClusterFileOptions& o) {
    return cluster_graph(read_signed_edgelist_file(path), method, k, o);
}

/// `<vertex> <cluster>` lines after `# key=value` metadata.
inline void write_labels(std::ostream& os, const ClusterFileResult& r, const MethodSpec& method, Index k, const ClusterFileOptions& o) {
    os << "# method=" << method_name(method) << "\n";
    if (const auto* pm = std::get_if<PowerMeanMethod>(&method)) os << "# p=" << fmt(pm->p) << "\n";
    os << "# shift=" << fmt(r.embedding.shift) << "\n";
    os << "# k=" << k << "\n# k_prime=" << r.embedding.k_prime << "\n";
    os << "# seed=" << o.seed << "\n# kmeans_restarts=" << o.restarts << " (best inertia kept)\n";
    os << "# n=" << r.n << "\n# dropped=" << r.dropped << "\n";
    if (!r.embedding.converged) os << "# warning=matrix-free eigensolver did not converge\n";
    for (std::size_t i = 0; i < r.labels.size(); ++i) os << r.vertices[i] << " " << r.labels[i] << "\n";
}

/// Reads `<vertex> <cluster>` lines ('#' comments allowed).
inline std::vector<std::pair<Index, int>> read_labels(std::istream& in) {
    std::vector<std::pair<Index, int>> out;
    std::string line;
    long lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto t = detail::trim(line);
        if (t.empty() || t[0] == '#') continue;
        std::istringstream ls(t);
        long v = 0;
        int c = 0;
        std::string extra;
        if (!(ls >> v >> c) || (ls >> extra) || v < 0 || c < 0) throw ParseError("expected '<vertex> <cluster>'", lineno);
        out.emplace_back(static_cast<Index>(v), c);
    }
    return out;
}

} // namespace spm
