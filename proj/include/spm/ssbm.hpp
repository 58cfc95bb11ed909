#pragma once

// Signed stochastic block model: k equal clusters of size |C|, independent
// edges per layer with probabilities p±_in (same cluster) and p±_out.
// Sampling, parameter mappings, exact expected operators and closed-form
// recovery / concentration predicates.

#include "spm/errors.hpp"
#include "spm/linalg.hpp"
#include "spm/power_mean.hpp"
#include "spm/rng.hpp"
#include "spm/signed_graph.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace spm {

struct SsbmParams {
    Index k = 2;
    Index cluster_size = 100;
    double pin_pos = 0.0;
    double pout_pos = 0.0;
    double pin_neg = 0.0;
    double pout_neg = 0.0;

    Index n() const noexcept { return k * cluster_size; }

    void validate() const {
        if (k < 2) throw ParameterError("SsbmParams: k must be >= 2");
        if (cluster_size < 1) throw ParameterError("SsbmParams: cluster_size must be >= 1");
        for (double q : {pin_pos, pout_pos, pin_neg, pout_neg})
            if (!(q >= 0 && q <= 1)) throw ParameterError("SsbmParams: probabilities must lie in [0, 1]");
    }

    /// Expected degree |C|(p_in + (k−1)p_out) of a layer.
    double expected_degree(Layer l) const {
        const double c = static_cast<double>(cluster_size);
        const double km1 = static_cast<double>(k - 1);
        return l == Layer::Positive ? c * (pin_pos + km1 * pout_pos) : c * (pin_neg + km1 * pout_neg);
    }
};

/// Labelled SBM: edge probabilities p̄_in, p̄_out; an edge is positive with
/// probability μ⁺ inside clusters and ν⁺ between clusters.
struct LsbmParams {
    Index k = 2;
    Index cluster_size = 100;
    double p_bar_in = 0.0;
    double p_bar_out = 0.0;
    double mu_pos = 1.0;
    double nu_pos = 0.0;
};

/// Censored block model: one edge probability p̄ and sign-flip noise η.
struct CbmParams {
    Index k = 2;
    Index cluster_size = 100;
    double p_bar = 0.0;
    double eta = 0.0;
};

inline SsbmParams lsbm_to_ssbm(const LsbmParams& l) {
    for (double q : {l.p_bar_in, l.p_bar_out, l.mu_pos, l.nu_pos})
        if (!(q >= 0 && q <= 1)) throw ParameterError("LsbmParams: values must lie in [0, 1]");
    SsbmParams s;
    s.k = l.k;
    s.cluster_size = l.cluster_size;
    s.pin_pos = l.p_bar_in * l.mu_pos;
    s.pin_neg = l.p_bar_in * (1.0 - l.mu_pos);
    s.pout_pos = l.p_bar_out * l.nu_pos;
    s.pout_neg = l.p_bar_out * (1.0 - l.nu_pos);
    return s;
}

inline SsbmParams cbm_to_ssbm(const CbmParams& c) {
    if (!(c.eta >= 0 && c.eta <= 0.5)) throw ParameterError("CbmParams: eta must lie in [0, 0.5]");
    if (!(c.p_bar >= 0 && c.p_bar <= 1)) throw ParameterError("CbmParams: p_bar must lie in [0, 1]");
    SsbmParams s;
    s.k = c.k;
    s.cluster_size = c.cluster_size;
    s.pin_pos = s.pout_neg = c.p_bar * (1.0 - c.eta);
    s.pin_neg = s.pout_pos = c.p_bar * c.eta;
    return s;
}

/// Ground-truth labels: vertex i belongs to cluster i / |C|.
inline Labels ground_truth(const SsbmParams& params) {
    Labels y(static_cast<std::size_t>(params.n()));
    for (Index i = 0; i < params.n(); ++i) y[static_cast<std::size_t>(i)] = static_cast<int>(i / params.cluster_size);
    return y;
}

struct SsbmSample {
    SignedGraph graph;
    Labels truth;
};

/// Draws every unordered pair {i, j} independently per layer. The draw for
/// pair (i, j), i < j, in layer l is KeyedUniform(hash(seed, l))(i·n + j), so
/// the graph depends only on (params, seed).
inline SsbmSample sample(const SsbmParams& params, std::uint64_t seed) {
    params.validate();
    const Index n = params.n();
    const Index c = params.cluster_size;
    SparseLayer layers[2];
    for (int l = 0; l < 2; ++l) {
        const double pin = l == 0 ? params.pin_pos : params.pin_neg;
        const double pout = l == 0 ? params.pout_pos : params.pout_neg;
        const KeyedUniform u(hash_combine({seed, static_cast<std::uint64_t>(l)}));
        std::vector<Eigen::Triplet<double>> trip;
        trip.reserve(static_cast<std::size_t>(static_cast<double>(n) * static_cast<double>(n) * std::max(pin, pout)) + 16);
        for (Index i = 0; i < n; ++i) {
            for (Index j = i + 1; j < n; ++j) {
                const double q = (i / c == j / c) ? pin : pout;
                if (q <= 0) continue;
                const auto key = static_cast<std::uint64_t>(i) * static_cast<std::uint64_t>(n) + static_cast<std::uint64_t>(j);
                if (u(key) < q) {
                    trip.emplace_back(i, j, 1.0);
                    trip.emplace_back(j, i, 1.0);
                }
            }
        }
        layers[l].resize(n, n);
        layers[l].setFromTriplets(trip.begin(), trip.end());
    }
    return {SignedGraph(std::move(layers[0]), std::move(layers[1])), ground_truth(params)};
}

/// Exact expected operators. 𝓦± is block-constant, self-loops included
/// (𝓦±_ii = p±_in), so the expected graph is regular with degree d±.
struct ExpectedModel {
    SsbmParams params;
    double rho_pos = 0.0; ///< (p⁺_in − p⁺_out)/(p⁺_in + (k−1)p⁺_out)
    double rho_neg = 0.0;
    double lambda_pos_1 = 0.0; ///< eigenvalues of 𝓦± on χ₁ and on χ_i (i ≥ 2)
    double lambda_pos_i = 0.0;
    double lambda_neg_1 = 0.0;
    double lambda_neg_i = 0.0;
    Matrix chi;  ///< n×k: χ₁ = 1, χ_i = (k−1)·1_{C_i} − 1_{not C_i}
    Matrix w_pos;
    Matrix w_neg;
    SymMatrix l_pos; ///< 𝓛⁺_sym = I − 𝓦⁺/d⁺
    SymMatrix q_neg; ///< 𝓠⁻_sym = I + 𝓦⁻/d⁻

    /// Orthonormal basis of span(χ_first, …, χ_k), 1-based `first`.
    Matrix chi_basis(Index first) const { return orthonormalize(chi.rightCols(chi.cols() - first + 1)); }
};

inline ExpectedModel expected_model(const SsbmParams& params) {
    params.validate();
    const Index n = params.n();
    const Index k = params.k;
    const Index c = params.cluster_size;
    const double d_pos = params.expected_degree(Layer::Positive);
    const double d_neg = params.expected_degree(Layer::Negative);
    if (!(d_pos > 0)) throw DomainError("expected_model: positive layer has zero expected degree");
    if (!(d_neg > 0)) throw DomainError("expected_model: negative layer has zero expected degree");

    ExpectedModel m;
    m.params = params;
    const double km1 = static_cast<double>(k - 1);
    m.rho_pos = (params.pin_pos - params.pout_pos) / (params.pin_pos + km1 * params.pout_pos);
    m.rho_neg = (params.pin_neg - params.pout_neg) / (params.pin_neg + km1 * params.pout_neg);
    m.lambda_pos_1 = d_pos;
    m.lambda_neg_1 = d_neg;
    m.lambda_pos_i = static_cast<double>(c) * (params.pin_pos - params.pout_pos);
    m.lambda_neg_i = static_cast<double>(c) * (params.pin_neg - params.pout_neg);

    m.w_pos.resize(n, n);
    m.w_neg.resize(n, n);
    for (Index j = 0; j < n; ++j)
        for (Index i = 0; i < n; ++i) {
            const bool same = i / c == j / c;
            m.w_pos(i, j) = same ? params.pin_pos : params.pout_pos;
            m.w_neg(i, j) = same ? params.pin_neg : params.pout_neg;
        }

    m.chi.resize(n, k);
    m.chi.col(0).setOnes();
    for (Index col = 1; col < k; ++col)
        for (Index i = 0; i < n; ++i) m.chi(i, col) = (i / c == col) ? km1 : -1.0;

    Matrix lp = -m.w_pos / d_pos;
    lp.diagonal().array() += 1.0;
    Matrix qn = m.w_neg / d_neg;
    qn.diagonal().array() += 1.0;
    m.l_pos = SymMatrix(std::move(lp));
    m.q_neg = SymMatrix(std::move(qn));

    // Internal consistency of the closed-form eigenpairs.
    for (Index col = 0; col < k; ++col) {
        const double lp_ = col == 0 ? m.lambda_pos_1 : m.lambda_pos_i;
        const double ln_ = col == 0 ? m.lambda_neg_1 : m.lambda_neg_i;
        const Vector x = m.chi.col(col);
        const double scale = x.norm() * std::max({1.0, d_pos, d_neg});
        if ((m.w_pos * x - lp_ * x).norm() > 1e-10 * scale || (m.w_neg * x - ln_ * x).norm() > 1e-10 * scale)
            throw DomainError("expected_model: eigen-relation check failed");
    }
    return m;
}

/// L_p of the expected model.
inline SymMatrix expected_spm_laplacian(const ExpectedModel& m, const PowerParam& pp) {
    return dense_power_mean(m.l_pos, m.q_neg, pp);
}

/// k′ = k − 1 for p ≥ 1, else k.
inline Index k_prime_for(double p, Index k) { return p >= 1 ? k - 1 : k; }

struct RecoveryReport {
    double rho_pos_eps = 0.0; ///< 1 − ρ⁺ + ε
    double rho_neg_eps = 0.0; ///< 1 + ρ⁻ + ε
    double m_value = 0.0;     ///< m_p(ρ⁺_ε, ρ⁻_ε)
    double threshold = 0.0;   ///< 1 + ε
    bool recovered = false;   ///< m_value < threshold
    double gap = 0.0;         ///< threshold − m_value
    Index k_prime = 0;
};

/// Expected-case recovery condition m_p(ρ⁺_ε, ρ⁻_ε) < 1 + ε. p may be ±∞.
inline RecoveryReport recovery_predicate(const SsbmParams& params, double p, double eps) {
    params.validate();
    if (std::isnan(p)) throw ParameterError("recovery_predicate: p is NaN");
    if (!(eps >= 0) || !std::isfinite(eps)) throw ParameterError("recovery_predicate: shift must be finite and >= 0");
    if (p <= 0 && !(eps > 0)) throw ParameterError("recovery_predicate: p <= 0 needs a positive shift");
    const double km1 = static_cast<double>(params.k - 1);
    const double den_pos = params.pin_pos + km1 * params.pout_pos;
    const double den_neg = params.pin_neg + km1 * params.pout_neg;
    if (!(den_pos > 0) || !(den_neg > 0)) throw DomainError("recovery_predicate: a layer has zero expected degree");
    const double rho_pos = (params.pin_pos - params.pout_pos) / den_pos;
    const double rho_neg = (params.pin_neg - params.pout_neg) / den_neg;
    RecoveryReport r;
    r.rho_pos_eps = 1.0 - rho_pos + eps;
    r.rho_neg_eps = 1.0 + rho_neg + eps;
    r.m_value = scalar_power_mean(p, r.rho_pos_eps, r.rho_neg_eps);
    r.threshold = 1.0 + eps;
    r.recovered = r.m_value < r.threshold;
    r.gap = r.threshold - r.m_value;
    r.k_prime = params.k - (p >= 1 ? 1 : 0);
    return r;
}

/// Conditions shared by the signed ratio/normalized and balance Laplacians:
/// (d⁻ < d⁺, p⁻_in + p⁺_out < p⁺_in + p⁻_out).
struct ArithmeticFamilyConditions {
    bool degree = false;
    bool balance = false;
    bool holds() const noexcept { return degree && balance; }
};

inline ArithmeticFamilyConditions arithmetic_family_predicate(const SsbmParams& params) {
    params.validate();
    const double km1 = static_cast<double>(params.k - 1);
    return {params.pin_neg + km1 * params.pout_neg < params.pin_pos + km1 * params.pout_pos,
            params.pin_neg + params.pout_pos < params.pin_pos + params.pout_neg};
}

/// Bethe Hessian conditions at finite n and in the n → ∞ limit.
struct BetheConditions {
    bool finite_n = false;
    bool limit = false;
};

inline BetheConditions bethe_predicate(const SsbmParams& params) {
    params.validate();
    const double d_sum = params.expected_degree(Layer::Positive) + params.expected_degree(Layer::Negative);
    if (!(d_sum > 0)) throw DomainError("bethe_predicate: d⁺ + d⁻ = 0");
    const double c = static_cast<double>(params.cluster_size);
    const double contrast = (params.pin_pos - params.pout_pos) - (params.pin_neg - params.pout_neg);
    const double lhs = std::max(0.0, (2.0 * d_sum - 1.0) / (std::sqrt(d_sum) * c));
    const bool cond2 = params.pout_pos < params.pout_neg;
    return {lhs < contrast && cond2, params.pin_neg + params.pout_pos < params.pin_pos + params.pout_neg && cond2};
}

struct ConcentrationBound {
    double c_p = 0.0;
    double delta_pos = 0.0;
    double delta_neg = 0.0;
    double degree_threshold = 0.0; ///< 3 ln(8n/ϵ)
    bool degree_condition_met = false;
    std::optional<double> bound;   ///< present iff the degree condition holds
    double confidence = 0.0;       ///< 1 − ϵ
};

/// C_p = (2p)^{1/p}(2+ε)^{1−1/p} for p ≥ 1 and |2p|^{1/|p|} ε^{−(3+1/|p|)} for p ≤ −1.
inline double concentration_constant(int p, double eps) {
    if (p == 0) throw ParameterError("concentration_constant: p must be nonzero");
    const double q = std::abs(p);
    if (p > 0) return std::pow(2.0 * q, 1.0 / q) * std::pow(2.0 + eps, 1.0 - 1.0 / q);
    if (!(eps > 0)) throw ParameterError("concentration_constant: p <= -1 needs a positive shift");
    return std::pow(2.0 * q, 1.0 / q) * std::pow(eps, -(3.0 + 1.0 / q));
}

/// High-probability bound on ‖L_p − 𝓛_p‖ for a sampled graph.
inline ConcentrationBound concentration_bound(const SsbmParams& params, int p, double eps, double epsilon_conf) {
    params.validate();
    if (!(epsilon_conf > 0 && epsilon_conf < 1)) throw ParameterError("concentration_bound: confidence parameter must lie in (0, 1)");
    if (!(eps > 0) && p < 0) throw ParameterError("concentration_bound: p <= -1 needs a positive shift");
    ConcentrationBound b;
    b.c_p = concentration_constant(p, eps);
    b.delta_pos = params.expected_degree(Layer::Positive);
    b.delta_neg = params.expected_degree(Layer::Negative);
    b.degree_threshold = 3.0 * std::log(8.0 * static_cast<double>(params.n()) / epsilon_conf);
    b.degree_condition_met = b.delta_pos > b.degree_threshold && b.delta_neg > b.degree_threshold;
    b.confidence = 1.0 - epsilon_conf;
    if (b.degree_condition_met) {
        const double q = std::abs(p);
        const double mean = scalar_power_mean(q, std::sqrt(b.degree_threshold / b.delta_pos),
                                              std::sqrt(b.degree_threshold / b.delta_neg));
        b.bound = b.c_p * std::pow(mean, 1.0 / q);
    }
    return b;
}

/// Bound on min_O ‖V_k̃ − 𝒱_k̃ O‖: √(8k̃)·(concentration bound)/γ_p.
inline double eigenvector_bound(const SsbmParams& params, int p, double eps, double epsilon_conf) {
    const auto rec = recovery_predicate(params, p, eps);
    if (!(rec.gap > 0)) throw DomainError("eigenvector_bound: spectral gap is not positive");
    const auto cb = concentration_bound(params, p, eps, epsilon_conf);
    if (!cb.bound) throw DomainError("eigenvector_bound: degree conditions not met");
    const double k_tilde = static_cast<double>(k_prime_for(p, params.k));
    return std::sqrt(8.0 * k_tilde) * *cb.bound / rec.gap;
}

// ---------------------------------------------------------------------------
// Proportion of the parameter cube where a recovery condition holds.

enum class Scenario {
    All,     ///< no constraint
    And,     ///< both layers informative: p⁺_in > p⁺_out and p⁻_in < p⁻_out
    Or,      ///< at least one layer informative
    Average, ///< p⁻_in + p⁺_out < p⁺_in + p⁻_out
};

enum class RegionCondition {
    PowerMean,        ///< m_p(ρ⁺_ε, ρ⁻_ε) < 1 + ε
    SignedLaplacians, ///< arithmetic family (shared by L_SN and L_BN)
    BetheLimit,       ///< Bethe Hessian, n → ∞ form
};

namespace detail {

inline bool scenario_accepts(Scenario s, long d_pos, long d_neg) {
    // d± = index(p±_in) − index(p±_out) on the grid.
    switch (s) {
    case Scenario::All: return true;
    case Scenario::And: return d_pos > 0 && d_neg < 0;
    case Scenario::Or: return d_pos > 0 || d_neg < 0;
    case Scenario::Average: return d_pos > d_neg;
    }
    return false;
}

} // namespace detail

/// Fraction of grid points (midpoints (i + ½)/steps on each of the four
/// probabilities) satisfying the scenario on which the condition holds.
/// `p` and `eps` are used only by RegionCondition::PowerMean.
inline double region_proportion(RegionCondition cond, double p, double eps, Index k, Index steps, Scenario scenario) {
    if (steps < 2) throw ParameterError("region_proportion: steps must be >= 2");
    if (k < 2) throw ParameterError("region_proportion: k must be >= 2");
    const long s = static_cast<long>(steps);
    const long km1 = static_cast<long>(k - 1);
    auto prob = [&](long i) { return (static_cast<double>(i) + 0.5) / static_cast<double>(s); };

    if (cond != RegionCondition::PowerMean) {
        // Linear conditions: exact in integer grid coordinates (the ½ offsets cancel).
        long double hit = 0, total = 0;
        for (long ip = 0; ip < s; ++ip)
            for (long op = 0; op < s; ++op)
                for (long in = 0; in < s; ++in)
                    for (long on = 0; on < s; ++on) {
                        const long dp = ip - op, dn = in - on;
                        if (!detail::scenario_accepts(scenario, dp, dn)) continue;
                        total += 1;
                        bool ok;
                        if (cond == RegionCondition::SignedLaplacians)
                            ok = in + km1 * on < ip + km1 * op && dn < dp;
                        else
                            ok = dn < dp && op < on;
                        if (ok) hit += 1;
                    }
        return total > 0 ? static_cast<double>(hit / total) : 0.0;
    }

    if (p <= 0 && !(eps > 0)) throw ParameterError("region_proportion: p <= 0 needs a positive shift");
    const double threshold = 1.0 + eps;
    // Recovery depends on the layers only through ρ⁺_ε and ρ⁻_ε, and m_p is
    // increasing in each argument, so for a fixed ρ⁺_ε the recovered ρ⁻_ε
    // values form a prefix of the sorted list.
    struct Cell { double value; long d; };
    std::vector<Cell> pos, neg;
    pos.reserve(static_cast<std::size_t>(s * s));
    neg.reserve(static_cast<std::size_t>(s * s));
    const double kd = static_cast<double>(km1);
    for (long a = 0; a < s; ++a)
        for (long b = 0; b < s; ++b) {
            const double pin = prob(a), pout = prob(b);
            const double rho = (pin - pout) / (pin + kd * pout);
            pos.push_back({1.0 - rho + eps, a - b});
            neg.push_back({1.0 + rho + eps, a - b});
        }
    std::vector<double> all_neg;
    all_neg.reserve(neg.size());
    for (const auto& c : neg) all_neg.push_back(c.value);
    std::sort(all_neg.begin(), all_neg.end());
    all_neg.erase(std::unique(all_neg.begin(), all_neg.end()), all_neg.end());
    // Group negative-layer cells by d⁻ = i_in − i_out.
    std::vector<std::vector<double>> groups(static_cast<std::size_t>(2 * s - 1));
    for (const auto& c : neg) groups[static_cast<std::size_t>(c.d + s - 1)].push_back(c.value);
    for (auto& g : groups) std::sort(g.begin(), g.end());

    long double hit = 0, total = 0;
    for (const auto& pc : pos) {
        // First value in all_neg for which recovery fails.
        std::size_t lo = 0, hi = all_neg.size();
        while (lo < hi) {
            const std::size_t mid = (lo + hi) / 2;
            if (scalar_power_mean(p, pc.value, all_neg[mid]) < threshold) lo = mid + 1;
            else hi = mid;
        }
        const double cutoff = lo < all_neg.size() ? all_neg[lo] : kInf;
        for (long dn = -(s - 1); dn <= s - 1; ++dn) {
            if (!detail::scenario_accepts(scenario, pc.d, dn)) continue;
            const auto& g = groups[static_cast<std::size_t>(dn + s - 1)];
            total += static_cast<long double>(g.size());
            hit += static_cast<long double>(std::lower_bound(g.begin(), g.end(), cutoff) - g.begin());
        }
    }
    return total > 0 ? static_cast<double>(hit / total) : 0.0;
}

inline double region_proportion(double p, double eps, Index k, Index steps, Scenario scenario) {
    return region_proportion(RegionCondition::PowerMean, p, eps, k, steps, scenario);
}

} // namespace spm
