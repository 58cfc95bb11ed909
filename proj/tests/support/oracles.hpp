#pragma once

// Direct eigenspace checks on exact expected operators, shared by the unit
// tests and the acceptance runner. They only use eigh and subspace_distance,
// never the closed-form predicates they are compared against.

#include "spm/baselines.hpp"
#include "spm/ssbm.hpp"

#include <cmath>
#include <random>

namespace spm::oracle {

inline constexpr double kSubspaceTol = 1e-7;

/// Random SSBM tuple with k ∈ {2, 3}, n ≤ max_n and both expected degrees positive.
inline SsbmParams random_params(std::mt19937_64& rng, Index max_n = 90) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    SsbmParams p;
    p.k = u(rng) < 0.5 ? 2 : 3;
    std::uniform_int_distribution<Index> cs(2, max_n / p.k);
    p.cluster_size = cs(rng);
    do {
        p.pin_pos = u(rng);
        p.pout_pos = u(rng);
        p.pin_neg = u(rng);
        p.pout_neg = u(rng);
    } while (p.expected_degree(Layer::Positive) <= 0 || p.expected_degree(Layer::Negative) <= 0);
    return p;
}

/// Distance between span(χ_first..χ_k) and the eigenvectors of the `count`
/// smallest eigenvalues of `a`.
inline double bottom_distance(const SymMatrix& a, const ExpectedModel& m, Index first, Index count) {
    const auto e = eigh(a);
    return subspace_distance(e.vectors.leftCols(count), m.chi_basis(first));
}

struct Check {
    bool recovered = false;
    double distance = 0.0;
};

/// Power mean Laplacian: χ_{θ..k} span the bottom-k′ eigenspace, θ = 2 for p ≥ 1.
inline Check power_mean_check(const SsbmParams& params, double p, double eps) {
    const auto m = expected_model(params);
    const auto lp = expected_spm_laplacian(m, {p, eps});
    const Index first = p >= 1 ? 2 : 1;
    const double dist = bottom_distance(lp, m, first, params.k - first + 1);
    return {dist <= kSubspaceTol, dist};
}

/// L_SN or L_BN: χ_1..χ_k span the bottom-k eigenspace.
inline Check signed_laplacian_check(const SsbmParams& params, SignedLaplacianKind kind) {
    const auto m = expected_model(params);
    const auto l = build_signed_laplacian(m.w_pos, m.w_neg, kind);
    const double dist = bottom_distance(l, m, 1, params.k);
    return {dist <= kSubspaceTol, dist};
}

/// Bethe Hessian: the k−1 most negative eigenvalues exist and belong to χ_2..χ_k.
inline Check bethe_check(const SsbmParams& params) {
    const auto m = expected_model(params);
    const auto h = build_bethe(m.w_pos, m.w_neg);
    const auto e = eigh(h);
    const Index need = params.k - 1;
    Index negatives = 0;
    for (Index i = 0; i < e.values.size(); ++i) negatives += e.values[i] < 0;
    if (negatives < need) return {false, 1.0};
    const double dist = subspace_distance(e.vectors.leftCols(need), m.chi_basis(2));
    return {dist <= kSubspaceTol, dist};
}

/// Closed-form spectra used only to flag near-ties, where the eigenspace is ill-defined.
inline bool arithmetic_tie(const SsbmParams& p, double margin = 1e-9) {
    const double km1 = static_cast<double>(p.k - 1);
    return std::abs((p.pin_pos + km1 * p.pout_pos) - (p.pin_neg + km1 * p.pout_neg)) < margin ||
           std::abs((p.pin_pos - p.pout_pos) - (p.pin_neg - p.pout_neg)) < margin;
}

inline bool bethe_tie(const SsbmParams& p, double margin = 1e-9) {
    const double d_sum = p.expected_degree(Layer::Positive) + p.expected_degree(Layer::Negative);
    const double c = static_cast<double>(p.cluster_size);
    const double contrast = (p.pin_pos - p.pout_pos) - (p.pin_neg - p.pout_neg);
    const double lam_i = (2 * d_sum - 1) - std::sqrt(d_sum) * c * contrast;
    const double scale = std::max(1.0, 2 * d_sum);
    return std::abs(lam_i) < margin * scale || std::abs(p.pout_pos - p.pout_neg) < margin || std::abs(contrast) < margin;
}

} // namespace spm::oracle
