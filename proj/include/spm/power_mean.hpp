#pragma once

// Scalar and matrix power means and the signed power mean Laplacian
//   L_p = M_p(L⁺_sym + εI, Q⁻_sym + εI),  M_p(A, B) = ((A^p + B^p)/2)^{1/p},
// with a dense reference path and a matrix-free path for negative integer p
// (block power iteration on M_p^p, each A^p·y approximated in a Krylov space).

#include "spm/errors.hpp"
#include "spm/linalg.hpp"
#include "spm/rng.hpp"
#include "spm/signed_graph.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <sstream>
#include <string>

namespace spm {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// m_p(a, b) = ((a^p + b^p)/2)^{1/p}, with the limits
/// m_0 = √(ab), m_{+∞} = max, m_{−∞} = min.
inline double scalar_power_mean(double p, double a, double b) {
    if (std::isnan(p) || !std::isfinite(a) || !std::isfinite(b))
        throw DomainError("scalar_power_mean: non-finite argument");
    if (p <= 0 ? (a <= 0 || b <= 0) : (a < 0 || b < 0)) {
        std::ostringstream os;
        os << "scalar_power_mean: arguments (" << a << ", " << b << ") outside the domain for p = " << p;
        throw DomainError(os.str());
    }
    if (p == kInf) return std::max(a, b);
    if (p == -kInf) return std::min(a, b);
    if (a == b) return a;
    if (p == 0) return std::sqrt(a) * std::sqrt(b);
    if (p == 1) return 0.5 * (a + b);
    // Factor out the larger value so that large |p| neither overflows nor underflows.
    const double hi = p > 0 ? std::max(a, b) : std::min(a, b);
    const double lo = p > 0 ? std::min(a, b) : std::max(a, b);
    const double r = std::pow(lo / hi, p); // in [0, 1]
    return hi * std::pow(0.5 * (1.0 + r), 1.0 / p);
}

/// ε(p) = log10(1 + |p|) + 1e-6.
inline double default_shift(double p) {
    if (!std::isfinite(p)) throw ParameterError("default_shift: p must be finite; supply the shift explicitly");
    return std::log10(1.0 + std::abs(p)) + 1e-6;
}

/// Exponent and diagonal shift of a power mean Laplacian.
struct PowerParam {
    double p = -1.0;
    double shift = 0.0;

    static PowerParam with_default_shift(double p) { return {p, default_shift(p)}; }

    /// Checks the conditions needed by L_p: finite shift ≥ 0, and ε > 0 when p ≤ 0
    /// (L⁺_sym is always singular).
    void validate_for_laplacian() const {
        if (std::isnan(p)) throw ParameterError("PowerParam: p is NaN");
        if (!std::isfinite(shift) || shift < 0) throw ParameterError("PowerParam: shift must be finite and >= 0");
        if (p <= 0 && !(shift > 0)) throw ParameterError("PowerParam: p <= 0 needs a positive shift");
    }
};

/// M_p(A + εI, B + εI) for finite p. p = 0 is the geometric mean of the
/// shifted inputs; p = 1 is (A + B)/2 + εI.
inline SymMatrix dense_power_mean(const SymMatrix& a, const SymMatrix& b, const PowerParam& pp) {
    if (a.size() != b.size()) throw ParameterError("dense_power_mean: size mismatch");
    if (!std::isfinite(pp.p)) throw ParameterError("dense_power_mean: p must be finite");
    if (!std::isfinite(pp.shift) || pp.shift < 0) throw ParameterError("dense_power_mean: shift must be finite and >= 0");
    const double p = pp.p;
    const double eps = pp.shift;
    if (p == 1) return SymMatrix::symmetrize(0.5 * (a.matrix() + b.matrix())).shifted(eps);
    const SymMatrix as = a.shifted(eps);
    const SymMatrix bs = b.shifted(eps);
    if (p == 0) return geometric_mean(as, bs);
    const SymMatrix ap = sym_power(as, p);
    const SymMatrix bp = sym_power(bs, p);
    const SymMatrix mean = SymMatrix::symmetrize(0.5 * (ap.matrix() + bp.matrix()));
    return sym_power(mean, 1.0 / p);
}

/// Dense L⁺_sym (ε = 0) and Q⁻_sym (ε = 0) of a graph.
struct DenseLayers {
    SymMatrix l_pos;
    SymMatrix q_neg;
};

inline DenseLayers dense_layers(const SignedGraph& g) {
    return {dense_matrix(LayerOperator(g, Layer::Positive)), dense_matrix(LayerOperator(g, Layer::Negative))};
}

/// Dense L_p of a graph.
inline SymMatrix dense_spm_laplacian(const SignedGraph& g, const PowerParam& pp) {
    pp.validate_for_laplacian();
    const auto layers = dense_layers(g);
    return dense_power_mean(layers.l_pos, layers.q_neg, pp);
}

/// Constant of the perturbation bound
///   ‖M_p(A₁,A₂) − M_p(B₁,B₂)‖ ≤ C · m_{|p|}(‖A₁−B₁‖, ‖A₂−B₂‖)^{1/|p|}
/// for integer |p| ≥ 1 and spectra in [α, β]:
///   p ≥ 1:  C = p^{1/p} β^{1−1/p};   p ≤ −1:  C = |p|^{1/|p|} α^{−(3+1/|p|)}.
inline double power_mean_norm_bound_constant(int p, double alpha, double beta) {
    if (p == 0) throw ParameterError("power_mean_norm_bound_constant: p must be nonzero");
    if (!(alpha > 0) || !(beta >= alpha)) throw ParameterError("power_mean_norm_bound_constant: need 0 < alpha <= beta");
    const double q = std::abs(p);
    if (p > 0) return std::pow(q, 1.0 / q) * std::pow(beta, 1.0 - 1.0 / q);
    return std::pow(q, 1.0 / q) * std::pow(alpha, -(3.0 + 1.0 / q));
}

// ---------------------------------------------------------------------------
// Matrix-free path

struct KrylovOptions {
    Index max_dim = 120; ///< cap on the Krylov dimension (clamped to n)
    double tol = 1e-10;  ///< relative change between successive iterates
    bool reorthogonalize = true;
};

struct PksmResult {
    Vector x;
    Index steps = 0;
    bool converged = false;
    bool breakdown = false; ///< Krylov space became invariant (result exact up to roundoff)
};

/// Approximates op^p · y for an SPD operator and negative integer p by
/// projecting onto the Krylov space span{y, op·y, …} (Arnoldi with full
/// orthogonalization) and powering the small projected matrix:
///   x_s = V_s (V_sᵀ op V_s)^p e₁ ‖y‖.
/// `op` is any callable Vector → Vector.
template <class Op>
PksmResult pksm_apply(const Op& op, const Vector& y, double p, const KrylovOptions& opts = {}) {
    if (!(p < 0) || !detail::is_integer(p)) throw ParameterError("pksm_apply: p must be a negative integer");
    if (!(opts.tol > 0) || opts.max_dim < 1) throw ParameterError("pksm_apply: need tol > 0 and max_dim >= 1");
    const Index n = y.size();
    const double beta = y.norm();
    if (!(beta > 0) || !std::isfinite(beta)) throw ParameterError("pksm_apply: y must be nonzero and finite");
    const Index cap = std::min(opts.max_dim, n);

    Matrix v(n, cap);
    Matrix h = Matrix::Zero(cap + 1, cap);
    v.col(0) = y / beta;
    PksmResult res;
    Vector x_prev;

    for (Index j = 0; j < cap; ++j) {
        Vector w = op(Vector(v.col(j)));
        if (w.size() != n || !w.allFinite()) throw DomainError("pksm_apply: operator produced an invalid vector");
        const double wnorm = w.norm();
        const int passes = opts.reorthogonalize ? 2 : 1;
        for (int pass = 0; pass < passes; ++pass) {
            const Index first = opts.reorthogonalize ? 0 : std::max<Index>(0, j - 1);
            for (Index i = first; i <= j; ++i) {
                const double c = v.col(i).dot(w);
                h(i, j) += c;
                w -= c * v.col(i);
            }
        }
        const double hnext = w.norm();
        const Index s = j + 1;

        // Small projected problem. H is symmetric in exact arithmetic.
        const Matrix hs = h.topLeftCorner(s, s);
        const SymMatrix hsym = SymMatrix::symmetrize(hs);
        const auto e = eigh(hsym);
        if (!(e.values[0] > 0)) {
            std::ostringstream os;
            os << "pksm_apply: projected operator not positive definite (eigenvalue " << e.values[0] << ")";
            throw DomainError(os.str());
        }
        Vector coeff(s);
        for (Index i = 0; i < s; ++i) coeff[i] = std::pow(e.values[i], p) * e.vectors(0, i);
        const Vector fe1 = e.vectors * coeff;
        Vector x = beta * (v.leftCols(s) * fe1);
        res.steps = s;

        const bool broke = hnext <= 1e-12 * std::max(wnorm, h.topLeftCorner(s, s).cwiseAbs().maxCoeff());
        if (broke) {
            res.x = std::move(x);
            res.converged = true;
            res.breakdown = true;
            return res;
        }
        if (x_prev.size() == n) {
            const double change = (x - x_prev).norm() / x.norm();
            if (change < opts.tol) {
                res.x = std::move(x);
                res.converged = true;
                return res;
            }
        }
        if (s == n) {
            // Full space: exact.
            res.x = std::move(x);
            res.converged = true;
            return res;
        }
        x_prev = std::move(x);
        if (s < cap) {
            h(s, j) = hnext;
            v.col(s) = w / hnext;
        }
    }
    res.x = std::move(x_prev);
    res.converged = false;
    return res;
}

struct BlockIterationOptions {
    KrylovOptions krylov;
    int max_iters = 500;
    double tol = 1e-8;      ///< subspace distance between successive blocks
    std::uint64_t seed = 0; ///< initial block
};

/// Bottom eigenpairs of L_p.
struct EigsResult {
    Vector values;            ///< ascending
    Matrix vectors;           ///< n×k′, orthonormal columns
    int iterations = 0;
    Vector residuals;         ///< dense: ‖L_p v − λv‖; matrix-free: ‖M v − μv‖ for M = M_p^p
    Vector power_step_values; ///< matrix-free only: (x_{t+1}ᵀ x_t)^{1/p} from the last power step
    bool converged = true;
};

/// Bottom k′ eigenpairs of the dense L_p.
inline EigsResult smallest_eigs_dense(const SignedGraph& g, const PowerParam& pp, Index k_prime) {
    if (k_prime < 1 || k_prime > g.size()) throw ParameterError("smallest_eigs_dense: need 1 <= k' <= n");
    const SymMatrix l = dense_spm_laplacian(g, pp);
    const auto e = eigh(l);
    EigsResult r;
    r.values = e.values.head(k_prime);
    r.vectors = e.bottom(k_prime);
    r.residuals.resize(k_prime);
    for (Index j = 0; j < k_prime; ++j)
        r.residuals[j] = (l.matrix() * r.vectors.col(j) - r.values[j] * r.vectors.col(j)).norm();
    return r;
}

/// Bottom k′ eigenpairs of L_p for negative integer p without forming L_p:
/// block power iteration on M = ½((L⁺_sym+εI)^p + (Q⁻_sym+εI)^p), whose
/// largest eigenvalues μ are the smallest λ = μ^{1/p} of L_p, with a
/// Rayleigh–Ritz step on the final block.
inline EigsResult smallest_eigs_matrix_free(const SignedGraph& g, double p, double shift, Index k_prime,
                                            const BlockIterationOptions& opts = {}) {
    if (!(p < 0) || !detail::is_integer(p)) throw ParameterError("smallest_eigs_matrix_free: p must be a negative integer");
    if (!(shift > 0) || !std::isfinite(shift)) throw ParameterError("smallest_eigs_matrix_free: shift must be positive");
    const Index n = g.size();
    if (k_prime < 1 || k_prime > n) throw ParameterError("smallest_eigs_matrix_free: need 1 <= k' <= n");

    const LayerOperator lpos(g, Layer::Positive, shift);
    const LayerOperator qneg(g, Layer::Negative, shift);
    bool krylov_ok = true;
    auto apply_m = [&](const Matrix& x) {
        Matrix out(n, x.cols());
        for (Index j = 0; j < x.cols(); ++j) {
            const Vector col = x.col(j);
            const auto a = pksm_apply(lpos, col, p, opts.krylov);
            const auto b = pksm_apply(qneg, col, p, opts.krylov);
            krylov_ok = krylov_ok && a.converged && b.converged;
            out.col(j) = 0.5 * (a.x + b.x);
        }
        return out;
    };

    KeyedUniform rnd(opts.seed);
    Matrix x(n, k_prime);
    for (Index j = 0; j < k_prime; ++j)
        for (Index i = 0; i < n; ++i) x(i, j) = rnd(static_cast<std::uint64_t>(j * n + i)) - 0.5;
    x = orthonormalize(x);

    EigsResult r;
    r.converged = false;
    Matrix mx = apply_m(x);
    int it = 0;
    while (true) {
        ++it;
        // Rayleigh–Ritz on span(x): rotate to Ritz vectors so columns settle individually.
        const SymMatrix g_small = SymMatrix::symmetrize(x.transpose() * mx);
        const auto e = eigh(g_small);
        const Matrix rot = e.vectors.rowwise().reverse(); // descending μ
        const Matrix xr = x * rot;
        const Matrix mxr = mx * rot;
        const Matrix next = orthonormalize(mxr);
        const double change = subspace_distance(next, xr);
        if (change < opts.tol || it >= opts.max_iters) {
            r.converged = change < opts.tol;
            break;
        }
        x = next;
        mx = apply_m(x);
    }

    // Final Rayleigh–Ritz on the last block x (with M·x available in mx).
    const SymMatrix g_small = SymMatrix::symmetrize(x.transpose() * mx);
    const auto e = eigh(g_small);
    const Matrix rot = e.vectors.rowwise().reverse();
    const Vector mu = e.values.reverse();
    r.vectors = x * rot;
    const Matrix mv = mx * rot;
    r.values.resize(k_prime);
    r.residuals.resize(k_prime);
    r.power_step_values.resize(k_prime);
    for (Index j = 0; j < k_prime; ++j) {
        if (!(mu[j] > 0)) throw DomainError("smallest_eigs_matrix_free: non-positive Ritz value");
        r.values[j] = std::pow(mu[j], 1.0 / p);
        r.residuals[j] = (mv.col(j) - mu[j] * r.vectors.col(j)).norm();
        // Power-step estimate: x_{t+1} = M x_t before normalization, paired with x_t.
        const double step = mx.col(j).dot(x.col(j));
        r.power_step_values[j] = step > 0 ? std::pow(step, 1.0 / p) : std::numeric_limits<double>::quiet_NaN();
    }
    r.iterations = it;
    r.converged = r.converged && krylov_ok;
    return r;
}

} // namespace spm
