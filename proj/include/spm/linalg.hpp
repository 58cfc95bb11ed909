#pragma once

// Dense symmetric linear algebra: eigendecomposition, spectral matrix
// functions, norms and subspace geometry. Everything here works on small to
// medium dense matrices (n up to a few thousand) and serves as the exact
// reference path for the rest of the library.

#include "spm/errors.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <sstream>
#include <utility>
#include <vector>

namespace spm {

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Dense real symmetric matrix. Symmetry is exact: the constructor rejects
/// any asymmetric input, and `symmetrize` is the explicit way to build one
/// from a numerically computed product.
class SymMatrix {
public:
    SymMatrix() = default;

    explicit SymMatrix(Matrix m) : m_(std::move(m)) {
        if (m_.rows() != m_.cols())
            throw ParameterError("SymMatrix: matrix is not square");
        if (!m_.allFinite())
            throw DomainError("SymMatrix: non-finite entry");
        for (Index j = 0; j < m_.cols(); ++j)
            for (Index i = j + 1; i < m_.rows(); ++i)
                if (m_(i, j) != m_(j, i))
                    throw ParameterError("SymMatrix: matrix is not symmetric");
    }

    /// Builds (m + mᵀ)/2. Use for products that are symmetric in exact arithmetic.
    static SymMatrix symmetrize(const Matrix& m) {
        if (m.rows() != m.cols())
            throw ParameterError("SymMatrix: matrix is not square");
        Matrix s = 0.5 * (m + m.transpose());
        return SymMatrix(std::move(s));
    }

    static SymMatrix identity(Index n) { return SymMatrix(Matrix::Identity(n, n)); }
    static SymMatrix zero(Index n) { return SymMatrix(Matrix::Zero(n, n)); }
    static SymMatrix diagonal(const Vector& d) { return SymMatrix(Matrix(d.asDiagonal())); }

    Index size() const noexcept { return m_.rows(); }
    const Matrix& matrix() const noexcept { return m_; }
    double operator()(Index i, Index j) const { return m_(i, j); }

    /// this + shift·I
    SymMatrix shifted(double shift) const {
        Matrix r = m_;
        r.diagonal().array() += shift;
        return SymMatrix(std::move(r));
    }

    friend SymMatrix operator+(const SymMatrix& a, const SymMatrix& b) {
        return SymMatrix(Matrix(a.m_ + b.m_));
    }
    friend SymMatrix operator-(const SymMatrix& a, const SymMatrix& b) {
        return SymMatrix(Matrix(a.m_ - b.m_));
    }
    friend SymMatrix operator*(double s, const SymMatrix& a) { return SymMatrix(Matrix(s * a.m_)); }

private:
    Matrix m_;
};

/// Full spectral factorization A = V·diag(values)·Vᵀ with ascending values.
struct EigenDecomposition {
    Vector values;
    Matrix vectors;

    Index size() const noexcept { return values.size(); }

    /// Columns paired with the `count` smallest eigenvalues.
    Matrix bottom(Index count) const { return vectors.leftCols(count); }

    Matrix reconstruct() const {
        return vectors * values.asDiagonal() * vectors.transpose();
    }
};

namespace detail {

inline void require_finite(const SymMatrix& a, const char* who) {
    if (!a.matrix().allFinite())
        throw DomainError(std::string(who) + ": non-finite input");
}

inline void sort_ascending(EigenDecomposition& e) {
    const Index n = e.values.size();
    std::vector<Index> order(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
    std::stable_sort(order.begin(), order.end(),
                     [&](Index a, Index b) { return e.values[a] < e.values[b]; });
    Vector v(n);
    Matrix m(e.vectors.rows(), n);
    for (Index i = 0; i < n; ++i) {
        v[i] = e.values[order[static_cast<std::size_t>(i)]];
        m.col(i) = e.vectors.col(order[static_cast<std::size_t>(i)]);
    }
    e.values = std::move(v);
    e.vectors = std::move(m);
}

} // namespace detail

/// Symmetric eigendecomposition (Householder tridiagonalization + implicit QR).
inline EigenDecomposition eigh(const SymMatrix& a) {
    detail::require_finite(a, "eigh");
    if (a.size() == 0) return {};
    Eigen::SelfAdjointEigenSolver<Matrix> solver(a.matrix(), Eigen::ComputeEigenvectors);
    if (solver.info() != Eigen::Success) throw DomainError("eigh: solver failed to converge");
    return {solver.eigenvalues(), solver.eigenvectors()};
}

/// Eigenvalues only, ascending.
inline Vector eigvalsh(const SymMatrix& a) {
    detail::require_finite(a, "eigvalsh");
    if (a.size() == 0) return {};
    Eigen::SelfAdjointEigenSolver<Matrix> solver(a.matrix(), Eigen::EigenvaluesOnly);
    if (solver.info() != Eigen::Success) throw DomainError("eigvalsh: solver failed to converge");
    return solver.eigenvalues();
}

/// Cyclic Jacobi eigensolver with threshold sweeps. Converges when the
/// off-diagonal Frobenius norm drops below 1e-12·‖A‖_F. Independent of
/// `eigh`; kept as a second route for cross-checking at small n.
inline EigenDecomposition jacobi_eigh(const SymMatrix& a, int max_sweeps = 100) {
    detail::require_finite(a, "jacobi_eigh");
    const Index n = a.size();
    Matrix m = a.matrix();
    Matrix v = Matrix::Identity(n, n);
    const double fro = m.norm();
    const double target = 1e-12 * fro;

    auto off_norm = [&] {
        double s = 0.0;
        for (Index j = 0; j < n; ++j)
            for (Index i = j + 1; i < n; ++i) s += 2.0 * m(i, j) * m(i, j);
        return std::sqrt(s);
    };

    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        const double off = off_norm();
        if (off <= target || off == 0.0) break;
        // Skip rotations whose pivot is tiny relative to the current off-norm.
        const double threshold = sweep < 3 ? 0.2 * off / static_cast<double>(n * n) : 0.0;
        for (Index p = 0; p < n - 1; ++p) {
            for (Index q = p + 1; q < n; ++q) {
                const double apq = m(p, q);
                if (std::abs(apq) <= threshold || apq == 0.0) continue;
                const double theta = (m(q, q) - m(p, p)) / (2.0 * apq);
                const double t = (theta >= 0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (Index k = 0; k < n; ++k) {
                    const double mkp = m(k, p), mkq = m(k, q);
                    m(k, p) = c * mkp - s * mkq;
                    m(k, q) = s * mkp + c * mkq;
                }
                for (Index k = 0; k < n; ++k) {
                    const double mpk = m(p, k), mqk = m(q, k);
                    m(p, k) = c * mpk - s * mqk;
                    m(q, k) = s * mpk + c * mqk;
                }
                m(p, q) = m(q, p) = 0.0;
                for (Index k = 0; k < n; ++k) {
                    const double vkp = v(k, p), vkq = v(k, q);
                    v(k, p) = c * vkp - s * vkq;
                    v(k, q) = s * vkp + c * vkq;
                }
            }
        }
    }
    if (off_norm() > std::max(target, 1e-300) * 1e3)
        throw DomainError("jacobi_eigh: no convergence");
    EigenDecomposition e{m.diagonal(), v};
    detail::sort_ascending(e);
    return e;
}

/// V·diag(f(λ))·Vᵀ for a precomputed decomposition.
inline SymMatrix apply_spectral(const EigenDecomposition& e, const std::function<double(double)>& f) {
    Vector fv = e.values.unaryExpr(f);
    if (!fv.allFinite()) throw DomainError("spectral function produced a non-finite value");
    return SymMatrix::symmetrize(e.vectors * fv.asDiagonal() * e.vectors.transpose());
}

inline SymMatrix apply_spectral(const SymMatrix& a, const std::function<double(double)>& f) {
    return apply_spectral(eigh(a), f);
}

namespace detail {

inline bool is_integer(double p) { return std::isfinite(p) && std::floor(p) == p; }

/// Validates eigenvalues for a real power and returns them, rescuing values
/// that undershoot `floor` only by roundoff.
inline Vector checked_power_spectrum(const Vector& values, double p, double floor) {
    Vector v = values;
    const bool needs_positive = p < 0 || !is_integer(p);
    if (!needs_positive) return v;
    const double scale = std::max(1.0, v.cwiseAbs().maxCoeff());
    for (Index i = 0; i < v.size(); ++i) {
        double& l = v[i];
        if (floor > 0) {
            if (l >= floor) continue;
            if (floor - l <= 1e-12 * floor) {
                l = floor;
                continue;
            }
        } else if (p > 0) {
            // Fractional positive power of a PSD matrix: tolerate roundoff below zero.
            if (l >= 0) continue;
            if (-l <= 1e-12 * scale) {
                l = 0.0;
                continue;
            }
        }
        std::ostringstream os;
        os << "sym_power: eigenvalue " << l << " below floor " << floor << " for exponent " << p;
        throw DomainError(os.str());
    }
    return v;
}

} // namespace detail

/// A^p = V·diag(λ^p)·Vᵀ. For negative or fractional p every eigenvalue must
/// be at least `floor` (> 0 for negative p); eigenvalues within 1e-12·floor
/// below it are clamped, anything lower is a DomainError.
inline SymMatrix sym_power(const EigenDecomposition& e, double p, double floor = 0.0) {
    if (!std::isfinite(p)) throw ParameterError("sym_power: exponent must be finite");
    if (floor < 0) throw ParameterError("sym_power: floor must be non-negative");
    if (p < 0 && floor <= 0) {
        // Negative powers need a strictly positive spectrum; use the smallest
        // positive value representable as the implicit floor.
        floor = std::numeric_limits<double>::min();
    }
    if (p == 0) return SymMatrix::identity(e.size());
    Vector v = detail::checked_power_spectrum(e.values, p, floor);
    Vector fv = v.unaryExpr([p](double l) { return std::pow(l, p); });
    if (!fv.allFinite()) throw DomainError("sym_power: non-finite result");
    return SymMatrix::symmetrize(e.vectors * fv.asDiagonal() * e.vectors.transpose());
}

inline SymMatrix sym_power(const SymMatrix& a, double p, double floor = 0.0) {
    if (p == 1) return a;
    return sym_power(eigh(a), p, floor);
}

/// Spectral norm max|λ| of a symmetric matrix.
inline double spectral_norm(const SymMatrix& a) {
    if (a.size() == 0) return 0.0;
    return eigvalsh(a).cwiseAbs().maxCoeff();
}

namespace detail {

inline EigenDecomposition require_spd(const SymMatrix& a, const char* who) {
    auto e = eigh(a);
    if (e.size() > 0 && !(e.values[0] > 0)) {
        std::ostringstream os;
        os << who << ": matrix is singular or indefinite (smallest eigenvalue " << e.values[0] << ")";
        throw DomainError(os.str());
    }
    return e;
}

} // namespace detail

/// Matrix geometric mean A#B = A^{1/2}(A^{-1/2} B A^{-1/2})^{1/2} A^{1/2}.
/// A#B = B#A, so the outer factor is whichever argument is better conditioned.
inline SymMatrix geometric_mean(const SymMatrix& a_in, const SymMatrix& b_in) {
    if (a_in.size() != b_in.size()) throw ParameterError("geometric_mean: size mismatch");
    auto ea = detail::require_spd(a_in, "geometric_mean");
    auto eb = detail::require_spd(b_in, "geometric_mean");
    const auto cond = [](const EigenDecomposition& e) { return e.values[e.values.size() - 1] / e.values[0]; };
    const bool swap = ea.values.size() > 0 && cond(eb) < cond(ea);
    if (swap) std::swap(ea, eb);
    const SymMatrix& b = swap ? a_in : b_in;
    const double tiny = std::numeric_limits<double>::min();
    const SymMatrix a_half = sym_power(ea, 0.5, tiny);
    const SymMatrix a_inv_half = sym_power(ea, -0.5, tiny);
    const SymMatrix inner = SymMatrix::symmetrize(a_inv_half.matrix() * b.matrix() * a_inv_half.matrix());
    const SymMatrix inner_half = sym_power(detail::require_spd(inner, "geometric_mean"), 0.5, tiny);
    return SymMatrix::symmetrize(a_half.matrix() * inner_half.matrix() * a_half.matrix());
}

/// exp((log A + log B)/2): the p → 0 limit of the matrix power mean.
inline SymMatrix log_euclidean_mean(const SymMatrix& a, const SymMatrix& b) {
    if (a.size() != b.size()) throw ParameterError("log_euclidean_mean: size mismatch");
    auto la = apply_spectral(detail::require_spd(a, "log_euclidean_mean"), [](double l) { return std::log(l); });
    auto lb = apply_spectral(detail::require_spd(b, "log_euclidean_mean"), [](double l) { return std::log(l); });
    return apply_spectral(0.5 * (la + lb), [](double l) { return std::exp(l); });
}

/// Largest deviation of UᵀU from the identity.
inline double orthonormality_defect(const Matrix& u) {
    if (u.cols() == 0) return 0.0;
    return (u.transpose() * u - Matrix::Identity(u.cols(), u.cols())).cwiseAbs().maxCoeff();
}

/// Orthonormal basis (thin Q factor) for the columns of `m`.
inline Matrix orthonormalize(const Matrix& m) {
    Eigen::HouseholderQR<Matrix> qr(m);
    return qr.householderQ() * Matrix::Identity(m.rows(), m.cols());
}

/// The orthogonal factor O = WZᵀ minimizing ‖U − V·O‖₂, where VᵀU = WΣZᵀ.
inline Matrix procrustes_rotation(const Matrix& u, const Matrix& v) {
    Eigen::JacobiSVD<Matrix> svd(v.transpose() * u, Eigen::ComputeFullU | Eigen::ComputeFullV);
    return svd.matrixU() * svd.matrixV().transpose();
}

/// min over orthogonal O of ‖U − V·O‖₂ (equal to sqrt(2·max_i(1 − cos Θ_i))
/// for principal angles Θ). Evaluated directly on U − VO so that small
/// distances keep full relative accuracy.
inline double subspace_distance(const Matrix& u, const Matrix& v) {
    if (u.rows() != v.rows() || u.cols() != v.cols())
        throw ParameterError("subspace_distance: shape mismatch");
    if (orthonormality_defect(u) > 1e-8 || orthonormality_defect(v) > 1e-8)
        throw ParameterError("subspace_distance: inputs must have orthonormal columns");
    if (u.cols() == 0) return 0.0;
    const Matrix diff = u - v * procrustes_rotation(u, v);
    Eigen::JacobiSVD<Matrix> svd(diff);
    return svd.singularValues()(0);
}

} // namespace spm
