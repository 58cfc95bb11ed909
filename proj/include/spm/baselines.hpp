#pragma once

// Comparison operators for signed graphs and the method descriptor used by
// the clustering pipeline.
//   L_SR = D̄ − W⁺ + W⁻,   L_SN = D̄^{-1/2} L_SR D̄^{-1/2}
//   L_BR = D⁺ − W⁺ + W⁻,   L_BN = D̄^{-1/2} L_BR D̄^{-1/2}
//   L_AM = L⁺_sym + Q⁻_sym, L_GM = L⁺_sym # Q⁻_sym
//   H    = (α − 1)I − √α (W⁺ − W⁻) + D̄, α = mean of D̄

#include "spm/errors.hpp"
#include "spm/linalg.hpp"
#include "spm/power_mean.hpp"
#include "spm/signed_graph.hpp"

#include <charconv>
#include <cmath>
#include <optional>
#include <sstream>
#include <string>
#include <variant>

namespace spm {

enum class SignedLaplacianKind { SR, SN, BR, BN };

namespace detail {

inline void require_square_pair(const Matrix& wp, const Matrix& wn, const char* who) {
    if (wp.rows() != wp.cols() || wn.rows() != wn.cols() || wp.rows() != wn.rows())
        throw ParameterError(std::string(who) + ": layers must be square and of equal size");
}

} // namespace detail

/// Dense signed Laplacians from dense layers (self-loops allowed, so the
/// same code serves expected block-model adjacencies).
inline SymMatrix build_signed_laplacian(const Matrix& w_pos, const Matrix& w_neg, SignedLaplacianKind kind) {
    detail::require_square_pair(w_pos, w_neg, "build_signed_laplacian");
    const Vector d_pos = w_pos.rowwise().sum();
    const Vector d_bar = d_pos + Vector(w_neg.rowwise().sum());
    for (Index i = 0; i < d_bar.size(); ++i)
        if (!(d_bar[i] > 0))
            throw DegenerateDegreeError("vertex " + std::to_string(i) + " has zero total degree", static_cast<long>(i));
    const bool balance = kind == SignedLaplacianKind::BR || kind == SignedLaplacianKind::BN;
    Matrix l = w_neg - w_pos;
    l.diagonal() += balance ? d_pos : d_bar;
    if (kind == SignedLaplacianKind::SN || kind == SignedLaplacianKind::BN) {
        const Vector s = d_bar.cwiseSqrt().cwiseInverse();
        l = s.asDiagonal() * l * s.asDiagonal();
    }
    return SymMatrix::symmetrize(l);
}

inline SymMatrix build_signed_laplacian(const SignedGraph& g, SignedLaplacianKind kind) {
    return build_signed_laplacian(g.dense_pos(), g.dense_neg(), kind);
}

/// L_AM = L⁺_sym + Q⁻_sym (twice the arithmetic mean M₁).
inline SymMatrix build_am(const SignedGraph& g) {
    const auto layers = dense_layers(g);
    return layers.l_pos + layers.q_neg;
}

/// L⁺_sym # Q⁻_sym; both factors are shifted by `eps_gm` when either has an
/// eigenvalue below 1e-10 (L⁺_sym always does).
inline SymMatrix build_gm(const SymMatrix& l_pos, const SymMatrix& q_neg, double eps_gm = 1e-6) {
    if (!(eps_gm > 0)) throw ParameterError("build_gm: eps_gm must be positive");
    const bool singular = eigvalsh(l_pos)[0] < 1e-10 || eigvalsh(q_neg)[0] < 1e-10;
    if (!singular) return geometric_mean(l_pos, q_neg);
    return geometric_mean(l_pos.shifted(eps_gm), q_neg.shifted(eps_gm));
}

inline SymMatrix build_gm(const SignedGraph& g, double eps_gm = 1e-6) {
    const auto layers = dense_layers(g);
    return build_gm(layers.l_pos, layers.q_neg, eps_gm);
}

/// Bethe Hessian. `alpha` defaults to the average total degree; α = 0 is rejected.
inline SymMatrix build_bethe(const Matrix& w_pos, const Matrix& w_neg, std::optional<double> alpha = std::nullopt) {
    detail::require_square_pair(w_pos, w_neg, "build_bethe");
    const Vector d_bar = w_pos.rowwise().sum() + w_neg.rowwise().sum();
    const double a = alpha ? *alpha : (d_bar.size() > 0 ? d_bar.mean() : 0.0);
    if (!(a > 0) || !std::isfinite(a)) throw ParameterError("build_bethe: alpha must be positive (empty graph?)");
    Matrix h = -std::sqrt(a) * (w_pos - w_neg);
    h.diagonal() += d_bar;
    h.diagonal().array() += a - 1.0;
    return SymMatrix::symmetrize(h);
}

inline SymMatrix build_bethe(const SignedGraph& g, std::optional<double> alpha = std::nullopt) {
    return build_bethe(g.dense_pos(), g.dense_neg(), alpha);
}

// ---------------------------------------------------------------------------
// Method descriptors

struct PowerMeanMethod {
    double p = -1.0;
    std::optional<double> shift; ///< empty: default_shift(p)
    bool matrix_free = false;    ///< negative integer p only

    PowerParam param() const { return {p, shift ? *shift : default_shift(p)}; }
};
struct SnMethod {};
struct BnMethod {};
struct AmMethod {};
struct GmMethod {
    double eps_gm = 1e-6;
};
struct BetheMethod {
    std::optional<double> alpha;
};

using MethodSpec = std::variant<PowerMeanMethod, SnMethod, BnMethod, AmMethod, GmMethod, BetheMethod>;

/// Parses `pm:<p>`, `pm:<p>:mf` (matrix-free), `sn`, `bn`, `am`, `gm`, `bethe`.
inline MethodSpec parse_method(const std::string& text) {
    if (text == "sn") return SnMethod{};
    if (text == "bn") return BnMethod{};
    if (text == "am") return AmMethod{};
    if (text == "gm") return GmMethod{};
    if (text == "bethe") return BetheMethod{};
    if (text.rfind("pm:", 0) == 0) {
        std::string body = text.substr(3);
        PowerMeanMethod m;
        const auto colon = body.find(':');
        if (colon != std::string::npos) {
            if (body.substr(colon + 1) != "mf") throw ParameterError("unknown method '" + text + "'");
            m.matrix_free = true;
            body.resize(colon);
        }
        double p = 0;
        auto [ptr, ec] = std::from_chars(body.data(), body.data() + body.size(), p);
        if (body.empty() || ec != std::errc() || ptr != body.data() + body.size() || !std::isfinite(p))
            throw ParameterError("unknown method '" + text + "': exponent must be a finite number");
        if (m.matrix_free && (!(p < 0) || std::floor(p) != p))
            throw ParameterError("method '" + text + "': matrix-free path needs a negative integer p");
        m.p = p;
        return m;
    }
    throw ParameterError("unknown method '" + text + "'");
}

inline std::string method_name(const MethodSpec& m) {
    struct Visitor {
        std::string operator()(const PowerMeanMethod& pm) const {
            std::ostringstream os;
            os << "pm:" << pm.p << (pm.matrix_free ? ":mf" : "");
            return os.str();
        }
        std::string operator()(const SnMethod&) const { return "sn"; }
        std::string operator()(const BnMethod&) const { return "bn"; }
        std::string operator()(const AmMethod&) const { return "am"; }
        std::string operator()(const GmMethod&) const { return "gm"; }
        std::string operator()(const BetheMethod&) const { return "bethe"; }
    };
    return std::visit(Visitor{}, m);
}

} // namespace spm
