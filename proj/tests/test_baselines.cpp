#include "spm/baselines.hpp"
#include "spm/ssbm.hpp"
#include "support/oracles.hpp"

#include <gtest/gtest.h>

#include <random>
#include <sstream>

using namespace spm;

namespace {

SignedGraph parse(const std::string& text) {
    std::istringstream in(text);
    return read_signed_edgelist(in);
}

SignedGraph random_graph(Index n, double density, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Matrix wp = Matrix::Zero(n, n), wn = Matrix::Zero(n, n);
    for (Index i = 0; i < n; ++i)
        for (Index j = i + 1; j < n; ++j) {
            if (u(rng) < density) wp(i, j) = wp(j, i) = 0.5 + u(rng);
            if (u(rng) < density) wn(i, j) = wn(j, i) = 0.5 + u(rng);
        }
    for (Index i = 0; i < n; ++i) {
        const Index j = (i + 1) % n, l = (i + 2) % n;
        wp(i, j) = wp(j, i) = 1;
        wn(i, l) = wn(l, i) = 1;
    }
    return SignedGraph::from_dense(wp, wn);
}

double max_abs(const Matrix& m) { return m.cwiseAbs().maxCoeff(); }

} // namespace

TEST(SignedLaplacian, TwoVertexExamples) {
    Matrix expect(2, 2);
    expect << 1, -1, -1, 1;
    EXPECT_EQ(build_signed_laplacian(parse("0 1 1\n"), SignedLaplacianKind::SR).matrix(), expect);
    expect << 1, 1, 1, 1;
    const auto lneg = build_signed_laplacian(parse("0 1 -1\n"), SignedLaplacianKind::SR);
    EXPECT_EQ(lneg.matrix(), expect);
    const Vector ev = eigvalsh(lneg);
    EXPECT_NEAR(ev[0], 0.0, 1e-15);
    EXPECT_NEAR(ev[1], 2.0, 1e-15);
}

TEST(SignedLaplacian, RatioIsSumOfUnnormalizedLayers) {
    std::mt19937_64 rng(1);
    for (int t = 0; t < 10; ++t) {
        const auto g = random_graph(25, 0.2, rng);
        const Matrix wp = g.dense_pos(), wn = g.dense_neg();
        Matrix lpos = -wp, qneg = wn;
        lpos.diagonal() += wp.rowwise().sum();
        qneg.diagonal() += wn.rowwise().sum();
        EXPECT_LE(max_abs(build_signed_laplacian(g, SignedLaplacianKind::SR).matrix() - (lpos + qneg)), 1e-12);
        Matrix lbr = -wp + wn;
        lbr.diagonal() += wp.rowwise().sum();
        EXPECT_LE(max_abs(build_signed_laplacian(g, SignedLaplacianKind::BR).matrix() - lbr), 1e-12);
    }
}

TEST(SignedLaplacian, SignedVariantsArePsd) {
    std::mt19937_64 rng(2);
    for (int t = 0; t < 20; ++t) {
        const auto g = random_graph(30, 0.15, rng);
        EXPECT_GE(eigvalsh(build_signed_laplacian(g, SignedLaplacianKind::SR))[0], -1e-10);
        const Vector sn = eigvalsh(build_signed_laplacian(g, SignedLaplacianKind::SN));
        EXPECT_GE(sn[0], -1e-10);
        EXPECT_LE(sn[sn.size() - 1], 2 + 1e-10);
    }
}

TEST(SignedLaplacian, BalanceVariantsCanBeIndefinite) {
    const Vector ev = eigvalsh(build_signed_laplacian(parse("0 1 -1\n"), SignedLaplacianKind::BR));
    EXPECT_NEAR(ev[0], -1.0, 1e-15);
    EXPECT_NEAR(ev[1], 1.0, 1e-15);
}

TEST(SignedLaplacian, NormalizedZeroIffTwoBalanced) {
    // Two positive triangles joined by negative edges.
    const auto balanced = parse("0 1 1\n1 2 1\n0 2 1\n3 4 1\n4 5 1\n3 5 1\n0 3 -1\n2 5 -1\n1 4 -1\n");
    EXPECT_NEAR(eigvalsh(build_signed_laplacian(balanced, SignedLaplacianKind::SN))[0], 0.0, 1e-12);
    // A triangle with a single negative edge is not balanced.
    const auto frustrated = parse("0 1 1\n1 2 1\n0 2 -1\n");
    EXPECT_GT(eigvalsh(build_signed_laplacian(frustrated, SignedLaplacianKind::SN))[0], 1e-3);
}

TEST(SignedLaplacian, ZeroTotalDegreeRejected) {
    const auto g = parse("# n=3\n0 1 1\n");
    for (auto kind : {SignedLaplacianKind::SR, SignedLaplacianKind::SN, SignedLaplacianKind::BR, SignedLaplacianKind::BN}) {
        try {
            build_signed_laplacian(g, kind);
            FAIL();
        } catch (const DegenerateDegreeError& e) {
            EXPECT_EQ(e.vertex(), 2);
        }
    }
}

TEST(ArithmeticMean, OrderingMatchesUnitPowerMean) {
    std::mt19937_64 rng(3);
    for (int t = 0; t < 10; ++t) {
        const auto g = random_graph(30, 0.2, rng);
        const auto am = eigh(build_am(g));
        const auto pm = eigh(dense_spm_laplacian(g, {1, 0}));
        EXPECT_LE((am.values - 2 * pm.values).cwiseAbs().maxCoeff(), 1e-12);
        EXPECT_LE(subspace_distance(am.vectors.leftCols(3), pm.vectors.leftCols(3)), 1e-8);
        EXPECT_GE(am.values[0], -1e-12);
        EXPECT_LE(am.values[am.values.size() - 1], 4 + 1e-12);
    }
}

TEST(GeometricMeanLaplacian, ShiftsOnlySingularFactors) {
    Vector a(2), b(2);
    a << 1, 4;
    b << 9, 1;
    const auto plain = build_gm(SymMatrix::diagonal(a), SymMatrix::diagonal(b));
    EXPECT_NEAR(plain(0, 0), 3.0, 1e-14);
    EXPECT_NEAR(plain(1, 1), 2.0, 1e-14);
    a << 0, 4;
    const auto shifted = build_gm(SymMatrix::diagonal(a), SymMatrix::diagonal(b), 1e-6);
    EXPECT_NEAR(shifted(0, 0), std::sqrt(1e-6 * (9 + 1e-6)), 1e-14);
    EXPECT_NEAR(shifted(1, 1), std::sqrt((4 + 1e-6) * (1 + 1e-6)), 1e-14);
    EXPECT_THROW(build_gm(SymMatrix::diagonal(a), SymMatrix::diagonal(b), 0), ParameterError);
}

TEST(GeometricMeanLaplacian, EqualsZeroExponentLimitOnExpectedOperators) {
    std::mt19937_64 rng(4);
    for (int t = 0; t < 10; ++t) {
        const auto m = expected_model(oracle::random_params(rng, 60));
        const double eps = 1e-6;
        const auto gm = build_gm(m.l_pos, m.q_neg, eps);
        const auto limit = log_euclidean_mean(m.l_pos.shifted(eps), m.q_neg.shifted(eps));
        EXPECT_LE(spectral_norm(gm - limit), 1e-8);
    }
}

TEST(BetheHessian, UnitAlphaIsSignedRatioLaplacian) {
    std::mt19937_64 rng(5);
    for (int t = 0; t < 5; ++t) {
        const auto g = random_graph(20, 0.3, rng);
        EXPECT_LE(max_abs(build_bethe(g, 1.0).matrix() - build_signed_laplacian(g, SignedLaplacianKind::SR).matrix()), 1e-12);
    }
}

TEST(BetheHessian, DefaultAlphaIsMeanTotalDegree) {
    const auto g = parse("0 1 1\n1 2 -1\n");
    // D̄ = (1, 2, 1), α = 4/3.
    const double a = 4.0 / 3.0;
    const auto h = build_bethe(g);
    EXPECT_NEAR(h(0, 0), a - 1 + 1, 1e-15);
    EXPECT_NEAR(h(1, 1), a - 1 + 2, 1e-15);
    EXPECT_NEAR(h(0, 1), -std::sqrt(a), 1e-15);
    EXPECT_NEAR(h(1, 2), std::sqrt(a), 1e-15);
}

TEST(BetheHessian, ZeroAlphaRejected) {
    EXPECT_THROW(build_bethe(parse("# n=3\n")), ParameterError);
    EXPECT_THROW(build_bethe(parse("0 1 1\n"), 0.0), ParameterError);
    EXPECT_THROW(build_bethe(parse("0 1 1\n"), -1.0), ParameterError);
}

TEST(BetheHessian, ExpectedConstantVectorEigenvalue) {
    const SsbmParams p{3, 20, 0.3, 0.05, 0.1, 0.2};
    const auto m = expected_model(p);
    const double dp = p.expected_degree(Layer::Positive), dn = p.expected_degree(Layer::Negative);
    const double a = dp + dn;
    const Vector one = Vector::Ones(p.n());
    const Vector hx = build_bethe(m.w_pos, m.w_neg).matrix() * one;
    EXPECT_LE((hx - ((2 * a - 1) - std::sqrt(a) * (dp - dn)) * one).norm(), 1e-10 * a * one.norm());
}

TEST(ExpectedGraphs, SignedAndBalanceLaplaciansMatchPredicate) {
    std::mt19937_64 rng(6);
    for (int t = 0; t < 100; ++t) {
        const auto p = oracle::random_params(rng, 60);
        if (oracle::arithmetic_tie(p)) continue;
        const bool pred = arithmetic_family_predicate(p).holds();
        EXPECT_EQ(oracle::signed_laplacian_check(p, SignedLaplacianKind::SN).recovered, pred);
        EXPECT_EQ(oracle::signed_laplacian_check(p, SignedLaplacianKind::BN).recovered, pred);
    }
}

TEST(MethodSpec, ParsesNames) {
    auto pm = std::get<PowerMeanMethod>(parse_method("pm:-10"));
    EXPECT_EQ(pm.p, -10.0);
    EXPECT_FALSE(pm.matrix_free);
    EXPECT_NEAR(pm.param().shift, default_shift(-10), 1e-15);
    auto mf = std::get<PowerMeanMethod>(parse_method("pm:-2:mf"));
    EXPECT_TRUE(mf.matrix_free);
    EXPECT_EQ(std::get<PowerMeanMethod>(parse_method("pm:0.5")).p, 0.5);
    EXPECT_TRUE(std::holds_alternative<SnMethod>(parse_method("sn")));
    EXPECT_TRUE(std::holds_alternative<BnMethod>(parse_method("bn")));
    EXPECT_TRUE(std::holds_alternative<AmMethod>(parse_method("am")));
    EXPECT_TRUE(std::holds_alternative<GmMethod>(parse_method("gm")));
    EXPECT_TRUE(std::holds_alternative<BetheMethod>(parse_method("bethe")));
    for (const char* bad : {"", "pm", "pm:", "pm:x", "pm:1e999", "pm:-1:dense", "pm:1:mf", "pm:-1.5:mf", "SN", "sponge"})
        EXPECT_THROW(parse_method(bad), ParameterError) << bad;
    for (const char* name : {"pm:-10", "pm:2", "pm:-1:mf", "sn", "bn", "am", "gm", "bethe"})
        EXPECT_EQ(method_name(parse_method(name)), name);
}
