#include "spm/linalg.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace spm;

namespace {

Matrix random_matrix(Index rows, Index cols, std::mt19937_64& rng) {
    std::normal_distribution<double> nd(0.0, 1.0);
    Matrix m(rows, cols);
    for (Index j = 0; j < cols; ++j)
        for (Index i = 0; i < rows; ++i) m(i, j) = nd(rng);
    return m;
}

SymMatrix random_symmetric(Index n, std::mt19937_64& rng) { return SymMatrix::symmetrize(random_matrix(n, n, rng)); }

SymMatrix random_spd(Index n, std::mt19937_64& rng, double floor = 0.5) {
    const Matrix g = random_matrix(n, n, rng);
    Matrix a = g * g.transpose() / static_cast<double>(n);
    a.diagonal().array() += floor;
    return SymMatrix::symmetrize(a);
}

Matrix random_orthonormal(Index n, Index k, std::mt19937_64& rng) { return orthonormalize(random_matrix(n, k, rng)); }

// Real roots of x³ + a x² + b x + c with three real roots (trigonometric form).
std::array<double, 3> cubic_roots(double a, double b, double c) {
    const double q = (a * a - 3.0 * b) / 9.0;
    const double r = (2.0 * a * a * a - 9.0 * a * b + 27.0 * c) / 54.0;
    std::array<double, 3> x{};
    if (q <= 0) {
        x.fill(-a / 3.0);
        return x;
    }
    const double ratio = std::clamp(r / std::sqrt(q * q * q), -1.0, 1.0);
    const double theta = std::acos(ratio);
    const double s = -2.0 * std::sqrt(q);
    x[0] = s * std::cos(theta / 3.0) - a / 3.0;
    x[1] = s * std::cos((theta + 2.0 * std::numbers::pi) / 3.0) - a / 3.0;
    x[2] = s * std::cos((theta - 2.0 * std::numbers::pi) / 3.0) - a / 3.0;
    std::sort(x.begin(), x.end());
    return x;
}

} // namespace

TEST(SymMatrix, RejectsAsymmetricAndNonFinite) {
    Matrix m(2, 2);
    m << 1, 2, 3, 4;
    EXPECT_THROW(SymMatrix{m}, ParameterError);
    m << 1, std::nan(""), std::nan(""), 4;
    EXPECT_THROW(SymMatrix{m}, DomainError);
    EXPECT_THROW(SymMatrix{Matrix(2, 3)}, ParameterError);
}

TEST(Eigh, DiagonalMatrixGivesPermutedIdentity) {
    Vector d(3);
    d << 3, 1, 2;
    const auto f = eigh(SymMatrix::diagonal(d));
    EXPECT_DOUBLE_EQ(f.values[0], 1.0);
    EXPECT_DOUBLE_EQ(f.values[1], 2.0);
    EXPECT_DOUBLE_EQ(f.values[2], 3.0);
    EXPECT_NEAR(std::abs(f.vectors(1, 0)), 1.0, 1e-15);
    EXPECT_NEAR(std::abs(f.vectors(2, 1)), 1.0, 1e-15);
    EXPECT_NEAR(std::abs(f.vectors(0, 2)), 1.0, 1e-15);
}

TEST(Eigh, SwapMatrixHasPlusMinusOne) {
    Matrix m(2, 2);
    m << 0, 1, 1, 0;
    const auto e = eigh(SymMatrix(m));
    EXPECT_NEAR(e.values[0], -1.0, 1e-15);
    EXPECT_NEAR(e.values[1], 1.0, 1e-15);
}

TEST(Eigh, IntegerCubicMatchesCharacteristicPolynomialRoots) {
    std::mt19937_64 rng(11);
    std::uniform_int_distribution<int> ud(-9, 9);
    for (int trial = 0; trial < 200; ++trial) {
        Matrix m(3, 3);
        for (int i = 0; i < 3; ++i)
            for (int j = i; j < 3; ++j) m(i, j) = m(j, i) = ud(rng);
        // det(λI − A) = λ³ − tr λ² + c₂ λ − det
        const double tr = m.trace();
        const double c2 = m(0, 0) * m(1, 1) + m(0, 0) * m(2, 2) + m(1, 1) * m(2, 2) - m(0, 1) * m(0, 1) -
                          m(0, 2) * m(0, 2) - m(1, 2) * m(1, 2);
        const double det = m(0, 0) * (m(1, 1) * m(2, 2) - m(1, 2) * m(1, 2)) -
                           m(0, 1) * (m(0, 1) * m(2, 2) - m(1, 2) * m(0, 2)) +
                           m(0, 2) * (m(0, 1) * m(1, 2) - m(1, 1) * m(0, 2));
        const auto roots = cubic_roots(-tr, c2, -det);
        const auto e = eigh(SymMatrix(m));
        for (int i = 0; i < 3; ++i) EXPECT_NEAR(e.values[i], roots[static_cast<std::size_t>(i)], 1e-8) << m;
    }
}

TEST(Eigh, OverflowingInputRejected) {
    const SymMatrix a(Matrix::Constant(2, 2, 1e308));
    EXPECT_THROW(eigh(a + a), DomainError);
}

TEST(Eigh, InvariantsAndReconstructionUpTo200) {
    std::mt19937_64 rng(5);
    for (Index n : {1, 2, 7, 50, 200}) {
        const auto a = random_symmetric(n, rng);
        const auto e = eigh(a);
        const double norm = std::max(1.0, spectral_norm(a));
        EXPECT_LE(orthonormality_defect(e.vectors), 1e-10);
        for (Index j = 0; j < n; ++j) {
            EXPECT_LE((a.matrix() * e.vectors.col(j) - e.values[j] * e.vectors.col(j)).norm(), 1e-8 * norm);
            if (j > 0) {
                EXPECT_LE(e.values[j - 1], e.values[j]);
            }
        }
        EXPECT_LE((e.reconstruct() - a.matrix()).cwiseAbs().maxCoeff(), 1e-8 * norm);
    }
}

TEST(Eigh, Deterministic) {
    std::mt19937_64 rng(9);
    const auto a = random_symmetric(40, rng);
    const auto e1 = eigh(a), e2 = eigh(a);
    EXPECT_EQ(e1.values, e2.values);
    EXPECT_EQ(e1.vectors, e2.vectors);
}

TEST(JacobiEigh, AgreesWithEigh) {
    std::mt19937_64 rng(21);
    for (Index n : {2, 5, 20, 60}) {
        const auto a = random_symmetric(n, rng);
        const auto ej = jacobi_eigh(a);
        const auto eh = eigh(a);
        EXPECT_LE((ej.values - eh.values).cwiseAbs().maxCoeff(), 1e-10 * std::max(1.0, spectral_norm(a)));
        EXPECT_LE(orthonormality_defect(ej.vectors), 1e-10);
        EXPECT_LE((ej.reconstruct() - a.matrix()).cwiseAbs().maxCoeff(), 1e-9 * std::max(1.0, spectral_norm(a)));
    }
}

TEST(SymPower, IdentityIsFixedPoint) {
    const auto r = sym_power(SymMatrix::identity(4), -7.0, 1.0);
    EXPECT_LE((r.matrix() - Matrix::Identity(4, 4)).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(SymPower, DiagonalSquareRoot) {
    Vector d(2);
    d << 4, 9;
    const auto r = sym_power(SymMatrix::diagonal(d), 0.5);
    EXPECT_NEAR(r(0, 0), 2.0, 1e-14);
    EXPECT_NEAR(r(1, 1), 3.0, 1e-14);
    EXPECT_NEAR(r(0, 1), 0.0, 1e-14);
}

TEST(SymPower, InverseByMultiplicationCheck) {
    std::mt19937_64 rng(3);
    for (int t = 0; t < 10; ++t) {
        const auto a = random_spd(12, rng);
        const auto inv = sym_power(a, -1.0, 1e-3);
        EXPECT_LE((a.matrix() * inv.matrix() - Matrix::Identity(12, 12)).cwiseAbs().maxCoeff(), 1e-8);
    }
}

TEST(SymPower, GroupLaw) {
    std::mt19937_64 rng(4);
    for (double p : {-3.0, -1.0, 2.0, 3.0}) {
        const auto a = random_spd(15, rng);
        const auto back = sym_power(sym_power(a, p), 1.0 / p);
        EXPECT_LE((back.matrix() - a.matrix()).cwiseAbs().maxCoeff(), 1e-7) << "p=" << p;
    }
}

TEST(SymPower, BelowFloorIsDomainErrorNamingEigenvalue) {
    Vector d(2);
    d << 0.5, 2.0;
    try {
        sym_power(SymMatrix::diagonal(d), -1.0, 1.0);
        FAIL() << "expected DomainError";
    } catch (const DomainError& e) {
        EXPECT_NE(std::string(e.what()).find("0.5"), std::string::npos);
    }
    d << -1.0, 2.0;
    EXPECT_THROW(sym_power(SymMatrix::diagonal(d), 0.5), DomainError);
    EXPECT_THROW(sym_power(SymMatrix::diagonal(d), -2.0), DomainError);
    // Integer powers need no definiteness.
    const auto sq = sym_power(SymMatrix::diagonal(d), 2.0);
    EXPECT_NEAR(sq(0, 0), 1.0, 1e-14);
}

TEST(SymPower, RoundoffBelowFloorIsRescued) {
    Vector d(2);
    d << 1.0 - 1e-14, 2.0;
    const auto r = sym_power(SymMatrix::diagonal(d), -1.0, 1.0);
    EXPECT_NEAR(r(0, 0), 1.0, 1e-13);
}

TEST(SpectralNorm, Examples) {
    Vector d(2);
    d << -5, 2;
    EXPECT_DOUBLE_EQ(spectral_norm(SymMatrix::diagonal(d)), 5.0);
    EXPECT_DOUBLE_EQ(spectral_norm(SymMatrix::zero(3)), 0.0);
}

TEST(SpectralNorm, MatchesSingularValueOracle) {
    std::mt19937_64 rng(8);
    for (int t = 0; t < 5; ++t) {
        const auto a = random_symmetric(30, rng);
        Eigen::JacobiSVD<Matrix> svd(a.matrix());
        EXPECT_NEAR(spectral_norm(a), svd.singularValues()(0), 1e-8 * svd.singularValues()(0));
    }
}

TEST(GeometricMean, EqualArguments) {
    std::mt19937_64 rng(12);
    const auto a = random_spd(6, rng);
    EXPECT_LE((geometric_mean(a, a).matrix() - a.matrix()).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(GeometricMean, CommutingDiagonals) {
    Vector a(2), b(2);
    a << 1, 4;
    b << 9, 1;
    const auto g = geometric_mean(SymMatrix::diagonal(a), SymMatrix::diagonal(b));
    EXPECT_NEAR(g(0, 0), 3.0, 1e-13);
    EXPECT_NEAR(g(1, 1), 2.0, 1e-13);
    EXPECT_NEAR(g(0, 1), 0.0, 1e-13);
}

TEST(GeometricMean, RiccatiIdentityAndSymmetry) {
    std::mt19937_64 rng(13);
    for (int t = 0; t < 20; ++t) {
        const auto a = random_spd(8, rng);
        const auto b = random_spd(8, rng);
        const auto g = geometric_mean(a, b);
        const Matrix ainv = a.matrix().inverse();
        EXPECT_LE((g.matrix() * ainv * g.matrix() - b.matrix()).cwiseAbs().maxCoeff(), 1e-6);
        EXPECT_LE((g.matrix() - geometric_mean(b, a).matrix()).cwiseAbs().maxCoeff(), 1e-7);
        EXPECT_GT(eigvalsh(g)[0], 0.0);
    }
}

TEST(GeometricMean, InvertedCompositionIsNotTheMean) {
    // A^{-1/2}(A^{1/2} B A^{1/2})^{1/2} A^{-1/2} reduces to B^{1/2}A^{-1/2} for
    // commuting inputs, so it is not the geometric mean even there.
    Vector da(2), db(2);
    da << 1, 4;
    db << 9, 1;
    const SymMatrix a = SymMatrix::diagonal(da), b = SymMatrix::diagonal(db);
    const auto ah = sym_power(a, 0.5), aih = sym_power(a, -0.5);
    const auto inner = sym_power(SymMatrix::symmetrize(ah.matrix() * b.matrix() * ah.matrix()), 0.5);
    const Matrix alt = aih.matrix() * inner.matrix() * aih.matrix();
    EXPECT_NEAR(alt(0, 0), 3.0, 1e-13);
    EXPECT_NEAR(alt(1, 1), 0.5, 1e-13);
    const auto g = geometric_mean(a, b);
    EXPECT_NEAR(g(1, 1), 2.0, 1e-13);
    EXPECT_GT((alt * a.matrix().inverse() * alt - b.matrix()).cwiseAbs().maxCoeff(), 0.5);
}

TEST(GeometricMean, IllConditionedArgumentEitherSide) {
    // Shared eigenbasis, so A#B = Q diag(√(a_i b_i)) Qᵀ exactly.
    std::mt19937_64 rng(14);
    const Matrix q = random_orthonormal(10, 10, rng);
    Vector da(10), db(10);
    for (Index i = 0; i < 10; ++i) {
        da[i] = i == 0 ? 1e-6 : 1.0 + 0.1 * static_cast<double>(i);
        db[i] = 0.5 + 0.15 * static_cast<double>(i);
    }
    const auto a = SymMatrix::symmetrize(q * da.asDiagonal() * q.transpose());
    const auto b = SymMatrix::symmetrize(q * db.asDiagonal() * q.transpose());
    const Matrix expect = q * (da.cwiseProduct(db)).cwiseSqrt().asDiagonal() * q.transpose();
    EXPECT_LE((geometric_mean(a, b).matrix() - expect).norm(), 1e-13);
    EXPECT_LE((geometric_mean(b, a).matrix() - expect).norm(), 1e-13);
}

TEST(GeometricMean, SingularInputRejected) {
    Vector d(2);
    d << 0, 1;
    EXPECT_THROW(geometric_mean(SymMatrix::diagonal(d), SymMatrix::identity(2)), DomainError);
    EXPECT_THROW(geometric_mean(SymMatrix::identity(2), SymMatrix::diagonal(d)), DomainError);
}

TEST(LogEuclideanMean, EqualsGeometricMeanForCommutingInputs) {
    Vector a(3), b(3);
    a << 1, 4, 2;
    b << 9, 1, 8;
    const auto le = log_euclidean_mean(SymMatrix::diagonal(a), SymMatrix::diagonal(b));
    EXPECT_NEAR(le(0, 0), 3.0, 1e-12);
    EXPECT_NEAR(le(1, 1), 2.0, 1e-12);
    EXPECT_NEAR(le(2, 2), 4.0, 1e-12);
}

TEST(SubspaceDistance, Examples) {
    std::mt19937_64 rng(15);
    const Matrix u = random_orthonormal(10, 3, rng);
    EXPECT_NEAR(subspace_distance(u, u), 0.0, 1e-14);
    const Matrix r = random_orthonormal(3, 3, rng);
    EXPECT_NEAR(subspace_distance(u, u * r), 0.0, 1e-13);
    const Matrix full = random_orthonormal(10, 6, rng);
    EXPECT_NEAR(subspace_distance(full.leftCols(3), full.rightCols(3)), std::sqrt(2.0), 1e-12);
}

TEST(SubspaceDistance, MatchesPrincipalAngleIdentity) {
    std::mt19937_64 rng(16);
    for (int t = 0; t < 50; ++t) {
        const Matrix u = random_orthonormal(12, 3, rng);
        const Matrix v = random_orthonormal(12, 3, rng);
        Eigen::JacobiSVD<Matrix> svd(u.transpose() * v);
        const double cos_min = svd.singularValues().minCoeff();
        EXPECT_NEAR(subspace_distance(u, v), std::sqrt(2.0 * (1.0 - cos_min)), 1e-10);
    }
}

TEST(SubspaceDistance, MetricProperties) {
    std::mt19937_64 rng(17);
    for (int t = 0; t < 100; ++t) {
        const Matrix a = random_orthonormal(8, 2, rng);
        const Matrix b = random_orthonormal(8, 2, rng);
        const Matrix c = random_orthonormal(8, 2, rng);
        const double ab = subspace_distance(a, b), ba = subspace_distance(b, a);
        EXPECT_NEAR(ab, ba, 1e-12);
        EXPECT_LE(ab, subspace_distance(a, c) + subspace_distance(c, b) + 1e-12);
        EXPECT_GT(ab, 1e-6);
    }
}

TEST(SubspaceDistance, SmallPerturbationHasFullAccuracy) {
    std::mt19937_64 rng(18);
    const Matrix u = random_orthonormal(20, 2, rng);
    Matrix v = u;
    v.col(0) += 1e-9 * random_orthonormal(20, 1, rng);
    v = orthonormalize(v);
    const double d = subspace_distance(u, v);
    EXPECT_GT(d, 1e-11);
    EXPECT_LT(d, 2e-9);
}

TEST(SubspaceDistance, RejectsBadInput) {
    EXPECT_THROW(subspace_distance(Matrix::Ones(4, 2), Matrix::Ones(4, 2)), ParameterError);
    EXPECT_THROW(subspace_distance(Matrix::Identity(4, 2), Matrix::Identity(4, 3)), ParameterError);
    // Rank-deficient VᵀU is fine.
    Matrix u = Matrix::Zero(4, 2), v = Matrix::Zero(4, 2);
    u(0, 0) = u(1, 1) = 1;
    v(1, 0) = v(2, 1) = 1;
    EXPECT_NEAR(subspace_distance(u, v), std::sqrt(2.0), 1e-12);
}
