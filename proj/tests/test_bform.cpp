#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Dense>
#include <cmath>

#include "spde/bform.hpp"
#include "spde/noise.hpp"
#include "spde/rng.hpp"
#include "support/rational_gram_schmidt.hpp"

using namespace spde;
using Catch::Approx;

namespace {

std::vector<Eigen::VectorXd> standard_basis(Eigen::Index d) {
    std::vector<Eigen::VectorXd> out;
    for (Eigen::Index i = 0; i < d; ++i) {
        out.push_back(Eigen::VectorXd::Unit(d, i));
    }
    return out;
}

// Deterministic PSD matrix of the requested rank, plus spanning candidates.
Eigen::MatrixXd random_psd(Eigen::Index dim, Eigen::Index rank, std::uint64_t seed) {
    Eigen::MatrixXd m(dim, dim);
    for (Eigen::Index i = 0; i < dim; ++i) {
        for (Eigen::Index j = 0; j < dim; ++j) {
            m(i, j) = counter_normal(seed, static_cast<std::uint64_t>(i),
                                     static_cast<std::uint64_t>(j), 0);
        }
    }
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(m);
    const Eigen::MatrixXd q = qr.householderQ();
    Eigen::VectorXd eigs = Eigen::VectorXd::Zero(dim);
    for (Eigen::Index i = 0; i < rank; ++i) {
        const double x = counter_normal(seed ^ 0xabcdef, static_cast<std::uint64_t>(i), 0, 0);
        eigs(i) = 0.1 + x * x;  // bounded away from zero
    }
    return q * eigs.asDiagonal() * q.transpose();
}

std::vector<Eigen::VectorXd> random_candidates(Eigen::Index dim, std::uint64_t seed) {
    std::vector<Eigen::VectorXd> out;
    for (Eigen::Index k = 0; k < dim; ++k) {
        Eigen::VectorXd v(dim);
        for (Eigen::Index i = 0; i < dim; ++i) {
            v(i) = counter_normal(seed, static_cast<std::uint64_t>(k),
                                  static_cast<std::uint64_t>(i), 1);
        }
        out.push_back(v);
    }
    return out;
}

}  // namespace

TEST_CASE("construction validates symmetry and positivity") {
    Eigen::MatrixXd bad(2, 2);
    bad << 1.0, 0.0, 0.0, -1.0;
    CHECK_THROWS_AS(BForm(bad), FormNotPsd);

    Eigen::MatrixXd slightly_asym(2, 2);
    slightly_asym << 1.0, 0.5, 0.5 + 1e-13, 1.0;
    const BForm b(slightly_asym);
    CHECK(b.matrix()(0, 1) == b.matrix()(1, 0));
}

TEST_CASE("identity form reproduces the standard basis") {
    const BForm b = BForm::identity(2);
    const auto basis = b_gram_schmidt(b, standard_basis(2));
    REQUIRE(basis.size() == 2);
    CHECK(basis.vectors[0].isApprox(Eigen::Vector2d(1, 0)));
    CHECK(basis.vectors[1].isApprox(Eigen::Vector2d(0, 1)));
    CHECK(basis.drop_log.empty());
}

TEST_CASE("rank-one diagonal form drops the null direction") {
    Eigen::MatrixXd m(2, 2);
    m << 1.0, 0.0, 0.0, 0.0;
    const auto basis = b_gram_schmidt(BForm(m), standard_basis(2));
    REQUIRE(basis.size() == 1);
    CHECK(basis.vectors[0].isApprox(Eigen::Vector2d(1, 0)));
    REQUIRE(basis.drop_log.size() == 1);
    CHECK(basis.drop_log[0] == 1);
}

TEST_CASE("2x2 worked case matches the exact values") {
    Eigen::MatrixXd m(2, 2);
    m << 2.0, 1.0, 1.0, 1.0;
    const auto basis = b_gram_schmidt(BForm(m), standard_basis(2));
    REQUIRE(basis.size() == 2);
    // e1 = (1/sqrt(2), 0), e2 = (-sqrt(2)/2, sqrt(2)).
    CHECK(basis.vectors[0](0) == Approx(1.0 / std::sqrt(2.0)));
    CHECK(basis.vectors[0](1) == 0.0);
    CHECK(basis.vectors[1](0) == Approx(-std::sqrt(2.0) / 2.0));
    CHECK(basis.vectors[1](1) == Approx(std::sqrt(2.0)));

    const BForm b(m);
    CHECK(std::abs(b.apply(basis.vectors[0]).dot(basis.vectors[1])) < 1e-14);
    CHECK(b.energy(basis.vectors[1]) == Approx(1.0));
}

TEST_CASE("empty candidate list is rejected") {
    CHECK_THROWS_AS(b_gram_schmidt(BForm::identity(2), {}), EmptyInput);
}

TEST_CASE("candidate order is respected") {
    const BForm b = BForm::identity(2);
    const std::vector<Eigen::VectorXd> reversed = {Eigen::VectorXd::Unit(2, 1),
                                                   Eigen::VectorXd::Unit(2, 0)};
    const auto basis = b_gram_schmidt(b, reversed);
    REQUIRE(basis.size() == 2);
    CHECK(basis.vectors[0].isApprox(Eigen::Vector2d(0, 1)));
    CHECK(basis.vectors[1].isApprox(Eigen::Vector2d(1, 0)));
}

TEST_CASE("basis size equals the numerical rank on random semidefinite forms") {
    for (std::uint64_t trial = 0; trial < 24; ++trial) {
        const Eigen::Index dim = 3 + static_cast<Eigen::Index>(trial * 7 % 48);
        const Eigen::Index rank = static_cast<Eigen::Index>(trial * 5 % (dim + 1));
        const BForm b(random_psd(dim, rank, 1000 + trial));
        const auto basis = b_gram_schmidt(b, random_candidates(dim, 2000 + trial));
        CHECK(basis.size() == rank);
        for (int i = 0; i < basis.size(); ++i) {
            for (int j = 0; j < basis.size(); ++j) {
                const double pairing = b.apply(basis.vectors[i]).dot(basis.vectors[j]);
                CHECK(std::abs(pairing - (i == j ? 1.0 : 0.0)) < 1e-8);
            }
        }
    }
}

TEST_CASE("exact-arithmetic reference agrees on small integer forms") {
    // B = M^T M for integer M, candidates = standard basis.
    const std::vector<std::vector<std::vector<double>>> cases = {
        {{2, 1}, {1, 1}},
        {{1, 0, 0}, {0, 0, 0}, {0, 0, 4}},
        {{5, 2, 1}, {2, 2, 0}, {1, 0, 1}},
        {{4, 0, 2, 0}, {0, 1, 0, 1}, {2, 0, 2, 0}, {0, 1, 0, 2}},
    };
    for (const auto& entries : cases) {
        const auto d = static_cast<Eigen::Index>(entries.size());
        Eigen::MatrixXd m(d, d);
        oracle::RationalMatrix rb(entries.size());
        for (Eigen::Index i = 0; i < d; ++i) {
            for (Eigen::Index j = 0; j < d; ++j) {
                const double value = entries[static_cast<std::size_t>(i)]
                                            [static_cast<std::size_t>(j)];
                m(i, j) = value;
                rb[static_cast<std::size_t>(i)].push_back(
                    oracle::Rational(static_cast<long long>(value)));
            }
        }
        std::vector<oracle::RationalVector> rational_candidates;
        for (Eigen::Index k = 0; k < d; ++k) {
            oracle::RationalVector e(static_cast<std::size_t>(d), oracle::Rational(0));
            e[static_cast<std::size_t>(k)] = 1;
            rational_candidates.push_back(e);
        }
        const auto exact = oracle::exact_b_gram_schmidt(rb, rational_candidates);
        const auto expect = oracle::normalized(exact);

        const auto basis = b_gram_schmidt(BForm(m), standard_basis(d));
        REQUIRE(basis.size() == static_cast<int>(expect.size()));
        for (std::size_t k = 0; k < expect.size(); ++k) {
            for (Eigen::Index i = 0; i < d; ++i) {
                CHECK(std::abs(basis.vectors[k](i) -
                               expect[k][static_cast<std::size_t>(i)]) < 1e-12);
            }
        }
    }
}

TEST_CASE("parseval expansion in the Euclidean case") {
    const BForm b = BForm::identity(3);
    const auto basis = b_gram_schmidt(b, standard_basis(3));
    const Eigen::Vector3d x(1.0, -2.0, 3.0);
    const auto out = b_parseval(b, basis, x);
    CHECK(out.energy == Approx(x.squaredNorm()));
    CHECK(out.residual < 1e-14);
}

TEST_CASE("parseval with the zero form") {
    const BForm b = BForm::zero(2);
    const auto basis = b_gram_schmidt(b, standard_basis(2));
    CHECK(basis.size() == 0);
    const auto out = b_parseval(b, basis, Eigen::Vector2d(1.0, 2.0));
    CHECK(out.energy == 0.0);
    CHECK(out.reconstruction.isZero());
    CHECK(out.residual == 0.0);
}

TEST_CASE("parseval worked case") {
    Eigen::MatrixXd m(2, 2);
    m << 2.0, 1.0, 1.0, 1.0;
    const BForm b(m);
    const auto basis = b_gram_schmidt(b, standard_basis(2));
    const Eigen::Vector2d x(1.0, 1.0);
    const auto out = b_parseval(b, basis, x);
    CHECK(std::abs(out.energy - 5.0) < 1e-12);  // x^T B x = 5
    CHECK(out.residual < 1e-12);
}

TEST_CASE("parseval rejects mismatched dimensions") {
    const BForm b2 = BForm::identity(2);
    const BForm b3 = BForm::identity(3);
    const auto basis = b_gram_schmidt(b3, standard_basis(3));
    CHECK_THROWS_AS(b_parseval(b2, basis, Eigen::Vector2d(1.0, 1.0)),
                    DimensionMismatch);
}

TEST_CASE("parseval residual stays within the scaled tolerance") {
    for (std::uint64_t trial = 0; trial < 12; ++trial) {
        const Eigen::Index dim = 4 + static_cast<Eigen::Index>(trial * 3 % 40);
        const Eigen::Index rank = static_cast<Eigen::Index>((trial * 7) % (dim + 1));
        const BForm b(random_psd(dim, rank, 77 + trial));
        const auto basis = b_gram_schmidt(b, random_candidates(dim, 99 + trial));
        Eigen::VectorXd x(dim);
        for (Eigen::Index i = 0; i < dim; ++i) {
            x(i) = counter_normal(5 + trial, static_cast<std::uint64_t>(i), 0, 2);
        }
        const auto out = b_parseval(b, basis, x);
        const double tol = 1e-8 * (1.0 + b.inf_norm() * x.norm());
        CHECK(out.residual <= tol);
        CHECK(std::abs(out.energy - b.energy(x)) <= tol);
    }
}

TEST_CASE("noise pairing reduces to the Hilbert-Schmidt norm in the Euclidean case") {
    Eigen::MatrixXd phi(2, 2);
    phi << 1.0, 2.0, 3.0, 4.0;
    const NoiseModel noise =
        NoiseModel::constant(2, Eigen::MatrixXd::Identity(2, 2), phi);
    const double value = bzz_pairing(BForm::identity(2), noise,
                                     Eigen::MatrixXd::Identity(2, 2));
    CHECK(value == Approx(30.0));  // 1 + 9 + 4 + 16
}

TEST_CASE("noise pairing vanishes with the zero form") {
    Eigen::MatrixXd phi(2, 2);
    phi << 1.0, 2.0, 3.0, 4.0;
    const NoiseModel noise =
        NoiseModel::constant(2, Eigen::MatrixXd::Identity(2, 2), phi);
    CHECK(bzz_pairing(BForm::zero(2), noise, Eigen::MatrixXd::Identity(2, 2)) == 0.0);
}

TEST_CASE("noise pairing worked case with a singular form") {
    Eigen::MatrixXd phi(2, 2);
    phi << 1.0, 2.0, 3.0, 4.0;  // columns (1,3), (2,4)
    const NoiseModel noise =
        NoiseModel::constant(2, Eigen::MatrixXd::Identity(2, 2), phi);
    Eigen::MatrixXd b(2, 2);
    b << 2.0, 0.0, 0.0, 0.0;
    const double value =
        bzz_pairing(BForm(b), noise, Eigen::MatrixXd::Identity(2, 2));
    CHECK(value == Approx(10.0));  // 2*1^2 + 2*2^2
}

TEST_CASE("noise pairing is linear and monotone in the form") {
    for (std::uint64_t trial = 0; trial < 8; ++trial) {
        const Eigen::Index d = 3;
        const Eigen::Index m = 2;
        Eigen::MatrixXd phi(d, m);
        for (Eigen::Index i = 0; i < d; ++i) {
            for (Eigen::Index j = 0; j < m; ++j) {
                phi(i, j) = counter_normal(31 + trial, static_cast<std::uint64_t>(i),
                                           static_cast<std::uint64_t>(j), 0);
            }
        }
        const Eigen::MatrixXd q = random_psd(m, m, 400 + trial);
        const NoiseModel noise = NoiseModel::constant(d, q, phi);
        const Eigen::MatrixXd w = Eigen::MatrixXd::Identity(d, d);

        const Eigen::MatrixXd b1m = random_psd(d, d, 500 + trial);
        const Eigen::MatrixXd b2m = random_psd(d, d, 600 + trial);
        const double v1 = bzz_pairing(BForm(b1m), noise, w);
        const double v2 = bzz_pairing(BForm(b2m), noise, w);
        const double vsum = bzz_pairing(BForm(b1m + b2m), noise, w);
        CHECK(vsum == Approx(v1 + v2));
        // b1 + b2 - b2 = b1 is PSD, so pairing(b1 + b2) >= pairing(b2).
        CHECK(vsum >= v2 - 1e-12);

        // Hilbert-Schmidt reduction when B equals the W-Gram matrix.
        const Eigen::MatrixXd w_gram = random_psd(d, d, 700 + trial) +
                                       Eigen::MatrixXd::Identity(d, d);
        double hs = 0.0;
        for (const auto& [lambda, u] : noise.spectrum()) {
            const Eigen::VectorXd col = phi * u;
            hs += lambda * col.dot(w_gram * col);
        }
        CHECK(bzz_pairing(BForm(w_gram), noise, w_gram) == Approx(hs));
    }
}
