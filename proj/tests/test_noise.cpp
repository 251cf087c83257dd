#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Dense>
#include <cmath>

#include "spde/noise.hpp"
#include "spde/rng.hpp"

using namespace spde;
using Catch::Approx;

TEST_CASE("dyadic partitions are uniform and exactly nested") {
    const auto parts = dyadic_partitions(1.0, 0, 4);
    REQUIRE(parts.size() == 5);
    CHECK(parts[0].times == std::vector<double>{0.0, 1.0});
    CHECK(parts[1].times == std::vector<double>{0.0, 0.5, 1.0});
    for (std::size_t k = 0; k + 1 < parts.size(); ++k) {
        // Every coarse time must appear bitwise at the next level.
        for (std::size_t j = 0; j < parts[k].times.size(); ++j) {
            CHECK(parts[k].times[j] == parts[k + 1].times[2 * j]);
        }
    }
    CHECK(is_refinement(parts[1], parts[4]));
    CHECK_FALSE(is_refinement(parts[4], parts[1]));
}

TEST_CASE("dyadic mesh halves per level") {
    const auto parts = dyadic_partitions(2.0, 10, 10);
    CHECK(parts[0].mesh() == Approx(2.0 / 1024.0));
    CHECK(parts[0].intervals() == 1024);
}

TEST_CASE("dyadic level cap guards memory") {
    CHECK_THROWS_AS(dyadic_partitions(1.0, 0, 25), LevelTooFine);
}

TEST_CASE("covariance validation") {
    Eigen::MatrixXd q(2, 2);
    q << 1.0, 2.0, 2.0, 1.0;  // eigenvalues 3, -1
    CHECK_THROWS_AS(NoiseModel::constant(2, q, Eigen::MatrixXd::Identity(2, 2)),
                    FormNotPsd);

    Eigen::MatrixXd ok(2, 2);
    ok << 2.0, 1.0, 1.0, 2.0;
    const NoiseModel noise =
        NoiseModel::constant(2, ok, Eigen::MatrixXd::Identity(2, 2));
    CHECK(noise.trace() == Approx(4.0));

    // Spectral data reconstructs q.
    Eigen::MatrixXd recon = Eigen::MatrixXd::Zero(2, 2);
    for (const auto& [lambda, u] : noise.q_eigs()) {
        recon += lambda * u * u.transpose();
    }
    CHECK((recon - ok).cwiseAbs().maxCoeff() < 1e-10 * ok.norm());
}

TEST_CASE("zero covariance gives exactly zero increments") {
    const NoiseModel noise = NoiseModel::zero(3, 2);
    const Partition p = uniform_partition(1.0, 16);
    const Eigen::MatrixXd inc = sample_increments(noise, p, 7);
    CHECK(inc.isZero(0.0));
}

TEST_CASE("increments are a pure function of seed, partition, and noise") {
    const NoiseModel noise =
        NoiseModel::constant(2, Eigen::MatrixXd::Identity(2, 2),
                             Eigen::MatrixXd::Identity(2, 2));
    const Partition p = uniform_partition(1.0, 64);
    const Eigen::MatrixXd a = sample_increments(noise, p, 99);
    const Eigen::MatrixXd b = sample_increments(noise, p, 99);
    CHECK(a == b);
    const Eigen::MatrixXd c = sample_increments(noise, p, 100);
    CHECK(a != c);
}

TEST_CASE("scaled increments have unit empirical variance") {
    const NoiseModel noise = NoiseModel::constant(
        1, Eigen::MatrixXd::Identity(1, 1), Eigen::MatrixXd::Identity(1, 1));
    const auto parts = dyadic_partitions(1.0, 10, 10);
    const double dt = 1.0 / 1024.0;
    double sum = 0.0;
    double sum_sq = 0.0;
    int count = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        const Eigen::MatrixXd inc = sample_increments(noise, parts[0], seed);
        for (Eigen::Index j = 0; j < inc.cols(); ++j) {
            const double x = inc(0, j) / std::sqrt(dt);
            sum += x;
            sum_sq += x * x;
            ++count;
        }
    }
    const double mean = sum / count;
    const double var = sum_sq / count - mean * mean;
    CHECK(std::abs(var - 1.0) < 3.0 * std::sqrt(2.0 / count));
}

TEST_CASE("empirical increment covariance converges to Q") {
    Eigen::MatrixXd q(2, 2);
    q << 1.0, 0.6, 0.6, 0.5;
    const NoiseModel noise =
        NoiseModel::constant(2, q, Eigen::MatrixXd::Identity(2, 2));
    const Partition p = uniform_partition(1.0, 256);
    Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(2, 2);
    int count = 0;
    const double dt = 1.0 / 256.0;
    for (std::uint64_t seed = 0; seed < 64; ++seed) {
        const Eigen::MatrixXd inc = sample_increments(noise, p, seed);
        for (Eigen::Index j = 0; j < inc.cols(); ++j) {
            cov += inc.col(j) * inc.col(j).transpose() / dt;
            ++count;
        }
    }
    cov /= static_cast<double>(count);
    CHECK((cov - q).cwiseAbs().maxCoeff() < 4.0 / std::sqrt(static_cast<double>(count)));
}

TEST_CASE("nested increments aggregate the finest level exactly") {
    const NoiseModel noise = NoiseModel::constant(
        1, Eigen::MatrixXd::Identity(1, 1), Eigen::MatrixXd::Identity(1, 1));
    const auto parts = dyadic_partitions(1.0, 3, 6);
    const auto incs = nested_increments(noise, parts, 5);
    REQUIRE(incs.size() == 4);
    // Column j at level k equals the sum of the matching block at the top level.
    const Eigen::MatrixXd& fine = incs.back();
    for (std::size_t k = 0; k < incs.size(); ++k) {
        const int ratio = 1 << (6 - parts[k].level);
        for (Eigen::Index j = 0; j < incs[k].cols(); ++j) {
            double block = 0.0;
            for (int r = 0; r < ratio; ++r) {
                block += fine(0, j * ratio + r);
            }
            CHECK(incs[k](0, j) == Approx(block).margin(1e-15));
        }
    }
}

TEST_CASE("nested increments reject non-nested partitions") {
    const NoiseModel noise = NoiseModel::constant(
        1, Eigen::MatrixXd::Identity(1, 1), Eigen::MatrixXd::Identity(1, 1));
    std::vector<Partition> parts = {uniform_partition(1.0, 3, 0),
                                    uniform_partition(1.0, 8, 1)};
    CHECK_THROWS_AS(nested_increments(noise, parts, 1), PartitionNotNested);
}

TEST_CASE("left-point integral of zero is zero") {
    const Eigen::MatrixXd inc = Eigen::MatrixXd::Random(1, 8);
    std::vector<Eigen::MatrixXd> z(8, Eigen::MatrixXd::Zero(1, 1));
    const auto out = ito_integral(z, inc);
    CHECK(out.terminal(0) == 0.0);
    CHECK(out.path.isZero(0.0));
}

TEST_CASE("left-point integral of one telescopes to the driving path") {
    const NoiseModel noise = NoiseModel::constant(
        1, Eigen::MatrixXd::Identity(1, 1), Eigen::MatrixXd::Identity(1, 1));
    const Partition p = uniform_partition(1.0, 32);
    const Eigen::MatrixXd inc = sample_increments(noise, p, 3);
    std::vector<Eigen::MatrixXd> z(32, Eigen::MatrixXd::Identity(1, 1));
    const auto out = ito_integral(z, inc);
    double w = 0.0;
    for (Eigen::Index j = 0; j < inc.cols(); ++j) {
        w += inc(0, j);
        CHECK(out.path(0, j + 1) == Approx(w));
    }
}

TEST_CASE("integral length mismatch is rejected") {
    std::vector<Eigen::MatrixXd> z(4, Eigen::MatrixXd::Identity(1, 1));
    CHECK_THROWS_AS(ito_integral(z, Eigen::MatrixXd::Zero(1, 5)), DimensionMismatch);
}

TEST_CASE("isometry for a deterministic step integrand") {
    // E |int Z dW|^2 against the exact discrete value sum dt |Z_j|_HS^2.
    const NoiseModel noise = NoiseModel::constant(
        1, Eigen::MatrixXd::Identity(1, 1), Eigen::MatrixXd::Identity(1, 1));
    const int level = 6;
    const auto parts = dyadic_partitions(1.0, level, level);
    const Partition& p = parts[0];
    const int n = p.intervals();
    const double dt = 1.0 / n;

    std::vector<Eigen::MatrixXd> z;
    double target = 0.0;
    for (int j = 0; j < n; ++j) {
        Eigen::MatrixXd zj(1, 1);
        zj(0, 0) = p.times[static_cast<std::size_t>(j)];
        z.push_back(zj);
        target += dt * zj(0, 0) * zj(0, 0);
    }

    const int n_paths = 20000;
    double sum = 0.0;
    double sum_sq = 0.0;
    for (int i = 0; i < n_paths; ++i) {
        const Eigen::MatrixXd inc =
            sample_increments(noise, p, path_seed(2024, static_cast<std::uint64_t>(i)));
        const double terminal = ito_integral(z, inc).terminal(0);
        sum += terminal * terminal;
        sum_sq += terminal * terminal * terminal * terminal;
    }
    const double mean = sum / n_paths;
    const double var = sum_sq / n_paths - mean * mean;
    const double se = std::sqrt(var / n_paths);
    CHECK(std::abs(mean - target) <= 3.0 * se);
}

TEST_CASE("quadratic variation of a constant path vanishes") {
    const auto parts = dyadic_partitions(1.0, 2, 5);
    auto sampler = [](const Partition& p) {
        return Eigen::MatrixXd::Ones(1, static_cast<Eigen::Index>(p.times.size()));
    };
    const double targets[] = {0.5, 1.0};
    const auto est = quadratic_variation(sampler, parts, Eigen::MatrixXd::Identity(1, 1),
                                         targets);
    for (const auto& level : est.per_level) {
        for (double v : level) {
            CHECK(v == 0.0);
        }
    }
}

TEST_CASE("quadratic variation of a smooth path decays like the mesh") {
    const auto parts = dyadic_partitions(1.0, 4, 10);
    auto sampler = [](const Partition& p) {
        Eigen::MatrixXd path(1, static_cast<Eigen::Index>(p.times.size()));
        for (std::size_t j = 0; j < p.times.size(); ++j) {
            path(0, static_cast<Eigen::Index>(j)) = p.times[j];
        }
        return path;
    };
    const double targets[] = {1.0};
    const auto est = quadratic_variation(sampler, parts, Eigen::MatrixXd::Identity(1, 1),
                                         targets);
    for (std::size_t k = 0; k < est.per_level.size(); ++k) {
        const double mesh = 1.0 / static_cast<double>(1 << est.levels[k]);
        CHECK(est.per_level[k][0] == Approx(mesh));  // sum of dt^2 = mesh * T
    }
}

TEST_CASE("quadratic variation of a Wiener path estimates t at fine levels") {
    const NoiseModel noise = NoiseModel::constant(
        1, Eigen::MatrixXd::Identity(1, 1), Eigen::MatrixXd::Identity(1, 1));
    const auto parts = dyadic_partitions(1.0, 6, 14);
    double mean_qv_half = 0.0;
    double mean_qv_one = 0.0;
    const int n_seeds = 40;
    for (int s = 0; s < n_seeds; ++s) {
        const auto incs =
            nested_increments(noise, parts, path_seed(7, static_cast<std::uint64_t>(s)));
        auto sampler = [&](const Partition& p) {
            for (std::size_t k = 0; k < parts.size(); ++k) {
                if (parts[k].level == p.level) {
                    Eigen::MatrixXd path(1, static_cast<Eigen::Index>(p.times.size()));
                    path(0, 0) = 0.0;
                    for (Eigen::Index j = 0; j < incs[k].cols(); ++j) {
                        path(0, j + 1) = path(0, j) + incs[k](0, j);
                    }
                    return path;
                }
            }
            throw std::logic_error("unknown level");
        };
        const double targets[] = {0.5, 1.0};
        const auto est = quadratic_variation(sampler, parts,
                                             Eigen::MatrixXd::Identity(1, 1), targets);
        mean_qv_half += est.per_level.back()[0];
        mean_qv_one += est.per_level.back()[1];
    }
    mean_qv_half /= n_seeds;
    mean_qv_one /= n_seeds;
    CHECK(std::abs(mean_qv_half - 0.5) < 0.05 * 0.5 + 0.01);
    CHECK(std::abs(mean_qv_one - 1.0) < 0.05);

    // Estimates are nondecreasing in t at every level.
    CHECK(mean_qv_half <= mean_qv_one);
}

TEST_CASE("quadratic variation rejects non-nested families") {
    std::vector<Partition> parts = {uniform_partition(1.0, 3, 0),
                                    uniform_partition(1.0, 7, 1)};
    auto sampler = [](const Partition& p) {
        return Eigen::MatrixXd::Zero(1, static_cast<Eigen::Index>(p.times.size()));
    };
    const double targets[] = {1.0};
    CHECK_THROWS_AS(
        quadratic_variation(sampler, parts, Eigen::MatrixXd::Identity(1, 1), targets),
        PartitionNotNested);
}

TEST_CASE("constant-integrand quadratic variation converges with level") {
    // M = int Z dW with constant Z has QV(T) -> T * |Z|_HS^2; the error should
    // shrink by roughly sqrt(2) per level on average.
    Eigen::MatrixXd z(1, 1);
    z << 2.0;
    const NoiseModel noise =
        NoiseModel::constant(1, Eigen::MatrixXd::Identity(1, 1), z);
    const auto parts = dyadic_partitions(1.0, 6, 12);
    const double target = 4.0;

    std::vector<double> mean_err(parts.size(), 0.0);
    const int n_seeds = 64;
    for (int s = 0; s < n_seeds; ++s) {
        const auto incs =
            nested_increments(noise, parts, path_seed(11, static_cast<std::uint64_t>(s)));
        for (std::size_t k = 0; k < parts.size(); ++k) {
            double qv = 0.0;
            for (Eigen::Index j = 0; j < incs[k].cols(); ++j) {
                const double dm = 2.0 * incs[k](0, j);
                qv += dm * dm;
            }
            mean_err[k] += std::abs(qv - target);
        }
    }
    double ratio_sum = 0.0;
    for (std::size_t k = 0; k + 1 < mean_err.size(); ++k) {
        ratio_sum += mean_err[k] / mean_err[k + 1];
    }
    const double mean_ratio = ratio_sum / static_cast<double>(mean_err.size() - 1);
    CHECK(mean_ratio > 1.3);
    CHECK(mean_ratio < 3.0);
}
