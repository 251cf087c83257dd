#include "spde/noise.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>

#include "spde/rng.hpp"

namespace spde {

namespace {

constexpr int kMaxLevel = 24;

double time_match_tol(double horizon) {
    return 1e-9 * std::max(1.0, horizon);
}

}  // namespace

double Partition::mesh() const {
    double m = 0.0;
    for (std::size_t j = 0; j + 1 < times.size(); ++j) {
        m = std::max(m, times[j + 1] - times[j]);
    }
    return m;
}

Partition uniform_partition(double T, std::int64_t n, int level) {
    if (T <= 0.0 || n < 1) {
        throw std::invalid_argument("uniform_partition: need T > 0 and n >= 1");
    }
    Partition p;
    p.level = level;
    p.times.resize(static_cast<std::size_t>(n) + 1);
    const double dt = T / static_cast<double>(n);
    for (std::int64_t j = 0; j <= n; ++j) {
        p.times[static_cast<std::size_t>(j)] = static_cast<double>(j) * dt;
    }
    p.times.back() = T;
    return p;
}

std::vector<Partition> dyadic_partitions(double T, int min_level, int max_level) {
    if (T <= 0.0) {
        throw std::invalid_argument("dyadic_partitions: need T > 0");
    }
    if (min_level < 0 || min_level > max_level) {
        throw std::invalid_argument("dyadic_partitions: need 0 <= min_level <= max_level");
    }
    if (max_level > kMaxLevel) {
        throw LevelTooFine("dyadic_partitions: max_level " + std::to_string(max_level) +
                           " exceeds " + std::to_string(kMaxLevel));
    }
    std::vector<Partition> out;
    out.reserve(static_cast<std::size_t>(max_level - min_level) + 1);
    for (int k = min_level; k <= max_level; ++k) {
        Partition p;
        p.level = k;
        const std::int64_t n = std::int64_t{1} << k;
        // T / 2^k is exact, so level k+1 times agree bitwise with level k.
        const double dt = T / static_cast<double>(n);
        p.times.resize(static_cast<std::size_t>(n) + 1);
        for (std::int64_t j = 0; j <= n; ++j) {
            p.times[static_cast<std::size_t>(j)] = static_cast<double>(j) * dt;
        }
        out.push_back(std::move(p));
    }
    return out;
}

bool is_refinement(const Partition& coarse, const Partition& fine) {
    const double tol = time_match_tol(std::max(coarse.horizon(), fine.horizon()));
    std::size_t i = 0;
    for (double t : coarse.times) {
        while (i < fine.times.size() && fine.times[i] < t - tol) {
            ++i;
        }
        if (i == fine.times.size() || std::abs(fine.times[i] - t) > tol) {
            return false;
        }
    }
    return true;
}

NoiseModel::NoiseModel(Eigen::Index state_dim, Eigen::MatrixXd q, PhiFn phi,
                       double psd_tol)
    : d_(state_dim), q_(std::move(q)), phi_(std::move(phi)) {
    if (q_.rows() != q_.cols()) {
        throw DimensionMismatch("NoiseModel: covariance must be square");
    }
    m_ = q_.rows();
    q_ = (0.5 * (q_ + q_.transpose())).eval();

    if (m_ > 0) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(q_);
        if (es.info() != Eigen::Success) {
            throw Error("NoiseModel: eigendecomposition failed");
        }
        const double lambda_max = std::max(0.0, es.eigenvalues().maxCoeff());
        const double scale = std::max(1.0, lambda_max);
        eigs_.reserve(static_cast<std::size_t>(m_));
        for (Eigen::Index i = m_ - 1; i >= 0; --i) {  // descending
            double lambda = es.eigenvalues()(i);
            if (lambda < -psd_tol * scale) {
                throw FormNotPsd("NoiseModel: covariance eigenvalue " +
                                 std::to_string(lambda) + " below -psd_tol");
            }
            lambda = std::max(lambda, 0.0);
            eigs_.emplace_back(lambda, es.eigenvectors().col(i));
            trace_ += lambda;
        }
        const double cut = 1e-14 * lambda_max;
        positive_count_ = 0;
        while (positive_count_ < eigs_.size() && eigs_[positive_count_].first > cut) {
            ++positive_count_;
        }
    }

    if (d_ > 0 && phi_) {
        const Eigen::MatrixXd p0 = phi_(0.0);
        if (p0.rows() != d_ || p0.cols() != m_) {
            throw DimensionMismatch("NoiseModel: phi(t) must be state_dim x noise_dim");
        }
    }
}

NoiseModel NoiseModel::constant(Eigen::Index state_dim, Eigen::MatrixXd q,
                                const Eigen::MatrixXd& phi) {
    return NoiseModel(state_dim, std::move(q),
                      [phi](double) { return phi; });
}

NoiseModel NoiseModel::zero(Eigen::Index state_dim, Eigen::Index noise_dim) {
    return constant(state_dim, Eigen::MatrixXd::Zero(noise_dim, noise_dim),
                    Eigen::MatrixXd::Zero(state_dim, noise_dim));
}

std::span<const std::pair<double, Eigen::VectorXd>> NoiseModel::spectrum() const {
    return {eigs_.data(), positive_count_};
}

Eigen::MatrixXd NoiseModel::phi(double t) const {
    return phi_ ? phi_(t) : Eigen::MatrixXd::Zero(d_, m_);
}

Eigen::MatrixXd sample_increments(const NoiseModel& noise, const Partition& partition,
                                  std::uint64_t seed) {
    const int n = partition.intervals();
    if (n < 1) {
        throw EmptyInput("sample_increments: partition has no intervals");
    }
    const auto spectrum = noise.spectrum();
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(noise.noise_dim(), n);
    const auto level = static_cast<std::uint64_t>(partition.level);
    for (int j = 0; j < n; ++j) {
        const double dt = partition.times[static_cast<std::size_t>(j) + 1] -
                          partition.times[static_cast<std::size_t>(j)];
        const double sqrt_dt = std::sqrt(dt);
        for (std::size_t i = 0; i < spectrum.size(); ++i) {
            const double xi =
                counter_normal(seed, level, static_cast<std::uint64_t>(j), i);
            out.col(j) += std::sqrt(spectrum[i].first) * sqrt_dt * xi * spectrum[i].second;
        }
    }
    return out;
}

std::vector<Eigen::MatrixXd> nested_increments(const NoiseModel& noise,
                                               std::span<const Partition> partitions,
                                               std::uint64_t seed) {
    if (partitions.empty()) {
        throw EmptyInput("nested_increments: no partitions");
    }
    std::size_t finest = 0;
    for (std::size_t k = 1; k < partitions.size(); ++k) {
        if (partitions[k].intervals() > partitions[finest].intervals()) {
            finest = k;
        }
    }
    const Partition& fine = partitions[finest];
    const Eigen::MatrixXd fine_inc = sample_increments(noise, fine, seed);
    const double tol = time_match_tol(fine.horizon());

    std::vector<Eigen::MatrixXd> out(partitions.size());
    for (std::size_t k = 0; k < partitions.size(); ++k) {
        const Partition& p = partitions[k];
        if (&p == &fine || p.times == fine.times) {
            out[k] = fine_inc;
            continue;
        }
        if (!is_refinement(p, fine)) {
            throw PartitionNotNested(
                "nested_increments: partition is not refined by the finest one");
        }
        Eigen::MatrixXd agg = Eigen::MatrixXd::Zero(noise.noise_dim(), p.intervals());
        std::size_t f = 0;
        for (int j = 0; j < p.intervals(); ++j) {
            const double right = p.times[static_cast<std::size_t>(j) + 1];
            while (f < static_cast<std::size_t>(fine.intervals()) &&
                   fine.times[f + 1] <= right + tol) {
                agg.col(j) += fine_inc.col(static_cast<Eigen::Index>(f));
                ++f;
            }
        }
        out[k] = std::move(agg);
    }
    return out;
}

ItoIntegralResult ito_integral(std::span<const Eigen::MatrixXd> step_values,
                               const Eigen::MatrixXd& increments) {
    const auto n = static_cast<Eigen::Index>(step_values.size());
    if (n != increments.cols()) {
        throw DimensionMismatch("ito_integral: step count != increment count");
    }
    if (n == 0) {
        throw EmptyInput("ito_integral: empty integrand");
    }
    const Eigen::Index d = step_values[0].rows();
    ItoIntegralResult out;
    out.path = Eigen::MatrixXd::Zero(d, n + 1);
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(d);
    for (Eigen::Index j = 0; j < n; ++j) {
        const Eigen::MatrixXd& z = step_values[static_cast<std::size_t>(j)];
        if (z.rows() != d || z.cols() != increments.rows()) {
            throw DimensionMismatch("ito_integral: integrand dimension mismatch");
        }
        sum += z * increments.col(j);
        out.path.col(j + 1) = sum;
    }
    out.terminal = sum;
    return out;
}

QVEstimate quadratic_variation(
    const std::function<Eigen::MatrixXd(const Partition&)>& path_sampler,
    std::span<const Partition> partitions, const Eigen::MatrixXd& w_mass,
    std::span<const double> t_targets) {
    if (partitions.empty()) {
        throw EmptyInput("quadratic_variation: no partitions");
    }
    for (std::size_t k = 0; k + 1 < partitions.size(); ++k) {
        if (!is_refinement(partitions[k], partitions[k + 1])) {
            throw PartitionNotNested("quadratic_variation: partitions not nested");
        }
    }

    QVEstimate est;
    est.target_times.assign(t_targets.begin(), t_targets.end());
    for (const Partition& p : partitions) {
        const Eigen::MatrixXd path = path_sampler(p);
        if (path.cols() != static_cast<Eigen::Index>(p.times.size())) {
            throw DimensionMismatch("quadratic_variation: path size mismatch");
        }
        const double tol = time_match_tol(p.horizon());
        std::vector<double> at_targets;
        at_targets.reserve(t_targets.size());
        for (double t : t_targets) {
            double qv = 0.0;
            for (int k = 0; k + 1 < static_cast<int>(p.times.size()); ++k) {
                if (p.times[static_cast<std::size_t>(k) + 1] > t + tol) {
                    break;
                }
                const Eigen::VectorXd dm = path.col(k + 1) - path.col(k);
                qv += dm.dot(w_mass * dm);
            }
            at_targets.push_back(qv);
        }
        est.levels.push_back(p.level);
        est.per_level.push_back(std::move(at_targets));
    }
    return est;
}

}  // namespace spde
