#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <span>
#include <utility>
#include <vector>

#include "spde/errors.hpp"

namespace spde {

/// A partition 0 = t_0 < t_1 < ... < t_n = T of [0, T]. `level` tags the
/// refinement index of a nested family; it also keys the random counters, so
/// increments sampled on distinct levels are distinct streams.
struct Partition {
    std::vector<double> times;
    int level = 0;

    int intervals() const { return static_cast<int>(times.size()) - 1; }
    double horizon() const { return times.empty() ? 0.0 : times.back(); }
    double mesh() const;
};

/// Uniform partition of [0, T] with n equal steps.
Partition uniform_partition(double T, std::int64_t n, int level = 0);

/// Dyadic partitions of [0, T] for levels min_level..max_level; level k has
/// 2^k uniform intervals. Times are j * (T / 2^k), which makes the nesting
/// exact in floating point. Levels above 24 are rejected (LevelTooFine).
std::vector<Partition> dyadic_partitions(double T, int min_level, int max_level);

/// True when every mesh point of `coarse` occurs in `fine` (tolerance
/// 1e-9 * max(1, T) per point).
bool is_refinement(const Partition& coarse, const Partition& fine);

/// Trace-class driving noise: covariance Q on an m-dimensional factor space,
/// its spectral data, and the deterministic coefficient Phi(t) mapping the
/// factor space into the d-dimensional state space.
class NoiseModel {
public:
    using PhiFn = std::function<Eigen::MatrixXd(double)>;

    /// Validates that q is symmetric PSD (within psd_tol) and precomputes its
    /// spectral decomposition. phi(t) must return a d x m matrix.
    NoiseModel(Eigen::Index state_dim, Eigen::MatrixXd q, PhiFn phi,
               double psd_tol = 1e-10);

    /// Constant coefficient matrix.
    static NoiseModel constant(Eigen::Index state_dim, Eigen::MatrixXd q,
                               const Eigen::MatrixXd& phi);

    /// Zero covariance: every increment is exactly zero.
    static NoiseModel zero(Eigen::Index state_dim, Eigen::Index noise_dim);

    Eigen::Index state_dim() const { return d_; }
    Eigen::Index noise_dim() const { return m_; }
    const Eigen::MatrixXd& q() const { return q_; }
    double trace() const { return trace_; }

    /// All eigenpairs of Q, eigenvalues clamped to [0, inf), descending.
    const std::vector<std::pair<double, Eigen::VectorXd>>& q_eigs() const {
        return eigs_;
    }

    /// Eigenpairs with lambda > 1e-14 * lambda_max; only these contribute to
    /// sampling and Hilbert-Schmidt sums (the covariance root sees only the
    /// positive spectrum).
    std::span<const std::pair<double, Eigen::VectorXd>> spectrum() const;

    Eigen::MatrixXd phi(double t) const;

private:
    Eigen::Index d_ = 0;
    Eigen::Index m_ = 0;
    Eigen::MatrixXd q_;
    std::vector<std::pair<double, Eigen::VectorXd>> eigs_;
    std::size_t positive_count_ = 0;
    double trace_ = 0.0;
    PhiFn phi_;
};

/// Wiener increments over the partition intervals, one column per interval:
///
///   dW_j = sum_i sqrt(lambda_i) * sqrt(dt_j) * xi_ij * u_i
///
/// with xi_ij standard normals drawn from counters keyed by
/// (seed, partition.level, j, i). Bit-identical for identical
/// (seed, partition, noise) regardless of thread count.
Eigen::MatrixXd sample_increments(const NoiseModel& noise, const Partition& partition,
                                  std::uint64_t seed);

/// One sample path viewed on a nested family: increments are sampled on the
/// finest partition and the coarser columns are sums of the fine ones, so
/// every level describes the same underlying path. Returns one increment
/// matrix per input partition, in the given order.
std::vector<Eigen::MatrixXd> nested_increments(const NoiseModel& noise,
                                               std::span<const Partition> partitions,
                                               std::uint64_t seed);

struct ItoIntegralResult {
    Eigen::VectorXd terminal;
    Eigen::MatrixXd path;  // d x (n+1), column k = partial sum S_k, S_0 = 0
};

/// Left-point elementary-function integral: S_k = sum_{j<k} Z_j dW_j.
ItoIntegralResult ito_integral(std::span<const Eigen::MatrixXd> step_values,
                               const Eigen::MatrixXd& increments);

/// Per-level quadratic-variation estimates at the requested target times.
struct QVEstimate {
    std::vector<int> levels;
    std::vector<std::vector<double>> per_level;  // [level index][target index]
    std::vector<double> target_times;
};

/// Sums |M(t_{k+1}) - M(t_k)|_W^2 over each partition, truncated at each
/// target time (targets snap down to the nearest mesh point). The sampler
/// must evaluate the same underlying path on every partition; partitions
/// must be nested coarse-to-fine.
QVEstimate quadratic_variation(
    const std::function<Eigen::MatrixXd(const Partition&)>& path_sampler,
    std::span<const Partition> partitions, const Eigen::MatrixXd& w_mass,
    std::span<const double> t_targets);

}  // namespace spde
