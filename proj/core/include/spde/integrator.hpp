#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "spde/bform.hpp"
#include "spde/noise.hpp"
#include "spde/operators.hpp"

namespace spde {

/// One discrete problem d((B + eps R) u) + (A(u) + eps R u) dt = f dt + B Phi dW:
/// the form B, the SPD regularization Riesz matrix R, the nonlinearity A, the
/// forcing f (covector-valued), the driving noise, the initial state, the
/// W-Gram matrix, and the horizon.
struct Problem {
    Eigen::Index dim = 0;
    BForm b;
    Eigen::MatrixXd r;
    NonlinearOperator a;
    std::function<Eigen::VectorXd(double)> f;
    NoiseModel noise = NoiseModel::zero(0, 0);
    Eigen::VectorXd u0;
    Eigen::MatrixXd w_mass;
    double horizon = 1.0;

    /// Throws unless all dimensions agree, r is SPD, and horizon > 0.
    void validate() const;

    Eigen::VectorXd forcing(double t) const {
        return f ? f(t) : Eigen::VectorXd::Zero(dim);
    }
};

enum class Scheme { explicit_em, implicit_resolvent, picard_ball };

struct SolverConfig {
    Scheme scheme = Scheme::explicit_em;
    double epsilon = 0.0;
    double dt = 1e-3;
    double newton_tol = 1e-10;
    int newton_max_iter = 25;
    double picard_tol = 1e-12;
    int picard_max_iter = 512;
    double radius_base = 9.0;   // truncation ball radius = radius_base^n
    double escape_base = 2.0;   // escalate when sup |u|_H^2 > escape_base^n
    std::uint64_t seed = 0;
};

struct PathFlags {
    bool truncation_active = false;  // projection clipped at the accepted radius
    int radius_escalations = 0;
    int radius_exponent = 0;         // accepted n (picard_ball only)
};

/// One simulated trajectory. Columns of `states` are u(t_j); columns of
/// `noise_path` are M(t_j) = sum_{i<j} Phi(t_i) dW_i, the state-space noise
/// image; `wiener_increments` has one column per step.
struct PathResult {
    std::vector<double> times;
    Eigen::MatrixXd states;
    Eigen::MatrixXd wiener_increments;
    Eigen::MatrixXd noise_path;
    std::vector<int> newton_iterations;
    PathFlags flags;

    int steps() const { return static_cast<int>(times.size()) - 1; }
};

/// One explicit (left-point) step: solves
///   (B + eps R)(u_next - u) = dt (f(t) - A(t,u) - eps R u) + B Phi(t) dW.
Eigen::VectorXd step_explicit(const Problem& problem, const SolverConfig& config,
                              double t, const Eigen::VectorXd& u,
                              const Eigen::VectorXd& dw);

/// One resolvent step: solves
///   (B + eps R) u_next + dt (A(t, u_next) + eps R u_next)
///       = (B + eps R) u + dt f(t) + B Phi(t) dW
/// by damped Newton. The drift is implicit; forcing and noise stay explicit
/// so the discrete martingale term remains adapted.
Eigen::VectorXd step_implicit(const Problem& problem, const SolverConfig& config,
                              double t, const Eigen::VectorXd& u,
                              const Eigen::VectorXd& dw, int* newton_iterations = nullptr);

/// Full path with the configured scheme on the uniform grid t_j = j * dt.
/// Increments are drawn from config.seed; the (B + eps R) factorization is
/// computed once. Any non-finite state aborts with NonFiniteState.
PathResult solve_path(const Problem& problem, const SolverConfig& config);

/// Same, but integrates the supplied increments (one column per step)
/// instead of sampling. Used to couple runs across grids or initial states.
PathResult solve_path(const Problem& problem, const SolverConfig& config,
                      const Eigen::MatrixXd& increments);

/// Ball-truncated Picard iteration for B = W-Gram, eps = 0: the fixed point of
///   u(t_j) = u0 - sum_{i<j} B^{-1}(A(t_i, P_n u(t_i)) - f(t_i)) dt
///               + sum_{i<j} Phi(t_i) dW_i
/// with P_n the metric projection onto the ball of radius radius_base^n.
/// When the fixed point's sup |u|_H^2 exceeds escape_base^n the radius
/// exponent escalates and the solve restarts; exponents beyond 60 raise
/// RadiusOverflow.
PathResult picard_ball_solve(const Problem& problem, const SolverConfig& config);
PathResult picard_ball_solve(const Problem& problem, const SolverConfig& config,
                             const Eigen::MatrixXd& increments);

struct Observable {
    std::string name;
    std::function<double(const PathResult&)> eval;
};

struct ObservableStat {
    std::string name;
    double mean = 0.0;
    double std_error = 0.0;
};

struct EnsembleSummary {
    std::int64_t n_paths = 0;
    std::vector<ObservableStat> stats;
};

/// Runs `fn` on n_paths independent paths (path i uses seed
/// path_seed(master_seed, i)) and returns the per-path value vectors in path
/// order. `workers` <= 0 selects the hardware concurrency. The output is a
/// pure function of the inputs, independent of the worker count.
std::vector<std::vector<double>> parallel_paths(
    const Problem& problem, const SolverConfig& config, std::int64_t n_paths,
    std::uint64_t master_seed,
    const std::function<std::vector<double>(const PathResult&)>& fn, int workers = 0);

/// Monte Carlo summary of the observables over n_paths independent paths.
/// A failing path aborts the run; the error names the failing seed.
EnsembleSummary mc_run(const Problem& problem, const SolverConfig& config,
                       std::int64_t n_paths, std::uint64_t master_seed,
                       std::span<const Observable> observables, int workers = 0);

}  // namespace spde
