#include "spde/integrator.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <atomic>
#include <cmath>
#include <thread>

#include "spde/rng.hpp"

namespace spde {

namespace {

constexpr int kMaxRadiusExponent = 60;

Eigen::LDLT<Eigen::MatrixXd> factor_system(const Problem& problem, double epsilon) {
    const Eigen::MatrixXd sys = problem.b.matrix() + epsilon * problem.r;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(sys);
    // LDLT tolerates semidefinite input, so check conditioning explicitly.
    const double scale = std::max(1.0, sys.cwiseAbs().maxCoeff());
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive() ||
        ldlt.vectorD().minCoeff() <= 1e-12 * scale) {
        throw SingularSystem(
            "B + eps*R is numerically singular (min pivot " +
            std::to_string(ldlt.vectorD().size() ? ldlt.vectorD().minCoeff() : 0.0) +
            "); a singular B needs epsilon > 0");
    }
    return ldlt;
}

Eigen::MatrixXd fd_jacobian(const NonlinearOperator& op, double t,
                            const Eigen::VectorXd& u) {
    const Eigen::Index d = u.size();
    Eigen::MatrixXd jac(d, d);
    const Eigen::VectorXd base = op.apply(t, u);
    Eigen::VectorXd probe = u;
    for (Eigen::Index j = 0; j < d; ++j) {
        const double h = 1e-7 * (1.0 + std::abs(u(j)));
        probe(j) = u(j) + h;
        jac.col(j) = (op.apply(t, probe) - base) / h;
        probe(j) = u(j);
    }
    return jac;
}

Eigen::VectorXd implicit_solve(const Problem& problem, const SolverConfig& config,
                               double t, const Eigen::VectorXd& u,
                               const Eigen::VectorXd& rhs, int* newton_iterations) {
    const double dt = config.dt;
    const Eigen::MatrixXd sys_matrix =
        problem.b.matrix() + config.epsilon * problem.r;
    const double scale = 1.0 + rhs.lpNorm<Eigen::Infinity>();

    auto residual = [&](const Eigen::VectorXd& x) -> Eigen::VectorXd {
        return sys_matrix * x + dt * (problem.a.apply(t, x) + config.epsilon * (problem.r * x)) -
               rhs;
    };

    Eigen::VectorXd x = u;
    Eigen::VectorXd g = residual(x);
    double gnorm = g.lpNorm<Eigen::Infinity>();
    int iter = 0;
    while (gnorm > config.newton_tol * scale) {
        if (iter >= config.newton_max_iter) {
            throw ImplicitSolveFailed(
                "implicit step did not converge after " +
                std::to_string(config.newton_max_iter) +
                " Newton iterations (residual " + std::to_string(gnorm) +
                "); reduce dt or switch scheme");
        }
        const Eigen::MatrixXd drift_jac = problem.a.jacobian
                                              ? problem.a.jacobian(t, x)
                                              : fd_jacobian(problem.a, t, x);
        const Eigen::MatrixXd jac =
            sys_matrix + dt * (drift_jac + config.epsilon * problem.r);
        const Eigen::VectorXd delta = jac.partialPivLu().solve(-g);
        if (!delta.allFinite()) {
            throw ImplicitSolveFailed("implicit step: Newton direction not finite");
        }
        // Backtracking damping; accept any step that reduces the residual.
        double alpha = 1.0;
        while (true) {
            const Eigen::VectorXd trial = x + alpha * delta;
            const Eigen::VectorXd gt = residual(trial);
            const double tnorm = gt.lpNorm<Eigen::Infinity>();
            if (tnorm < gnorm || tnorm <= config.newton_tol * scale) {
                x = trial;
                g = gt;
                gnorm = tnorm;
                break;
            }
            alpha *= 0.5;
            if (alpha < 1e-8) {
                throw ImplicitSolveFailed(
                    "implicit step: damped Newton stalled (residual " +
                    std::to_string(gnorm) + "); reduce dt or switch scheme");
            }
        }
        ++iter;
    }
    if (newton_iterations) {
        *newton_iterations = iter;
    }
    return x;
}

void check_finite(const Eigen::VectorXd& u, double t, std::uint64_t seed) {
    if (!u.allFinite()) {
        throw NonFiniteState("state not finite at t = " + std::to_string(t) +
                             " (seed " + std::to_string(seed) + ")");
    }
}

int grid_steps(const Problem& problem, const SolverConfig& config) {
    if (config.dt <= 0.0) {
        throw std::invalid_argument("SolverConfig: dt must be positive");
    }
    const double ratio = problem.horizon / config.dt;
    const auto n = static_cast<std::int64_t>(std::llround(ratio));
    if (n < 1 || std::abs(ratio - static_cast<double>(n)) > 1e-9 * std::max(1.0, ratio)) {
        throw std::invalid_argument("SolverConfig: dt must divide the horizon");
    }
    return static_cast<int>(n);
}

}  // namespace

void Problem::validate() const {
    if (dim <= 0) {
        throw DimensionMismatch("Problem: dim must be positive");
    }
    if (b.dim() != dim || r.rows() != dim || r.cols() != dim ||
        w_mass.rows() != dim || w_mass.cols() != dim || u0.size() != dim ||
        a.dim != dim || noise.state_dim() != dim) {
        throw DimensionMismatch("Problem: component dimensions disagree");
    }
    if (!a.apply) {
        throw EmptyInput("Problem: operator A has no apply function");
    }
    if (horizon <= 0.0) {
        throw std::invalid_argument("Problem: horizon must be positive");
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(r, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() <= 0.0) {
        throw FormNotPsd("Problem: regularization matrix R must be SPD");
    }
}

Eigen::VectorXd step_explicit(const Problem& problem, const SolverConfig& config,
                              double t, const Eigen::VectorXd& u,
                              const Eigen::VectorXd& dw) {
    const auto system = factor_system(problem, config.epsilon);
    const Eigen::VectorXd rhs =
        config.dt * (problem.forcing(t) - problem.a.apply(t, u) -
                     config.epsilon * (problem.r * u)) +
        problem.b.matrix() * (problem.noise.phi(t) * dw);
    return u + system.solve(rhs);
}

Eigen::VectorXd step_implicit(const Problem& problem, const SolverConfig& config,
                              double t, const Eigen::VectorXd& u,
                              const Eigen::VectorXd& dw, int* newton_iterations) {
    factor_system(problem, config.epsilon);  // raises SingularSystem early
    const Eigen::MatrixXd sys_matrix =
        problem.b.matrix() + config.epsilon * problem.r;
    const Eigen::VectorXd rhs = sys_matrix * u + config.dt * problem.forcing(t) +
                                problem.b.matrix() * (problem.noise.phi(t) * dw);
    return implicit_solve(problem, config, t, u, rhs, newton_iterations);
}

PathResult solve_path(const Problem& problem, const SolverConfig& config) {
    const int n = grid_steps(problem, config);
    Partition grid = uniform_partition(problem.horizon, n);
    return solve_path(problem, config, sample_increments(problem.noise, grid, config.seed));
}

PathResult solve_path(const Problem& problem, const SolverConfig& config,
                      const Eigen::MatrixXd& increments) {
    problem.validate();
    if (config.scheme == Scheme::picard_ball) {
        return picard_ball_solve(problem, config, increments);
    }
    const int n = grid_steps(problem, config);
    if (increments.cols() != n || increments.rows() != problem.noise.noise_dim()) {
        throw DimensionMismatch("solve_path: increment shape mismatch");
    }

    const auto system = factor_system(problem, config.epsilon);
    const Eigen::MatrixXd sys_matrix =
        problem.b.matrix() + config.epsilon * problem.r;

    PathResult out;
    out.times.resize(static_cast<std::size_t>(n) + 1);
    out.states.resize(problem.dim, n + 1);
    out.noise_path = Eigen::MatrixXd::Zero(problem.dim, n + 1);
    out.wiener_increments = increments;
    out.newton_iterations.assign(static_cast<std::size_t>(n), 0);

    Eigen::VectorXd u = problem.u0;
    out.times[0] = 0.0;
    out.states.col(0) = u;
    for (int j = 0; j < n; ++j) {
        const double t = static_cast<double>(j) * config.dt;
        const Eigen::VectorXd dw = increments.col(j);
        const Eigen::MatrixXd phi = problem.noise.phi(t);
        if (config.scheme == Scheme::explicit_em) {
            const Eigen::VectorXd rhs =
                config.dt * (problem.forcing(t) - problem.a.apply(t, u) -
                             config.epsilon * (problem.r * u)) +
                problem.b.matrix() * (phi * dw);
            u += system.solve(rhs);
        } else {
            const Eigen::VectorXd rhs = sys_matrix * u + config.dt * problem.forcing(t) +
                                        problem.b.matrix() * (phi * dw);
            int iters = 0;
            u = implicit_solve(problem, config, t, u, rhs, &iters);
            out.newton_iterations[static_cast<std::size_t>(j)] = iters;
        }
        check_finite(u, t + config.dt, config.seed);
        out.times[static_cast<std::size_t>(j) + 1] = static_cast<double>(j + 1) * config.dt;
        out.states.col(j + 1) = u;
        out.noise_path.col(j + 1) = out.noise_path.col(j) + phi * dw;
    }
    return out;
}

PathResult picard_ball_solve(const Problem& problem, const SolverConfig& config) {
    problem.validate();
    const int n = grid_steps(problem, config);
    Partition grid = uniform_partition(problem.horizon, n);
    return picard_ball_solve(problem, config,
                             sample_increments(problem.noise, grid, config.seed));
}

PathResult picard_ball_solve(const Problem& problem, const SolverConfig& config,
                             const Eigen::MatrixXd& increments) {
    problem.validate();
    if (config.epsilon != 0.0) {
        throw std::invalid_argument("picard_ball_solve: requires epsilon = 0");
    }
    const double b_gap =
        (problem.b.matrix() - problem.w_mass).cwiseAbs().maxCoeff();
    if (b_gap > 1e-12 * (1.0 + problem.b.inf_norm())) {
        throw std::invalid_argument(
            "picard_ball_solve: requires B equal to the W-Gram matrix");
    }
    const int n = grid_steps(problem, config);
    if (increments.cols() != n || increments.rows() != problem.noise.noise_dim()) {
        throw DimensionMismatch("picard_ball_solve: increment shape mismatch");
    }

    const Eigen::LDLT<Eigen::MatrixXd> mass = factor_system(problem, 0.0);

    // Noise image and mass-solved drift inputs are shared by all sweeps.
    std::vector<Eigen::MatrixXd> phis(static_cast<std::size_t>(n));
    Eigen::MatrixXd noise_path = Eigen::MatrixXd::Zero(problem.dim, n + 1);
    std::vector<Eigen::VectorXd> forcing(static_cast<std::size_t>(n));
    for (int j = 0; j < n; ++j) {
        const double t = static_cast<double>(j) * config.dt;
        phis[static_cast<std::size_t>(j)] = problem.noise.phi(t);
        noise_path.col(j + 1) =
            noise_path.col(j) + phis[static_cast<std::size_t>(j)] * increments.col(j);
        forcing[static_cast<std::size_t>(j)] = problem.forcing(t);
    }

    const double u0_sq = problem.u0.dot(problem.w_mass * problem.u0);
    int exponent = 1;
    while (!(u0_sq < std::pow(config.escape_base, exponent - 1))) {
        ++exponent;
        if (exponent > kMaxRadiusExponent) {
            throw RadiusOverflow("picard_ball_solve: initial state outside every ball");
        }
    }

    PathFlags flags;
    Eigen::MatrixXd current(problem.dim, n + 1);
    while (true) {
        const double radius = std::pow(config.radius_base, exponent);
        const double escape = std::pow(config.escape_base, exponent);

        for (int j = 0; j <= n; ++j) {
            current.col(j) = problem.u0;
        }
        bool converged = false;
        bool finite = true;
        int sweeps = 0;
        Eigen::MatrixXd next(problem.dim, n + 1);
        while (!converged) {
            if (sweeps >= config.picard_max_iter) {
                throw PicardDiverged("picard_ball_solve: no fixed point after " +
                                     std::to_string(config.picard_max_iter) + " sweeps");
            }
            next.col(0) = problem.u0;
            Eigen::VectorXd drift_sum = Eigen::VectorXd::Zero(problem.dim);
            finite = true;
            for (int j = 0; j < n; ++j) {
                const double t = static_cast<double>(j) * config.dt;
                const Eigen::VectorXd projected =
                    ball_project(current.col(j), radius, problem.w_mass);
                drift_sum += config.dt *
                             mass.solve(problem.a.apply(t, projected) -
                                        forcing[static_cast<std::size_t>(j)]);
                next.col(j + 1) = problem.u0 - drift_sum + noise_path.col(j + 1);
                if (!next.col(j + 1).allFinite()) {
                    finite = false;
                    break;
                }
            }
            if (!finite) {
                break;
            }
            const double delta = (next - current).cwiseAbs().maxCoeff();
            const double scale = 1.0 + current.cwiseAbs().maxCoeff();
            converged = delta <= config.picard_tol * scale;
            current.swap(next);
            ++sweeps;
        }

        double sup_sq = 0.0;
        if (finite) {
            for (int j = 0; j <= n; ++j) {
                sup_sq = std::max(
                    sup_sq, static_cast<double>(
                                current.col(j).dot(problem.w_mass * current.col(j))));
            }
        }
        if (finite && sup_sq <= escape) {
            // Accepted. Record whether the projection clipped anything on the
            // final configuration.
            flags.radius_exponent = exponent;
            flags.truncation_active = false;
            for (int j = 0; j < n; ++j) {
                const double norm_sq =
                    current.col(j).dot(problem.w_mass * current.col(j));
                if (norm_sq > radius * radius) {
                    flags.truncation_active = true;
                    break;
                }
            }
            break;
        }
        ++exponent;
        ++flags.radius_escalations;
        if (exponent > kMaxRadiusExponent) {
            throw RadiusOverflow(
                "picard_ball_solve: truncation radius exponent exceeded " +
                std::to_string(kMaxRadiusExponent));
        }
    }

    PathResult out;
    out.times.resize(static_cast<std::size_t>(n) + 1);
    for (int j = 0; j <= n; ++j) {
        out.times[static_cast<std::size_t>(j)] = static_cast<double>(j) * config.dt;
    }
    out.states = current;
    out.wiener_increments = increments;
    out.noise_path = std::move(noise_path);
    out.flags = flags;
    return out;
}

std::vector<std::vector<double>> parallel_paths(
    const Problem& problem, const SolverConfig& config, std::int64_t n_paths,
    std::uint64_t master_seed,
    const std::function<std::vector<double>(const PathResult&)>& fn, int workers) {
    if (n_paths < 1) {
        throw EmptyInput("parallel_paths: need n_paths >= 1");
    }
    problem.validate();
    if (workers <= 0) {
        workers = static_cast<int>(std::thread::hardware_concurrency());
        if (workers <= 0) {
            workers = 1;
        }
    }
    workers = static_cast<int>(
        std::min<std::int64_t>(workers, n_paths));

    std::vector<std::vector<double>> results(static_cast<std::size_t>(n_paths));
    std::vector<std::string> errors(static_cast<std::size_t>(n_paths));
    std::atomic<std::int64_t> next_index{0};
    std::atomic<bool> failed{false};

    auto work = [&]() {
        while (true) {
            const std::int64_t i = next_index.fetch_add(1);
            if (i >= n_paths || failed.load(std::memory_order_relaxed)) {
                return;
            }
            SolverConfig local = config;
            local.seed = path_seed(master_seed, static_cast<std::uint64_t>(i));
            try {
                const PathResult path = config.scheme == Scheme::picard_ball
                                            ? picard_ball_solve(problem, local)
                                            : solve_path(problem, local);
                results[static_cast<std::size_t>(i)] = fn(path);
            } catch (const std::exception& e) {
                errors[static_cast<std::size_t>(i)] =
                    std::string(e.what()) + " [path " + std::to_string(i) + ", seed " +
                    std::to_string(local.seed) + "]";
                failed.store(true, std::memory_order_relaxed);
            }
        }
    };

    if (workers == 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(workers));
        for (int w = 0; w < workers; ++w) {
            pool.emplace_back(work);
        }
        for (auto& th : pool) {
            th.join();
        }
    }

    // Report the lowest-index failure so the outcome is scheduler-independent.
    for (const std::string& e : errors) {
        if (!e.empty()) {
            throw Error("mc path failed: " + e);
        }
    }
    return results;
}

EnsembleSummary mc_run(const Problem& problem, const SolverConfig& config,
                       std::int64_t n_paths, std::uint64_t master_seed,
                       std::span<const Observable> observables, int workers) {
    auto fn = [&observables](const PathResult& path) {
        std::vector<double> values;
        values.reserve(observables.size());
        for (const Observable& obs : observables) {
            values.push_back(obs.eval(path));
        }
        return values;
    };
    const auto rows = parallel_paths(problem, config, n_paths, master_seed, fn, workers);

    EnsembleSummary summary;
    summary.n_paths = n_paths;
    for (std::size_t k = 0; k < observables.size(); ++k) {
        double mean = 0.0;
        for (const auto& row : rows) {
            mean += row[k];
        }
        mean /= static_cast<double>(n_paths);
        double var = 0.0;
        for (const auto& row : rows) {
            const double dev = row[k] - mean;
            var += dev * dev;
        }
        var = n_paths > 1 ? var / static_cast<double>(n_paths - 1) : 0.0;
        summary.stats.push_back(
            {observables[k].name, mean,
             std::sqrt(var / static_cast<double>(n_paths))});
    }
    return summary;
}

}  // namespace spde
