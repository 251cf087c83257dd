// spde_lab: config-driven experiment runner. Subcommands simulate degenerate
// stochastic evolution problems, verify the discrete energy identities, and
// emit CSV. Exit codes: 0 = success / all checks passed, 2 = a verification
// check failed, 1 = usage or configuration error.

#include <CLI11.hpp>

#include <cmath>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "spde/config.hpp"
#include "spde/itolab.hpp"
#include "spde/problems.hpp"
#include "spde/rng.hpp"

#include "csv.hpp"

namespace {

using namespace spde;
using spde_lab::CsvWriter;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitCheckFailed = 2;

int env_workers() {
    if (const char* value = std::getenv("SPDE_LAB_WORKERS")) {
        try {
            return std::stoi(value);
        } catch (const std::exception&) {
            throw ConfigError("SPDE_LAB_WORKERS is not an integer");
        }
    }
    return 0;
}

void print_check(const std::string& name, bool pass, const std::string& detail) {
    std::cout << (pass ? "PASS" : "FAIL") << " " << name
              << (detail.empty() ? "" : ": " + detail) << "\n";
}

struct CommonOptions {
    std::string config_path;
    std::string out_path;
    std::optional<std::uint64_t> seed_override;
    int workers = 0;
};

ExperimentConfig load_config(const CommonOptions& opts) {
    if (opts.config_path.empty()) {
        throw ConfigError("--config is required for this subcommand");
    }
    ExperimentConfig config = ExperimentConfig::load(opts.config_path);
    if (opts.seed_override) {
        config.solver.seed = *opts.seed_override;
        config.master_seed = *opts.seed_override;
    }
    if (opts.workers != 0) {
        config.workers = opts.workers;
    } else if (config.workers == 0) {
        config.workers = env_workers();
    }
    if (!opts.out_path.empty()) {
        config.out = opts.out_path;
    }
    return config;
}

// Deterministic PSD test form of the requested rank.
Eigen::MatrixXd seeded_psd(Eigen::Index dim, Eigen::Index rank, std::uint64_t seed) {
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
        const double x =
            counter_normal(seed ^ 0x5eedULL, static_cast<std::uint64_t>(i), 0, 0);
        eigs(i) = 0.1 + x * x;
    }
    return q * eigs.asDiagonal() * q.transpose();
}

int run_gram(int dim, std::uint64_t seed, int rank, const std::string& out_path) {
    if (dim < 1) {
        throw ConfigError("--dim must be >= 1");
    }
    if (rank < 0 || rank > dim) {
        rank = 1 + static_cast<int>(counter_word(seed, 0, 0, 0, 2) %
                                    static_cast<std::uint64_t>(dim));
    }
    const BForm form(seeded_psd(dim, rank, seed));
    std::vector<Eigen::VectorXd> candidates;
    for (int k = 0; k < dim; ++k) {
        Eigen::VectorXd v(dim);
        for (int i = 0; i < dim; ++i) {
            v(i) = counter_normal(seed ^ 0xca4dULL, static_cast<std::uint64_t>(k),
                                  static_cast<std::uint64_t>(i), 1);
        }
        candidates.push_back(v);
    }
    const auto basis = b_gram_schmidt(form, candidates);

    double max_off = 0.0;
    double max_diag_err = 0.0;
    std::optional<CsvWriter> csv;
    if (!out_path.empty()) {
        csv.emplace(out_path, std::vector<std::string>{"i", "j", "pairing"});
    }
    for (int i = 0; i < basis.size(); ++i) {
        for (int j = 0; j < basis.size(); ++j) {
            const double pairing = form.apply(basis.vectors[i]).dot(basis.vectors[j]);
            if (csv) {
                csv->row({static_cast<double>(i), static_cast<double>(j), pairing});
            }
            if (i == j) {
                max_diag_err = std::max(max_diag_err, std::abs(pairing - 1.0));
            } else {
                max_off = std::max(max_off, std::abs(pairing));
            }
        }
    }
    const bool pass = max_off < 1e-8 && max_diag_err < 1e-8;
    print_check("gram", pass,
                "rank " + std::to_string(basis.size()) + ", max off-diagonal " +
                    std::to_string(max_off));
    return pass ? kExitOk : kExitCheckFailed;
}

int run_simulate(const ExperimentConfig& config, const std::string& out_path) {
    const Problem problem = config.build_problem();
    const PathResult path = config.solver.scheme == Scheme::picard_ball
                                ? picard_ball_solve(problem, config.solver)
                                : solve_path(problem, config.solver);
    if (!out_path.empty()) {
        std::vector<std::string> header{"t"};
        for (Eigen::Index i = 0; i < problem.dim; ++i) {
            header.push_back("u" + std::to_string(i));
        }
        CsvWriter csv(out_path, header);
        for (std::size_t j = 0; j < path.times.size(); ++j) {
            std::vector<double> row{path.times[j]};
            for (Eigen::Index i = 0; i < problem.dim; ++i) {
                row.push_back(path.states(i, static_cast<Eigen::Index>(j)));
            }
            csv.row(row);
        }
    }
    std::cout << "simulate: " << path.steps() << " steps, final |u| = "
              << path.states.col(path.steps()).norm() << "\n";
    return kExitOk;
}

int run_ito_check(const ExperimentConfig& config, const std::string& out_path) {
    const Problem problem = config.build_problem();

    // Ledger CSV for the representative path driven by solver.seed.
    const PathResult path = solve_path(problem, config.solver);
    const ItoLedger ledger = pathwise_ledger(path, problem);
    if (!out_path.empty()) {
        CsvWriter csv(out_path,
                      {"t", "lhs", "term_initial", "term_drift", "term_bzz",
                       "term_martingale", "residual"});
        for (std::size_t j = 0; j < ledger.times.size(); ++j) {
            csv.row({ledger.times[j], ledger.lhs[j], ledger.term_initial,
                     ledger.term_drift[j], ledger.term_bzz[j],
                     ledger.term_martingale[j], ledger.residual[j]});
        }
    }

    std::vector<double> t_checks = config.t_checks;
    if (t_checks.empty()) {
        t_checks.push_back(problem.horizon);
    }
    const ExpectedEnergyReport report = expected_energy_check(
        problem, config.solver, config.n_paths, config.master_seed, t_checks,
        config.check.bias_kappa, config.workers);
    for (const EnergyCheckPoint& point : report.points) {
        print_check("ito-check t=" + std::to_string(point.t),
                    point.identity_pass && point.martingale_pass,
                    "|E lhs - E rhs| = " + std::to_string(std::abs(point.diff_mean)) +
                        ", 3se+bias = " +
                        std::to_string(3.0 * point.diff_se + report.bias_allowance));
    }
    return report.pass() ? kExitOk : kExitCheckFailed;
}

int run_energy_check(const ExperimentConfig& config, const std::string& out_path) {
    const Problem problem = config.build_problem();
    const EnergyInequalityReport report = energy_inequality_check(
        problem, config.solver, config.n_paths, config.master_seed,
        config.check.slack_c, config.workers);
    if (!out_path.empty()) {
        CsvWriter csv(out_path,
                      {"lhs_mean", "rhs_mean", "diff_mean", "diff_se", "slack", "pass"});
        csv.row({report.lhs_mean, report.rhs_mean, report.diff_mean, report.diff_se,
                 report.slack, report.pass ? 1.0 : 0.0});
    }
    print_check("energy-check", report.pass,
                "lhs - rhs = " + std::to_string(report.diff_mean) + ", slack = " +
                    std::to_string(report.slack));
    return report.pass ? kExitOk : kExitCheckFailed;
}

int run_qv(const ExperimentConfig& config, const std::string& out_path) {
    const Problem problem = config.build_problem();
    const auto parts = dyadic_partitions(problem.horizon, config.check.min_level,
                                         config.check.max_level);
    std::vector<double> targets = config.t_checks;
    if (targets.empty()) {
        targets.push_back(problem.horizon);
    }

    // Hilbert-Schmidt target for the constant-coefficient martingale M = Phi W.
    double hs = 0.0;
    for (const auto& [lambda, u] : problem.noise.spectrum()) {
        const Eigen::VectorXd col = problem.noise.phi(0.0) * u;
        hs += lambda * col.dot(problem.w_mass * col);
    }

    std::vector<std::vector<double>> mean_qv(
        parts.size(), std::vector<double>(targets.size(), 0.0));
    for (int s = 0; s < config.check.n_seeds; ++s) {
        const auto incs = nested_increments(
            problem.noise, parts,
            path_seed(config.master_seed, static_cast<std::uint64_t>(s)));
        auto sampler = [&](const Partition& p) -> Eigen::MatrixXd {
            for (std::size_t k = 0; k < parts.size(); ++k) {
                if (parts[k].level == p.level) {
                    Eigen::MatrixXd path =
                        Eigen::MatrixXd::Zero(problem.dim,
                                              static_cast<Eigen::Index>(p.times.size()));
                    for (Eigen::Index j = 0; j < incs[k].cols(); ++j) {
                        path.col(j + 1) =
                            path.col(j) +
                            problem.noise.phi(p.times[static_cast<std::size_t>(j)]) *
                                incs[k].col(j);
                    }
                    return path;
                }
            }
            throw ConfigError("qv: sampler called with unknown level");
        };
        const auto est = quadratic_variation(sampler, parts, problem.w_mass, targets);
        for (std::size_t k = 0; k < parts.size(); ++k) {
            for (std::size_t i = 0; i < targets.size(); ++i) {
                mean_qv[k][i] += est.per_level[k][i] / config.check.n_seeds;
            }
        }
    }

    if (!out_path.empty()) {
        CsvWriter csv(out_path, {"level", "t", "mean_qv"});
        for (std::size_t k = 0; k < parts.size(); ++k) {
            for (std::size_t i = 0; i < targets.size(); ++i) {
                csv.row({static_cast<double>(parts[k].level), targets[i], mean_qv[k][i]});
            }
        }
    }

    const double target_value = hs * problem.horizon;
    const double estimate = mean_qv.back().back();
    const bool pass =
        std::abs(estimate - target_value) <= config.check.rel_tol * target_value;
    print_check("qv", pass,
                "QV(" + std::to_string(problem.horizon) + ") = " +
                    std::to_string(estimate) + ", target " +
                    std::to_string(target_value));
    return pass ? kExitOk : kExitCheckFailed;
}

int run_isometry(const ExperimentConfig& config, const std::string& out_path) {
    // Scalar integrand Z(t) = z0 + z1 t against the closed-form second moment.
    const double q_scale = config.problem.noise.q_scale;
    const double z0 = config.check.z0;
    const double z1 = config.check.z1;
    const double horizon = config.problem.horizon;

    const NoiseModel noise = NoiseModel::constant(
        1, q_scale * Eigen::MatrixXd::Identity(1, 1),
        Eigen::MatrixXd::Identity(1, 1));
    const auto parts =
        dyadic_partitions(horizon, config.check.level, config.check.level);
    const Partition& grid = parts[0];
    const int n = grid.intervals();

    std::vector<Eigen::MatrixXd> z;
    z.reserve(static_cast<std::size_t>(n));
    for (int j = 0; j < n; ++j) {
        Eigen::MatrixXd zj(1, 1);
        zj(0, 0) = z0 + z1 * grid.times[static_cast<std::size_t>(j)];
        z.push_back(zj);
    }

    double sum = 0.0;
    double sum_sq = 0.0;
    for (std::int64_t i = 0; i < config.n_paths; ++i) {
        const Eigen::MatrixXd inc = sample_increments(
            noise, grid, path_seed(config.master_seed, static_cast<std::uint64_t>(i)));
        const double terminal = ito_integral(z, inc).terminal(0);
        sum += terminal * terminal;
        sum_sq += terminal * terminal * terminal * terminal;
    }
    const double mean = sum / static_cast<double>(config.n_paths);
    const double var =
        sum_sq / static_cast<double>(config.n_paths) - mean * mean;
    const double se = std::sqrt(var / static_cast<double>(config.n_paths));

    // int_0^T (z0 + z1 s)^2 q ds
    const double target =
        q_scale * (z0 * z0 * horizon + z0 * z1 * horizon * horizon +
                   z1 * z1 * horizon * horizon * horizon / 3.0);
    const double mesh = grid.mesh();
    const double tolerance = 3.0 * se + 2.0 * mesh;
    const bool pass = std::abs(mean - target) <= tolerance;

    if (!out_path.empty()) {
        CsvWriter csv(out_path,
                      {"n_paths", "estimate", "target", "se", "mesh", "pass"});
        csv.row({static_cast<double>(config.n_paths), mean, target, se, mesh,
                 pass ? 1.0 : 0.0});
    }
    print_check("isometry", pass,
                "E[I^2] = " + std::to_string(mean) + ", target " +
                    std::to_string(target) + ", tolerance " + std::to_string(tolerance));
    return pass ? kExitOk : kExitCheckFailed;
}

int run_convergence(const ExperimentConfig& config, const std::string& out_path) {
    const Problem problem = config.build_problem();
    std::vector<double> dts = config.check.dts;
    if (dts.size() < 2) {
        throw ConfigError("convergence: check.dts needs at least two entries");
    }
    for (std::size_t i = 0; i + 1 < dts.size(); ++i) {
        if (dts[i] <= dts[i + 1]) {
            throw ConfigError("convergence: check.dts must be strictly decreasing");
        }
    }
    const double dt_ref = dts.back();
    const auto n_ref =
        static_cast<std::int64_t>(std::llround(problem.horizon / dt_ref));
    const Partition ref_grid = uniform_partition(problem.horizon, n_ref);

    const bool residual_mode = config.check.mode == "residual";
    std::vector<double> errors(dts.size() - 1, 0.0);
    for (std::int64_t path_index = 0; path_index < config.n_paths; ++path_index) {
        const std::uint64_t seed =
            path_seed(config.master_seed, static_cast<std::uint64_t>(path_index));
        const Eigen::MatrixXd ref_inc = sample_increments(problem.noise, ref_grid, seed);

        SolverConfig ref_solver = config.solver;
        ref_solver.dt = dt_ref;
        ref_solver.seed = seed;
        const PathResult ref_path = solve_path(problem, ref_solver, ref_inc);
        const double ref_residual =
            residual_mode ? pathwise_ledger(ref_path, problem).max_abs_residual() : 0.0;

        for (std::size_t k = 0; k + 1 < dts.size(); ++k) {
            const auto n_k =
                static_cast<std::int64_t>(std::llround(problem.horizon / dts[k]));
            const std::int64_t ratio = n_ref / n_k;
            if (n_k * ratio != n_ref) {
                throw ConfigError("convergence: dts must nest into the finest grid");
            }
            Eigen::MatrixXd inc =
                Eigen::MatrixXd::Zero(problem.noise.noise_dim(), n_k);
            for (std::int64_t j = 0; j < n_k; ++j) {
                for (std::int64_t r = 0; r < ratio; ++r) {
                    inc.col(j) += ref_inc.col(j * ratio + r);
                }
            }
            SolverConfig solver = config.solver;
            solver.dt = dts[k];
            solver.seed = seed;
            const PathResult path = solve_path(problem, solver, inc);
            if (residual_mode) {
                errors[k] += std::abs(pathwise_ledger(path, problem).max_abs_residual() -
                                      ref_residual);
            } else {
                const Eigen::VectorXd diff =
                    path.states.col(path.steps()) - ref_path.states.col(ref_path.steps());
                errors[k] += std::sqrt(diff.dot(problem.w_mass * diff));
            }
        }
    }
    for (double& e : errors) {
        e /= static_cast<double>(config.n_paths);
    }

    bool pass = true;
    std::vector<double> ratios;
    for (std::size_t k = 0; k + 1 < errors.size(); ++k) {
        const double ratio = errors[k] / errors[k + 1];
        ratios.push_back(ratio);
        if (ratio < config.check.band_lo || ratio > config.check.band_hi) {
            pass = false;
        }
    }

    if (!out_path.empty()) {
        CsvWriter csv(out_path, {"dt", "error", "ratio_to_next"});
        for (std::size_t k = 0; k + 1 < dts.size(); ++k) {
            csv.row({dts[k], errors[k],
                     k < ratios.size() ? ratios[k] : 0.0});
        }
    }
    std::string detail = "ratios";
    for (double r : ratios) {
        detail += " " + std::to_string(r);
    }
    print_check("convergence", pass, detail);
    return pass ? kExitOk : kExitCheckFailed;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"numerical laboratory for degenerate stochastic evolution equations"};
    app.require_subcommand(1);

    CommonOptions opts;
    int gram_dim = 4;
    std::uint64_t gram_seed = 1;
    int gram_rank = -1;

    auto add_common = [&opts](CLI::App* cmd, bool needs_config) {
        if (needs_config) {
            cmd->add_option("--config", opts.config_path, "JSON experiment config");
        }
        cmd->add_option("--out", opts.out_path, "CSV output path");
        std::function<void(std::uint64_t)> seed_cb = [&opts](std::uint64_t s) {
            opts.seed_override = s;
        };
        cmd->add_option_function<std::uint64_t>("--seed", seed_cb,
                                                "override solver and master seed");
        cmd->add_option("--workers", opts.workers,
                        "worker threads (0 = hardware concurrency)");
    };

    CLI::App* gram = app.add_subcommand("gram", "B-orthonormalize a seeded random form");
    gram->add_option("--dim", gram_dim, "form dimension");
    gram->add_option("--rank", gram_rank, "form rank (-1 = derived from seed)");
    gram->add_option("--seed", gram_seed, "generator seed");
    gram->add_option("--out", opts.out_path, "CSV output path");
    gram->add_option("--workers", opts.workers, "accepted for symmetry; unused");

    CLI::App* simulate = app.add_subcommand("simulate", "run one trajectory");
    add_common(simulate, true);
    CLI::App* ito = app.add_subcommand("ito-check", "pathwise ledger + expectation identity");
    add_common(ito, true);
    CLI::App* energy = app.add_subcommand("energy-check", "regularized energy inequality");
    add_common(energy, true);
    CLI::App* qv = app.add_subcommand("qv", "quadratic variation on nested partitions");
    add_common(qv, true);
    CLI::App* isometry = app.add_subcommand("isometry", "stochastic-integral isometry");
    add_common(isometry, true);
    CLI::App* convergence = app.add_subcommand("convergence", "dt-sweep error ratios");
    add_common(convergence, true);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);  // help text, exit 0
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (gram->parsed()) {
            return run_gram(gram_dim, gram_seed, gram_rank, opts.out_path);
        }
        const ExperimentConfig config = load_config(opts);
        if (simulate->parsed()) {
            return run_simulate(config, config.out);
        }
        if (ito->parsed()) {
            return run_ito_check(config, config.out);
        }
        if (energy->parsed()) {
            return run_energy_check(config, config.out);
        }
        if (qv->parsed()) {
            return run_qv(config, config.out);
        }
        if (isometry->parsed()) {
            return run_isometry(config, config.out);
        }
        if (convergence->parsed()) {
            return run_convergence(config, config.out);
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }
    return kExitUsage;
}
