#include "spde/itolab.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>

namespace spde {

namespace {

double condition_number(const Eigen::MatrixXd& spd) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(spd, Eigen::EigenvaluesOnly);
    const double lo = es.eigenvalues().minCoeff();
    const double hi = es.eigenvalues().maxCoeff();
    if (lo <= 0.0) {
        throw FormNotPsd("condition_number: matrix is not SPD");
    }
    return hi / lo;
}

double hs_norm_sq(const NoiseModel& noise, const Eigen::MatrixXd& w_mass, double t) {
    const Eigen::MatrixXd phi = noise.phi(t);
    double total = 0.0;
    for (const auto& [lambda, u] : noise.spectrum()) {
        const Eigen::VectorXd col = phi * u;
        total += lambda * col.dot(w_mass * col);
    }
    return total;
}

struct MeanSe {
    double mean = 0.0;
    double se = 0.0;
};

MeanSe reduce(const std::vector<std::vector<double>>& rows, std::size_t k) {
    MeanSe out;
    const auto n = static_cast<double>(rows.size());
    for (const auto& row : rows) {
        out.mean += row[k];
    }
    out.mean /= n;
    double var = 0.0;
    for (const auto& row : rows) {
        const double dev = row[k] - out.mean;
        var += dev * dev;
    }
    if (rows.size() > 1) {
        var /= (n - 1.0);
    }
    out.se = std::sqrt(var / n);
    return out;
}

std::size_t grid_index_at(const std::vector<double>& times, double t) {
    // Largest grid index with time <= t (plus a whisker for roundoff).
    const double tol = 1e-9 * std::max(1.0, times.back());
    std::size_t idx = 0;
    while (idx + 1 < times.size() && times[idx + 1] <= t + tol) {
        ++idx;
    }
    return idx;
}

}  // namespace

double ItoLedger::max_abs_residual() const {
    double m = 0.0;
    for (double r : residual) {
        m = std::max(m, std::abs(r));
    }
    return m;
}

ItoLedger pathwise_ledger(const PathResult& path, const Problem& problem) {
    if (path.states.rows() != problem.dim) {
        throw DimensionMismatch("pathwise_ledger: path/problem dimension mismatch");
    }
    const int n = path.steps();
    if (static_cast<int>(path.times.size()) != n + 1 ||
        path.wiener_increments.cols() != n) {
        throw DimensionMismatch("pathwise_ledger: inconsistent path sizes");
    }

    ItoLedger ledger;
    ledger.times = path.times;
    ledger.lhs.resize(static_cast<std::size_t>(n) + 1);
    ledger.term_drift.assign(static_cast<std::size_t>(n) + 1, 0.0);
    ledger.term_bzz.assign(static_cast<std::size_t>(n) + 1, 0.0);
    ledger.term_martingale.assign(static_cast<std::size_t>(n) + 1, 0.0);
    ledger.residual.assign(static_cast<std::size_t>(n) + 1, 0.0);
    ledger.qv_bound.assign(static_cast<std::size_t>(n) + 1, 0.0);

    const Eigen::VectorXd u0 = path.states.col(0);
    ledger.term_initial = problem.b.energy(u0);
    ledger.lhs[0] = ledger.term_initial;

    const double qv_c = 4.0 * condition_number(problem.w_mass);
    const Eigen::LDLT<Eigen::MatrixXd> w_solver(problem.w_mass);

    double drift = 0.0;
    double bzz = 0.0;
    double martingale = 0.0;
    double qv_bound = 0.0;
    for (int j = 0; j < n; ++j) {
        const double t = path.times[static_cast<std::size_t>(j)];
        const double dt = path.times[static_cast<std::size_t>(j) + 1] - t;
        const Eigen::VectorXd u = path.states.col(j);
        const Eigen::VectorXd bu = problem.b.apply(u);

        const Eigen::VectorXd y = problem.forcing(t) - problem.a.apply(t, u);
        drift += 2.0 * y.dot(u) * dt;
        bzz += bzz_pairing(problem.b, problem.noise, problem.w_mass, t) * dt;

        const Eigen::MatrixXd phi = problem.noise.phi(t);
        martingale += 2.0 * bu.dot(phi * path.wiener_increments.col(j));

        const double bu_dual_sq = bu.dot(w_solver.solve(bu));
        qv_bound += qv_c * hs_norm_sq(problem.noise, problem.w_mass, t) * bu_dual_sq * dt;

        const Eigen::VectorXd u_next = path.states.col(j + 1);
        ledger.lhs[static_cast<std::size_t>(j) + 1] = problem.b.energy(u_next);
        ledger.term_drift[static_cast<std::size_t>(j) + 1] = drift;
        ledger.term_bzz[static_cast<std::size_t>(j) + 1] = bzz;
        ledger.term_martingale[static_cast<std::size_t>(j) + 1] = martingale;
        ledger.qv_bound[static_cast<std::size_t>(j) + 1] = qv_bound;
        ledger.residual[static_cast<std::size_t>(j) + 1] =
            ledger.lhs[static_cast<std::size_t>(j) + 1] -
            (ledger.term_initial + drift + bzz + martingale);
    }
    return ledger;
}

bool ExpectedEnergyReport::pass() const {
    return std::all_of(points.begin(), points.end(), [](const EnergyCheckPoint& p) {
        return p.identity_pass && p.martingale_pass;
    });
}

ExpectedEnergyReport expected_energy_check(const Problem& problem,
                                           const SolverConfig& config,
                                           std::int64_t n_paths,
                                           std::uint64_t master_seed,
                                           std::span<const double> t_checks,
                                           double bias_kappa, int workers) {
    if (n_paths < 2) {
        throw EmptyInput("expected_energy_check: need n_paths >= 2");
    }

    // Per path and per check time: lhs, rhs = initial + drift + bzz, martingale.
    auto fn = [&](const PathResult& path) {
        const ItoLedger ledger = pathwise_ledger(path, problem);
        std::vector<double> row;
        row.reserve(3 * t_checks.size());
        for (double t : t_checks) {
            const std::size_t k = grid_index_at(ledger.times, t);
            row.push_back(ledger.lhs[k]);
            row.push_back(ledger.term_initial + ledger.term_drift[k] +
                          ledger.term_bzz[k]);
            row.push_back(ledger.term_martingale[k]);
        }
        return row;
    };
    const auto rows =
        parallel_paths(problem, config, n_paths, master_seed, fn, workers);

    ExpectedEnergyReport report;
    report.n_paths = n_paths;
    report.bias_allowance = bias_kappa * config.dt;
    for (std::size_t i = 0; i < t_checks.size(); ++i) {
        EnergyCheckPoint point;
        point.t = t_checks[i];
        const MeanSe lhs = reduce(rows, 3 * i);
        const MeanSe rhs = reduce(rows, 3 * i + 1);
        const MeanSe mart = reduce(rows, 3 * i + 2);
        point.lhs_mean = lhs.mean;
        point.lhs_se = lhs.se;
        point.rhs_mean = rhs.mean;
        point.rhs_se = rhs.se;
        point.martingale_mean = mart.mean;
        point.martingale_se = mart.se;
        // lhs - rhs = martingale + discretization residual per path, so the
        // difference inherits the martingale spread.
        point.diff_mean = lhs.mean - rhs.mean;
        point.diff_se = mart.se;
        point.identity_pass =
            std::abs(point.diff_mean) <= 3.0 * point.diff_se + report.bias_allowance;
        point.martingale_pass =
            std::abs(mart.mean) <=
            3.0 * mart.se + 1e-12 * (1.0 + std::abs(lhs.mean));
        report.points.push_back(point);
    }
    return report;
}

EnergyInequalityReport energy_inequality_check(const Problem& problem,
                                               const SolverConfig& config,
                                               std::int64_t n_paths,
                                               std::uint64_t master_seed,
                                               double slack_c, int workers) {
    if (n_paths < 2) {
        throw EmptyInput("energy_inequality_check: need n_paths >= 2");
    }
    const Eigen::MatrixXd reg =
        problem.b.matrix() + config.epsilon * problem.r;

    auto fn = [&](const PathResult& path) {
        const int n = path.steps();
        const Eigen::VectorXd u0 = path.states.col(0);
        const Eigen::VectorXd ut = path.states.col(n);
        double drift_energy = 0.0;
        double forcing_work = 0.0;
        double bzz = 0.0;
        for (int j = 0; j < n; ++j) {
            const double t = path.times[static_cast<std::size_t>(j)];
            const double dt = path.times[static_cast<std::size_t>(j) + 1] - t;
            const Eigen::VectorXd u = path.states.col(j);
            drift_energy += (problem.a.apply(t, u).dot(u) +
                             config.epsilon * u.dot(problem.r * u)) *
                            dt;
            forcing_work += problem.forcing(t).dot(u) * dt;
            bzz += bzz_pairing(problem.b, problem.noise, problem.w_mass, t) * dt;
        }
        const double lhs = 0.5 * ut.dot(reg * ut) - 0.5 * u0.dot(reg * u0) +
                           drift_energy;
        const double rhs = 0.5 * bzz + forcing_work;
        return std::vector<double>{lhs, rhs, lhs - rhs};
    };
    const auto rows =
        parallel_paths(problem, config, n_paths, master_seed, fn, workers);

    EnergyInequalityReport report;
    report.n_paths = n_paths;
    report.lhs_mean = reduce(rows, 0).mean;
    report.rhs_mean = reduce(rows, 1).mean;
    const MeanSe diff = reduce(rows, 2);
    report.diff_mean = diff.mean;
    report.diff_se = diff.se;
    report.slack = 3.0 * diff.se + slack_c * config.dt;
    report.pass = report.diff_mean <= report.slack;
    return report;
}

SupEnergyDiagnostic sup_energy_diagnostic(std::span<const PathResult> paths,
                                          const Problem& problem) {
    if (paths.empty()) {
        throw EmptyInput("sup_energy_diagnostic: need at least one path");
    }
    SupEnergyDiagnostic diag;
    const double p = problem.a.metadata.p;
    const double p_dual = p / (p - 1.0);
    double y_acc = 0.0;
    double x_acc = 0.0;
    double z_acc = 0.0;
    for (const PathResult& path : paths) {
        double sup = 0.0;
        const int n = path.steps();
        for (int j = 0; j <= n; ++j) {
            sup = std::max(sup, problem.b.energy(path.states.col(j)));
        }
        diag.estimate += sup;
        diag.initial_energy += problem.b.energy(path.states.col(0));
        for (int j = 0; j < n; ++j) {
            const double t = path.times[static_cast<std::size_t>(j)];
            const double dt = path.times[static_cast<std::size_t>(j) + 1] - t;
            const Eigen::VectorXd u = path.states.col(j);
            const Eigen::VectorXd y = problem.forcing(t) - problem.a.apply(t, u);
            y_acc += std::pow(problem.a.v_dual_norm(y), p_dual) * dt;
            x_acc += std::pow(problem.a.v_norm(u), p) * dt;
            z_acc += hs_norm_sq(problem.noise, problem.w_mass, t) * dt;
        }
    }
    const auto n_paths = static_cast<double>(paths.size());
    diag.estimate /= n_paths;
    diag.initial_energy /= n_paths;
    diag.y_norm = std::pow(y_acc / n_paths, 1.0 / p_dual);
    diag.x_norm = std::pow(x_acc / n_paths, 1.0 / p);
    diag.z_norm = std::sqrt(z_acc / n_paths);
    return diag;
}

}  // namespace spde
