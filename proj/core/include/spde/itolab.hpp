#pragma once

#include <Eigen/Dense>
#include <span>
#include <vector>

#include "spde/integrator.hpp"

namespace spde {

/// Term-by-term decomposition of the discrete energy identity
///
///   <B u(t), u(t)> = <B u0, u0> + sum 2<Y, u> dt + sum <B Z, Z> dt
///                    + 2 sum <B u, Phi dW>
///
/// with Y(t_j) = f(t_j) - A(t_j, u(t_j)). All cumulative terms start at 0,
/// so residual(0) = 0 exactly. qv_bound is the running bound
/// C * sum |Z|_HS^2 |B u|_{W'}^2 dt with C = 4 * cond(W-Gram), which
/// dominates the quadratic variation of the martingale term.
struct ItoLedger {
    std::vector<double> times;
    std::vector<double> lhs;
    double term_initial = 0.0;
    std::vector<double> term_drift;
    std::vector<double> term_bzz;
    std::vector<double> term_martingale;
    std::vector<double> residual;
    std::vector<double> qv_bound;

    double max_abs_residual() const;
};

/// Builds the ledger for one path. Y is reconstructed as f - A(u) at the
/// grid points, so the ledger is scheme-agnostic.
ItoLedger pathwise_ledger(const PathResult& path, const Problem& problem);

struct EnergyCheckPoint {
    double t = 0.0;
    double lhs_mean = 0.0;
    double lhs_se = 0.0;
    double rhs_mean = 0.0;
    double rhs_se = 0.0;
    double diff_mean = 0.0;
    double diff_se = 0.0;
    double martingale_mean = 0.0;
    double martingale_se = 0.0;
    bool identity_pass = false;
    bool martingale_pass = false;
};

struct ExpectedEnergyReport {
    std::vector<EnergyCheckPoint> points;
    double bias_allowance = 0.0;
    std::int64_t n_paths = 0;

    bool pass() const;
};

/// Monte Carlo check of the expectation identity
///   E<Bu(t),u(t)> = E<Bu0,u0> + E int (2<Y,u> + <BZ,Z>) ds
/// at each requested time (snapped down to the grid). Passes when
/// |E lhs - E rhs| <= 3*SE + bias_kappa*dt and the martingale term's mean
/// lies within 3*SE of zero.
ExpectedEnergyReport expected_energy_check(const Problem& problem,
                                           const SolverConfig& config,
                                           std::int64_t n_paths,
                                           std::uint64_t master_seed,
                                           std::span<const double> t_checks,
                                           double bias_kappa = 1.0, int workers = 0);

struct EnergyInequalityReport {
    double lhs_mean = 0.0;
    double rhs_mean = 0.0;
    double diff_mean = 0.0;  // lhs - rhs per path, averaged
    double diff_se = 0.0;
    double slack = 0.0;
    std::int64_t n_paths = 0;
    bool pass = false;
};

/// Monte Carlo check of the regularized energy inequality
///   (1/2)E<(B+eR)u(T),u(T)> - (1/2)E<(B+eR)u0,u0>
///     + E int (<Au,u> + e<Ru,u>) ds
///   <= (1/2)E int <BZ,Z> ds + E int <f,u> ds + slack
/// with slack = 3*SE + slack_c*dt.
EnergyInequalityReport energy_inequality_check(const Problem& problem,
                                               const SolverConfig& config,
                                               std::int64_t n_paths,
                                               std::uint64_t master_seed,
                                               double slack_c = 1.0, int workers = 0);

struct SupEnergyDiagnostic {
    double estimate = 0.0;        // mean over paths of sup_t <Bu(t), u(t)>
    double y_norm = 0.0;          // discrete L^p' norm of Y = f - A(u)
    double x_norm = 0.0;          // discrete L^p norm of u
    double z_norm = 0.0;          // discrete L^2 Hilbert-Schmidt norm of Z
    double initial_energy = 0.0;  // mean <Bu0, u0>
};

/// Estimates E sup_t <Bu(t),u(t)> together with the norm ingredients that
/// bound it. Reports values only; no bound constant is asserted.
SupEnergyDiagnostic sup_energy_diagnostic(std::span<const PathResult> paths,
                                          const Problem& problem);

}  // namespace spde
