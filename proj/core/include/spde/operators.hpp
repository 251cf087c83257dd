#pragma once

#include <Eigen/Dense>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "spde/bform.hpp"

namespace spde {

/// Structural constants of a nonlinear operator: the V-norm exponent p > 1,
/// the shifted coercivity lambda*<Bu,u> + <A(t,u),u> >= k*|u|_V^p - C(t),
/// the growth bound |A(t,v)|_V' <= g(t) + c*|v|_V^(p-1), and the
/// monotonicity shift (lambda*B + A monotone), when known.
struct OperatorMetadata {
    double p = 2.0;
    double coercivity_k = 0.0;
    double coercivity_shift_lambda = 0.0;
    std::function<double(double)> coercivity_c = [](double) { return 0.0; };
    double growth_c = 0.0;
    std::function<double(double)> growth_g = [](double) { return 0.0; };
    std::optional<double> monotone_lambda;
};

/// A deterministic nonlinear operator (t, u) -> A(t, u), returning covector
/// coordinates. `jacobian` is optional; when absent the implicit stepper
/// falls back to a finite-difference Jacobian. `v_norm`/`v_dual_norm` give
/// the discrete V-norm the metadata constants refer to and its dual; both
/// default to the Euclidean norm.
struct NonlinearOperator {
    Eigen::Index dim = 0;
    std::function<Eigen::VectorXd(double, const Eigen::VectorXd&)> apply;
    std::function<Eigen::MatrixXd(double, const Eigen::VectorXd&)> jacobian;
    OperatorMetadata metadata;
    std::function<double(const Eigen::VectorXd&)> v_norm =
        [](const Eigen::VectorXd& u) { return u.norm(); };
    std::function<double(const Eigen::VectorXd&)> v_dual_norm =
        [](const Eigen::VectorXd& y) { return y.norm(); };
};

/// Result of a sampled structural check. `values` holds the tested quantity
/// per sample; entries below the scale-aware floor land in `violations`.
struct StructuralCheckReport {
    struct Violation {
        int index = 0;
        double value = 0.0;
        double tolerance = 0.0;
    };
    std::vector<double> values;
    std::vector<Violation> violations;

    bool pass() const { return violations.empty(); }
};

/// Evaluates lambda*<Bu,u> + <A(t,u),u> - (k*|u|_V^p - C(t)) on each sample
/// and reports entries below -1e-9 * (1 + |terms|).
StructuralCheckReport check_coercivity(
    const NonlinearOperator& op, const BForm& b,
    std::span<const std::pair<double, Eigen::VectorXd>> samples);

struct MonotonicityPair {
    double t = 0.0;
    Eigen::VectorXd u;
    Eigen::VectorXd v;
};

/// Evaluates <lambda*Bu + A(t,u) - (lambda*Bv + A(t,v)), u - v> on each pair
/// and reports entries below -1e-9 * scale. lambda is taken from
/// metadata.monotone_lambda (0 when absent).
StructuralCheckReport check_monotonicity(const NonlinearOperator& op, const BForm& b,
                                         std::span<const MonotonicityPair> pairs);

/// The exponential shift A_lambda(t, w) = exp(-lambda t) * A(t, exp(lambda t) w).
/// Coercivity constants transform as k -> k, C(t) -> exp(-2 lambda t) C(t),
/// valid for p >= 2 and lambda >= 0.
NonlinearOperator exp_shift(const NonlinearOperator& op, double lambda);

/// Metric projection onto the closed ball of the given radius in the norm
/// |u|_H = sqrt(u^T h_mass u).
Eigen::VectorXd ball_project(const Eigen::VectorXd& u, double radius,
                             const Eigen::MatrixXd& h_mass);

}  // namespace spde
