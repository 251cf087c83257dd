#include "spde/operators.hpp"

#include <cmath>

namespace spde {

namespace {

constexpr double kCheckTol = 1e-9;

}  // namespace

StructuralCheckReport check_coercivity(
    const NonlinearOperator& op, const BForm& b,
    std::span<const std::pair<double, Eigen::VectorXd>> samples) {
    StructuralCheckReport report;
    report.values.reserve(samples.size());
    const OperatorMetadata& md = op.metadata;
    int index = 0;
    for (const auto& [t, u] : samples) {
        const double bu = md.coercivity_shift_lambda * b.energy(u);
        const double au = op.apply(t, u).dot(u);
        const double lower = md.coercivity_k * std::pow(op.v_norm(u), md.p) -
                             md.coercivity_c(t);
        const double value = bu + au - lower;
        const double scale = std::abs(bu) + std::abs(au) + std::abs(lower);
        report.values.push_back(value);
        if (value < -kCheckTol * (1.0 + scale)) {
            report.violations.push_back({index, value, kCheckTol * (1.0 + scale)});
        }
        ++index;
    }
    return report;
}

StructuralCheckReport check_monotonicity(const NonlinearOperator& op, const BForm& b,
                                         std::span<const MonotonicityPair> pairs) {
    StructuralCheckReport report;
    report.values.reserve(pairs.size());
    const double lambda = op.metadata.monotone_lambda.value_or(0.0);
    int index = 0;
    for (const auto& [t, u, v] : pairs) {
        const Eigen::VectorXd diff = u - v;
        const Eigen::VectorXd lhs = lambda * (b.apply(u) - b.apply(v)) +
                                    op.apply(t, u) - op.apply(t, v);
        const double value = lhs.dot(diff);
        const double scale = lhs.cwiseAbs().dot(diff.cwiseAbs());
        report.values.push_back(value);
        if (value < -kCheckTol * (1.0 + scale)) {
            report.violations.push_back({index, value, kCheckTol * (1.0 + scale)});
        }
        ++index;
    }
    return report;
}

NonlinearOperator exp_shift(const NonlinearOperator& op, double lambda) {
    NonlinearOperator shifted = op;
    auto apply = op.apply;
    shifted.apply = [apply, lambda](double t, const Eigen::VectorXd& w) {
        return (std::exp(-lambda * t) * apply(t, std::exp(lambda * t) * w)).eval();
    };
    if (op.jacobian) {
        auto jac = op.jacobian;
        shifted.jacobian = [jac, lambda](double t, const Eigen::VectorXd& w) {
            // d/dw [exp(-l t) A(t, exp(l t) w)] = A'(t, exp(l t) w).
            return jac(t, (std::exp(lambda * t) * w).eval());
        };
    }
    auto c = op.metadata.coercivity_c;
    shifted.metadata.coercivity_c = [c, lambda](double t) {
        return std::exp(-2.0 * lambda * t) * c(t);
    };
    return shifted;
}

Eigen::VectorXd ball_project(const Eigen::VectorXd& u, double radius,
                             const Eigen::MatrixXd& h_mass) {
    if (radius <= 0.0) {
        throw std::invalid_argument("ball_project: radius must be positive");
    }
    if (h_mass.rows() != u.size() || h_mass.cols() != u.size()) {
        throw DimensionMismatch("ball_project: mass matrix dimension mismatch");
    }
    const double norm = std::sqrt(std::max(0.0, u.dot(h_mass * u)));
    if (norm <= radius) {
        return u;
    }
    return (radius / norm) * u;
}

}  // namespace spde
