#include "spde/problems.hpp"

#include <cmath>

namespace spde {

namespace {

double signed_power(double s, double p_minus_2) {
    return s == 0.0 ? 0.0 : std::pow(std::abs(s), p_minus_2) * s;
}

// Edge differences (Du)_e = (u_e - u_{e-1}) / h for e = 1..n+1 with Dirichlet
// zeros at both ends.
Eigen::VectorXd edge_gradient(const Eigen::VectorXd& u, double h) {
    const Eigen::Index n = u.size();
    Eigen::VectorXd g(n + 1);
    g(0) = u(0) / h;
    for (Eigen::Index e = 1; e < n; ++e) {
        g(e) = (u(e) - u(e - 1)) / h;
    }
    g(n) = -u(n - 1) / h;
    return g;
}

// Dual norm of a covector against the edge-gradient lp norm: the edge
// representation of y is fixed up to an additive constant, so minimize the
// weighted l^{p'} norm over that constant (convex, solved by ternary search).
double gradient_dual_norm(const Eigen::VectorXd& y, double h, double p) {
    const double pd = p / (p - 1.0);
    const Eigen::Index n = y.size();
    Eigen::VectorXd w(n + 1);
    w(0) = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        w(i + 1) = w(i) - y(i);
    }
    auto norm_at = [&](double c) {
        double acc = 0.0;
        for (Eigen::Index e = 0; e <= n; ++e) {
            acc += h * std::pow(std::abs(w(e) + c), pd);
        }
        return acc;
    };
    double lo = -w.cwiseAbs().maxCoeff() - 1.0;
    double hi = -lo;
    for (int it = 0; it < 100; ++it) {
        const double m1 = lo + (hi - lo) / 3.0;
        const double m2 = hi - (hi - lo) / 3.0;
        if (norm_at(m1) < norm_at(m2)) {
            hi = m2;
        } else {
            lo = m1;
        }
    }
    return std::pow(norm_at(0.5 * (lo + hi)), 1.0 / pd);
}

}  // namespace

Eigen::VectorXd Grid1D::nodes() const {
    Eigen::VectorXd x(n);
    for (int i = 0; i < n; ++i) {
        x(i) = static_cast<double>(i + 1) * h();
    }
    return x;
}

Eigen::MatrixXd dirichlet_laplacian(const Grid1D& grid) {
    const int n = grid.n;
    const double h2 = grid.h() * grid.h();
    Eigen::MatrixXd lap = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i) {
        lap(i, i) = 2.0 / h2;
        if (i > 0) {
            lap(i, i - 1) = -1.0 / h2;
        }
        if (i + 1 < n) {
            lap(i, i + 1) = -1.0 / h2;
        }
    }
    return lap;
}

NonlinearOperator linear_operator(Eigen::Index d, double c) {
    NonlinearOperator op;
    op.dim = d;
    op.apply = [c](double, const Eigen::VectorXd& u) { return (c * u).eval(); };
    op.jacobian = [c, d](double, const Eigen::VectorXd&) {
        return (c * Eigen::MatrixXd::Identity(d, d)).eval();
    };
    op.metadata.p = 2.0;
    op.metadata.coercivity_k = c;
    op.metadata.growth_c = std::abs(c);
    if (c >= 0.0) {
        op.metadata.monotone_lambda = 0.0;
    }
    return op;
}

NonlinearOperator cubic_operator(Eigen::Index d, double c) {
    NonlinearOperator op;
    op.dim = d;
    op.apply = [c](double, const Eigen::VectorXd& u) {
        return (c * u.array().cube()).matrix().eval();
    };
    op.jacobian = [c](double, const Eigen::VectorXd& u) {
        return Eigen::MatrixXd(
            (3.0 * c * u.array().square()).matrix().asDiagonal());
    };
    op.metadata.p = 4.0;
    op.metadata.coercivity_k = c;
    op.metadata.growth_c = std::abs(c);
    if (c >= 0.0) {
        op.metadata.monotone_lambda = 0.0;
    }
    op.v_norm = [](const Eigen::VectorXd& u) {
        return std::pow(u.array().abs().pow(4.0).sum(), 0.25);
    };
    op.v_dual_norm = [](const Eigen::VectorXd& y) {
        return std::pow(y.array().abs().pow(4.0 / 3.0).sum(), 0.75);
    };
    return op;
}

Problem make_ou(Eigen::Index d, double lambda, double sigma,
                const Eigen::VectorXd& u0, double horizon) {
    if (lambda < 0.0) {
        throw std::invalid_argument("make_ou: lambda must be nonnegative");
    }
    Problem problem;
    problem.dim = d;
    problem.b = BForm::identity(d);
    problem.r = Eigen::MatrixXd::Identity(d, d);
    problem.a = linear_operator(d, lambda);
    problem.noise = NoiseModel::constant(
        d, Eigen::MatrixXd::Identity(d, d),
        sigma * Eigen::MatrixXd::Identity(d, d));
    problem.u0 = u0;
    problem.w_mass = Eigen::MatrixXd::Identity(d, d);
    problem.horizon = horizon;
    problem.validate();
    return problem;
}

Problem make_porous_media(const Grid1D& grid, double p, const NoiseModel& noise,
                          const Eigen::VectorXd& u0, double horizon) {
    if (p < 2.0) {
        throw UnsupportedExponent("make_porous_media: requires p >= 2");
    }
    const int n = grid.n;
    const double h = grid.h();
    const Eigen::MatrixXd lap = dirichlet_laplacian(grid);

    Problem problem;
    problem.dim = n;
    problem.b = BForm(h * lap.inverse());
    problem.r = h * Eigen::MatrixXd::Identity(n, n);
    problem.w_mass = h * Eigen::MatrixXd::Identity(n, n);

    NonlinearOperator op;
    op.dim = n;
    op.apply = [h, p](double, const Eigen::VectorXd& u) {
        Eigen::VectorXd out(u.size());
        for (Eigen::Index i = 0; i < u.size(); ++i) {
            out(i) = h * signed_power(u(i), p - 2.0);
        }
        return out;
    };
    op.jacobian = [h, p](double, const Eigen::VectorXd& u) {
        Eigen::VectorXd diag(u.size());
        for (Eigen::Index i = 0; i < u.size(); ++i) {
            diag(i) = h * (p - 1.0) * std::pow(std::abs(u(i)), p - 2.0);
        }
        return Eigen::MatrixXd(diag.asDiagonal());
    };
    op.metadata.p = p;
    op.metadata.coercivity_k = 1.0;
    op.metadata.growth_c = 1.0;
    op.metadata.monotone_lambda = 0.0;
    op.v_norm = [h, p](const Eigen::VectorXd& u) {
        return std::pow((h * u.array().abs().pow(p)).sum(), 1.0 / p);
    };
    const double pd = p / (p - 1.0);
    op.v_dual_norm = [h, pd](const Eigen::VectorXd& y) {
        return std::pow((h * (y.array() / h).abs().pow(pd)).sum(), 1.0 / pd);
    };
    problem.a = std::move(op);

    problem.noise = noise;
    problem.u0 = u0;
    problem.horizon = horizon;
    problem.validate();
    return problem;
}

Problem make_degenerate_plaplacian(const Grid1D& grid, double p,
                                   const std::function<double(double)>& b_weight,
                                   const NoiseModel& noise, const Eigen::VectorXd& u0,
                                   double horizon) {
    if (p < 2.0) {
        throw UnsupportedExponent("make_degenerate_plaplacian: requires p >= 2");
    }
    const int n = grid.n;
    const double h = grid.h();
    const Eigen::VectorXd x = grid.nodes();

    Eigen::VectorXd b_diag(n);
    for (int i = 0; i < n; ++i) {
        const double w = b_weight(x(i));
        if (w < 0.0) {
            throw InvalidWeight("make_degenerate_plaplacian: b(x) < 0 at node " +
                                std::to_string(i));
        }
        b_diag(i) = h * w;
    }

    Problem problem;
    problem.dim = n;
    problem.b = BForm(Eigen::MatrixXd(b_diag.asDiagonal()));
    const Eigen::MatrixXd lap = dirichlet_laplacian(grid);
    problem.r = h * (Eigen::MatrixXd::Identity(n, n) + lap);
    problem.w_mass = problem.r;

    NonlinearOperator op;
    op.dim = n;
    op.apply = [h, p](double, const Eigen::VectorXd& u) {
        const Eigen::VectorXd g = edge_gradient(u, h);
        Eigen::VectorXd out(u.size());
        for (Eigen::Index i = 0; i < u.size(); ++i) {
            out(i) = signed_power(g(i), p - 2.0) - signed_power(g(i + 1), p - 2.0);
        }
        return out;
    };
    op.jacobian = [h, p](double, const Eigen::VectorXd& u) {
        const Eigen::VectorXd g = edge_gradient(u, h);
        const Eigen::Index n_loc = u.size();
        Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(n_loc, n_loc);
        for (Eigen::Index i = 0; i < n_loc; ++i) {
            const double dl = (p - 1.0) * std::pow(std::abs(g(i)), p - 2.0) / h;
            const double dr = (p - 1.0) * std::pow(std::abs(g(i + 1)), p - 2.0) / h;
            jac(i, i) = dl + dr;
            if (i > 0) {
                jac(i, i - 1) = -dl;
            }
            if (i + 1 < n_loc) {
                jac(i, i + 1) = -dr;
            }
        }
        return jac;
    };
    op.metadata.p = p;
    op.metadata.coercivity_k = 1.0;
    op.metadata.growth_c = 1.0;
    op.metadata.monotone_lambda = 0.0;
    op.v_norm = [h, p](const Eigen::VectorXd& u) {
        return std::pow((h * edge_gradient(u, h).array().abs().pow(p)).sum(),
                        1.0 / p);
    };
    op.v_dual_norm = [h, p](const Eigen::VectorXd& y) {
        return gradient_dual_norm(y, h, p);
    };
    problem.a = std::move(op);

    problem.noise = noise;
    problem.u0 = u0;
    problem.horizon = horizon;
    problem.validate();
    return problem;
}

Problem make_zero_b(Eigen::Index d, NonlinearOperator a,
                    std::function<Eigen::VectorXd(double)> f, const NoiseModel& noise,
                    const Eigen::VectorXd& u0, double horizon) {
    Problem problem;
    problem.dim = d;
    problem.b = BForm::zero(d);
    problem.r = Eigen::MatrixXd::Identity(d, d);
    problem.w_mass = Eigen::MatrixXd::Identity(d, d);
    problem.a = std::move(a);
    problem.f = std::move(f);
    problem.noise = noise;
    problem.u0 = u0;
    problem.horizon = horizon;
    problem.validate();
    return problem;
}

}  // namespace spde
