#pragma once

#include <functional>

#include "spde/integrator.hpp"

namespace spde {

/// Uniform 1D grid on (0, L) with n interior nodes, homogeneous Dirichlet
/// boundary. Spacing h = L / (n + 1); node i sits at (i + 1) * h.
struct Grid1D {
    int n = 0;
    double length = 1.0;

    double h() const { return length / static_cast<double>(n + 1); }
    Eigen::VectorXd nodes() const;
};

/// Tridiagonal discrete Dirichlet Laplacian (-1, 2, -1) / h^2 on the grid's
/// interior nodes. Eigenvalues are 2 (1 - cos(k pi / (n+1))) / h^2.
Eigen::MatrixXd dirichlet_laplacian(const Grid1D& grid);

/// Ornstein-Uhlenbeck oracle problem: B = I, A(u) = lambda u, Phi = sigma I,
/// f = 0. Closed second moment: E|u(t)|^2 per coordinate is
/// u0^2 exp(-2 lambda t) + sigma^2 (1 - exp(-2 lambda t)) / (2 lambda).
Problem make_ou(Eigen::Index d, double lambda, double sigma,
                const Eigen::VectorXd& u0, double horizon);

/// Stochastic porous media equation in implicit form on a 1D grid:
/// B = h * L_h^{-1} (dense SPD), A(u)_i = h u_i |u_i|^(p-2), W-Gram = h I.
Problem make_porous_media(const Grid1D& grid, double p, const NoiseModel& noise,
                          const Eigen::VectorXd& u0, double horizon = 1.0);

/// Degenerate nonlinear diffusion: B = diag(h b(x_i)) (singular wherever the
/// weight vanishes), A the discrete Dirichlet p-Laplacian assembled over
/// edges, R = W-Gram = h (I + L_h).
Problem make_degenerate_plaplacian(const Grid1D& grid, double p,
                                   const std::function<double(double)>& b_weight,
                                   const NoiseModel& noise, const Eigen::VectorXd& u0,
                                   double horizon = 1.0);

/// B = 0: the solve degenerates to eps R u' + A(u) = f, and the noise image
/// B Phi dW vanishes, so outputs are seed-independent.
Problem make_zero_b(Eigen::Index d, NonlinearOperator a,
                    std::function<Eigen::VectorXd(double)> f, const NoiseModel& noise,
                    const Eigen::VectorXd& u0, double horizon = 1.0);

/// Componentwise linear operator A(u) = c u on R^d with Euclidean V-norm.
NonlinearOperator linear_operator(Eigen::Index d, double c);

/// Componentwise cubic operator A(u) = c u^3 on R^d (monotone for c >= 0).
NonlinearOperator cubic_operator(Eigen::Index d, double c);

}  // namespace spde
