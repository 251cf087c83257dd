#include "spde/bform.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>

#include "spde/noise.hpp"

namespace spde {

BForm::BForm(Eigen::MatrixXd matrix, double psd_tol) : psd_tol_(psd_tol) {
    if (matrix.rows() != matrix.cols()) {
        throw DimensionMismatch("BForm: matrix must be square");
    }
    if (psd_tol < 0.0) {
        throw std::invalid_argument("BForm: psd_tol must be nonnegative");
    }
    matrix_ = 0.5 * (matrix + matrix.transpose()).eval();
    inf_norm_ = matrix_.cwiseAbs().rowwise().sum().maxCoeff();
    if (matrix_.rows() > 0) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(matrix_,
                                                          Eigen::EigenvaluesOnly);
        min_eigenvalue_ = es.eigenvalues().minCoeff();
    }
    const double scale = std::max(1.0, inf_norm_);
    if (min_eigenvalue_ < -psd_tol_ * scale) {
        throw FormNotPsd("BForm: eigenvalue " + std::to_string(min_eigenvalue_) +
                         " below -psd_tol");
    }
}

BForm BForm::identity(Eigen::Index dim) {
    return BForm(Eigen::MatrixXd::Identity(dim, dim));
}

BForm BForm::zero(Eigen::Index dim) {
    return BForm(Eigen::MatrixXd::Zero(dim, dim));
}

Eigen::VectorXd BForm::apply(const Eigen::VectorXd& x) const {
    if (x.size() != dim()) {
        throw DimensionMismatch("BForm::apply: vector dimension mismatch");
    }
    return matrix_ * x;
}

double BForm::energy(const Eigen::VectorXd& x) const {
    return apply(x).dot(x);
}

double default_gram_zero_tol(const BForm& form) {
    return 1e-12 * (1.0 + form.inf_norm());
}

BOrthonormalBasis b_gram_schmidt(const BForm& form,
                                 const std::vector<Eigen::VectorXd>& candidates,
                                 double zero_tol) {
    if (candidates.empty()) {
        throw EmptyInput("b_gram_schmidt: no candidate vectors");
    }
    if (zero_tol <= 0.0) {
        zero_tol = default_gram_zero_tol(form);
    }

    BOrthonormalBasis basis;
    basis.form = form;

    for (int idx = 0; idx < static_cast<int>(candidates.size()); ++idx) {
        const Eigen::VectorXd& g = candidates[idx];
        if (g.size() != form.dim()) {
            throw DimensionMismatch("b_gram_schmidt: candidate dimension mismatch");
        }
        Eigen::VectorXd r = g;
        // Classical projection applied twice: the second pass removes the
        // cancellation error the first leaves behind, which a semidefinite
        // form amplifies.
        for (int pass = 0; pass < 2; ++pass) {
            const Eigen::VectorXd br = form.apply(r);
            for (const Eigen::VectorXd& e : basis.vectors) {
                r -= br.dot(e) * e;
            }
        }
        // The drop test is relative to the residual's own scale: projections
        // against near-null basis vectors amplify |r|, and an absolute energy
        // floor would then accept numerically-null directions.
        const double residual_energy = form.energy(r);
        if (residual_energy > zero_tol * (1.0 + r.squaredNorm())) {
            basis.vectors.push_back(r / std::sqrt(residual_energy));
        } else {
            basis.drop_log.push_back(idx);
        }
    }
    return basis;
}

ParsevalResult b_parseval(const BForm& form, const BOrthonormalBasis& basis,
                          const Eigen::VectorXd& x) {
    if (basis.form.dim() != form.dim()) {
        throw DimensionMismatch("b_parseval: basis/form dimension mismatch");
    }
    if (x.size() != form.dim()) {
        throw DimensionMismatch("b_parseval: vector dimension mismatch");
    }
    ParsevalResult out;
    const Eigen::VectorXd bx = form.apply(x);
    out.reconstruction = Eigen::VectorXd::Zero(form.dim());
    for (const Eigen::VectorXd& e : basis.vectors) {
        const double c = bx.dot(e);
        out.energy += c * c;
        out.reconstruction += c * form.apply(e);
    }
    out.residual = (bx - out.reconstruction).lpNorm<Eigen::Infinity>();
    return out;
}

double bzz_pairing(const BForm& form, const NoiseModel& noise,
                   const Eigen::MatrixXd& w_mass, double t) {
    if (noise.state_dim() != form.dim()) {
        throw DimensionMismatch("bzz_pairing: noise state dimension mismatch");
    }
    if (w_mass.rows() != form.dim() || w_mass.cols() != form.dim()) {
        throw DimensionMismatch("bzz_pairing: W-Gram dimension mismatch");
    }
    const Eigen::MatrixXd phi = noise.phi(t);
    double total = 0.0;
    for (const auto& [lambda, u] : noise.spectrum()) {
        const Eigen::VectorXd col = phi * u;
        total += lambda * form.energy(col);
    }
    const double scale = std::max(1.0, form.inf_norm());
    if (total < -form.psd_tol() * scale) {
        throw FormNotPsd("bzz_pairing: negative value " + std::to_string(total));
    }
    return std::max(total, 0.0);
}

}  // namespace spde
