#pragma once

#include <Eigen/Dense>
#include <vector>

#include "spde/errors.hpp"

namespace spde {

class NoiseModel;

/// Symmetric positive-semidefinite bilinear form B, stored as a dense matrix
/// mapping state coordinates to covector coordinates. The pairing <Bx, y> is
/// evaluated as (B*x) . y. Construction symmetrizes exactly and validates
/// that every eigenvalue is >= -psd_tol.
class BForm {
public:
    BForm() = default;

    explicit BForm(Eigen::MatrixXd matrix, double psd_tol = 1e-10);

    static BForm identity(Eigen::Index dim);
    static BForm zero(Eigen::Index dim);

    Eigen::Index dim() const { return matrix_.rows(); }
    const Eigen::MatrixXd& matrix() const { return matrix_; }
    double psd_tol() const { return psd_tol_; }
    double min_eigenvalue() const { return min_eigenvalue_; }

    /// Max-row-sum norm of the matrix; used to scale tolerances.
    double inf_norm() const { return inf_norm_; }

    /// Covector Bx.
    Eigen::VectorXd apply(const Eigen::VectorXd& x) const;

    /// Scalar <Bx, x>, guaranteed >= -psd_tol * |x|^2 by construction.
    double energy(const Eigen::VectorXd& x) const;

private:
    Eigen::MatrixXd matrix_;
    double psd_tol_ = 1e-10;
    double min_eigenvalue_ = 0.0;
    double inf_norm_ = 0.0;
};

/// Output of b_gram_schmidt: vectors e_i with <B e_i, e_j> = delta_ij.
/// drop_log records the indices of candidates whose B-residual energy fell
/// at or below the zero tolerance and were therefore consumed without
/// producing a basis vector.
struct BOrthonormalBasis {
    std::vector<Eigen::VectorXd> vectors;
    BForm form;
    std::vector<int> drop_log;

    int size() const { return static_cast<int>(vectors.size()); }
};

/// Default residual-energy floor for b_gram_schmidt: 1e-12 * (1 + |B|_inf).
double default_gram_zero_tol(const BForm& form);

/// Gram-Schmidt with respect to the semidefinite form B. Candidates are
/// consumed in the order given; a candidate survives only if the B-energy of
/// its residual (after projecting out previously accepted vectors) exceeds
/// zero_tol. Each accepted vector gets one repeated projection pass before
/// normalization. zero_tol <= 0 selects the default.
BOrthonormalBasis b_gram_schmidt(const BForm& form,
                                 const std::vector<Eigen::VectorXd>& candidates,
                                 double zero_tol = 0.0);

struct ParsevalResult {
    double energy = 0.0;               // sum_i <Bx, e_i>^2
    Eigen::VectorXd reconstruction;    // sum_i <Bx, e_i> B e_i
    double residual = 0.0;             // |Bx - reconstruction|_inf
};

/// Expands Bx over a B-orthonormal basis and reports the expansion energy,
/// the reconstructed covector, and the reconstruction residual.
ParsevalResult b_parseval(const BForm& form, const BOrthonormalBasis& basis,
                          const Eigen::VectorXd& x);

/// The pairing <B Z, Z> for Z = Phi(t) viewed as an operator from the
/// covariance range into the state space:
///
///   sum_i lambda_i * (Phi u_i)^T B (Phi u_i)
///
/// over the strictly positive eigenpairs (lambda_i, u_i) of Q. The result is
/// independent of the W-Gram matrix (the Riesz factors cancel in
/// coordinates); w_mass is taken for dimension validation and to document
/// that the value reduces to the squared Hilbert-Schmidt norm when B equals
/// the W-Gram matrix.
double bzz_pairing(const BForm& form, const NoiseModel& noise,
                   const Eigen::MatrixXd& w_mass, double t = 0.0);

}  // namespace spde
