#pragma once

// Exact-arithmetic reference for the B-orthogonalization: runs the same
// scan-and-project recursion over the rationals, so normalization is the only
// floating-point step. Test-only; independent of the library implementation.

#include <boost/multiprecision/cpp_int.hpp>
#include <cmath>
#include <vector>

namespace oracle {

using Rational = boost::multiprecision::cpp_rational;
using RationalVector = std::vector<Rational>;
using RationalMatrix = std::vector<std::vector<Rational>>;

inline RationalVector mat_apply(const RationalMatrix& b, const RationalVector& x) {
    RationalVector out(b.size(), Rational(0));
    for (std::size_t i = 0; i < b.size(); ++i) {
        for (std::size_t j = 0; j < x.size(); ++j) {
            out[i] += b[i][j] * x[j];
        }
    }
    return out;
}

inline Rational dot(const RationalVector& a, const RationalVector& b) {
    Rational out(0);
    for (std::size_t i = 0; i < a.size(); ++i) {
        out += a[i] * b[i];
    }
    return out;
}

/// Unnormalized residual vectors r_i and their energies <B r_i, r_i>, in
/// acceptance order. The library's basis vectors must equal
/// r_i / sqrt(energy_i) componentwise. Candidates whose residual energy is
/// exactly zero are dropped, mirroring the exact-zero test of the recursion.
struct ExactBasis {
    std::vector<RationalVector> residuals;
    std::vector<Rational> energies;
    std::vector<int> dropped;
};

inline ExactBasis exact_b_gram_schmidt(const RationalMatrix& b,
                                       const std::vector<RationalVector>& candidates) {
    ExactBasis basis;
    for (std::size_t idx = 0; idx < candidates.size(); ++idx) {
        RationalVector r = candidates[idx];
        const RationalVector br_initial = mat_apply(b, r);
        for (std::size_t k = 0; k < basis.residuals.size(); ++k) {
            // <B g, e_k> with e_k = r_k / sqrt(E_k): coefficient against the
            // unnormalized residual is <B g, r_k> / E_k.
            const Rational coeff = dot(br_initial, basis.residuals[k]) / basis.energies[k];
            for (std::size_t i = 0; i < r.size(); ++i) {
                r[i] -= coeff * basis.residuals[k][i];
            }
        }
        const Rational energy = dot(mat_apply(b, r), r);
        if (energy > 0) {
            basis.residuals.push_back(r);
            basis.energies.push_back(energy);
        } else {
            basis.dropped.push_back(static_cast<int>(idx));
        }
    }
    return basis;
}

inline double to_double(const Rational& r) {
    return static_cast<double>(r);
}

/// e_i as doubles: r_i / sqrt(E_i) evaluated with one rounding per entry.
inline std::vector<std::vector<double>> normalized(const ExactBasis& basis) {
    std::vector<std::vector<double>> out;
    for (std::size_t k = 0; k < basis.residuals.size(); ++k) {
        std::vector<double> e;
        const double scale = 1.0 / std::sqrt(to_double(basis.energies[k]));
        for (const Rational& r : basis.residuals[k]) {
            e.push_back(to_double(r) * scale);
        }
        out.push_back(std::move(e));
    }
    return out;
}

}  // namespace oracle
