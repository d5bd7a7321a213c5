#ifndef MCGP_LINALG_HPP
#define MCGP_LINALG_HPP

#include "mcgp/types.hpp"

#include <string>

namespace mcgp {

/// Lower Cholesky factor of a symmetric matrix plus the diagonal jitter that
/// was needed to obtain it.
struct Cholesky {
    Eigen::LLT<Matrix> llt;
    double jitter = 0.0;

    Eigen::Index size() const { return llt.rows(); }
    Matrix lower() const { return llt.matrixL(); }

    /// Solves (K + jitter I) x = b.
    template <typename Rhs>
    auto solve(const Rhs& b) const
    {
        return llt.solve(b);
    }

    /// Applies L^{-1}.
    Matrix solve_lower(const Matrix& b) const { return llt.matrixL().solve(b); }

    /// log det(K + jitter I).
    double log_det() const;
};

/// Factorizes `sym + jitter*I`. If `max_escalations > 0`, a failed attempt is
/// retried with the jitter multiplied by 10 each time. Throws NumericalError
/// (with an eigenvalue-based condition report) once attempts are exhausted.
Cholesky factorize(const Matrix& sym, double jitter, const std::string& what, int max_escalations = 0);

/// Short human-readable spectrum summary used in error messages.
std::string condition_report(const Matrix& sym);

} // namespace mcgp

#endif
