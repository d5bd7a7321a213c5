#include "mcgp/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace mcgp {

double Cholesky::log_det() const
{
    const auto& L = llt.matrixLLT();
    double s = 0.0;
    for (Eigen::Index i = 0; i < L.rows(); ++i)
        s += std::log(L(i, i));
    return 2.0 * s;
}

std::string condition_report(const Matrix& sym)
{
    std::ostringstream os;
    if (sym.rows() == 0) {
        os << "empty matrix";
        return os.str();
    }
    if (!sym.allFinite()) {
        os << "matrix has non-finite entries";
        return os.str();
    }
    Eigen::SelfAdjointEigenSolver<Matrix> es(sym, Eigen::EigenvaluesOnly);
    const double lo = es.eigenvalues().minCoeff();
    const double hi = es.eigenvalues().maxCoeff();
    os << "size " << sym.rows() << ", eigenvalues in [" << lo << ", " << hi << "]";
    if (lo > 0.0)
        os << ", condition number " << hi / lo;
    else
        os << ", not positive definite";
    return os.str();
}

Cholesky factorize(const Matrix& sym, double jitter, const std::string& what, int max_escalations)
{
    if (sym.rows() != sym.cols())
        throw ArgumentError(what + ": matrix is not square");
    Cholesky out;
    double j = jitter;
    for (int attempt = 0; attempt <= max_escalations; ++attempt) {
        Matrix a = sym;
        a.diagonal().array() += j;
        out.llt.compute(a);
        if (out.llt.info() == Eigen::Success && out.llt.matrixLLT().diagonal().allFinite()) {
            out.jitter = j;
            return out;
        }
        j = j > 0.0 ? 10.0 * j : 1e-12 * std::max(1.0, sym.diagonal().cwiseAbs().maxCoeff());
    }
    throw NumericalError(what + ": Cholesky factorization failed (" + condition_report(sym) + ")");
}

} // namespace mcgp
