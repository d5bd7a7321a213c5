#include "mcgp/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace mcgp {

BoxQuadratic::BoxQuadratic(Matrix hessian, bool nonnegative) : H_(std::move(hessian)), nonnegative_(nonnegative)
{
    if (H_.rows() != H_.cols())
        throw ArgumentError("BoxQuadratic: Hessian must be square");
}

LsqSolution BoxQuadratic::minimize(const Vector& linear, const Vector& x0, const LsqOptions& opts) const
{
    const Eigen::Index m = H_.rows();
    if (linear.size() != m || x0.size() != m)
        throw ArgumentError("BoxQuadratic::minimize: vector sizes do not match the Hessian");

    auto pg_norm = [&](const Vector& x, const Vector& grad) {
        double worst = 0.0;
        for (Eigen::Index i = 0; i < m; ++i) {
            const double step = nonnegative_ ? std::max(x[i] - grad[i], 0.0) : x[i] - grad[i];
            worst = std::max(worst, std::abs(x[i] - step));
        }
        return worst;
    };

    LsqSolution out;
    if (!nonnegative_) {
        const Eigen::LLT<Matrix> llt(H_);
        if (llt.info() != Eigen::Success)
            throw NumericalError("BoxQuadratic::minimize: Hessian is not positive definite");
        out.x = llt.solve(linear);
        out.optimality = pg_norm(out.x, H_ * out.x - linear);
        out.iterations = 1;
        return out;
    }

    Vector x = x0.cwiseMax(0.0);
    Vector grad = H_ * x - linear;
    const double tol = opts.rel_tol * (1.0 + grad.lpNorm<Eigen::Infinity>());
    std::vector<char> free(static_cast<std::size_t>(m));
    for (Eigen::Index i = 0; i < m; ++i)
        free[i] = x[i] > 0.0;

    std::vector<Eigen::Index> idx;
    idx.reserve(static_cast<std::size_t>(m));
    Vector z(m);
    int it = 0;
    bool done = false;
    while (!done && it < opts.max_iter) {
        // Release every bound variable whose multiplier has the wrong sign.
        // On the first pass this also settles a warm start whose face is
        // already optimal.
        bool released = false;
        for (Eigen::Index i = 0; i < m; ++i) {
            if (!free[i] && grad[i] < -tol) {
                free[i] = 1;
                released = true;
            }
        }
        if (!released && it > 0) {
            done = true;
            break;
        }

        // Minimize over the current face, stepping back to the first bound
        // crossed and fixing it, until the face minimizer is feasible.
        while (it < opts.max_iter) {
            ++it;
            idx.clear();
            for (Eigen::Index i = 0; i < m; ++i) {
                if (free[i])
                    idx.push_back(i);
            }
            z.setZero();
            if (!idx.empty()) {
                const auto nf = static_cast<Eigen::Index>(idx.size());
                Matrix Hff(nf, nf);
                Vector lf(nf);
                for (Eigen::Index a = 0; a < nf; ++a) {
                    lf[a] = linear[idx[a]];
                    for (Eigen::Index b = 0; b < nf; ++b)
                        Hff(a, b) = H_(idx[a], idx[b]);
                }
                const Eigen::LLT<Matrix> llt(Hff);
                if (llt.info() != Eigen::Success)
                    throw NumericalError("BoxQuadratic::minimize: face Hessian is not positive definite");
                const Vector zf = llt.solve(lf);
                for (Eigen::Index a = 0; a < nf; ++a)
                    z[idx[a]] = zf[a];
            }
            double alpha = 1.0;
            for (Eigen::Index i : idx) {
                if (z[i] <= 0.0) {
                    const double denom = x[i] - z[i];
                    alpha = std::min(alpha, denom > 0.0 ? x[i] / denom : 0.0);
                }
            }
            if (alpha >= 1.0) {
                x = z;
                break;
            }
            x += alpha * (z - x);
            for (Eigen::Index i : idx) {
                if (z[i] <= 0.0 && x[i] <= 1e-14 * (1.0 + std::abs(z[i]))) {
                    x[i] = 0.0;
                    free[i] = 0;
                }
            }
        }
        grad = H_ * x - linear;
    }
    out.optimality = pg_norm(x, grad);
    out.iterations = it;
    out.cap_hit = !done && out.optimality > tol;
    out.x = std::move(x);
    return out;
}

BoundedLsqSolver::BoundedLsqSolver(Matrix A, Cholesky data_cov, Cholesky prior_cov, bool nonnegative)
    : prior_cov_(std::move(prior_cov)), quad_(Matrix(0, 0), nonnegative)
{
    if (data_cov.size() != A.rows() || prior_cov_.size() != A.cols())
        throw ArgumentError("BoundedLsqSolver: metric sizes do not match the operator");
    At_data_inv_ = data_cov.solve(A).transpose();
    const Eigen::Index m = A.cols();
    Matrix H = At_data_inv_ * A + prior_cov_.solve(Matrix::Identity(m, m));
    H = (0.5 * (H + H.transpose())).eval();
    quad_ = BoxQuadratic(std::move(H), nonnegative);
}

Vector BoundedLsqSolver::linear_term(const Vector& b, const Vector& c) const
{
    return At_data_inv_ * b + prior_cov_.solve(c);
}

LsqSolution BoundedLsqSolver::solve(const Vector& b, const Vector& c, const Vector& x0, const LsqOptions& opts) const
{
    if (b.size() != At_data_inv_.cols() || c.size() != At_data_inv_.rows())
        throw ArgumentError("BoundedLsqSolver::solve: b or c has the wrong size");
    return quad_.minimize(linear_term(b, c), x0, opts);
}

LsqSolution solve_bounded_lsq(const BoundedLsqProblem& prob, const Vector& x0, const LsqOptions& opts)
{
    const BoundedLsqSolver solver(prob.A, prob.data_cov, prob.prior_cov, prob.nonnegative);
    return solver.solve(prob.b, prob.c, x0, opts);
}

} // namespace mcgp
