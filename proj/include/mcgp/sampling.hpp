#ifndef MCGP_SAMPLING_HPP
#define MCGP_SAMPLING_HPP

#include "mcgp/linalg.hpp"
#include "mcgp/rng.hpp"
#include "mcgp/types.hpp"

#include <functional>
#include <limits>
#include <string>

namespace mcgp {

// ---------------------------------------------------------------------------
// Scalar normal helpers
// ---------------------------------------------------------------------------

/// Standard normal CDF.
double ndtr(double z);

/// log of the standard normal CDF, accurate far into the lower tail.
double log_ndtr(double z);

/// Draw from N(mu, sd^2) restricted to [lo, inf). `lo = -inf` is untruncated.
///
/// Inverse-CDF on the upper tail while (lo - mu)/sd <= 4, exponential
/// rejection with the optimal rate beyond that.
double sample_truncnorm_lower(double mu, double sd, double lo, RngStream& rng);

/// Draw from N(mu, sd^2) restricted to (-inf, hi].
double sample_truncnorm_upper(double mu, double sd, double hi, RngStream& rng);

// ---------------------------------------------------------------------------
// Sample containers
// ---------------------------------------------------------------------------

struct SampleBatch {
    /// N x m, one draw per row.
    Matrix draws;
    std::string method;
    double seconds = 0.0;
    int burn_in = 0;
    /// Draws whose inner solve hit its iteration cap (RLRTO only).
    int degraded = 0;

    // NUTS statistics; NaN / 0 for other engines.
    double step_size = std::numeric_limits<double>::quiet_NaN();
    double mean_accept = std::numeric_limits<double>::quiet_NaN();
    double mean_tree_depth = std::numeric_limits<double>::quiet_NaN();
    int divergences = 0;
    int burn_in_divergences = 0;
    bool divergence_flag = false;
    long long gradient_evals = 0;

    Eigen::Index size() const { return draws.rows(); }
    Eigen::Index dim() const { return draws.cols(); }
};

// ---------------------------------------------------------------------------
// Gibbs for nonnegative-orthant truncated Gaussians
// ---------------------------------------------------------------------------

/// Component-wise Gibbs sampler for N(mean, cov) restricted to x >= 0.
SampleBatch gibbs_truncated_mvn(const Vector& mean, const Matrix& cov, int n_samples, int burn_in, RngStream& rng);

/// Same sampler parameterized by the precision matrix, which avoids a round
/// trip through an explicit inverse when the precision is what is known.
SampleBatch gibbs_truncated_mvn_precision(const Vector& mean, const Matrix& precision, int n_samples, int burn_in,
                                          RngStream& rng);

// ---------------------------------------------------------------------------
// NUTS
// ---------------------------------------------------------------------------

/// Unnormalized log density with gradient.
struct TargetDensity {
    int dim = 0;
    /// Returns log pi(x); writes the gradient into `grad` when it is non-null.
    std::function<double(const Vector& x, Vector* grad)> eval;

    double logpdf(const Vector& x) const { return eval(x, nullptr); }
    Vector grad_logpdf(const Vector& x) const;
};

struct NutsOptions {
    double target_accept = 0.8;
    int max_depth = 10;
    double gamma = 0.05;
    double t0 = 10.0;
    double kappa = 0.75;
    double max_delta_h = 1000.0;
};

/// Multinomial No-U-Turn sampler with an identity mass matrix and
/// dual-averaging step-size adaptation during burn-in.
SampleBatch nuts_sample(const TargetDensity& target, const Vector& x0, int n_samples, int burn_in, RngStream& rng,
                        const NutsOptions& opts = {});

// ---------------------------------------------------------------------------
// Bound-constrained linear least squares
// ---------------------------------------------------------------------------

/// min_x 1/2 |A x - b|^2_{data_cov^{-1}} + 1/2 |x - c|^2_{prior_cov^{-1}}, x >= 0.
struct BoundedLsqProblem {
    Matrix A;
    Cholesky data_cov;
    Cholesky prior_cov;
    Vector b;
    Vector c;
    /// When false the lower bound is dropped and the problem is an ordinary
    /// regularized least-squares fit.
    bool nonnegative = true;
};

struct LsqOptions {
    int max_iter = 5000;
    double rel_tol = 1e-8;
};

struct LsqSolution {
    Vector x;
    int iterations = 0;
    bool cap_hit = false;
    /// Infinity norm of x - P(x - grad f(x)) at the returned point.
    double optimality = 0.0;
};

/// Strictly convex quadratic 1/2 x'Hx - g'x with optional x >= 0 bound.
///
/// Primal active-set method: minimize over the current face, step back to the
/// first bound crossed, and release bound variables whose gradient is
/// negative. Every face solve is exact, so the result does not depend on the
/// conditioning of H; `max_iter` caps the number of face solves.
class BoxQuadratic {
public:
    explicit BoxQuadratic(Matrix hessian, bool nonnegative = true);

    const Matrix& hessian() const { return H_; }
    bool nonnegative() const { return nonnegative_; }

    LsqSolution minimize(const Vector& linear, const Vector& x0, const LsqOptions& opts = {}) const;

private:
    Matrix H_;
    bool nonnegative_;
};

/// Precomputes the normal-equation pieces of a BoundedLsqProblem family that
/// shares A and both metrics; only b and c vary between solves.
class BoundedLsqSolver {
public:
    BoundedLsqSolver(Matrix A, Cholesky data_cov, Cholesky prior_cov, bool nonnegative = true);

    LsqSolution solve(const Vector& b, const Vector& c, const Vector& x0, const LsqOptions& opts = {}) const;

    /// A' data_cov^{-1} b + prior_cov^{-1} c.
    Vector linear_term(const Vector& b, const Vector& c) const;

    const BoxQuadratic& quadratic() const { return quad_; }

private:
    Matrix At_data_inv_; // A' data_cov^{-1}
    Cholesky prior_cov_;
    BoxQuadratic quad_;
};

LsqSolution solve_bounded_lsq(const BoundedLsqProblem& prob, const Vector& x0, const LsqOptions& opts = {});

} // namespace mcgp

#endif
