#include "mcgp/sampling.hpp"

#include <chrono>
#include <cmath>

namespace mcgp {

SampleBatch gibbs_truncated_mvn_precision(const Vector& mean, const Matrix& precision, int n_samples, int burn_in,
                                          RngStream& rng)
{
    const Eigen::Index m = mean.size();
    if (precision.rows() != m || precision.cols() != m)
        throw ArgumentError("gibbs_truncated_mvn: precision shape does not match mean");
    if (n_samples < 1 || burn_in < 0)
        throw ArgumentError("gibbs_truncated_mvn: need n_samples >= 1 and burn_in >= 0");
    for (Eigen::Index i = 0; i < m; ++i) {
        if (!(precision(i, i) > 0.0))
            throw NumericalError("gibbs_truncated_mvn: precision has a non-positive diagonal entry");
    }

    const auto start = std::chrono::steady_clock::now();
    const Vector cond_sd = precision.diagonal().array().rsqrt();

    // resid = Q (x - mean); the conditional mean of x_i is x_i - resid_i / Q_ii.
    Vector x = mean.cwiseMax(0.0);
    Vector resid = precision * (x - mean);

    SampleBatch out;
    out.method = "gibbs";
    out.burn_in = burn_in;
    out.draws.resize(n_samples, m);

    const int total = n_samples + burn_in;
    for (int it = 0; it < total; ++it) {
        if (it % 64 == 63)
            resid.noalias() = precision * (x - mean); // flush accumulated rounding
        for (Eigen::Index i = 0; i < m; ++i) {
            const double q = precision(i, i);
            const double cond_mean = x[i] - resid[i] / q;
            const double xi = sample_truncnorm_lower(cond_mean, cond_sd[i], 0.0, rng);
            const double delta = xi - x[i];
            if (delta != 0.0) {
                resid.noalias() += precision.col(i) * delta;
                x[i] = xi;
            }
        }
        if (it >= burn_in)
            out.draws.row(it - burn_in) = x.transpose();
    }
    out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return out;
}

SampleBatch gibbs_truncated_mvn(const Vector& mean, const Matrix& cov, int n_samples, int burn_in, RngStream& rng)
{
    if (cov.rows() != mean.size() || cov.cols() != mean.size())
        throw ArgumentError("gibbs_truncated_mvn: covariance shape does not match mean");
    const Cholesky chol = factorize(cov, 0.0, "truncated Gaussian covariance");
    const Matrix precision = chol.solve(Matrix::Identity(mean.size(), mean.size()));
    return gibbs_truncated_mvn_precision(mean, 0.5 * (precision + precision.transpose()), n_samples, burn_in, rng);
}

} // namespace mcgp
