#ifndef MCGP_DIAGNOSTICS_HPP
#define MCGP_DIAGNOSTICS_HPP

#include "mcgp/types.hpp"

#include <vector>

namespace mcgp {

/// Empirical quantile with linear interpolation between order statistics
/// (position (n-1)q). Reorders `values`.
double quantile_inplace(std::vector<double>& values, double q);

/// Per-point squared error averaged over samples and prediction points.
/// `samples` is N x m, one sample per row.
double mse(const Matrix& samples, const Vector& truth);

/// Mean over components of the central `level` credible-interval width.
double ci_width(const Matrix& samples, double level = 0.95);

struct IatEstimate {
    double tau = 1.0;
    /// Set when the chain has zero variance; tau is then reported as 1.
    bool zero_variance = false;
};

/// Integrated autocorrelation time with Geyer's initial positive sequence,
/// floored at 1. Needs at least 100 draws.
IatEstimate iat(const Vector& chain);

/// Mean IAT over the columns of an N x m chain.
struct MeanIat {
    double mean = 1.0;
    int zero_variance_components = 0;
};
MeanIat mean_iat(const Matrix& chains);

/// Normalized autocorrelation rho_0..rho_{N-1} computed by FFT.
Vector autocorrelation(const Vector& chain);

/// (n_samples / mean_iat) / runtime_seconds.
double ess_per_second(double n_samples, double mean_iat, double runtime_seconds);

struct MetricsReport {
    double mse = 0.0;
    double mean_ci_width = 0.0;
    /// NaN when not applicable (unconstrained runs).
    double mean_iat = 0.0;
    double ess_per_second = 0.0;
    long n_samples = 0;
    double runtime_seconds = 0.0;
};

} // namespace mcgp

#endif
