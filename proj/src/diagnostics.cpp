#include "mcgp/diagnostics.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <memory>

namespace mcgp {

namespace {

std::size_t fft_length(std::size_t n)
{
    // Zero padding to at least 2n avoids circular wrap-around.
    std::size_t len = 1;
    while (len < 2 * n)
        len <<= 1;
    return len;
}

struct FftwFree {
    void operator()(void* p) const { fftw_free(p); }
};

} // namespace

double quantile_inplace(std::vector<double>& values, double q)
{
    if (values.empty())
        throw ArgumentError("quantile of an empty sample");
    if (!(q >= 0.0 && q <= 1.0))
        throw ArgumentError("quantile level must lie in [0, 1]");
    const double pos = q * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const double frac = pos - static_cast<double>(lo);
    std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(lo), values.end());
    const double v_lo = values[lo];
    if (frac == 0.0 || lo + 1 >= values.size())
        return v_lo;
    const double v_hi = *std::min_element(values.begin() + static_cast<std::ptrdiff_t>(lo) + 1, values.end());
    return v_lo + frac * (v_hi - v_lo);
}

double mse(const Matrix& samples, const Vector& truth)
{
    if (samples.cols() != truth.size())
        throw ArgumentError("mse: samples have " + std::to_string(samples.cols()) + " columns but truth has "
                            + std::to_string(truth.size()) + " entries");
    if (samples.rows() == 0 || samples.cols() == 0)
        throw ArgumentError("mse: empty sample matrix");
    const double total = (samples.rowwise() - truth.transpose()).squaredNorm();
    return total / static_cast<double>(samples.rows()) / static_cast<double>(samples.cols());
}

double ci_width(const Matrix& samples, double level)
{
    if (samples.rows() < 40)
        throw ArgumentError("ci_width: need at least 40 samples");
    if (!(level > 0.0 && level < 1.0))
        throw ArgumentError("ci_width: level must lie in (0, 1)");
    if (samples.cols() == 0)
        throw ArgumentError("ci_width: no components");
    const double tail = 0.5 * (1.0 - level);
    std::vector<double> col(static_cast<std::size_t>(samples.rows()));
    double total = 0.0;
    for (Eigen::Index j = 0; j < samples.cols(); ++j) {
        for (Eigen::Index i = 0; i < samples.rows(); ++i)
            col[static_cast<std::size_t>(i)] = samples(i, j);
        const double lo = quantile_inplace(col, tail);
        const double hi = quantile_inplace(col, 1.0 - tail);
        total += hi - lo;
    }
    return total / static_cast<double>(samples.cols());
}

Vector autocorrelation(const Vector& chain)
{
    const auto n = static_cast<std::size_t>(chain.size());
    if (n == 0)
        return Vector(0);
    const std::size_t len = fft_length(n);
    const std::size_t n_freq = len / 2 + 1;

    std::unique_ptr<double, FftwFree> buf(static_cast<double*>(fftw_malloc(sizeof(double) * len)));
    std::unique_ptr<fftw_complex, FftwFree> spec(
        static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * n_freq)));
    fftw_plan fwd = fftw_plan_dft_r2c_1d(static_cast<int>(len), buf.get(), spec.get(), FFTW_ESTIMATE);
    fftw_plan inv = fftw_plan_dft_c2r_1d(static_cast<int>(len), spec.get(), buf.get(), FFTW_ESTIMATE);

    const double mean = chain.mean();
    for (std::size_t i = 0; i < len; ++i)
        buf.get()[i] = i < n ? chain[static_cast<Eigen::Index>(i)] - mean : 0.0;
    fftw_execute(fwd);
    for (std::size_t k = 0; k < n_freq; ++k) {
        const double re = spec.get()[k][0];
        const double im = spec.get()[k][1];
        spec.get()[k][0] = re * re + im * im;
        spec.get()[k][1] = 0.0;
    }
    fftw_execute(inv);
    fftw_destroy_plan(fwd);
    fftw_destroy_plan(inv);

    Vector rho(static_cast<Eigen::Index>(n));
    const double c0 = buf.get()[0];
    for (std::size_t k = 0; k < n; ++k)
        rho[static_cast<Eigen::Index>(k)] = c0 > 0.0 ? buf.get()[k] / c0 : 0.0;
    return rho;
}

IatEstimate iat(const Vector& chain)
{
    if (chain.size() < 100)
        throw ArgumentError("iat: need at least 100 draws");
    if (!chain.allFinite())
        throw ArgumentError("iat: chain contains non-finite values");
    IatEstimate out;
    const double mean = chain.mean();
    if ((chain.array() - mean).abs().maxCoeff() == 0.0) {
        out.zero_variance = true;
        return out;
    }
    const Vector rho = autocorrelation(chain);
    const Eigen::Index n = rho.size();

    // Initial positive sequence on pair sums Gamma_k = rho_{2k} + rho_{2k+1}.
    double sum = 0.0;
    for (Eigen::Index k = 0; 2 * k + 1 < n; ++k) {
        const double pair = rho[2 * k] + rho[2 * k + 1];
        if (!(pair > 0.0))
            break;
        sum += pair;
    }
    // tau = -1 + 2 sum_k Gamma_k, which equals 1 + 2 sum_{j>=1} rho_j.
    out.tau = std::max(1.0, 2.0 * sum - 1.0);
    return out;
}

MeanIat mean_iat(const Matrix& chains)
{
    if (chains.cols() == 0)
        throw ArgumentError("mean_iat: no components");
    MeanIat out;
    double total = 0.0;
    for (Eigen::Index j = 0; j < chains.cols(); ++j) {
        const IatEstimate e = iat(chains.col(j));
        total += e.tau;
        if (e.zero_variance)
            ++out.zero_variance_components;
    }
    out.mean = total / static_cast<double>(chains.cols());
    return out;
}

double ess_per_second(double n_samples, double mean_iat, double runtime_seconds)
{
    if (!(n_samples > 0.0) || !(mean_iat > 0.0) || !(runtime_seconds > 0.0))
        throw ArgumentError("ess_per_second: all inputs must be positive");
    return n_samples / mean_iat / runtime_seconds;
}

} // namespace mcgp
