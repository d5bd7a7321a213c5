#include "mcgp/sampling.hpp"

#include <boost/math/special_functions/erf.hpp>

#include <algorithm>
#include <cmath>

namespace mcgp {

namespace {

constexpr double kSqrt2 = 1.41421356237309504880;
constexpr double kHalfLog2Pi = 0.91893853320467274178;

// Beyond this many standard deviations the inverse CDF loses precision.
constexpr double kTailSwitch = 4.0;

/// Upper-tail probability P(Z > z).
double ndtr_upper(double z)
{
    return 0.5 * std::erfc(z / kSqrt2);
}

/// Standard normal restricted to [a, inf), a > 0, via Robert's exponential
/// proposal with the optimal rate.
double tail_rejection(double a, RngStream& rng)
{
    const double rate = 0.5 * (a + std::sqrt(a * a + 4.0));
    for (;;) {
        const double x = a - std::log(rng.uniform()) / rate;
        const double d = x - rate;
        if (rng.uniform() <= std::exp(-0.5 * d * d))
            return x;
    }
}

/// Standard normal restricted to [a, inf).
double standard_lower(double a, RngStream& rng)
{
    if (a > kTailSwitch)
        return tail_rejection(a, rng);
    const double mass = std::isinf(a) ? 1.0 : ndtr_upper(a);
    const double u = rng.uniform();
    // P(Z > x) = u * P(Z > a)
    const double x = kSqrt2 * boost::math::erfc_inv(2.0 * u * mass);
    return std::max(x, a);
}

} // namespace

double ndtr(double z)
{
    return 0.5 * std::erfc(-z / kSqrt2);
}

double log_ndtr(double z)
{
    if (z > -30.0)
        return std::log(ndtr(z));
    // Asymptotic expansion of the Mills ratio.
    const double z2 = z * z;
    const double inv = 1.0 / z2;
    const double series = 1.0 - inv * (1.0 - 3.0 * inv * (1.0 - 5.0 * inv * (1.0 - 7.0 * inv)));
    return -0.5 * z2 - std::log(-z) - kHalfLog2Pi + std::log(series);
}

double sample_truncnorm_lower(double mu, double sd, double lo, RngStream& rng)
{
    if (!(sd > 0.0))
        throw ArgumentError("sample_truncnorm_lower: sd must be positive");
    const double a = (lo - mu) / sd;
    return std::max(lo, mu + sd * standard_lower(a, rng));
}

double sample_truncnorm_upper(double mu, double sd, double hi, RngStream& rng)
{
    return -sample_truncnorm_lower(-mu, sd, -hi, rng);
}

} // namespace mcgp
