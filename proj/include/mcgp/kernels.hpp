#ifndef MCGP_KERNELS_HPP
#define MCGP_KERNELS_HPP

#include "mcgp/types.hpp"

#include <span>
#include <vector>

namespace mcgp {

/// Squared-exponential hyperparameters with one lengthscale per input dimension.
struct KernelParams {
    double variance = 1.0;
    Vector lengthscales = Vector::Ones(1);

    KernelParams() = default;
    KernelParams(double variance, Vector lengthscales);

    static KernelParams isotropic(double variance, double lengthscale, int dim);

    int dim() const { return static_cast<int>(lengthscales.size()); }

    /// Throws ArgumentError unless variance > 0 and every lengthscale > 0.
    void validate() const;
};

/// Identifies a value (order 0) or a first partial derivative along `dim`
/// (order 1) of the latent function at some point.
struct DerivSpec {
    int dim = 0;
    int order = 0;

    static constexpr DerivSpec value() { return {0, 0}; }
    static constexpr DerivSpec partial(int dim) { return {dim, 1}; }

    friend bool operator==(const DerivSpec&, const DerivSpec&) = default;
};

using PointRef = Eigen::Ref<const Vector>;

double k(const PointRef& x, const PointRef& y, const KernelParams& p);

/// dk/dy_j: covariance between f(x) and df/dx_j evaluated at y.
double k01(const PointRef& x, const PointRef& y, int j, const KernelParams& p);

/// dk/dx_j: covariance between df/dx_j at x and f(y).
double k10(const PointRef& x, const PointRef& y, int j, const KernelParams& p);

/// d2k/dx_j dy_j.
double k11(const PointRef& x, const PointRef& y, int j, const KernelParams& p);

/// d2k/dx_i dy_r; mixed directions are needed when virtual points constrain
/// different coordinates.
double k11(const PointRef& x, const PointRef& y, int i, int r, const KernelParams& p);

/// Covariance between the quantities described by (X[a], SX[a]) and
/// (Y[b], SY[b]). Points are rows.
Matrix cov_block(const Matrix& X, std::span<const DerivSpec> SX, const Matrix& Y,
                 std::span<const DerivSpec> SY, const KernelParams& p);

/// Convenience for value-only blocks.
Matrix cov_values(const Matrix& X, const Matrix& Y, const KernelParams& p);

std::vector<DerivSpec> value_specs(Eigen::Index n);

} // namespace mcgp

#endif
