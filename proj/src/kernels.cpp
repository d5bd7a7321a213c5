#include "mcgp/kernels.hpp"

#include <cmath>
#include <string>

namespace mcgp {

KernelParams::KernelParams(double variance_, Vector lengthscales_)
    : variance(variance_), lengthscales(std::move(lengthscales_))
{
    validate();
}

KernelParams KernelParams::isotropic(double variance, double lengthscale, int dim)
{
    return KernelParams(variance, Vector::Constant(dim, lengthscale));
}

void KernelParams::validate() const
{
    if (!(variance > 0.0) || !std::isfinite(variance))
        throw ArgumentError("kernel variance must be positive and finite");
    if (lengthscales.size() == 0)
        throw ArgumentError("kernel needs at least one lengthscale");
    for (Eigen::Index j = 0; j < lengthscales.size(); ++j) {
        if (!(lengthscales[j] > 0.0) || !std::isfinite(lengthscales[j]))
            throw ArgumentError("lengthscale " + std::to_string(j) + " must be positive and finite");
    }
}

namespace {

void check_dims(const PointRef& x, const PointRef& y, const KernelParams& p)
{
    if (x.size() != p.lengthscales.size() || y.size() != p.lengthscales.size())
        throw ArgumentError("point dimension " + std::to_string(x.size()) + "/" + std::to_string(y.size())
                            + " does not match " + std::to_string(p.lengthscales.size()) + " lengthscales");
}

void check_index(int j, const KernelParams& p)
{
    if (j < 0 || j >= p.dim())
        throw ArgumentError("derivative direction " + std::to_string(j) + " out of range");
}

double k_unchecked(const PointRef& x, const PointRef& y, const KernelParams& p)
{
    double r2 = 0.0;
    for (Eigen::Index j = 0; j < x.size(); ++j) {
        const double z = (x[j] - y[j]) / p.lengthscales[j];
        r2 += z * z;
    }
    return p.variance * std::exp(-0.5 * r2);
}

} // namespace

double k(const PointRef& x, const PointRef& y, const KernelParams& p)
{
    check_dims(x, y, p);
    return k_unchecked(x, y, p);
}

double k01(const PointRef& x, const PointRef& y, int j, const KernelParams& p)
{
    check_dims(x, y, p);
    check_index(j, p);
    const double l2 = p.lengthscales[j] * p.lengthscales[j];
    return k_unchecked(x, y, p) * (x[j] - y[j]) / l2;
}

double k10(const PointRef& x, const PointRef& y, int j, const KernelParams& p)
{
    return -k01(x, y, j, p);
}

double k11(const PointRef& x, const PointRef& y, int j, const KernelParams& p)
{
    return k11(x, y, j, j, p);
}

double k11(const PointRef& x, const PointRef& y, int i, int r, const KernelParams& p)
{
    check_dims(x, y, p);
    check_index(i, p);
    check_index(r, p);
    const double base = k_unchecked(x, y, p);
    const double li2 = p.lengthscales[i] * p.lengthscales[i];
    const double lr2 = p.lengthscales[r] * p.lengthscales[r];
    const double di = x[i] - y[i];
    const double dr = x[r] - y[r];
    if (i == r)
        return base * (1.0 / li2 - di * di / (li2 * li2));
    return -base * ((di / li2) * (dr / lr2));
}

Matrix cov_block(const Matrix& X, std::span<const DerivSpec> SX, const Matrix& Y,
                 std::span<const DerivSpec> SY, const KernelParams& p)
{
    if (static_cast<Eigen::Index>(SX.size()) != X.rows() || static_cast<Eigen::Index>(SY.size()) != Y.rows())
        throw ArgumentError("cov_block: one DerivSpec is required per point");
    if ((X.rows() > 0 && X.cols() != p.dim()) || (Y.rows() > 0 && Y.cols() != p.dim()))
        throw ArgumentError("cov_block: point dimension does not match kernel");
    for (const auto& s : SX) {
        if (s.order < 0 || s.order > 1)
            throw ArgumentError("cov_block: derivative order must be 0 or 1");
        check_index(s.dim, p);
    }
    for (const auto& s : SY) {
        if (s.order < 0 || s.order > 1)
            throw ArgumentError("cov_block: derivative order must be 0 or 1");
        check_index(s.dim, p);
    }

    Matrix out(X.rows(), Y.rows());
    const Vector inv_l2 = p.lengthscales.array().square().inverse();
    for (Eigen::Index a = 0; a < X.rows(); ++a) {
        for (Eigen::Index b = 0; b < Y.rows(); ++b) {
            const auto diff = (X.row(a) - Y.row(b)).transpose().eval();
            const double base = p.variance * std::exp(-0.5 * diff.array().square().matrix().dot(inv_l2));
            const DerivSpec sa = SX[a];
            const DerivSpec sb = SY[b];
            double v = base;
            if (sa.order == 0 && sb.order == 1) {
                v = base * diff[sb.dim] * inv_l2[sb.dim];
            } else if (sa.order == 1 && sb.order == 0) {
                v = -base * diff[sa.dim] * inv_l2[sa.dim];
            } else if (sa.order == 1 && sb.order == 1) {
                if (sa.dim == sb.dim)
                    v = base * (inv_l2[sa.dim] - diff[sa.dim] * diff[sa.dim] * inv_l2[sa.dim] * inv_l2[sa.dim]);
                else
                    v = -base * ((diff[sa.dim] * inv_l2[sa.dim]) * (diff[sb.dim] * inv_l2[sb.dim]));
            }
            out(a, b) = v;
        }
    }
    return out;
}

Matrix cov_values(const Matrix& X, const Matrix& Y, const KernelParams& p)
{
    const auto sx = value_specs(X.rows());
    const auto sy = value_specs(Y.rows());
    return cov_block(X, sx, Y, sy, p);
}

std::vector<DerivSpec> value_specs(Eigen::Index n)
{
    return std::vector<DerivSpec>(static_cast<std::size_t>(n), DerivSpec::value());
}

} // namespace mcgp
