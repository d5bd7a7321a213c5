#include "mcgp/gp_core.hpp"

#include <cmath>
#include <string>

namespace mcgp {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836; // log(2*pi)

std::vector<DerivSpec> stacked_specs(Eigen::Index n_values, const std::vector<DerivSpec>& derivs)
{
    auto specs = value_specs(n_values);
    specs.insert(specs.end(), derivs.begin(), derivs.end());
    return specs;
}

Matrix stacked_points(const Matrix& t, const Matrix& s, int dim)
{
    Matrix out(t.rows() + s.rows(), dim);
    if (t.rows() > 0)
        out.topRows(t.rows()) = t;
    if (s.rows() > 0)
        out.bottomRows(s.rows()) = s;
    return out;
}

void symmetrize(Matrix& m)
{
    m = (0.5 * (m + m.transpose())).eval();
}

} // namespace

void Dataset::validate() const
{
    if (inputs.rows() != values.size())
        throw ArgumentError("dataset has " + std::to_string(inputs.rows()) + " inputs but "
                            + std::to_string(values.size()) + " values");
    if (inputs.rows() < 1)
        throw ArgumentError("dataset must contain at least one observation");
    if (!inputs.allFinite() || !values.allFinite())
        throw ArgumentError("dataset contains non-finite entries");
}

Vector GaussianPrediction::variance() const
{
    return cov.diagonal().cwiseMax(0.0);
}

GpModel::GpModel(KernelParams params, Dataset data, double mean_const, double noise_variance)
    : params_(std::move(params)), data_(std::move(data)), mean_const_(mean_const), noise_variance_(noise_variance)
{
    params_.validate();
    data_.validate();
    if (data_.dim() != params_.dim())
        throw ArgumentError("dataset dimension does not match kernel lengthscales");
    if (!(noise_variance_ >= 0.0) || !std::isfinite(noise_variance_))
        throw ArgumentError("noise variance must be nonnegative and finite");
    Matrix K = cov_values(data_.inputs, data_.inputs, params_);
    K.diagonal().array() += noise_variance_;
    chol_ = factorize(K, kRelativeJitter * params_.variance, "training covariance K(t,t)");
    alpha_ = chol_.solve(residual());
}

Vector GpModel::residual() const
{
    return data_.values.array() - mean_const_;
}

GaussianPrediction posterior_value(const GpModel& model, const Matrix& u)
{
    GaussianPrediction out;
    if (u.rows() == 0) {
        out.mean = Vector(0);
        out.cov = Matrix(0, 0);
        return out;
    }
    if (u.cols() != model.params().dim())
        throw ArgumentError("posterior_value: prediction points have the wrong dimension");
    const Matrix Ktu = cov_values(model.data().inputs, u, model.params());
    out.mean = (Ktu.transpose() * model.alpha()).array() + model.mean_const();
    const Matrix V = model.chol().solve_lower(Ktu);
    out.cov = cov_values(u, u, model.params()) - V.transpose() * V;
    symmetrize(out.cov);
    return out;
}

GaussianPrediction predict_values_from_derivs(const KernelParams& params, double mean_const,
                                              const DerivativeSet& s, const Vector& fprime, const Matrix& t)
{
    if (fprime.size() != s.size())
        throw ArgumentError("predict_values_from_derivs: fprime length does not match derivative set");
    GaussianPrediction out;
    const auto t_specs = value_specs(t.rows());
    const Matrix K_tt = cov_block(t, t_specs, t, t_specs, params);
    if (s.size() == 0) {
        out.mean = Vector::Constant(t.rows(), mean_const);
        out.cov = K_tt;
        return out;
    }
    const Matrix K11 = cov_block(s.points, s.specs, s.points, s.specs, params);
    const Cholesky chol = factorize(K11, kRelativeJitter * params.variance, "derivative covariance K11(s,s)");
    const Matrix K10 = cov_block(s.points, s.specs, t, t_specs, params); // = K01(t,s)^T
    out.mean = (K10.transpose() * chol.solve(fprime)).array() + mean_const;
    const Matrix V = chol.solve_lower(K10);
    out.cov = K_tt - V.transpose() * V;
    symmetrize(out.cov);
    return out;
}

EnhancedConditioner::EnhancedConditioner(const KernelParams& params, double mean_const, const Matrix& t,
                                         const DerivativeSet& s, const Matrix& u, double noise_variance)
    : mean_const_(mean_const), n_t_(t.rows()), n_s_(s.size())
{
    const int d = params.dim();
    if ((t.rows() > 0 && t.cols() != d) || (s.size() > 0 && s.points.cols() != d) || (u.rows() > 0 && u.cols() != d))
        throw ArgumentError("EnhancedConditioner: point dimension does not match kernel");
    if (static_cast<Eigen::Index>(s.specs.size()) != s.size())
        throw ArgumentError("EnhancedConditioner: one DerivSpec is required per derivative point");

    const Matrix obs_points = stacked_points(t, s.points, d);
    const auto obs_specs = stacked_specs(n_t_, s.specs);
    const auto u_specs = value_specs(u.rows());

    const Matrix K_uu = cov_block(u, u_specs, u, u_specs, params);
    if (obs_points.rows() == 0) {
        cross_ = Matrix(0, u.rows());
        cov_ = K_uu;
        return;
    }
    Matrix J = cov_block(obs_points, obs_specs, obs_points, obs_specs, params);
    J.diagonal().head(n_t_).array() += noise_variance;
    chol_ = factorize(J, kRelativeJitter * params.variance, "joint value/derivative covariance", 4);
    cross_ = cov_block(obs_points, obs_specs, u, u_specs, params);
    const Matrix V = chol_.solve_lower(cross_);
    cov_ = K_uu - V.transpose() * V;
    symmetrize(cov_);
}

Vector EnhancedConditioner::mean(const Vector& f_t, const Vector& fprime) const
{
    if (f_t.size() != n_t_ || fprime.size() != n_s_)
        throw ArgumentError("EnhancedConditioner::mean: observation sizes do not match");
    if (n_t_ + n_s_ == 0)
        return Vector::Constant(cross_.cols(), mean_const_);
    Vector obs(n_t_ + n_s_);
    obs.head(n_t_) = f_t.array() - mean_const_;
    obs.tail(n_s_) = fprime;
    return (cross_.transpose() * chol_.solve(obs)).array() + mean_const_;
}

Matrix EnhancedConditioner::mean_rows(const Vector& f_t, const Matrix& fprime_rows) const
{
    if (f_t.size() != n_t_ || fprime_rows.cols() != n_s_)
        throw ArgumentError("EnhancedConditioner::mean_rows: observation sizes do not match");
    const Eigen::Index n_rows = fprime_rows.rows();
    if (n_t_ + n_s_ == 0)
        return Matrix::Constant(n_rows, cross_.cols(), mean_const_);
    Matrix obs(n_t_ + n_s_, n_rows);
    obs.topRows(n_t_) = (f_t.array() - mean_const_).matrix().replicate(1, n_rows);
    obs.bottomRows(n_s_) = fprime_rows.transpose();
    Matrix out = (cross_.transpose() * chol_.solve(obs)).transpose();
    out.array() += mean_const_;
    return out;
}

GaussianPrediction predict_enhanced(const GpModel& model, const DerivativeSet& s, const Vector& fprime,
                                    const Matrix& u)
{
    const EnhancedConditioner cond(model.params(), model.mean_const(), model.data().inputs, s, u,
                                   model.noise_variance());
    return {cond.mean(model.data().values, fprime), cond.cov()};
}

double log_marginal_likelihood(const GpModel& model)
{
    const auto n = static_cast<double>(model.data().size());
    return -0.5 * model.residual().dot(model.alpha()) - 0.5 * model.chol().log_det() - 0.5 * n * kLog2Pi;
}

LmlWithGradient lml_with_gradient(const KernelParams& params, const Dataset& data, double mean_const,
                                  double noise_variance)
{
    const GpModel model(params, data, mean_const, noise_variance);
    const Eigen::Index n = data.size();
    const int d = params.dim();

    LmlWithGradient out;
    out.value = log_marginal_likelihood(model);
    out.gradient = Vector::Zero(d + 1);

    // K + jitter scales with the variance, so its log-variance derivative is
    // the full matrix minus the noise term.
    const Vector& alpha = model.alpha();
    const Matrix Kinv = model.chol().solve(Matrix::Identity(n, n));
    out.gradient[0] = 0.5 * (model.residual().dot(alpha) - noise_variance * alpha.squaredNorm()
                             - static_cast<double>(n) + noise_variance * Kinv.trace());

    const Matrix inner = alpha * alpha.transpose() - Kinv;
    const Matrix K = cov_values(data.inputs, data.inputs, params);
    for (int j = 0; j < d; ++j) {
        const double inv_l2 = 1.0 / (params.lengthscales[j] * params.lengthscales[j]);
        double acc = 0.0;
        for (Eigen::Index b = 0; b < n; ++b) {
            for (Eigen::Index a = 0; a < n; ++a) {
                const double diff = data.inputs(a, j) - data.inputs(b, j);
                acc += inner(a, b) * K(a, b) * diff * diff * inv_l2;
            }
        }
        out.gradient[j + 1] = 0.5 * acc;
    }
    return out;
}

FitResult fit_hyperparameters(const Dataset& data, const KernelParams& init, const FitOptions& opts)
{
    data.validate();
    init.validate();
    if (data.size() < 2)
        throw ArgumentError("fit_hyperparameters needs at least two observations");
    const int d = init.dim();

    auto to_params = [d](const Vector& theta) {
        return KernelParams(std::exp(theta[0]), theta.tail(d).array().exp().matrix());
    };

    Vector theta(d + 1);
    theta[0] = std::log(init.variance);
    theta.tail(d) = init.lengthscales.array().log();

    FitResult best{init, 0.0, 0, false};
    LmlWithGradient current;
    try {
        current = lml_with_gradient(init, data, opts.mean_const, opts.noise_variance);
    } catch (const NumericalError& e) {
        throw ArgumentError(std::string("log marginal likelihood is not finite at the initial parameters: ") + e.what());
    }
    if (!std::isfinite(current.value) || !current.gradient.allFinite())
        throw ArgumentError("log marginal likelihood is not finite at the initial parameters");
    best.lml = current.value;

    for (int it = 0; it < opts.max_iter; ++it) {
        if (current.gradient.lpNorm<Eigen::Infinity>() < opts.grad_tol) {
            best.converged = true;
            break;
        }
        Vector step = opts.learning_rate * current.gradient;
        const double longest = step.lpNorm<Eigen::Infinity>();
        if (longest > opts.max_step)
            step *= opts.max_step / longest;
        theta += step;
        KernelParams candidate;
        try {
            candidate = to_params(theta);
            current = lml_with_gradient(candidate, data, opts.mean_const, opts.noise_variance);
        } catch (const NumericalError&) {
            break;
        } catch (const ArgumentError&) {
            break;
        }
        best.iterations = it + 1;
        if (!std::isfinite(current.value) || !current.gradient.allFinite())
            break;
        if (current.value > best.lml) {
            best.lml = current.value;
            best.params = candidate;
        }
    }
    return best;
}

KernelParams default_initial_params(const Dataset& data)
{
    data.validate();
    const double mean = data.values.mean();
    double var = (data.values.array() - mean).square().mean();
    if (!(var > 0.0))
        var = 1.0;
    Vector ls(data.dim());
    for (int j = 0; j < data.dim(); ++j) {
        const double range = data.inputs.col(j).maxCoeff() - data.inputs.col(j).minCoeff();
        ls[j] = range > 0.0 ? range / 4.0 : 1.0;
    }
    return KernelParams(var, ls);
}

} // namespace mcgp
