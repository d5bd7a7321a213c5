#ifndef MCGP_GP_CORE_HPP
#define MCGP_GP_CORE_HPP

#include "mcgp/kernels.hpp"
#include "mcgp/linalg.hpp"

#include <span>
#include <vector>

namespace mcgp {

/// Training inputs (one point per row) and observed values.
struct Dataset {
    Matrix inputs;
    Vector values;
    /// Standard deviation used when the data were synthesized. The model only
    /// sees it through GpModel's noise variance.
    double noise_sd = 0.0;

    Eigen::Index size() const { return inputs.rows(); }
    int dim() const { return static_cast<int>(inputs.cols()); }
    void validate() const;
};

struct GaussianPrediction {
    Vector mean;
    Matrix cov;

    /// Diagonal of `cov` clamped at zero.
    Vector variance() const;
};

/// GP with a constant mean and a fixed Gaussian observation noise variance
/// (zero gives the interpolating model), factorized at construction.
class GpModel {
public:
    GpModel(KernelParams params, Dataset data, double mean_const = 0.0, double noise_variance = 0.0);

    const KernelParams& params() const { return params_; }
    const Dataset& data() const { return data_; }
    double mean_const() const { return mean_const_; }
    double noise_variance() const { return noise_variance_; }
    double jitter() const { return chol_.jitter; }
    const Cholesky& chol() const { return chol_; }

    /// K(t,t)^{-1} (f(t) - mu).
    const Vector& alpha() const { return alpha_; }

    /// f(t) - mu.
    Vector residual() const;

private:
    KernelParams params_;
    Dataset data_;
    double mean_const_;
    double noise_variance_;
    Cholesky chol_;
    Vector alpha_;
};

/// A set of derivative locations: one row of `points` per entry of `specs`.
struct DerivativeSet {
    Matrix points;
    std::vector<DerivSpec> specs;

    Eigen::Index size() const { return points.rows(); }
};

/// Derivative-free posterior of the latent f(u) given the observations.
GaussianPrediction posterior_value(const GpModel& model, const Matrix& u);

/// f(t) | f'(s): mean mu + K01(t,s) K11^{-1} fprime, cov K(t,t) - K01 K11^{-1} K10.
GaussianPrediction predict_values_from_derivs(const KernelParams& params, double mean_const,
                                              const DerivativeSet& s, const Vector& fprime, const Matrix& t);

/// Conditioning of f(u) on the stacked observation [y(t); f'(s)], where y(t)
/// carries `noise_variance` of observation noise.
///
/// The joint covariance and the cross-covariance to u are built and factorized
/// once; `mean()` then costs one triangular solve pair and a matrix-vector
/// product, which is what the constrained predictors need for every draw.
class EnhancedConditioner {
public:
    EnhancedConditioner(const KernelParams& params, double mean_const, const Matrix& t, const DerivativeSet& s,
                        const Matrix& u, double noise_variance = 0.0);

    /// Conditional mean of f(u) given f(t) and f'(s).
    Vector mean(const Vector& f_t, const Vector& fprime) const;

    /// Conditional means for many derivative vectors at once: row r of the
    /// result uses row r of `fprime_rows` (N x n_deriv). Returns N x n_pred.
    Matrix mean_rows(const Vector& f_t, const Matrix& fprime_rows) const;

    /// Conditional covariance of f(u) (independent of the observed values).
    const Matrix& cov() const { return cov_; }

    Eigen::Index n_train() const { return n_t_; }
    Eigen::Index n_deriv() const { return n_s_; }
    Eigen::Index n_pred() const { return cross_.cols(); }

    /// Jitter that was needed to factorize the joint [t;s] covariance.
    double jitter() const { return chol_.jitter; }

private:
    double mean_const_;
    Eigen::Index n_t_;
    Eigen::Index n_s_;
    Cholesky chol_;  // joint covariance J of [f(t); f'(s)]
    Matrix cross_;   // Cov([f(t); f'(s)], f(u))
    Matrix cov_;
};

GaussianPrediction predict_enhanced(const GpModel& model, const DerivativeSet& s, const Vector& fprime,
                                    const Matrix& u);

double log_marginal_likelihood(const GpModel& model);

struct LmlWithGradient {
    double value;
    /// Gradient with respect to (log variance, log lengthscale_0, ...).
    Vector gradient;
};

/// Log marginal likelihood and its gradient in log-parameter space.
/// The noise variance is held fixed.
LmlWithGradient lml_with_gradient(const KernelParams& params, const Dataset& data, double mean_const = 0.0,
                                  double noise_variance = 0.0);

struct FitOptions {
    double learning_rate = 0.01;
    int max_iter = 20000;
    double grad_tol = 1e-6;
    /// Largest change of any log-parameter in one iteration; longer steps
    /// are scaled down. Only binds when the gradient exceeds max_step / lr.
    double max_step = 0.1;
    double mean_const = 0.0;
    double noise_variance = 0.0;
};

struct FitResult {
    KernelParams params;
    double lml = 0.0;
    int iterations = 0;
    bool converged = false;
};

/// Full-batch gradient ascent on the log marginal likelihood over
/// log-parameters. Returns the best iterate seen.
FitResult fit_hyperparameters(const Dataset& data, const KernelParams& init, const FitOptions& opts = {});

/// variance = var(values), lengthscale_j = range(inputs_j) / 4.
KernelParams default_initial_params(const Dataset& data);

} // namespace mcgp

#endif
