#ifndef MCGP_CONSTRAINED_HPP
#define MCGP_CONSTRAINED_HPP

#include "mcgp/gp_core.hpp"
#include "mcgp/sampling.hpp"

#include <optional>
#include <string>
#include <vector>

namespace mcgp {

/// Virtual points and the partial derivative constrained at each of them.
using VirtualDesign = DerivativeSet;

/// Assigns constrained directions to `points` round-robin over `dims`
/// (point i gets dims[i % dims.size()]).
VirtualDesign make_virtual_design(const Matrix& points, const std::vector<int>& dims);

namespace method {
inline constexpr const char* kUnconstrained = "unconstrained";
inline constexpr const char* kTruncatedGibbs = "truncated-gibbs";
inline constexpr const char* kTruncatedNuts = "truncated-nuts";
inline constexpr const char* kReluGibbs = "relu-gibbs";
inline constexpr const char* kReluNuts = "relu-nuts";
inline constexpr const char* kRlrto = "rlrto";
} // namespace method

/// Linear-Gaussian structure shared by all constrained methods:
/// f(t) | f'(s) ~ N(mu + A f'(s), Sigma*), f'(s) ~ N(0, K11) before constraints.
/// The model's noise variance, if any, is part of Sigma*.
///
/// Both Sigma* and K11 come out of one Cholesky factorization of the joint
/// covariance of [f'(s); f(t)]: the leading block is the factor of K11 and the
/// trailing block is the factor of the Schur complement Sigma*, so Sigma* is
/// never formed by subtraction.
class ConstrainedProblem {
public:
    ConstrainedProblem(const GpModel& model, VirtualDesign design);

    const GpModel& model() const { return model_; }
    const VirtualDesign& design() const { return design_; }

    Eigen::Index n_train() const { return A_.rows(); }
    Eigen::Index n_virtual() const { return A_.cols(); }

    /// K01(t,s) K11(s,s)^{-1}, n x m.
    const Matrix& A() const { return A_; }
    const Matrix& sigma_star() const { return sigma_star_; }
    const Matrix& K11() const { return K11_; }
    const Cholesky& chol_sigma_star() const { return chol_sigma_; }
    const Cholesky& chol_K11() const { return chol_K11_; }

    /// A' Sigma*^{-1} A.
    const Matrix& data_precision() const { return G_; }
    /// K11^{-1}.
    const Matrix& prior_precision() const { return P_; }
    /// A' Sigma*^{-1} A + K11^{-1}.
    const Matrix& precision() const { return Lambda_; }

    /// Observed values minus the constant mean.
    Vector centered(const Vector& f_t) const;

    /// A' Sigma*^{-1} (f(t) - mu).
    Vector linear_term(const Vector& f_t) const;

    /// Mean Lambda^{-1} A' Sigma*^{-1} (f(t) - mu) of the untruncated posterior.
    Vector gaussian_mean(const Vector& f_t) const;

    /// Diagonal of Lambda^{-1}.
    Vector gaussian_variance() const;

private:
    GpModel model_;
    VirtualDesign design_;
    Matrix A_;
    Matrix sigma_star_;
    Matrix K11_;
    Cholesky chol_sigma_;
    Cholesky chol_K11_;
    Matrix B_; // L_sigma^{-1} A
    Matrix G_;
    Matrix P_;
    Matrix Lambda_;
    Cholesky chol_Lambda_;
};

ConstrainedProblem build_problem(const GpModel& model, const VirtualDesign& design);

struct SamplerBudget {
    int n_samples = 51000;
    int burn_in = 1000;
    NutsOptions nuts{};
    LsqOptions lsq{};
    /// RLRTO: start each solve at the previous draw. When false every draw
    /// starts at zero and uses only its own random stream.
    bool warm_start = true;
};

SampleBatch sample_truncated_gibbs(const ConstrainedProblem& prob, const Vector& f_t, const SamplerBudget& budget,
                                   RngStream& rng);
SampleBatch sample_truncated_nuts(const ConstrainedProblem& prob, const Vector& f_t, const SamplerBudget& budget,
                                  RngStream& rng);
SampleBatch sample_relu_gibbs(const ConstrainedProblem& prob, const Vector& f_t, const SamplerBudget& budget,
                              RngStream& rng);
SampleBatch sample_relu_nuts(const ConstrainedProblem& prob, const Vector& f_t, const SamplerBudget& budget,
                             RngStream& rng);
/// Ignores `budget.burn_in`; every solve is kept.
SampleBatch sample_rlrto(const ConstrainedProblem& prob, const Vector& f_t, const SamplerBudget& budget,
                         RngStream& rng);

/// Dispatch on a method tag (any of `method::k*` except unconstrained).
SampleBatch sample_constrained(const std::string& method, const ConstrainedProblem& prob, const Vector& f_t,
                               const SamplerBudget& budget, RngStream& rng);

/// Log density of the truncated posterior in log coordinates x = log f'(s),
/// including the log Jacobian.
TargetDensity truncated_log_target(const ConstrainedProblem& prob, const Vector& f_t);

/// Log density of the ReLU-likelihood posterior over raw f'(s).
TargetDensity relu_target(const ConstrainedProblem& prob, const Vector& f_t);

bool is_relu_method(const std::string& method);

struct PredictOptions {
    /// Prediction points handled per block; bounds memory at N x block.
    Eigen::Index block = 256;
    /// Keep every f(u) draw (N x |u|). Only sensible for small problems.
    bool keep_draws = false;
    double lower_q = 0.025;
    double upper_q = 0.975;
};

struct ConstrainedPrediction {
    Vector mean;
    Vector lower;
    Vector upper;
    /// Filled when PredictOptions::keep_draws is set.
    Matrix draws;
    /// Mean over draws of the per-point squared error, when a truth was given.
    std::optional<double> mse;
};

/// One f(u) draw per derivative sample from f(u) | f(t), f'(s) (ReLU applied
/// first for ReLU-method batches), summarized per point. Draws are joint
/// within each block of prediction points.
ConstrainedPrediction predict_constrained(const ConstrainedProblem& prob, const Vector& f_t, const SampleBatch& batch,
                                          const Matrix& u, RngStream& rng, const std::optional<Vector>& truth = {},
                                          const PredictOptions& opts = {});

/// N draws from the derivative-free posterior f(u) | f(t), summarized the same way.
ConstrainedPrediction predict_unconstrained(const GpModel& model, const Matrix& u, int n_samples, RngStream& rng,
                                            const std::optional<Vector>& truth = {}, const PredictOptions& opts = {});

} // namespace mcgp

#endif
