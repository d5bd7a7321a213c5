#include "mcgp/constrained.hpp"

#include "mcgp/diagnostics.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

namespace mcgp {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start)
{
    return std::chrono::duration<double>(Clock::now() - start).count();
}

void symmetrize(Matrix& m)
{
    m = (0.5 * (m + m.transpose())).eval();
}

Vector relu(const Vector& x)
{
    return x.cwiseMax(0.0);
}

} // namespace

VirtualDesign make_virtual_design(const Matrix& points, const std::vector<int>& dims)
{
    if (dims.empty())
        throw ArgumentError("make_virtual_design: at least one constrained direction is required");
    VirtualDesign out;
    out.points = points;
    out.specs.reserve(points.rows());
    for (Eigen::Index i = 0; i < points.rows(); ++i) {
        const int dim = dims[static_cast<std::size_t>(i) % dims.size()];
        if (dim < 0 || dim >= points.cols())
            throw ArgumentError("make_virtual_design: constrained direction out of range");
        out.specs.push_back(DerivSpec::partial(dim));
    }
    return out;
}

bool is_relu_method(const std::string& m)
{
    return m == method::kReluGibbs || m == method::kReluNuts;
}

ConstrainedProblem::ConstrainedProblem(const GpModel& model, VirtualDesign design)
    : model_(model), design_(std::move(design))
{
    const KernelParams& p = model_.params();
    const Matrix& t = model_.data().inputs;
    const Eigen::Index n = t.rows();
    const Eigen::Index m = design_.size();
    if (m < 1)
        throw ArgumentError("build_problem: the virtual design is empty");
    if (design_.points.cols() != p.dim())
        throw ArgumentError("build_problem: virtual points have the wrong dimension");
    if (static_cast<Eigen::Index>(design_.specs.size()) != m)
        throw ArgumentError("build_problem: one DerivSpec is required per virtual point");
    for (const auto& spec : design_.specs) {
        if (spec.order != 1 || spec.dim < 0 || spec.dim >= p.dim())
            throw ArgumentError("build_problem: virtual points must carry first-derivative specs");
    }

    // Joint covariance of [f'(s); f(t)].
    Matrix pts(m + n, p.dim());
    pts.topRows(m) = design_.points;
    pts.bottomRows(n) = t;
    std::vector<DerivSpec> specs = design_.specs;
    const auto vs = value_specs(n);
    specs.insert(specs.end(), vs.begin(), vs.end());
    Matrix J = cov_block(pts, specs, pts, specs, p);
    J.diagonal().tail(n).array() += model_.noise_variance();
    const Cholesky joint = factorize(J, kRelativeJitter * p.variance, "joint derivative/value covariance", 4);
    const Matrix L = joint.lower();

    const Matrix L11 = L.topLeftCorner(m, m);
    const Matrix L21 = L.bottomLeftCorner(n, m);
    const Matrix L22 = L.bottomRightCorner(n, n);

    // A L11 = L21, i.e. A = K01 K11^{-1}.
    A_ = L11.triangularView<Eigen::Lower>().transpose().solve(L21.transpose()).transpose();
    sigma_star_ = L22 * L22.transpose();
    K11_ = J.topLeftCorner(m, m);

    chol_K11_ = factorize(K11_, joint.jitter, "derivative covariance K11(s,s)", 4);
    chol_sigma_ = factorize(sigma_star_, 0.0, "predictive covariance Sigma*(t)", 4);

    B_ = chol_sigma_.solve_lower(A_);
    G_ = B_.transpose() * B_;
    symmetrize(G_);
    P_ = chol_K11_.solve(Matrix::Identity(m, m));
    symmetrize(P_);
    Lambda_ = G_ + P_;
    chol_Lambda_ = factorize(Lambda_, 0.0, "posterior precision", 4);
}

Vector ConstrainedProblem::centered(const Vector& f_t) const
{
    if (f_t.size() != n_train())
        throw ArgumentError("constrained problem: f(t) has the wrong length");
    return f_t.array() - model_.mean_const();
}

Vector ConstrainedProblem::linear_term(const Vector& f_t) const
{
    return B_.transpose() * chol_sigma_.solve_lower(centered(f_t));
}

Vector ConstrainedProblem::gaussian_mean(const Vector& f_t) const
{
    return chol_Lambda_.solve(linear_term(f_t));
}

Vector ConstrainedProblem::gaussian_variance() const
{
    const Eigen::Index m = n_virtual();
    return chol_Lambda_.solve(Matrix::Identity(m, m)).diagonal();
}

ConstrainedProblem build_problem(const GpModel& model, const VirtualDesign& design)
{
    return ConstrainedProblem(model, design);
}

// ---------------------------------------------------------------------------
// Truncated prior
// ---------------------------------------------------------------------------

SampleBatch sample_truncated_gibbs(const ConstrainedProblem& prob, const Vector& f_t, const SamplerBudget& budget,
                                   RngStream& rng)
{
    SampleBatch out = gibbs_truncated_mvn_precision(prob.gaussian_mean(f_t), prob.precision(), budget.n_samples,
                                                    budget.burn_in, rng);
    out.method = method::kTruncatedGibbs;
    return out;
}

TargetDensity truncated_log_target(const ConstrainedProblem& prob, const Vector& f_t)
{
    TargetDensity target;
    target.dim = static_cast<int>(prob.n_virtual());
    const Matrix& Lambda = prob.precision();
    const Vector h = prob.linear_term(f_t);
    target.eval = [&Lambda, h](const Vector& x, Vector* grad) {
        const Vector y = x.array().exp();
        const Vector Ly = Lambda * y;
        if (grad)
            *grad = ((h - Ly).array() * y.array() + 1.0).matrix();
        return -0.5 * y.dot(Ly) + y.dot(h) + x.sum();
    };
    return target;
}

SampleBatch sample_truncated_nuts(const ConstrainedProblem& prob, const Vector& f_t, const SamplerBudget& budget,
                                  RngStream& rng)
{
    const auto start = Clock::now();
    // Start from the truncated mode, lifted off the boundary so its log exists.
    const BoxQuadratic quad(prob.precision(), true);
    const Vector h = prob.linear_term(f_t);
    const Vector mode = quad.minimize(h, Vector::Zero(h.size()), budget.lsq).x;
    const Vector sd = prob.gaussian_variance().cwiseSqrt();
    const Vector x0 = mode.cwiseMax(0.1 * sd).array().log();

    SampleBatch out = nuts_sample(truncated_log_target(prob, f_t), x0, budget.n_samples, budget.burn_in, rng,
                                  budget.nuts);
    out.draws = out.draws.array().exp();
    out.method = method::kTruncatedNuts;
    out.seconds = seconds_since(start);
    return out;
}

// ---------------------------------------------------------------------------
// ReLU likelihood
// ---------------------------------------------------------------------------

TargetDensity relu_target(const ConstrainedProblem& prob, const Vector& f_t)
{
    TargetDensity target;
    target.dim = static_cast<int>(prob.n_virtual());
    const Matrix& G = prob.data_precision();
    const Matrix& P = prob.prior_precision();
    const Vector h = prob.linear_term(f_t);
    target.eval = [&G, &P, h](const Vector& x, Vector* grad) {
        const Vector y = relu(x);
        const Vector Gy = G * y;
        const Vector Px = P * x;
        if (grad) {
            *grad = -Px;
            for (Eigen::Index i = 0; i < x.size(); ++i) {
                if (x[i] > 0.0)
                    (*grad)[i] += h[i] - Gy[i];
            }
        }
        return -0.5 * y.dot(Gy) + y.dot(h) - 0.5 * x.dot(Px);
    };
    return target;
}

SampleBatch sample_relu_gibbs(const ConstrainedProblem& prob, const Vector& f_t, const SamplerBudget& budget,
                              RngStream& rng)
{
    if (budget.n_samples < 1 || budget.burn_in < 0)
        throw ArgumentError("sample_relu_gibbs: need n_samples >= 1 and burn_in >= 0");
    const auto start = Clock::now();
    const Matrix& G = prob.data_precision();
    const Matrix& P = prob.prior_precision();
    const Vector h = prob.linear_term(f_t);
    const Eigen::Index m = h.size();

    Vector x = prob.gaussian_mean(f_t);
    Vector y = relu(x);
    Vector Px = P * x;
    Vector Gy = G * y;

    SampleBatch out;
    out.method = method::kReluGibbs;
    out.burn_in = budget.burn_in;
    out.draws.resize(budget.n_samples, m);

    const int total = budget.n_samples + budget.burn_in;
    for (int it = 0; it < total; ++it) {
        if (it % 64 == 63) {
            Px.noalias() = P * x;
            Gy.noalias() = G * y;
        }
        for (Eigen::Index i = 0; i < m; ++i) {
            const double a = P(i, i);
            const double g = G(i, i);
            // Prior conditional of x_i given the rest: N(m_p, 1/a).
            const double m_p = x[i] - Px[i] / a;
            const double c = a + g;
            const double beta = a * m_p + h[i] - (Gy[i] - g * y[i]);
            const double m_pos = beta / c;

            const double log_neg = 0.5 * a * m_p * m_p - 0.5 * std::log(a) + log_ndtr(-m_p * std::sqrt(a));
            const double log_pos = 0.5 * beta * m_pos - 0.5 * std::log(c) + log_ndtr(m_pos * std::sqrt(c));
            const double p_neg = 1.0 / (1.0 + std::exp(log_pos - log_neg));

            double xi;
            if (rng.uniform() < p_neg)
                xi = sample_truncnorm_upper(m_p, 1.0 / std::sqrt(a), 0.0, rng);
            else
                xi = sample_truncnorm_lower(m_pos, 1.0 / std::sqrt(c), 0.0, rng);

            const double dx = xi - x[i];
            if (dx != 0.0) {
                Px.noalias() += P.col(i) * dx;
                const double yi = std::max(xi, 0.0);
                const double dy = yi - y[i];
                if (dy != 0.0) {
                    Gy.noalias() += G.col(i) * dy;
                    y[i] = yi;
                }
                x[i] = xi;
            }
        }
        if (it >= budget.burn_in)
            out.draws.row(it - budget.burn_in) = x.transpose();
    }
    out.seconds = seconds_since(start);
    return out;
}

SampleBatch sample_relu_nuts(const ConstrainedProblem& prob, const Vector& f_t, const SamplerBudget& budget,
                             RngStream& rng)
{
    const auto start = Clock::now();
    SampleBatch out = nuts_sample(relu_target(prob, f_t), prob.gaussian_mean(f_t), budget.n_samples, budget.burn_in,
                                  rng, budget.nuts);
    out.method = method::kReluNuts;
    out.seconds = seconds_since(start);
    return out;
}

// ---------------------------------------------------------------------------
// RLRTO
// ---------------------------------------------------------------------------

SampleBatch sample_rlrto(const ConstrainedProblem& prob, const Vector& f_t, const SamplerBudget& budget,
                         RngStream& rng)
{
    if (budget.n_samples < 1)
        throw ArgumentError("sample_rlrto: need n_samples >= 1");
    const auto start = Clock::now();
    const Eigen::Index n = prob.n_train();
    const Eigen::Index m = prob.n_virtual();
    const BoundedLsqSolver solver(prob.A(), prob.chol_sigma_star(), prob.chol_K11(), true);
    const Vector r = prob.centered(f_t);
    const Matrix L_sigma = prob.chol_sigma_star().lower();
    const Matrix L_K = prob.chol_K11().lower();

    SampleBatch out;
    out.method = method::kRlrto;
    out.burn_in = 0;
    out.draws.resize(budget.n_samples, m);

    // Draw i perturbs with its own stream so cold-started solves are
    // independent of evaluation order.
    const std::uint64_t key = rng();
    Vector x = Vector::Zero(m);
    Vector z1(n);
    Vector z2(m);
    for (int i = 0; i < budget.n_samples; ++i) {
        RngStream draw_rng(key, static_cast<std::uint64_t>(i));
        for (Eigen::Index k = 0; k < n; ++k)
            z1[k] = draw_rng.normal();
        for (Eigen::Index k = 0; k < m; ++k)
            z2[k] = draw_rng.normal();
        const Vector b_hat = r + L_sigma * z1;
        const Vector c_hat = L_K * z2;
        const Vector start_x = budget.warm_start ? x : Vector::Zero(m);
        LsqSolution sol = solver.solve(b_hat, c_hat, start_x, budget.lsq);
        if (sol.cap_hit)
            ++out.degraded;
        x = std::move(sol.x);
        out.draws.row(i) = x.transpose();
    }
    out.seconds = seconds_since(start);
    return out;
}

SampleBatch sample_constrained(const std::string& m, const ConstrainedProblem& prob, const Vector& f_t,
                               const SamplerBudget& budget, RngStream& rng)
{
    if (m == method::kTruncatedGibbs)
        return sample_truncated_gibbs(prob, f_t, budget, rng);
    if (m == method::kTruncatedNuts)
        return sample_truncated_nuts(prob, f_t, budget, rng);
    if (m == method::kReluGibbs)
        return sample_relu_gibbs(prob, f_t, budget, rng);
    if (m == method::kReluNuts)
        return sample_relu_nuts(prob, f_t, budget, rng);
    if (m == method::kRlrto)
        return sample_rlrto(prob, f_t, budget, rng);
    throw ArgumentError("unknown constrained method '" + m + "'");
}

// ---------------------------------------------------------------------------
// Prediction
// ---------------------------------------------------------------------------

namespace {

/// Adds correlated noise to `means` (N x B), then folds every column into the
/// running summaries.
void summarize_block(Matrix& draws, const Matrix& cov, double jitter, Eigen::Index offset, RngStream& rng,
                     const std::optional<Vector>& truth, const PredictOptions& opts, ConstrainedPrediction& out,
                     double& sq_err)
{
    const Eigen::Index N = draws.rows();
    const Eigen::Index B = draws.cols();
    const Cholesky chol = factorize(cov, jitter, "conditional covariance of f(u)", 8);
    const Matrix L = chol.lower();
    Matrix Z(N, B);
    for (Eigen::Index i = 0; i < N; ++i)
        for (Eigen::Index j = 0; j < B; ++j)
            Z(i, j) = rng.normal();
    draws.noalias() += Z * L.transpose();

    std::vector<double> col(static_cast<std::size_t>(N));
    for (Eigen::Index j = 0; j < B; ++j) {
        for (Eigen::Index i = 0; i < N; ++i)
            col[static_cast<std::size_t>(i)] = draws(i, j);
        out.mean[offset + j] = draws.col(j).mean();
        out.lower[offset + j] = quantile_inplace(col, opts.lower_q);
        out.upper[offset + j] = quantile_inplace(col, opts.upper_q);
        if (truth)
            sq_err += (draws.col(j).array() - (*truth)[offset + j]).square().sum();
    }
    if (opts.keep_draws)
        out.draws.middleCols(offset, B) = draws;
}

void prepare(ConstrainedPrediction& out, Eigen::Index N, Eigen::Index n_u, const std::optional<Vector>& truth,
             const PredictOptions& opts)
{
    if (truth && truth->size() != n_u)
        throw ArgumentError("prediction truth has the wrong length");
    if (opts.block < 1)
        throw ArgumentError("prediction block size must be positive");
    out.mean.resize(n_u);
    out.lower.resize(n_u);
    out.upper.resize(n_u);
    if (opts.keep_draws)
        out.draws.resize(N, n_u);
}

} // namespace

ConstrainedPrediction predict_constrained(const ConstrainedProblem& prob, const Vector& f_t, const SampleBatch& batch,
                                          const Matrix& u, RngStream& rng, const std::optional<Vector>& truth,
                                          const PredictOptions& opts)
{
    if (batch.dim() != prob.n_virtual())
        throw ArgumentError("predict_constrained: batch width does not match the virtual design");
    if (batch.size() < 1)
        throw ArgumentError("predict_constrained: empty batch");
    const GpModel& model = prob.model();
    const Eigen::Index N = batch.size();
    const Eigen::Index n_u = u.rows();

    ConstrainedPrediction out;
    prepare(out, N, n_u, truth, opts);
    const Matrix fprime = is_relu_method(batch.method) ? Matrix(batch.draws.cwiseMax(0.0)) : batch.draws;
    const double jitter = kRelativeJitter * model.params().variance;

    double sq_err = 0.0;
    for (Eigen::Index off = 0; off < n_u; off += opts.block) {
        const Eigen::Index B = std::min(opts.block, n_u - off);
        const Matrix u_blk = u.middleRows(off, B);
        const EnhancedConditioner cond(model.params(), model.mean_const(), model.data().inputs, prob.design(), u_blk,
                                       model.noise_variance());
        Matrix draws = cond.mean_rows(f_t, fprime);
        summarize_block(draws, cond.cov(), jitter, off, rng, truth, opts, out, sq_err);
    }
    if (truth)
        out.mse = n_u > 0 ? sq_err / (static_cast<double>(N) * static_cast<double>(n_u)) : 0.0;
    return out;
}

ConstrainedPrediction predict_unconstrained(const GpModel& model, const Matrix& u, int n_samples, RngStream& rng,
                                            const std::optional<Vector>& truth, const PredictOptions& opts)
{
    if (n_samples < 1)
        throw ArgumentError("predict_unconstrained: need n_samples >= 1");
    const Eigen::Index N = n_samples;
    const Eigen::Index n_u = u.rows();
    ConstrainedPrediction out;
    prepare(out, N, n_u, truth, opts);
    const double jitter = kRelativeJitter * model.params().variance;

    double sq_err = 0.0;
    for (Eigen::Index off = 0; off < n_u; off += opts.block) {
        const Eigen::Index B = std::min(opts.block, n_u - off);
        const GaussianPrediction pred = posterior_value(model, u.middleRows(off, B));
        Matrix draws = pred.mean.transpose().replicate(N, 1);
        summarize_block(draws, pred.cov, jitter, off, rng, truth, opts, out, sq_err);
    }
    if (truth)
        out.mse = n_u > 0 ? sq_err / (static_cast<double>(N) * static_cast<double>(n_u)) : 0.0;
    return out;
}

} // namespace mcgp
