#include "mcgp/sampling.hpp"

#include <chrono>
#include <cmath>
#include <limits>

namespace mcgp {

Vector TargetDensity::grad_logpdf(const Vector& x) const
{
    Vector g(dim);
    eval(x, &g);
    return g;
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct PhasePoint {
    Vector q;
    Vector p;
    Vector grad;
    double logp = 0.0;
};

double log_sum_exp(double a, double b)
{
    if (a == -kInf)
        return b;
    if (b == -kInf)
        return a;
    const double hi = std::max(a, b);
    return hi + std::log1p(std::exp(-std::abs(a - b)));
}

bool no_u_turn(const Vector& p_minus, const Vector& p_plus, const Vector& rho)
{
    return p_plus.dot(rho) > 0.0 && p_minus.dot(rho) > 0.0;
}

class Nuts {
public:
    Nuts(const TargetDensity& target, const NutsOptions& opts, RngStream& rng)
        : target_(target), opts_(opts), rng_(rng)
    {
    }

    double hamiltonian(const PhasePoint& z) const
    {
        const double h = -z.logp + 0.5 * z.p.squaredNorm();
        return std::isnan(h) ? kInf : h;
    }

    void evaluate(PhasePoint& z)
    {
        z.logp = target_.eval(z.q, &z.grad);
        ++gradient_evals_;
    }

    void leapfrog(PhasePoint& z, double eps)
    {
        z.p.noalias() += 0.5 * eps * z.grad;
        z.q.noalias() += eps * z.p;
        evaluate(z);
        z.p.noalias() += 0.5 * eps * z.grad;
    }

    /// Stan-style heuristic: double or halve until one leapfrog step crosses
    /// an acceptance probability of 0.8.
    double initial_step(const PhasePoint& start)
    {
        double eps = 1.0;
        PhasePoint z = start;
        z.p = draw_momentum();
        const double h0 = hamiltonian(z);
        PhasePoint trial = z;
        leapfrog(trial, eps);
        double delta = h0 - hamiltonian(trial);
        const int direction = delta > std::log(0.8) ? 1 : -1;
        for (int i = 0; i < 100; ++i) {
            trial = z;
            trial.p = draw_momentum();
            z.p = trial.p;
            const double h = hamiltonian(trial);
            leapfrog(trial, eps);
            delta = h - hamiltonian(trial);
            if (direction == 1 && !(delta > std::log(0.8)))
                break;
            if (direction == -1 && !(delta < std::log(0.8)))
                break;
            eps = direction == 1 ? 2.0 * eps : 0.5 * eps;
            if (eps > 1e7 || eps < 1e-12)
                break;
        }
        return eps;
    }

    Vector draw_momentum()
    {
        Vector p(target_.dim);
        for (int i = 0; i < target_.dim; ++i)
            p[i] = rng_.normal();
        return p;
    }

    // Grows a subtree of 2^depth leapfrog steps from `z` (updated in place to
    // the far edge). Returns false if the subtree diverged or turned.
    bool build_tree(int depth, PhasePoint& z, Vector& p_beg, Vector& p_end, Vector& rho, double h0, double eps,
                    double& log_sum_weight, PhasePoint& proposal)
    {
        if (depth == 0) {
            leapfrog(z, eps);
            ++n_leapfrog_;
            const double h = hamiltonian(z);
            if (h - h0 > opts_.max_delta_h)
                divergent_ = true;
            log_sum_weight = log_sum_exp(log_sum_weight, h0 - h);
            sum_metro_prob_ += h0 - h > 0.0 ? 1.0 : std::exp(h0 - h);
            proposal = z;
            rho += z.p;
            p_beg = z.p;
            p_end = z.p;
            return !divergent_;
        }

        const Eigen::Index d = z.q.size();
        Vector p_init_end(d);
        Vector rho_init = Vector::Zero(d);
        double log_sum_weight_init = -kInf;
        if (!build_tree(depth - 1, z, p_beg, p_init_end, rho_init, h0, eps, log_sum_weight_init, proposal))
            return false;

        PhasePoint proposal_final = z;
        Vector p_final_beg(d);
        Vector rho_final = Vector::Zero(d);
        double log_sum_weight_final = -kInf;
        if (!build_tree(depth - 1, z, p_final_beg, p_end, rho_final, h0, eps, log_sum_weight_final, proposal_final))
            return false;

        const double log_sum_weight_subtree = log_sum_exp(log_sum_weight_init, log_sum_weight_final);
        log_sum_weight = log_sum_exp(log_sum_weight, log_sum_weight_subtree);
        if (log_sum_weight_final > log_sum_weight_subtree) {
            proposal = proposal_final;
        } else if (rng_.uniform() < std::exp(log_sum_weight_final - log_sum_weight_subtree)) {
            proposal = proposal_final;
        }

        const Vector rho_subtree = rho_init + rho_final;
        rho += rho_subtree;
        bool persist = no_u_turn(p_beg, p_end, rho_subtree);
        persist = persist && no_u_turn(p_beg, p_final_beg, rho_init + p_final_beg);
        persist = persist && no_u_turn(p_init_end, p_end, rho_final + p_init_end);
        return persist;
    }

    PhasePoint transition(const PhasePoint& current, double eps, double& accept_stat, int& depth_out)
    {
        PhasePoint z0 = current;
        z0.p = draw_momentum();
        const double h0 = hamiltonian(z0);
        const Eigen::Index d = z0.q.size();

        PhasePoint z_fwd = z0;
        PhasePoint z_bck = z0;
        PhasePoint sample = z0;

        Vector p_fwd_fwd = z0.p, p_fwd_bck = z0.p;
        Vector p_bck_fwd = z0.p, p_bck_bck = z0.p;
        Vector rho = z0.p;
        double log_sum_weight = 0.0;

        n_leapfrog_ = 0;
        sum_metro_prob_ = 0.0;
        divergent_ = false;

        int depth = 0;
        while (depth < opts_.max_depth) {
            Vector rho_fwd = Vector::Zero(d);
            Vector rho_bck = Vector::Zero(d);
            double log_sum_weight_subtree = -kInf;
            PhasePoint proposal;
            bool valid;
            if (rng_.uniform() > 0.5) {
                // The existing trajectory becomes the backward half.
                rho_bck = rho;
                p_bck_fwd = p_fwd_fwd;
                valid = build_tree(depth, z_fwd, p_fwd_bck, p_fwd_fwd, rho_fwd, h0, eps, log_sum_weight_subtree,
                                   proposal);
            } else {
                rho_fwd = rho;
                p_fwd_bck = p_bck_bck;
                valid = build_tree(depth, z_bck, p_bck_fwd, p_bck_bck, rho_bck, h0, -eps, log_sum_weight_subtree,
                                   proposal);
            }
            if (!valid)
                break;
            ++depth;

            if (log_sum_weight_subtree > log_sum_weight) {
                sample = proposal;
            } else if (rng_.uniform() < std::exp(log_sum_weight_subtree - log_sum_weight)) {
                sample = proposal;
            }
            log_sum_weight = log_sum_exp(log_sum_weight, log_sum_weight_subtree);

            rho = rho_bck + rho_fwd;
            bool persist = no_u_turn(p_bck_bck, p_fwd_fwd, rho);
            persist = persist && no_u_turn(p_bck_bck, p_fwd_bck, rho_bck + p_fwd_bck);
            persist = persist && no_u_turn(p_bck_fwd, p_fwd_fwd, rho_fwd + p_bck_fwd);
            if (!persist)
                break;
        }
        accept_stat = n_leapfrog_ > 0 ? sum_metro_prob_ / n_leapfrog_ : 0.0;
        depth_out = depth;
        return sample;
    }

    bool divergent() const { return divergent_; }
    long long gradient_evals() const { return gradient_evals_; }

private:
    const TargetDensity& target_;
    NutsOptions opts_;
    RngStream& rng_;
    int n_leapfrog_ = 0;
    double sum_metro_prob_ = 0.0;
    bool divergent_ = false;
    long long gradient_evals_ = 0;
};

} // namespace

SampleBatch nuts_sample(const TargetDensity& target, const Vector& x0, int n_samples, int burn_in, RngStream& rng,
                        const NutsOptions& opts)
{
    if (x0.size() != target.dim)
        throw ArgumentError("nuts_sample: initial point has the wrong dimension");
    if (n_samples < 1 || burn_in < 0)
        throw ArgumentError("nuts_sample: need n_samples >= 1 and burn_in >= 0");
    if (!target.eval)
        throw ArgumentError("nuts_sample: target density has no evaluator");

    const auto start = std::chrono::steady_clock::now();
    Nuts nuts(target, opts, rng);

    PhasePoint z;
    z.q = x0;
    z.grad.resize(target.dim);
    nuts.evaluate(z);
    if (!std::isfinite(z.logp))
        throw ArgumentError("nuts_sample: log density is not finite at the initial point");
    if (!z.grad.allFinite())
        throw ArgumentError("nuts_sample: gradient is not finite at the initial point");

    double eps = nuts.initial_step(z);

    // Dual averaging state.
    const double mu = std::log(10.0 * eps);
    double s_bar = 0.0;
    double x_bar = 0.0;
    int counter = 0;

    SampleBatch out;
    out.method = "nuts";
    out.burn_in = burn_in;
    out.draws.resize(n_samples, target.dim);

    double accept_sum = 0.0;
    double depth_sum = 0.0;
    const int total = n_samples + burn_in;
    for (int it = 0; it < total; ++it) {
        double accept_stat = 0.0;
        int depth = 0;
        z = nuts.transition(z, eps, accept_stat, depth);
        const bool diverged = nuts.divergent();

        if (it < burn_in) {
            if (diverged)
                ++out.burn_in_divergences;
            ++counter;
            const double adapt_stat = std::min(1.0, accept_stat);
            const double eta = 1.0 / (counter + opts.t0);
            s_bar = (1.0 - eta) * s_bar + eta * (opts.target_accept - adapt_stat);
            const double x = mu - s_bar * std::sqrt(static_cast<double>(counter)) / opts.gamma;
            const double x_eta = std::pow(static_cast<double>(counter), -opts.kappa);
            x_bar = (1.0 - x_eta) * x_bar + x_eta * x;
            eps = std::exp(x);
            if (it == burn_in - 1)
                eps = std::exp(x_bar);
        } else {
            if (diverged)
                ++out.divergences;
            accept_sum += accept_stat;
            depth_sum += depth;
            out.draws.row(it - burn_in) = z.q.transpose();
        }
    }

    out.step_size = eps;
    out.mean_accept = accept_sum / n_samples;
    out.mean_tree_depth = depth_sum / n_samples;
    out.divergence_flag = burn_in > 0 && 2 * out.burn_in_divergences > burn_in;
    out.gradient_evals = nuts.gradient_evals();
    out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return out;
}

} // namespace mcgp
