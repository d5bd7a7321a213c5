#include "mcgp/applications.hpp"

#include <boost/numeric/odeint.hpp>

#include <algorithm>
#include <cmath>
#include <string>

namespace mcgp {

namespace odeint = boost::numeric::odeint;

void SirConfig::validate() const
{
    if (!(r0_range[0] > 0.0 && r0_range[0] < r0_range[1]))
        throw ArgumentError("SirConfig: R0 range must be positive and increasing");
    if (!(t_range[0] < t_range[1]))
        throw ArgumentError("SirConfig: time range must be increasing");
    if (!(rel_tol > 0.0 && abs_tol > 0.0))
        throw ArgumentError("SirConfig: tolerances must be positive");
}

Matrix solve_sir_states(double r0, const Vector& t_eval, const SirConfig& cfg)
{
    cfg.validate();
    if (!(r0 > 0.0))
        throw ArgumentError("solve_sir: R0 must be positive");
    for (Eigen::Index i = 0; i < t_eval.size(); ++i) {
        if (!(t_eval[i] >= cfg.t_range[0] && t_eval[i] <= cfg.t_range[1]))
            throw ArgumentError("solve_sir: evaluation time outside the configured range");
    }
    Matrix out(t_eval.size(), 3);
    if (t_eval.size() == 0)
        return out;

    // integrate_times needs increasing times; evaluate in sorted order.
    std::vector<Eigen::Index> order(static_cast<std::size_t>(t_eval.size()));
    for (std::size_t i = 0; i < order.size(); ++i)
        order[i] = static_cast<Eigen::Index>(i);
    std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) { return t_eval[a] < t_eval[b]; });
    std::vector<double> times;
    times.reserve(order.size() + 1);
    const bool prepend = t_eval[order.front()] > cfg.t_range[0];
    if (prepend)
        times.push_back(cfg.t_range[0]);
    for (auto idx : order)
        times.push_back(t_eval[idx]);

    using State = std::array<double, 3>;
    auto rhs = [r0](const State& y, State& dy, double) {
        const double infection = r0 * y[0] * y[1];
        dy[0] = -infection;
        dy[1] = infection - y[1];
        dy[2] = y[1];
    };
    State y{cfg.initial[0], cfg.initial[1], cfg.initial[2]};
    std::vector<State> states;
    states.reserve(times.size());
    auto stepper = odeint::make_dense_output(cfg.abs_tol, cfg.rel_tol, odeint::runge_kutta_dopri5<State>());
    odeint::integrate_times(stepper, rhs, y, times.begin(), times.end(), 0.05,
                            [&states](const State& s, double) { states.push_back(s); });
    if (states.size() != times.size())
        throw NumericalError("solve_sir: integrator returned " + std::to_string(states.size()) + " of "
                             + std::to_string(times.size()) + " requested states");

    const std::size_t skip = prepend ? 1 : 0;
    for (std::size_t k = 0; k < order.size(); ++k) {
        const State& s = states[k + skip];
        for (int c = 0; c < 3; ++c)
            out(order[k], c) = s[static_cast<std::size_t>(c)];
    }
    if (!out.allFinite())
        throw NumericalError("solve_sir: non-finite state");
    return out;
}

Vector solve_sir(double r0, const Vector& t_eval, const SirConfig& cfg)
{
    return solve_sir_states(r0, t_eval, cfg).col(2);
}

void ConvDiffConfig::validate() const
{
    if (!(alpha > 0.0))
        throw ArgumentError("ConvDiffConfig: alpha must be positive");
    if (!(dt > 0.0) || !(t_final > 0.0))
        throw ArgumentError("ConvDiffConfig: dt and t_final must be positive");
    if (nx < 1)
        throw ArgumentError("ConvDiffConfig: need at least one element");
    if (!(b_range[0] <= b_range[1]))
        throw ArgumentError("ConvDiffConfig: velocity range must be ordered");
}

int ConvDiffConfig::n_steps() const
{
    return static_cast<int>(std::lround(t_final / dt));
}

std::vector<double> solve_tridiagonal(std::vector<double> lower, std::vector<double> diag, std::vector<double> upper,
                                      std::vector<double> rhs)
{
    const std::size_t n = diag.size();
    if (lower.size() != n || upper.size() != n || rhs.size() != n)
        throw ArgumentError("solve_tridiagonal: band lengths differ");
    for (std::size_t i = 1; i < n; ++i) {
        if (diag[i - 1] == 0.0)
            throw NumericalError("solve_tridiagonal: zero pivot");
        const double w = lower[i] / diag[i - 1];
        diag[i] -= w * upper[i - 1];
        rhs[i] -= w * rhs[i - 1];
    }
    if (n == 0)
        return rhs;
    if (diag[n - 1] == 0.0)
        throw NumericalError("solve_tridiagonal: zero pivot");
    rhs[n - 1] /= diag[n - 1];
    for (std::size_t i = n - 1; i-- > 0;)
        rhs[i] = (rhs[i] - upper[i] * rhs[i + 1]) / diag[i];
    return rhs;
}

ConvDiffSolution::ConvDiffSolution(double b, const ConvDiffConfig& cfg) : b_(b), cfg_(cfg)
{
    cfg_.validate();
    if (!(b >= cfg_.b_range[0] && b <= cfg_.b_range[1]))
        throw ArgumentError("solve_convdiff: velocity outside the configured range");
    const int ne = cfg_.nx;
    const auto n = static_cast<std::size_t>(ne + 1);
    const double h = 1.0 / ne;
    const double dt = cfg_.dt;
    const double a = cfg_.alpha;

    // Element matrices: mass h/6 [2 1; 1 2], diffusion a/h [1 -1; -1 1],
    // convection b/2 [-1 1; -1 1] (row = test function).
    std::vector<double> m_lo(n, 0.0), m_di(n, 0.0), m_up(n, 0.0);
    std::vector<double> s_lo(n, 0.0), s_di(n, 0.0), s_up(n, 0.0);
    for (int e = 0; e < ne; ++e) {
        const auto i = static_cast<std::size_t>(e);
        const auto j = i + 1;
        m_di[i] += 2.0 * h / 6.0;
        m_di[j] += 2.0 * h / 6.0;
        m_up[i] += h / 6.0;
        m_lo[j] += h / 6.0;

        s_di[i] += a / h - 0.5 * b;
        s_up[i] += -a / h + 0.5 * b;
        s_lo[j] += -a / h - 0.5 * b;
        s_di[j] += a / h + 0.5 * b;
    }
    std::vector<double> lo(n), di(n), up(n);
    for (std::size_t i = 0; i < n; ++i) {
        lo[i] = m_lo[i] + dt * s_lo[i];
        di[i] = m_di[i] + dt * s_di[i];
        up[i] = m_up[i] + dt * s_up[i];
    }
    // Strong Dirichlet row at x = 1.
    lo[n - 1] = 0.0;
    di[n - 1] = 1.0;
    up[n - 1] = 0.0;

    const int steps = cfg_.n_steps();
    u_ = Matrix::Zero(steps + 1, static_cast<Eigen::Index>(n));
    std::vector<double> prev(n, 0.0), rhs(n);
    for (int k = 1; k <= steps; ++k) {
        for (std::size_t i = 0; i < n; ++i) {
            double v = m_di[i] * prev[i];
            if (i > 0)
                v += m_lo[i] * prev[i - 1];
            if (i + 1 < n)
                v += m_up[i] * prev[i + 1];
            rhs[i] = v;
        }
        rhs[n - 1] = 1.0;
        prev = solve_tridiagonal(lo, di, up, rhs);
        for (std::size_t i = 0; i < n; ++i)
            u_(k, static_cast<Eigen::Index>(i)) = prev[i];
    }
}

double ConvDiffSolution::operator()(double x, double t) const
{
    const double t_end = cfg_.n_steps() * cfg_.dt;
    if (!(x >= 0.0 && x <= 1.0) || !(t >= 0.0 && t <= t_end + 1e-12))
        throw ArgumentError("solve_convdiff: evaluation point outside [0,1] x [0," + std::to_string(t_end) + "]");
    const int ne = cfg_.nx;
    const int steps = cfg_.n_steps();
    const double xs = x * ne;
    const double ts = std::min(t / cfg_.dt, static_cast<double>(steps));
    const int i = std::min(static_cast<int>(xs), ne - 1);
    const int k = std::min(static_cast<int>(ts), steps - 1);
    const double fx = xs - i;
    const double ft = ts - k;
    const double u00 = u_(k, i), u01 = u_(k, i + 1);
    const double u10 = u_(k + 1, i), u11 = u_(k + 1, i + 1);
    return (1.0 - ft) * ((1.0 - fx) * u00 + fx * u01) + ft * ((1.0 - fx) * u10 + fx * u11);
}

Vector solve_convdiff(double b, const Matrix& eval_points, const ConvDiffConfig& cfg)
{
    if (eval_points.cols() != 2)
        throw ArgumentError("solve_convdiff: evaluation points must be (x, t) pairs");
    const ConvDiffSolution sol(b, cfg);
    Vector out(eval_points.rows());
    for (Eigen::Index r = 0; r < eval_points.rows(); ++r)
        out[r] = sol(eval_points(r, 0), eval_points(r, 1));
    return out;
}

} // namespace mcgp
