#ifndef MCGP_APPLICATIONS_HPP
#define MCGP_APPLICATIONS_HPP

#include "mcgp/types.hpp"

#include <array>
#include <vector>

namespace mcgp {

struct SirConfig {
    std::array<double, 2> r0_range{0.01, 5.0};
    std::array<double, 2> t_range{0.0, 10.0};
    /// (S, I, R) at t = 0.
    std::array<double, 3> initial{0.98, 0.02, 0.0};
    double rel_tol = 1e-8;
    double abs_tol = 1e-12;

    void validate() const;
};

/// Full (S, I, R) trajectory at the requested times, one row per time.
Matrix solve_sir_states(double r0, const Vector& t_eval, const SirConfig& cfg = {});

/// Removed fraction R(t) at each requested time.
Vector solve_sir(double r0, const Vector& t_eval, const SirConfig& cfg = {});

struct ConvDiffConfig {
    double alpha = 0.1;
    std::array<double, 2> b_range{-1.0, 0.0};
    int nx = 64;
    double dt = 0.01;
    double t_final = 1.5;

    void validate() const;
    int n_steps() const;
};

/// Nodal space-time solution of u_t + b u_x - alpha u_xx = 0 on [0, 1] with
/// u(1, t) = 1 for t > 0, a natural boundary at x = 0 and u(x, 0) = 0.
/// P1 elements with a consistent mass matrix, backward Euler in time.
class ConvDiffSolution {
public:
    ConvDiffSolution(double b, const ConvDiffConfig& cfg = {});

    double b() const { return b_; }
    const ConvDiffConfig& config() const { return cfg_; }

    /// (n_steps + 1) x (nx + 1); row k is the state at t = k dt.
    const Matrix& nodal() const { return u_; }

    /// Bilinear interpolation in (x, t).
    double operator()(double x, double t) const;

private:
    double b_;
    ConvDiffConfig cfg_;
    Matrix u_;
};

/// u at each (x, t) row of `eval_points` (k x 2).
Vector solve_convdiff(double b, const Matrix& eval_points, const ConvDiffConfig& cfg = {});

/// Solves a tridiagonal system in place (Thomas algorithm). `lower[0]` and
/// `upper[n-1]` are ignored. Returns the solution.
std::vector<double> solve_tridiagonal(std::vector<double> lower, std::vector<double> diag, std::vector<double> upper,
                                      std::vector<double> rhs);

} // namespace mcgp

#endif
