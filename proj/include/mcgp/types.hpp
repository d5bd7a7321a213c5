#ifndef MCGP_TYPES_HPP
#define MCGP_TYPES_HPP

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace mcgp {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Raised on malformed inputs: dimension mismatches, non-positive parameters.
class ArgumentError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Raised when a linear-algebra step fails (e.g. Cholesky on a matrix that is
/// not numerically positive definite).
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Relative diagonal jitter added to every covariance before factorization.
inline constexpr double kRelativeJitter = 1e-8;

} // namespace mcgp

#endif
