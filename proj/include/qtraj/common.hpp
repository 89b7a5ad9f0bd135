#pragma once

// Shared aliases and error types for the qtraj library.

#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace qtraj {

using cx = std::complex<double>;
using Eigen::MatrixXcd;
using Eigen::MatrixXd;
using Eigen::VectorXcd;
using Eigen::VectorXd;

inline constexpr const char* kVersion = "0.1.0";
inline constexpr double kPi = std::numbers::pi;
inline constexpr cx kI{0.0, 1.0};

// Thrown when a configuration or argument fails validation.
struct ConfigError : std::invalid_argument {
    explicit ConfigError(const std::string& what) : std::invalid_argument(what) {}
};

// Thrown when the adaptive integrator cannot reach the requested time.
// t_reached reports how far it got before the step size underflowed.
struct IntegrationFailure : std::runtime_error {
    double t_reached;
    IntegrationFailure(const std::string& what, double t)
        : std::runtime_error(what + " (reached t = " + std::to_string(t) + ")"), t_reached(t) {}
};

// Thrown when a runtime consistency check fails (negative jump probability,
// norm outside (0, 1 + tol), zero-probability jump, truncation blow-up).
struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline double sqr(double x) { return x * x; }

// Product of per-degree-of-freedom dimensions, i.e. the flattened basis size.
inline std::ptrdiff_t total_dim(const std::vector<int>& dims) {
    std::ptrdiff_t d = 1;
    for (int n : dims) d *= n;
    return d;
}

}  // namespace qtraj
