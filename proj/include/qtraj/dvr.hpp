#pragma once

// Discrete variable representation for harmonic modes, plus the two-level
// pseudo-grid used for spin degrees of freedom.
//
// Grids are built in dimensionless oscillator units: the stored coordinate is
// q = x * sqrt(m*omega/hbar), kinetic and potential matrices are dimensionless,
// and the one-body Hamiltonian is omega * (T + q^2/2).  Grid points are the
// eigenvalues of the position operator in a truncated Hermite basis, so an
// n-point grid reproduces the lowest n oscillator levels to machine precision.

#include <cmath>
#include <string>
#include <utility>

#include <Eigen/Dense>

#include "qtraj/common.hpp"

namespace qtraj {

// One-body operator attached to a degree of freedom by index.
struct OneBodyOperator {
    int dof = 0;
    MatrixXcd matrix;
    std::string label;
};

struct DVRGrid {
    int n_points = 0;
    double frequency = 1.0;
    double mass = 1.0;
    VectorXd points;    // ascending position eigenvalues, dimensionless
    VectorXd weights;   // quadrature weights with the Gaussian factored out
    MatrixXd kinetic;   // p^2/2 in the grid basis
    MatrixXd momentum;  // i*p in the grid basis (real antisymmetric)
    // Hermite-basis-to-grid transform; levels(n, i) is the n-th oscillator
    // eigenfunction sampled on grid point i (with weight factor absorbed).
    MatrixXd levels;

    bool is_spin = false;
};

namespace detail {

// Hermite functions psi_n(q) for n = 0..n_max via the stable three-term
// recurrence; returns a column per n.
inline MatrixXd hermite_functions(const VectorXd& q, int n_max) {
    const auto m = q.size();
    MatrixXd psi(m, n_max + 1);
    psi.col(0) = (std::pow(kPi, -0.25) * (-q.array().square() / 2.0).exp()).matrix();
    if (n_max >= 1) psi.col(1) = (std::sqrt(2.0) * q.array() * psi.col(0).array()).matrix();
    for (int n = 1; n < n_max; ++n) {
        psi.col(n + 1) = (std::sqrt(2.0 / (n + 1)) * q.array() * psi.col(n).array() -
                          std::sqrt(double(n) / (n + 1)) * psi.col(n - 1).array())
                             .matrix();
    }
    return psi;
}

}  // namespace detail

// Harmonic-oscillator DVR: diagonalize the position operator of the Hermite
// basis (Golub-Welsch), transform kinetic and momentum along.
inline DVRGrid build_ho_dvr(int n_points, double frequency, double mass = 1.0) {
    if (n_points < 2) throw ConfigError("build_ho_dvr: n_points must be >= 2");
    if (!(frequency > 0.0)) throw ConfigError("build_ho_dvr: frequency must be > 0");
    if (!(mass > 0.0)) throw ConfigError("build_ho_dvr: mass must be > 0");

    const int n = n_points;
    MatrixXd x = MatrixXd::Zero(n, n);
    for (int k = 1; k < n; ++k) x(k - 1, k) = x(k, k - 1) = std::sqrt(k / 2.0);

    Eigen::SelfAdjointEigenSolver<MatrixXd> es(x);
    DVRGrid g;
    g.n_points = n;
    g.frequency = frequency;
    g.mass = mass;
    g.points = es.eigenvalues();  // ascending
    MatrixXd u = es.eigenvectors();
    for (int i = 0; i < n; ++i)
        if (u(0, i) < 0.0) u.col(i) = -u.col(i);  // fix the sign ambiguity
    g.levels = u;

    g.weights.resize(n);
    for (int i = 0; i < n; ++i)
        g.weights(i) = std::sqrt(kPi) * u(0, i) * u(0, i) * std::exp(g.points(i) * g.points(i));

    // p^2 = (n + 1/2) - (a^2 + adag^2)/2 in the Hermite basis
    MatrixXd p2 = MatrixXd::Zero(n, n);
    for (int k = 0; k < n; ++k) p2(k, k) = k + 0.5;
    for (int k = 2; k < n; ++k) p2(k - 2, k) = p2(k, k - 2) = -0.5 * std::sqrt(double(k) * (k - 1));
    g.kinetic = 0.5 * (u.transpose() * p2 * u);
    g.kinetic = 0.5 * (g.kinetic + g.kinetic.transpose()).eval();

    // i*p = (a - adag)/sqrt(2) is real in the Hermite basis
    MatrixXd ip = MatrixXd::Zero(n, n);
    for (int k = 1; k < n; ++k) {
        ip(k - 1, k) = std::sqrt(k / 2.0);
        ip(k, k - 1) = -std::sqrt(k / 2.0);
    }
    g.momentum = u.transpose() * ip * u;
    return g;
}

// Two-point pseudo-grid for a spin-1/2: index 0 = ground, 1 = excited,
// no kinetic energy; the level splitting enters through sigma_z couplings.
inline DVRGrid spin_grid(double frequency) {
    if (!(frequency > 0.0)) throw ConfigError("spin_grid: frequency must be > 0");
    DVRGrid g;
    g.n_points = 2;
    g.frequency = frequency;
    g.points = VectorXd::LinSpaced(2, 0.0, 1.0);
    g.weights = VectorXd::Ones(2);
    g.kinetic = MatrixXd::Zero(2, 2);
    g.momentum = MatrixXd::Zero(2, 2);
    g.levels = MatrixXd::Identity(2, 2);
    g.is_spin = true;
    return g;
}

inline MatrixXd position_matrix(const DVRGrid& g) {
    return g.points.asDiagonal();
}

// omega * (T + q^2 / 2); eigenvalues are omega*(n + 1/2) by construction.
inline MatrixXd harmonic_hamiltonian(const DVRGrid& g) {
    MatrixXd h = g.kinetic;
    h.diagonal() += 0.5 * g.points.array().square().matrix();
    return g.frequency * h;
}

// Ladder pair a = (q + i p)/sqrt(2), adag = a^T (both real on the grid).
inline std::pair<OneBodyOperator, OneBodyOperator> ladder_operators(const DVRGrid& g, int dof = 0) {
    MatrixXd a = (position_matrix(g) + g.momentum) / std::sqrt(2.0);
    OneBodyOperator lower{dof, a.cast<cx>(), "a"};
    OneBodyOperator raise{dof, a.transpose().cast<cx>(), "adag"};
    return {std::move(lower), std::move(raise)};
}

// adag*a, symmetrized to kill roundoff asymmetry.
inline OneBodyOperator number_operator(const DVRGrid& g, int dof = 0) {
    MatrixXd a = (position_matrix(g) + g.momentum) / std::sqrt(2.0);
    MatrixXd n = a.transpose() * a;
    n = 0.5 * (n + n.transpose()).eval();
    return {dof, n.cast<cx>(), "n"};
}

// Projector |m><m| onto the m-th oscillator level, expressed on the grid.
inline OneBodyOperator level_projector(const DVRGrid& g, int m, int dof = 0) {
    if (m < 0 || m >= g.n_points)
        throw ConfigError("level_projector: level outside grid basis");
    VectorXd v = g.levels.row(m).transpose();
    MatrixXd p = v * v.transpose();
    return {dof, p.cast<cx>(), "P" + std::to_string(m)};
}

inline MatrixXcd sigma_z() {
    MatrixXcd s = MatrixXcd::Zero(2, 2);
    s(0, 0) = -1.0;
    s(1, 1) = 1.0;
    return s;
}

inline MatrixXcd sigma_minus() {
    MatrixXcd s = MatrixXcd::Zero(2, 2);
    s(0, 1) = 1.0;  // |g><e|
    return s;
}

inline MatrixXcd sigma_plus() {
    MatrixXcd s = MatrixXcd::Zero(2, 2);
    s(1, 0) = 1.0;  // |e><g|
    return s;
}

// Oscillator eigenstate |n> as a grid vector, c_i = sqrt(w_i) * psi_n(q_i).
// Gauss-Hermite quadrature is exact for these products, so the result is
// normalized to machine precision for n < n_points.
inline VectorXd fock_state(const DVRGrid& g, int n) {
    if (g.is_spin) {
        if (n < 0 || n > 1) throw ConfigError("fock_state: spin level must be 0 or 1");
        VectorXd v = VectorXd::Zero(2);
        v(n) = 1.0;
        return v;
    }
    if (n < 0 || n >= g.n_points)
        throw ConfigError("fock_state: level outside grid basis");
    MatrixXd psi = detail::hermite_functions(g.points, n);
    return (g.weights.array().sqrt() * psi.col(n).array()).matrix().normalized();
}

// Coherent state |alpha> as a displaced Gaussian on the grid, with
// <q> = sqrt(2) Re alpha and <p> = sqrt(2) Im alpha.
inline VectorXcd coherent_state(const DVRGrid& g, cx alpha) {
    if (g.is_spin) throw ConfigError("coherent_state: not defined on a spin grid");
    const double q0 = std::sqrt(2.0) * alpha.real();
    const double p0 = std::sqrt(2.0) * alpha.imag();
    VectorXcd psi(g.n_points);
    for (int i = 0; i < g.n_points; ++i) {
        const double q = g.points(i);
        const cx phase = kI * (p0 * q - 0.5 * q0 * p0);
        psi(i) = std::sqrt(g.weights(i)) * std::pow(kPi, -0.25) *
                 std::exp(-0.5 * sqr(q - q0) + phase);
    }
    psi.normalize();
    return psi;
}

}  // namespace qtraj
