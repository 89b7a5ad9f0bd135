#pragma once

// Adaptive embedded Runge-Kutta 4(5), Dormand-Prince coefficients, over flat
// complex state vectors.  One integrator serves Schroedinger-type propagation,
// the MCTDH equations of motion, and the density-matrix reference dynamics.

#include <algorithm>
#include <cmath>

#include "qtraj/common.hpp"

namespace qtraj {

struct IntegratorOptions {
    double rtol = 1e-8;
    double atol = 1e-10;
    double initial_step = 0.0;  // 0 = choose automatically
    long max_steps = 50'000'000;
};

struct IntegratorStats {
    long n_accepted = 0;
    long n_rejected = 0;
    long n_rhs = 0;
    double last_step = 0.0;
};

namespace detail {

// Weighted RMS of the local error estimate against atol + rtol * |y|.
inline double wrms_error(const VectorXcd& err, const VectorXcd& y0, const VectorXcd& y1,
                         double rtol, double atol) {
    double acc = 0.0;
    const auto n = err.size();
    for (Eigen::Index i = 0; i < n; ++i) {
        const double sc = atol + rtol * std::max(std::abs(y0(i)), std::abs(y1(i)));
        const double e = std::abs(err(i)) / sc;
        acc += e * e;
    }
    return std::sqrt(acc / double(n));
}

}  // namespace detail

// Integrates y' = f(t, y) from t0 to t1 in place.  f has the signature
// f(double t, const VectorXcd& y, VectorXcd& dydt).  Throws IntegrationFailure
// if the step size underflows or the step budget is exhausted.
template <class RHS>
IntegratorStats integrate_adaptive(RHS&& f, VectorXcd& y, double t0, double t1,
                                   const IntegratorOptions& opt = {}) {
    if (t1 < t0) throw ConfigError("integrate_adaptive: t1 must be >= t0");
    IntegratorStats st;
    if (t1 == t0) return st;

    static constexpr double a21 = 1.0 / 5;
    static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
    static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                            a54 = -212.0 / 729;
    static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                            a64 = 49.0 / 176, a65 = -5103.0 / 18656;
    static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                            b5 = -2187.0 / 6784, b6 = 11.0 / 84;
    // difference between 5th and 4th order weights
    static constexpr double e1 = b1 - 5179.0 / 57600, e3 = b3 - 7571.0 / 16695,
                            e4 = b4 - 393.0 / 640, e5 = b5 + 92097.0 / 339200,
                            e6 = b6 - 187.0 / 2100, e7 = -1.0 / 40;
    static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;

    const auto n = y.size();
    VectorXcd k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), ytmp(n), ynew(n), yerr(n);

    f(t0, y, k1);
    ++st.n_rhs;

    double h = opt.initial_step;
    if (h <= 0.0) {
        // Hairer-style startup: balance the scaled norms of y and f(y).
        double d0 = detail::wrms_error(y, y, y, opt.rtol, opt.atol);
        double d1 = detail::wrms_error(k1, y, y, opt.rtol, opt.atol);
        h = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
        ytmp = y + h * k1;
        f(t0 + h, ytmp, k2);
        ++st.n_rhs;
        double d2 = detail::wrms_error(k2 - k1, y, y, opt.rtol, opt.atol) / h;
        double h1 = (std::max(d1, d2) <= 1e-15) ? std::max(1e-6, h * 1e-3)
                                                : std::pow(0.01 / std::max(d1, d2), 0.2);
        h = std::min({100.0 * h, h1, t1 - t0});
        if (!std::isfinite(h)) h = 1e-6;
    }
    h = std::min(h, t1 - t0);

    double t = t0;
    while (t < t1) {
        if (st.n_accepted + st.n_rejected >= opt.max_steps)
            throw IntegrationFailure("integrate_adaptive: step budget exhausted", t);
        const double hmin = 1e-14 * std::max(1.0, std::abs(t));
        if (h < hmin) throw IntegrationFailure("integrate_adaptive: step size underflow", t);
        if (t + h > t1) h = t1 - t;

        ytmp = y + (h * a21) * k1;
        f(t + c2 * h, ytmp, k2);
        ytmp = y + h * (a31 * k1 + a32 * k2);
        f(t + c3 * h, ytmp, k3);
        ytmp = y + h * (a41 * k1 + a42 * k2 + a43 * k3);
        f(t + c4 * h, ytmp, k4);
        ytmp = y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4);
        f(t + c5 * h, ytmp, k5);
        ytmp = y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5);
        f(t + h, ytmp, k6);
        ynew = y + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
        f(t + h, ynew, k7);  // FSAL stage
        st.n_rhs += 6;

        yerr = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
        const double err = detail::wrms_error(yerr, y, ynew, opt.rtol, opt.atol);

        // A trial step that overflows a nonlinear RHS yields NaN/Inf instead of
        // a usable error estimate; treat it as a hard rejection.
        if (!std::isfinite(err) || !ynew.allFinite()) {
            ++st.n_rejected;
            h *= 0.2;
            continue;
        }

        if (err <= 1.0) {
            t += h;
            y.swap(ynew);
            k1.swap(k7);
            ++st.n_accepted;
            st.last_step = h;
            const double fac = (err == 0.0) ? 5.0 : std::clamp(0.9 * std::pow(err, -0.2), 0.2, 5.0);
            h *= fac;
        } else {
            ++st.n_rejected;
            h *= std::clamp(0.9 * std::pow(err, -0.2), 0.2, 0.9);
        }
    }
    return st;
}

}  // namespace qtraj
