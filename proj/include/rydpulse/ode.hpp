#pragma once

// Adaptive embedded Runge-Kutta: Dormand-Prince 5(4) with the FSAL property
// and a PI step-size controller. State is a flat complex vector; the error
// norm is the usual RMS of |e_i| / (atol + rtol*max(|y_i|, |y'_i|)).

#include <cmath>
#include <complex>
#include <cstddef>
#include <string>
#include <vector>

#include "rydpulse/common.hpp"

namespace rydpulse {

using cvec = std::vector<std::complex<double>>;

struct OdeOptions {
    double rtol = 1e-12;
    double atol = 1e-12;
    double initial_step = 0.0;  // 0 -> automatic
    long max_steps = 20'000'000;
};

namespace detail {

// Dormand-Prince coefficients
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                 a64 = 49.0 / 176, a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                 b6 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                 e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;

}  // namespace detail

// Integrates y' = f(s, y) from s0 to s1 (s1 > s0) in place.
// f must have signature f(double s, const cvec& y, cvec& dy).
template <class RHS>
inline void integrate_dopri5(RHS&& f, cvec& y, double s0, double s1, const OdeOptions& opt) {
    using namespace detail;
    const std::size_t n = y.size();
    const double span = s1 - s0;
    if (!(span > 0.0)) {
        if (span == 0.0) return;
        throw SimulationError("integrate_dopri5: backwards interval");
    }
    cvec k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), yt(n), y5(n);

    auto wnorm = [&](const cvec& e, const cvec& ya, const cvec& yb) {
        double acc = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double sc = opt.atol + opt.rtol * std::max(std::abs(ya[i]), std::abs(yb[i]));
            const double q = std::abs(e[i]) / sc;
            acc += q * q;
        }
        return std::sqrt(acc / static_cast<double>(n));
    };

    double s = s0;
    f(s, y, k1);
    double h = opt.initial_step;
    if (h <= 0.0) {
        double ny = 0.0, nf = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            ny = std::max(ny, std::abs(y[i]));
            nf = std::max(nf, std::abs(k1[i]));
        }
        h = 0.01 * std::max(ny, 1e-5) / std::max(nf, 1e-5);
        h = std::min(h, 0.1 * span);
    }

    const double hmin = std::max(span * 1e-15, 1e-300);
    double err_prev = 1.0;
    bool rejected = false;
    for (long step = 0; step < opt.max_steps; ++step) {
        if (s >= s1) return;
        h = std::min(h, s1 - s);
        if (h < hmin)
            throw SimulationError("integrate_dopri5: step size underflow at s=" +
                                  std::to_string(s) + " (h=" + std::to_string(h) + ")");

        for (std::size_t i = 0; i < n; ++i) yt[i] = y[i] + h * (a21 * k1[i]);
        f(s + c2 * h, yt, k2);
        for (std::size_t i = 0; i < n; ++i) yt[i] = y[i] + h * (a31 * k1[i] + a32 * k2[i]);
        f(s + c3 * h, yt, k3);
        for (std::size_t i = 0; i < n; ++i)
            yt[i] = y[i] + h * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
        f(s + c4 * h, yt, k4);
        for (std::size_t i = 0; i < n; ++i)
            yt[i] = y[i] + h * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
        f(s + c5 * h, yt, k5);
        for (std::size_t i = 0; i < n; ++i)
            yt[i] = y[i] + h * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] +
                                a65 * k5[i]);
        f(s + h, yt, k6);
        for (std::size_t i = 0; i < n; ++i)
            y5[i] = y[i] + h * (b1 * k1[i] + b3 * k3[i] + b4 * k4[i] + b5 * k5[i] + b6 * k6[i]);
        f(s + h, y5, k7);

        // embedded 4th-order error estimate
        for (std::size_t i = 0; i < n; ++i)
            yt[i] = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] +
                         e7 * k7[i]);
        const double err = wnorm(yt, y, y5);

        if (err <= 1.0) {
            s += h;
            y.swap(y5);
            k1.swap(k7);  // FSAL
            double fac = 0.9 * std::pow(std::max(err, 1e-16), -0.2) *
                         std::pow(std::max(err_prev, 1e-16), 0.04);
            fac = std::min(fac, rejected ? 1.0 : 5.0);
            fac = std::max(fac, 0.2);
            h *= fac;
            err_prev = err;
            rejected = false;
        } else {
            h *= std::max(0.2, 0.9 * std::pow(err, -0.2));
            rejected = true;
        }
    }
    throw SimulationError("integrate_dopri5: exceeded max_steps=" +
                          std::to_string(opt.max_steps));
}

}  // namespace rydpulse
