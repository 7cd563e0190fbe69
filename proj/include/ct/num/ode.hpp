#pragma once
#include <array>
#include <cmath>
#include <complex>
#include <span>

#include "ct/errors.hpp"

namespace ct::num {

using cplx = std::complex<double>;
using CVec2 = std::array<cplx, 2>;

inline CVec2 operator+(const CVec2& a, const CVec2& b) { return {a[0] + b[0], a[1] + b[1]}; }
inline CVec2 operator*(double s, const CVec2& a) { return {s * a[0], s * a[1]}; }

struct OdeOptions {
    double rtol = 1e-10;
    double atol = 1e-12;
    // per-component multiplier on atol, for states whose natural size is far
    // from 1 (e.g. a derivative component scaling with the frequency)
    std::array<double, 2> atol_scale{1.0, 1.0};
    double h_init = 1e-4;
    double h_max = 2.0;
    long max_steps = 100000000;
};

// Dormand-Prince 5(4) with step control; integrates y' = f(r, y) from r to
// r_end in either direction. State is a complex 2-vector.
template <class F>
void ode_integrate(F&& f, double& r, CVec2& y, double r_end, const OdeOptions& opt) {
    static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
    static constexpr double a21 = 1.0 / 5;
    static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
    static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187,
                            a53 = 64448.0 / 6561, a54 = -212.0 / 729;
    static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                            a64 = 49.0 / 176, a65 = -5103.0 / 18656;
    static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                            b5 = -2187.0 / 6784, b6 = 11.0 / 84;
    // difference between 5th and embedded 4th order weights
    static constexpr double d1 = 71.0 / 57600, d3 = -71.0 / 16695, d4 = 71.0 / 1920,
                            d5 = -17253.0 / 339200, d6 = 22.0 / 525, d7 = -1.0 / 40;

    if (r == r_end)
        return;
    const double dir = (r_end > r) ? 1.0 : -1.0;
    double h = dir * std::min(opt.h_init, std::abs(r_end - r));
    CVec2 k1 = f(r, y);
    long steps = 0;
    while (dir * (r_end - r) > 0) {
        if (std::abs(h) > std::abs(r_end - r))
            h = r_end - r;
        if (++steps > opt.max_steps)
            throw StiffnessFailure("ode_integrate: step budget exhausted");
        if (std::abs(h) < 1e-14 * (std::abs(r) + 1.0))
            throw StiffnessFailure("ode_integrate: step size collapsed");

        CVec2 k2 = f(r + c2 * h, y + (h * a21) * k1);
        CVec2 k3 = f(r + c3 * h, y + (h * a31) * k1 + (h * a32) * k2);
        CVec2 k4 = f(r + c4 * h, y + (h * a41) * k1 + (h * a42) * k2 + (h * a43) * k3);
        CVec2 k5 = f(r + c5 * h,
                     y + (h * a51) * k1 + (h * a52) * k2 + (h * a53) * k3 + (h * a54) * k4);
        CVec2 k6 = f(r + h, y + (h * a61) * k1 + (h * a62) * k2 + (h * a63) * k3 +
                                (h * a64) * k4 + (h * a65) * k5);
        CVec2 ynew = y + (h * b1) * k1 + (h * b3) * k3 + (h * b4) * k4 + (h * b5) * k5 +
                     (h * b6) * k6;
        CVec2 k7 = f(r + h, ynew);
        CVec2 errv = (h * d1) * k1 + (h * d3) * k3 + (h * d4) * k4 + (h * d5) * k5 +
                     (h * d6) * k6 + (h * d7) * k7;
        double err = 0;
        for (int i = 0; i < 2; ++i) {
            double scale = opt.atol * opt.atol_scale[i] +
                           opt.rtol * std::max(std::abs(y[i]), std::abs(ynew[i]));
            err = std::max(err, std::abs(errv[i]) / scale);
        }
        if (err <= 1.0) {
            r += h;
            y = ynew;
            k1 = k7; // first-same-as-last
        }
        double fac = 0.9 * std::pow(std::max(err, 1e-10), -0.2);
        fac = std::min(4.0, std::max(0.25, fac));
        h *= fac;
        if (std::abs(h) > opt.h_max)
            h = dir * opt.h_max;
    }
}

// Integrate through a monotone list of stop radii, invoking cb(k, r, y) at each.
template <class F, class CB>
void ode_march(F&& f, double r_start, CVec2 y, std::span<const double> stops,
               const OdeOptions& opt, CB&& cb) {
    double r = r_start;
    for (std::size_t k = 0; k < stops.size(); ++k) {
        ode_integrate(f, r, y, stops[k], opt);
        cb(k, r, y);
    }
}

} // namespace ct::num
