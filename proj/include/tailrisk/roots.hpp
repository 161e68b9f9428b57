#pragma once

// One-dimensional root finding and minimization helpers shared by the
// tail-metric engines, the portfolio solver and the estimators.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <string>

#include "tailrisk/errors.hpp"

namespace tailrisk::roots {

struct Bracket {
    double lo;
    double hi;
};

/// Plain bisection on a sign change; stops when the bracket width falls
/// below `width_tol` (absolute) or after `max_iter` halvings.
template <class F>
Bracket bisect(F&& f, double lo, double hi, double width_tol, int max_iter = 400) {
    double flo = f(lo);
    for (int i = 0; i < max_iter && hi - lo > width_tol; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        const double fm = f(mid);
        if (fm == 0.0) return {mid, mid};
        if ((fm < 0.0) == (flo < 0.0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    return {lo, hi};
}

/// Brent's method for a bracketed root of a continuous function.
template <class F>
double brent(F&& f, double a, double b, double tol = 1e-14, int max_iter = 300) {
    double fa = f(a);
    double fb = f(b);
    if (fa == 0.0) return a;
    if (fb == 0.0) return b;
    if ((fa > 0.0) == (fb > 0.0)) throw numeric_error("brent: root is not bracketed");
    double c = a, fc = fa, d = b - a, e = d;
    constexpr double eps = std::numeric_limits<double>::epsilon();
    for (int it = 0; it < max_iter; ++it) {
        if ((fb > 0.0) == (fc > 0.0)) {
            c = a;
            fc = fa;
            d = e = b - a;
        }
        if (std::fabs(fc) < std::fabs(fb)) {
            a = b; b = c; c = a;
            fa = fb; fb = fc; fc = fa;
        }
        const double tol1 = 2.0 * eps * std::fabs(b) + 0.5 * tol;
        const double xm = 0.5 * (c - b);
        if (std::fabs(xm) <= tol1 || fb == 0.0) return b;
        if (std::fabs(e) >= tol1 && std::fabs(fa) > std::fabs(fb)) {
            double p, q, r;
            const double s = fb / fa;
            if (a == c) {
                p = 2.0 * xm * s;
                q = 1.0 - s;
            } else {
                q = fa / fc;
                r = fb / fc;
                p = s * (2.0 * xm * q * (q - r) - (b - a) * (r - 1.0));
                q = (q - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if (p > 0.0) q = -q;
            p = std::fabs(p);
            const double min1 = 3.0 * xm * q - std::fabs(tol1 * q);
            const double min2 = std::fabs(e * q);
            if (2.0 * p < std::min(min1, min2)) {
                e = d;
                d = p / q;
            } else {
                d = xm;
                e = d;
            }
        } else {
            d = xm;
            e = d;
        }
        a = b;
        fa = fb;
        b += std::fabs(d) > tol1 ? d : std::copysign(tol1, xm);
        fb = f(b);
    }
    throw numeric_error("brent: iteration limit reached");
}

struct Minimum {
    double x;
    double fx;
    int iterations;
};

/// Golden-section search for the minimum of a unimodal function on [lo, hi].
template <class F>
Minimum golden_section(F&& f, double lo, double hi, double x_tol, int max_iter = 500) {
    const double inv_phi = std::numbers::phi - 1.0;
    double x1 = hi - inv_phi * (hi - lo);
    double x2 = lo + inv_phi * (hi - lo);
    double f1 = f(x1);
    double f2 = f(x2);
    int it = 0;
    for (; it < max_iter && (hi - lo) > x_tol; ++it) {
        if (f1 <= f2) {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2);
        }
    }
    return f1 <= f2 ? Minimum{x1, f1, it} : Minimum{x2, f2, it};
}

}  // namespace tailrisk::roots
