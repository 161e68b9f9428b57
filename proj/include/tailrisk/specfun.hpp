#pragma once

// Special-function kernel: error function and inverses, gamma family,
// incomplete beta, Lambert-W, logarithmic integral, binary entropy.
// Every function is pure; arguments outside the documented domain raise
// tailrisk::domain_error.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "tailrisk/errors.hpp"

namespace tailrisk::specfun {

enum class WBranch { Principal, Lower };

namespace detail {

inline constexpr double kEps = std::numeric_limits<double>::epsilon();
inline constexpr double kTiny = 1e-300;
inline constexpr double kInf = std::numeric_limits<double>::infinity();
inline constexpr int kMaxIter = 1000;

[[noreturn]] inline void fail_domain(const std::string& fn, const std::string& what) {
    throw domain_error(fn + ": " + what);
}

// Acklam's rational approximation for the lower half, p in (0, 0.5],
// followed by two Halley steps against erfc.
inline double ndtri_lower_half(double p) {
    static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                   -2.759285104469687e+02, 1.383577518672690e+02,
                                   -3.066479806614716e+01, 2.506628277459239e+00};
    static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                   -1.556989798598866e+02, 6.680131188771972e+01,
                                   -1.328068155288572e+01};
    static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                   -2.400758277161838e+00, -2.549732539343734e+00,
                                   4.374664141464968e+00,  2.938163982698783e+00};
    static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                   2.445134137142996e+00, 3.754408661907416e+00};
    double x;
    if (p < 0.02425) {
        const double q = std::sqrt(-2.0 * std::log(p));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    } else {
        const double q = p - 0.5;
        const double r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    }
    for (int i = 0; i < 2; ++i) {
        const double e = 0.5 * std::erfc(-x / std::numbers::sqrt2) - p;
        const double phi = std::exp(-0.5 * x * x) / (std::sqrt(2.0 * std::numbers::pi));
        if (phi == 0.0) break;
        const double u = e / phi;
        x -= u / (1.0 + 0.5 * x * u);
    }
    return x;
}

// Regularized lower incomplete gamma by series; valid for b < a + 1.
inline double gamma_series(double a, double b) {
    double ap = a;
    double del = 1.0 / a;
    double sum = del;
    for (int n = 0; n < kMaxIter; ++n) {
        ap += 1.0;
        del *= b / ap;
        sum += del;
        if (std::fabs(del) < std::fabs(sum) * kEps) return sum;
    }
    throw numeric_error("incomplete gamma series did not converge");
}

// Continued fraction h with Gamma_U(a, b) = exp(-b) b^a h; valid for b >= a + 1.
inline double gamma_cf(double a, double b) {
    double bb = b + 1.0 - a;
    double c = 1.0 / kTiny;
    double d = 1.0 / bb;
    double h = d;
    for (int i = 1; i < kMaxIter; ++i) {
        const double an = -i * (i - a);
        bb += 2.0;
        d = an * d + bb;
        if (std::fabs(d) < kTiny) d = kTiny;
        c = bb + an / c;
        if (std::fabs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) <= kEps) return h;
    }
    throw numeric_error("incomplete gamma continued fraction did not converge");
}

// Continued fraction for the incomplete beta (modified Lentz).
inline double beta_cf(double a, double b, double x) {
    const double qab = a + b;
    const double qap = a + 1.0;
    const double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::fabs(d) < kTiny) d = kTiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m < kMaxIter; ++m) {
        const int m2 = 2 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) <= kEps) return h;
    }
    throw numeric_error("incomplete beta continued fraction did not converge");
}

inline double log_beta(double a, double b) {
    return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
}

// I_x(a, b) given both x and y = 1 - x, so callers holding an accurate
// complement do not lose it.
inline double reg_inc_beta_xy(double x, double y, double a, double b) {
    if (x <= 0.0) return 0.0;
    if (y <= 0.0) return 1.0;
    const double front = std::exp(a * std::log(x) + b * std::log(y) - log_beta(a, b));
    if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_cf(a, b, x) / a;
    return 1.0 - front * beta_cf(b, a, y) / b;
}

}  // namespace detail

inline double erf(double x) { return std::erf(x); }
inline double erfc(double x) { return std::erfc(x); }

inline double std_normal_pdf(double z) {
    return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
}
inline double std_normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }
inline double std_normal_sf(double z) { return 0.5 * std::erfc(z / std::numbers::sqrt2); }

/// Standard normal quantile. Returns -inf/+inf at p = 0/1.
inline double std_normal_quantile(double p) {
    if (!(p >= 0.0 && p <= 1.0)) detail::fail_domain("std_normal_quantile", "p must lie in [0,1]");
    if (p == 0.0) return -detail::kInf;
    if (p == 1.0) return detail::kInf;
    if (p <= 0.5) return detail::ndtri_lower_half(p);
    return -detail::ndtri_lower_half(1.0 - p);
}

/// Inverse complementary error function on (0, 2).
inline double erfc_inv(double q) {
    if (!(q > 0.0 && q < 2.0)) detail::fail_domain("erfc_inv", "argument must lie in (0,2)");
    double x = -std_normal_quantile(0.5 * q) / std::numbers::sqrt2;
    // Newton polish on erfc itself; erfc'(x) = -2/sqrt(pi) exp(-x^2).
    for (int i = 0; i < 3; ++i) {
        const double deriv = -2.0 / std::sqrt(std::numbers::pi) * std::exp(-x * x);
        if (deriv == 0.0) break;
        const double step = (std::erfc(x) - q) / deriv;
        x -= step;
        if (std::fabs(step) <= 4.0 * detail::kEps * std::fabs(x)) break;
    }
    return x;
}

/// Inverse error function on the open interval (-1, 1).
inline double erf_inv(double p) {
    if (!(p > -1.0 && p < 1.0)) detail::fail_domain("erf_inv", "argument must lie in (-1,1)");
    if (p == 0.0) return 0.0;
    if (std::fabs(p) > 0.5) return p > 0 ? erfc_inv(1.0 - p) : -erfc_inv(1.0 + p);
    double x = std_normal_quantile(0.5 * (1.0 + p)) / std::numbers::sqrt2;
    for (int i = 0; i < 3; ++i) {
        const double step = (std::erf(x) - p) / (2.0 / std::sqrt(std::numbers::pi) * std::exp(-x * x));
        x -= step;
        if (std::fabs(step) <= 4.0 * detail::kEps * std::fabs(x)) break;
    }
    return x;
}

inline double gamma_fn(double a) {
    if (!(a > 0.0)) detail::fail_domain("gamma_fn", "argument must be positive");
    return std::tgamma(a);
}

/// Regularized lower incomplete gamma P(a, b).
inline double reg_lower_gamma(double a, double b) {
    if (!(a > 0.0)) detail::fail_domain("reg_lower_gamma", "a must be positive");
    if (!(b >= 0.0)) detail::fail_domain("reg_lower_gamma", "b must be nonnegative");
    if (b == 0.0) return 0.0;
    if (std::isinf(b)) return 1.0;
    const double lpre = -b + a * std::log(b) - std::lgamma(a);
    if (b < a + 1.0) return std::exp(lpre) * detail::gamma_series(a, b);
    return 1.0 - std::exp(lpre) * detail::gamma_cf(a, b);
}

/// Regularized upper incomplete gamma Q(a, b) = 1 - P(a, b).
inline double reg_upper_gamma(double a, double b) {
    if (!(a > 0.0)) detail::fail_domain("reg_upper_gamma", "a must be positive");
    if (!(b >= 0.0)) detail::fail_domain("reg_upper_gamma", "b must be nonnegative");
    if (b == 0.0) return 1.0;
    if (std::isinf(b)) return 0.0;
    const double lpre = -b + a * std::log(b) - std::lgamma(a);
    if (b < a + 1.0) return 1.0 - std::exp(lpre) * detail::gamma_series(a, b);
    return std::exp(lpre) * detail::gamma_cf(a, b);
}

/// Upper incomplete gamma: integral of p^(a-1) e^(-p) over [b, inf).
inline double upper_inc_gamma(double a, double b) {
    if (!(a > 0.0)) detail::fail_domain("upper_inc_gamma", "a must be positive");
    if (!(b >= 0.0)) detail::fail_domain("upper_inc_gamma", "b must be nonnegative");
    if (b == 0.0) return std::tgamma(a);
    if (std::isinf(b)) return 0.0;
    if (b < a + 1.0) return std::tgamma(a) - std::exp(-b + a * std::log(b)) * detail::gamma_series(a, b);
    return std::exp(-b + a * std::log(b)) * detail::gamma_cf(a, b);
}

/// Lower incomplete gamma: integral of p^(a-1) e^(-p) over [0, b].
inline double lower_inc_gamma(double a, double b) {
    if (!(a > 0.0)) detail::fail_domain("lower_inc_gamma", "a must be positive");
    if (!(b >= 0.0)) detail::fail_domain("lower_inc_gamma", "b must be nonnegative");
    if (b == 0.0) return 0.0;
    if (std::isinf(b)) return std::tgamma(a);
    if (b < a + 1.0) return std::exp(-b + a * std::log(b)) * detail::gamma_series(a, b);
    return std::tgamma(a) - std::exp(-b + a * std::log(b)) * detail::gamma_cf(a, b);
}

inline double beta_fn(double a, double b) {
    if (!(a > 0.0 && b > 0.0)) detail::fail_domain("beta_fn", "arguments must be positive");
    return std::exp(detail::log_beta(a, b));
}

/// Regularized incomplete beta I_t(a, b).
inline double reg_inc_beta(double t, double a, double b) {
    if (!(t >= 0.0 && t <= 1.0)) detail::fail_domain("reg_inc_beta", "t must lie in [0,1]");
    if (!(a > 0.0 && b > 0.0)) detail::fail_domain("reg_inc_beta", "a and b must be positive");
    return detail::reg_inc_beta_xy(t, 1.0 - t, a, b);
}

/// Inverse of t -> I_t(a, b). Halley steps from a rational initial guess,
/// safeguarded by a shrinking bracket.
inline double reg_inc_beta_inv(double p, double a, double b) {
    if (!(p >= 0.0 && p <= 1.0)) detail::fail_domain("reg_inc_beta_inv", "p must lie in [0,1]");
    if (!(a > 0.0 && b > 0.0)) detail::fail_domain("reg_inc_beta_inv", "a and b must be positive");
    if (p == 0.0) return 0.0;
    if (p == 1.0) return 1.0;

    double x;
    if (a >= 1.0 && b >= 1.0) {
        const double pp = p < 0.5 ? p : 1.0 - p;
        const double t = std::sqrt(-2.0 * std::log(pp));
        double z = (2.30753 + t * 0.27061) / (1.0 + t * (0.99229 + t * 0.04481)) - t;
        if (p < 0.5) z = -z;
        const double al = (z * z - 3.0) / 6.0;
        const double h = 2.0 / (1.0 / (2.0 * a - 1.0) + 1.0 / (2.0 * b - 1.0));
        const double w = z * std::sqrt(al + h) / h -
                          (1.0 / (2.0 * b - 1.0) - 1.0 / (2.0 * a - 1.0)) * (al + 5.0 / 6.0 - 2.0 / (3.0 * h));
        x = a / (a + b * std::exp(2.0 * w));
    } else {
        const double lna = std::log(a / (a + b));
        const double lnb = std::log(b / (a + b));
        const double t = std::exp(a * lna) / a;
        const double u = std::exp(b * lnb) / b;
        const double w = t + u;
        x = p < t / w ? std::pow(a * w * p, 1.0 / a) : 1.0 - std::pow(b * w * (1.0 - p), 1.0 / b);
    }
    x = std::clamp(x, detail::kTiny, 1.0 - detail::kEps);

    const double afac = -detail::log_beta(a, b);
    double lo = 0.0;
    double hi = 1.0;
    for (int it = 0; it < 200; ++it) {
        const double err = reg_inc_beta(x, a, b) - p;
        if (err == 0.0) return x;
        if (err < 0.0) lo = x; else hi = x;
        const double dens = std::exp((a - 1.0) * std::log(x) + (b - 1.0) * std::log1p(-x) + afac);
        double next;
        if (dens > 0.0 && std::isfinite(dens)) {
            const double u = err / dens;
            const double corr = 1.0 - 0.5 * std::min(1.0, u * ((a - 1.0) / x - (b - 1.0) / (1.0 - x)));
            next = x - u / corr;
        } else {
            next = 0.5 * (lo + hi);
        }
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        if (std::fabs(next - x) <= 4.0 * detail::kEps * x || hi - lo <= 4.0 * detail::kEps * x) return next;
        x = next;
    }
    throw numeric_error("reg_inc_beta_inv did not converge");
}

/// Unregularized incomplete beta B_y(a1, a2) = integral of p^(a1-1)(1-p)^(a2-1) over [0, y].
inline double inc_beta(double y, double a1, double a2) {
    if (!(y >= 0.0 && y <= 1.0)) detail::fail_domain("inc_beta", "y must lie in [0,1]");
    if (!(a1 > 0.0 && a2 > 0.0)) detail::fail_domain("inc_beta", "a1 and a2 must be positive");
    return detail::reg_inc_beta_xy(y, 1.0 - y, a1, a2) * beta_fn(a1, a2);
}

/// Real branches of the Lambert-W function, w e^w = y.
inline double lambert_w(double y, WBranch branch) {
    constexpr double kBranchPoint = -1.0 / std::numbers::e;
    if (!(y >= kBranchPoint)) {
        // Allow one ulp of slack so that callers passing a computed -1/e land on the branch point.
        if (y >= kBranchPoint * (1.0 + 2.0 * detail::kEps)) y = kBranchPoint;
        else detail::fail_domain("lambert_w", "argument below -1/e");
    }
    if (branch == WBranch::Lower && !(y < 0.0))
        detail::fail_domain("lambert_w", "lower branch requires argument in [-1/e, 0)");
    if (y == kBranchPoint) return -1.0;
    if (branch == WBranch::Principal && y == 0.0) return 0.0;
    if (std::isinf(y)) return y;

    const double p2 = 2.0 * (std::numbers::e * y + 1.0);
    double w;
    if (branch == WBranch::Principal) {
        if (p2 < 0.5) {
            const double p = std::sqrt(std::max(p2, 0.0));
            w = -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p * p * p;
        } else if (y < 3.0) {
            w = std::log1p(y);
            w = w * (1.0 - std::log1p(w) / (2.0 + w));
        } else {
            const double l1 = std::log(y);
            const double l2 = std::log(l1);
            w = l1 - l2 + l2 / l1;
        }
    } else {
        if (p2 < 0.5) {
            const double p = std::sqrt(std::max(p2, 0.0));
            w = -1.0 - p - p * p / 3.0 - 11.0 / 72.0 * p * p * p;
        } else {
            const double l1 = std::log(-y);
            const double l2 = std::log(-l1);
            w = l1 - l2 + l2 / l1;
        }
    }

    for (int it = 0; it < 100; ++it) {
        const double ew = std::exp(w);
        const double f = w * ew - y;
        const double wp1 = w + 1.0;
        if (wp1 == 0.0) return w;
        const double denom = ew * wp1 - (w + 2.0) * f / (2.0 * wp1);
        const double step = f / denom;
        if (!std::isfinite(step)) break;
        w -= step;
        if (std::fabs(step) <= 1e-14 * (1.0 + std::fabs(w))) return w;
    }
    return w;
}

/// Exponential integral E1(t) for t > 0.
inline double expint_e1(double t) {
    if (!(t > 0.0)) detail::fail_domain("expint_e1", "argument must be positive");
    constexpr double kEulerGamma = std::numbers::egamma;
    if (t <= 1.0) {
        double sum = 0.0;
        double term = 1.0;
        for (int k = 1; k < detail::kMaxIter; ++k) {
            term *= -t / k;
            const double add = term / k;
            sum += add;
            if (std::fabs(add) < std::fabs(sum) * detail::kEps) break;
        }
        return -kEulerGamma - std::log(t) - sum;
    }
    double b = t + 1.0;
    double c = 1.0 / detail::kTiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i < detail::kMaxIter; ++i) {
        const double an = -static_cast<double>(i) * i;
        b += 2.0;
        d = 1.0 / (an * d + b);
        c = b + an / c;
        const double del = c * d;
        h *= del;
        if (std::fabs(del - 1.0) <= detail::kEps) return h * std::exp(-t);
    }
    throw numeric_error("expint_e1 continued fraction did not converge");
}

/// Logarithmic integral li(x) = integral of 1/ln(p) over (0, x], for x in (0, 1).
/// Evaluated as -E1(-ln x).
inline double log_integral(double x) {
    if (!(x > 0.0 && x < 1.0)) detail::fail_domain("log_integral", "argument must lie in (0,1)");
    return -expint_e1(-std::log(x));
}

/// Binary entropy in nats, with 0 ln 0 := 0.
inline double binary_entropy(double alpha) {
    if (!(alpha >= 0.0 && alpha <= 1.0)) detail::fail_domain("binary_entropy", "argument must lie in [0,1]");
    if (alpha == 0.0 || alpha == 1.0) return 0.0;
    return -alpha * std::log(alpha) - (1.0 - alpha) * std::log1p(-alpha);
}

}  // namespace tailrisk::specfun
