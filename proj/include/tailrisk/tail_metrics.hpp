#pragma once

// Superquantile (CVaR) and buffered probability of exceedance (bPOE).
//
// Losses are the random variable of interest: the superquantile at level
// alpha is the mean of the worst (1 - alpha) fraction of outcomes, and bPOE
// at threshold x is the tail mass whose average equals x.
//
// Internally the superquantile is evaluated as a function of the tail mass
// u = 1 - alpha so that bPOE values far below machine epsilon stay exact.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <variant>

#include "tailrisk/distributions.hpp"
#include "tailrisk/errors.hpp"
#include "tailrisk/roots.hpp"
#include "tailrisk/specfun.hpp"

namespace tailrisk {

enum class BpoeRegime {
    Interior,           // threshold strictly between the mean and the essential supremum
    AtOrBelowMean,      // x <= E[X]: bPOE is exactly 1
    AtOrAboveSupremum,  // x >= sup X: bPOE is exactly 0
    InfiniteMean,       // E[X] = +inf: bPOE is 1 for every finite x
};

/// A tail metric together with the level/quantile it was attained at.
/// For bPOE: value = bPOE, alpha_star = 1 - bPOE, quantile_star = q_{alpha_star}.
/// For the superquantile: value = q-bar_alpha, alpha_star = alpha, quantile_star = q_alpha.
struct TailResult {
    double value = 0.0;
    double alpha_star = 0.0;
    double quantile_star = 0.0;
    BpoeRegime regime = BpoeRegime::Interior;
    int iterations = 0;
};

namespace detail {

inline constexpr double kEulerGamma = std::numbers::egamma;

// Superquantile at level 1 - u for u in (0, 1); u == 1 is handled by the caller.
inline double sq_tail(const Exponential& p, double u) { return (1.0 - std::log(u)) / p.rate; }

inline double sq_tail(const Pareto& p, double u) {
    if (p.shape <= 1.0) return kInfinity;
    return p.scale * p.shape * std::pow(u, -1.0 / p.shape) / (p.shape - 1.0);
}

inline double sq_tail(const GPD& p, double u) {
    const double lu = std::log(u);
    if (is_zero_shape(p.shape)) return p.location + p.scale * (1.0 - lu);
    if (p.shape >= 1.0) return kInfinity;
    const double w = std::exp(-p.shape * lu);
    return p.location + p.scale * (w / (1.0 - p.shape) + std::expm1(-p.shape * lu) / p.shape);
}

inline double sq_tail(const Laplace& p, double u) {
    if (u <= 0.5) return p.location + p.scale * (1.0 - std::log(2.0 * u));
    const double a = 1.0 - u;
    return p.location + p.scale * (a / u) * (1.0 - std::log(2.0 * a));
}

// Inverse Mills ratio at the alpha-quantile.
inline double sq_tail(const Normal& p, double u) {
    const double z = -specfun::std_normal_quantile(u);
    return p.mean + p.stdev * specfun::std_normal_pdf(z) / u;
}

// e^{mu + s^2/2} [1 + erf(s/sqrt2 - erfinv(2 alpha - 1))] / (2(1 - alpha)),
// written with erfc so the bracket keeps its precision for alpha near 1.
inline double sq_tail(const LogNormal& p, double u) {
    const double z = -specfun::std_normal_quantile(u);
    const double s = p.log_scale;
    const double bracket = std::erfc((z - s) / std::numbers::sqrt2);
    return 0.5 * std::exp(p.log_location + 0.5 * s * s) * bracket / u;
}

// H is symmetric, so H(alpha) = H(u).
inline double sq_tail(const Logistic& p, double u) {
    return p.location + p.scale * specfun::binary_entropy(u) / u;
}

inline double sq_tail(const StudentT& p, double u) {
    if (p.dof <= 1.0) return kInfinity;
    const double t = std_t_quantile_upper(p.dof, u);
    return p.location + p.scale * (p.dof + t * t) / ((p.dof - 1.0) * u) * std_t_pdf(p.dof, t);
}

inline double sq_tail(const Weibull& p, double u) {
    return p.scale / u * specfun::upper_inc_gamma(1.0 + 1.0 / p.shape, -std::log(u));
}

// a/(1-alpha) * (pi/b csc(pi/b) - B_alpha(1 + 1/b, 1 - 1/b)). Above the median
// the bracket is evaluated as B(A1, A2) I_u(A2, A1) to avoid cancellation.
inline double sq_tail(const LogLogistic& p, double u) {
    if (p.shape <= 1.0) return kInfinity;
    const double a1 = 1.0 + 1.0 / p.shape;
    const double a2 = 1.0 - 1.0 / p.shape;
    const double alpha = 1.0 - u;
    if (alpha <= 0.5) return p.scale / u * (pi_csc(p.shape) - specfun::inc_beta(alpha, a1, a2));
    const double tail = specfun::detail::reg_inc_beta_xy(u, alpha, a2, a1) * specfun::beta_fn(a1, a2);
    return p.scale / u * tail;
}

// Sum_{k>=1} (-b)^k / (k k!), the entire part of the exponential integral.
inline double ein_series(double b) {
    double term = 1.0;
    double sum = 0.0;
    for (int k = 1; k < 500; ++k) {
        term *= -b / k;
        const double add = term / k;
        sum += add;
        if (std::fabs(add) <= std::fabs(sum) * 1e-17) break;
    }
    return sum;
}

inline double sq_tail(const GEV& p, double u) {
    const double b = -std::log1p(-u);  // ln(1/alpha)
    if (is_zero_shape(p.shape)) {
        const double alpha = 1.0 - u;
        if (b > 1.0) {
            // gamma + alpha ln(-ln alpha) - li(alpha)
            const double bracket = kEulerGamma + alpha * std::log(b) - specfun::log_integral(alpha);
            return p.location + p.scale * bracket / u;
        }
        // Same expression after expanding li(alpha) = gamma + ln b + ein_series(b);
        // the Euler constant cancels exactly.
        return p.location - p.scale * (std::log(b) + ein_series(b) / u);
    }
    if (p.shape >= 1.0) return kInfinity;
    const double lower = specfun::lower_inc_gamma(1.0 - p.shape, b);
    return p.location + p.scale / (p.shape * u) * (lower - u);
}

inline bool infinite_mean(const DistributionSpec& d) { return std::isinf(mean(d)); }

}  // namespace detail

/// Superquantile at level 1 - u, for tail mass u in (0, 1].
inline double superquantile_tail(const DistributionSpec& d, double u) {
    if (!(u > 0.0 && u <= 1.0)) throw domain_error("superquantile_tail: tail mass must lie in (0,1]");
    if (detail::infinite_mean(d)) return kInfinity;
    if (u == 1.0) return mean(d);
    return std::visit([u](const auto& p) { return detail::sq_tail(p, u); }, d.params());
}

/// Superquantile (CVaR) at level alpha in [0, 1). Returns +inf when the mean is infinite.
inline double superquantile(const DistributionSpec& d, double alpha) {
    if (!(alpha >= 0.0 && alpha < 1.0)) throw domain_error("superquantile: level must lie in [0,1)");
    if (alpha == 0.0) return mean(d);
    return superquantile_tail(d, 1.0 - alpha);
}

inline TailResult superquantile_result(const DistributionSpec& d, double alpha) {
    TailResult r;
    r.value = superquantile(d, alpha);
    r.alpha_star = alpha;
    r.quantile_star = alpha > 0.0 ? quantile(d, alpha) : support(d).lower;
    if (std::isinf(r.value)) r.regime = BpoeRegime::InfiniteMean;
    return r;
}

namespace detail {

inline std::optional<TailResult> bpoe_boundary(const DistributionSpec& d, double x) {
    if (!std::isfinite(x)) throw domain_error("bpoe: threshold must be finite");
    const auto sb = support(d);
    const double m = mean(d);
    if (std::isinf(m)) return TailResult{1.0, 0.0, sb.lower, BpoeRegime::InfiniteMean, 0};
    if (x <= m) return TailResult{1.0, 0.0, sb.lower, BpoeRegime::AtOrBelowMean, 0};
    if (x >= sb.upper) return TailResult{0.0, 1.0, sb.upper, BpoeRegime::AtOrAboveSupremum, 0};
    return std::nullopt;
}

inline TailResult with_companions(const DistributionSpec& d, double u, int iterations) {
    TailResult r;
    r.value = u;
    r.alpha_star = 1.0 - u;
    r.quantile_star = (u > 0.0 && u < 1.0) ? quantile_upper(d, u) : (u >= 1.0 ? support(d).lower : support(d).upper);
    r.iterations = iterations;
    return r;
}

}  // namespace detail

inline bool has_closed_form_bpoe(Family f) {
    return f == Family::Exponential || f == Family::Pareto || f == Family::GPD || f == Family::Laplace;
}

/// Closed-form bPOE for the Exponential, Pareto, GPD and Laplace families.
inline double bpoe_closed(const DistributionSpec& d, double x) {
    if (!has_closed_form_bpoe(d.family()))
        throw domain_error("bpoe_closed: no closed form for family '" + std::string(family_info(d.family()).name) + "'");
    if (auto b = detail::bpoe_boundary(d, x)) return b->value;

    if (const auto* p = std::get_if<Exponential>(&d.params())) return std::exp(1.0 - p->rate * x);
    if (const auto* p = std::get_if<Pareto>(&d.params()))
        return std::pow(p->scale * p->shape / (x * (p->shape - 1.0)), p->shape);
    if (const auto* p = std::get_if<GPD>(&d.params())) {
        const double z = (x - p->location) / p->scale;
        if (is_zero_shape(p->shape)) return std::exp(1.0 - z);
        return std::exp(-(std::log1p(p->shape * z) + std::log1p(-p->shape)) / p->shape);
    }
    const auto& p = d.as<Laplace>();
    const double z = (x - p.location) / p.scale;
    if (z >= 1.0) return 0.5 * std::exp(1.0 - z);
    // Lower real branch: it is the one that yields alpha in (0, 1/2) and gives
    // W = -2 (alpha = 1/2) at z = 1.
    const double w = specfun::lambert_w(-2.0 * z * std::exp(-z - 1.0), specfun::WBranch::Lower);
    return 1.0 + z / w;
}

/// bPOE by one-dimensional root finding on the (monotone) superquantile.
/// Bisection in log tail-mass brackets the root to relative width 1e-6; Newton
/// steps with dq-bar/du = -(q-bar - q)/u polish it.
inline TailResult bpoe_by_root(const DistributionSpec& d, double x) {
    if (auto b = detail::bpoe_boundary(d, x)) return *b;

    auto excess = [&](double u) { return superquantile_tail(d, u) - x; };

    double u_hi = 1.0;  // excess(u_hi) < 0 (mean < x)
    double u_lo = 0.5;
    int iterations = 0;
    while (excess(u_lo) < 0.0) {
        u_hi = u_lo;
        u_lo *= 1e-3;
        ++iterations;
        if (u_lo < 1e-300) {
            // Threshold within rounding of the essential supremum.
            return detail::with_companions(d, 0.0, iterations);
        }
    }

    // Bisection on log u.
    while (u_hi - u_lo > 1e-6 * u_hi) {
        const double mid = std::sqrt(u_lo * u_hi);
        if (mid <= u_lo || mid >= u_hi) break;
        if (excess(mid) >= 0.0) u_lo = mid; else u_hi = mid;
        ++iterations;
    }

    double u = std::sqrt(u_lo * u_hi);
    const double tol = 1e-13 * std::max(1.0, std::fabs(x));
    for (int it = 0; it < 100; ++it, ++iterations) {
        const double sq = superquantile_tail(d, u);
        const double r = sq - x;
        if (r >= 0.0) u_lo = u; else u_hi = u;
        if (std::fabs(r) <= tol) break;
        const double q = u < 1.0 ? quantile_upper(d, u) : support(d).lower;
        const double slope = -(sq - q) / u;  // dq-bar/du
        double next = (slope < 0.0 && std::isfinite(slope)) ? u - r / slope : 0.5 * (u_lo + u_hi);
        if (!(next > u_lo && next < u_hi)) next = 0.5 * (u_lo + u_hi);
        if (std::fabs(next - u) <= 1e-16 * u) {
            u = next;
            break;
        }
        u = next;
    }
    const double final_residual = superquantile_tail(d, u) - x;
    if (!(std::fabs(final_residual) <= 1e-10 * std::max(1.0, std::fabs(x))))
        throw numeric_error("bpoe_by_root: residual " + std::to_string(final_residual) + " after " +
                            std::to_string(iterations) + " iterations");
    return detail::with_companions(d, u, iterations);
}

namespace detail {

// Standardized partial expectation E[Z - g]^+ and survival for the two
// families handled by the minimization engine.
struct StdTail {
    double partial;
    double survival;
};

inline double softplus(double y) { return y > 0 ? y + std::log1p(std::exp(-y)) : std::log1p(std::exp(y)); }

inline StdTail std_tail(Family f, double g) {
    if (f == Family::Normal) {
        const double q = specfun::std_normal_sf(g);
        return {specfun::std_normal_pdf(g) - g * q, q};
    }
    return {softplus(-g), 1.0 / (1.0 + std::exp(g))};
}

}  // namespace detail

/// bPOE as the minimum over gamma < x of E[X - gamma]^+ / (x - gamma), for the
/// Normal and Logistic families. Golden-section search brackets the convex
/// minimum; the stationarity condition is then solved with Brent's method.
inline TailResult bpoe_by_minimization(const DistributionSpec& d, double x) {
    double loc, scale;
    if (const auto* p = std::get_if<Normal>(&d.params())) {
        loc = p->mean;
        scale = p->stdev;
    } else if (const auto* p = std::get_if<Logistic>(&d.params())) {
        loc = p->location;
        scale = p->scale;
    } else {
        throw domain_error("bpoe_by_minimization: only the normal and logistic families are supported");
    }
    if (auto b = detail::bpoe_boundary(d, x)) return *b;

    const Family fam = d.family();
    const double z = (x - loc) / scale;
    auto objective = [&](double g) { return detail::std_tail(fam, g).partial / (z - g); };
    // Numerator of the derivative: E[Z-g]^+ - (z - g) P(Z > g); increasing in g.
    auto stationarity = [&](double g) {
        const auto t = detail::std_tail(fam, g);
        return t.partial - (z - g) * t.survival;
    };

    const double g_lo = (quantile(d, 1e-9) - loc) / scale;
    auto coarse = roots::golden_section(objective, g_lo, z, 1e-6 * std::max(1.0, std::fabs(z)));

    double a = coarse.x;
    double b = coarse.x;
    double step = 1e-6 * std::max(1.0, std::fabs(z));
    int expansions = 0;
    while (stationarity(a) > 0.0) {
        a = std::max(coarse.x - step, g_lo - 1.0);
        step *= 2.0;
        if (++expansions > 200) throw numeric_error("bpoe_by_minimization: cannot bracket stationary point (low side)");
    }
    step = 1e-6 * std::max(1.0, std::fabs(z));
    while (stationarity(b) < 0.0) {
        b = std::min(coarse.x + step, z - 0.5 * (z - coarse.x));
        step *= 2.0;
        if (++expansions > 400) throw numeric_error("bpoe_by_minimization: cannot bracket stationary point (high side)");
    }
    const double g_star = (a == b) ? a : roots::brent(stationarity, a, b, 1e-15);

    TailResult r;
    r.value = objective(g_star);
    r.alpha_star = 1.0 - r.value;
    r.quantile_star = loc + scale * g_star;
    r.iterations = coarse.iterations + expansions;
    return r;
}

/// bPOE by the best available engine: closed form where it exists, root
/// finding on the closed-form superquantile otherwise.
inline TailResult bpoe(const DistributionSpec& d, double x) {
    if (!has_closed_form_bpoe(d.family())) return bpoe_by_root(d, x);
    if (auto b = detail::bpoe_boundary(d, x)) return *b;
    return detail::with_companions(d, bpoe_closed(d, x), 0);
}

/// Expected excess E[X - gamma]^+.
inline double partial_expectation(const DistributionSpec& d, double gamma) {
    if (detail::infinite_mean(d)) return kInfinity;
    if (const auto* p = std::get_if<Normal>(&d.params()))
        return p->stdev * detail::std_tail(Family::Normal, (gamma - p->mean) / p->stdev).partial;
    if (const auto* p = std::get_if<Logistic>(&d.params()))
        return p->scale * detail::softplus(-(gamma - p->location) / p->scale);
    const double u = sf(d, gamma);
    if (u >= 1.0) return mean(d) - gamma;
    if (u <= 0.0) return 0.0;
    // (E[X | X > gamma] - gamma)(1 - F(gamma))
    return std::max(0.0, u * (superquantile_tail(d, u) - gamma));
}

struct LevelQuery {
    double alpha;
};
struct ThresholdQuery {
    double x;
};
/// A level (superquantile) or a threshold (bPOE).
using TailQuery = std::variant<LevelQuery, ThresholdQuery>;

inline TailResult evaluate(const DistributionSpec& d, const TailQuery& q) {
    if (const auto* l = std::get_if<LevelQuery>(&q)) return superquantile_result(d, l->alpha);
    return bpoe(d, std::get<ThresholdQuery>(q).x);
}

/// Superdistribution function: 1 - bPOE(x).
inline double superdistribution_cdf(const DistributionSpec& d, double x) {
    return std::clamp(1.0 - bpoe(d, x).value, 0.0, 1.0);
}

/// Mean of the lowest alpha fraction of outcomes, alpha in (0, 1]; satisfies
/// alpha * left + (1 - alpha) * superquantile = mean.
inline double left_superquantile(const DistributionSpec& d, double alpha) {
    if (!(alpha > 0.0 && alpha <= 1.0)) throw domain_error("left_superquantile: level must lie in (0,1]");
    const double m = mean(d);
    if (std::isinf(m)) throw domain_error("left_superquantile: mean is infinite");
    if (alpha == 1.0) return m;
    return (m - (1.0 - alpha) * superquantile(d, alpha)) / alpha;
}

}  // namespace tailrisk
