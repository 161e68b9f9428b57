#pragma once

// Independent numerical reference values: the superquantile as the tail
// average of the quantile function by adaptive quadrature, bPOE by root
// finding on that quadrature, and a seeded Monte Carlo estimate.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "tailrisk/distributions.hpp"
#include "tailrisk/empirical.hpp"
#include "tailrisk/errors.hpp"
#include "tailrisk/quadrature.hpp"
#include "tailrisk/roots.hpp"

namespace tailrisk {

struct OracleConfig {
    double abs_tol = 1e-10;
    double rel_tol = 1e-12;
    int max_subdivisions = 2000;
    std::size_t mc_samples = 1'000'000;
    std::uint64_t seed = 20240611;
};

struct OracleValue {
    double value = 0.0;
    double error_estimate = 0.0;
};

struct McEstimate {
    double estimate = 0.0;
    double standard_error = 0.0;
    std::size_t samples = 0;
};

namespace detail {

inline void validate(const OracleConfig& cfg) {
    if (!(cfg.abs_tol > 0.0) || !(cfg.rel_tol >= 0.0)) throw validation_error("oracle: tolerances must be positive");
    if (cfg.max_subdivisions < 1) throw validation_error("oracle: max_subdivisions must be at least 1");
    if (cfg.mc_samples < 1000) throw validation_error("oracle: at least 1000 Monte Carlo samples are required");
}

inline quad::QuadResult checked(const quad::QuadResult& r, const char* what) {
    if (!r.converged || !std::isfinite(r.value))
        throw numeric_error(std::string("oracle: quadrature did not converge on the ") + what + " part (error " +
                            std::to_string(r.error) + ")");
    return r;
}

}  // namespace detail

/// Integral of the quantile function over [alpha, 1), divided by 1 - alpha.
/// Both halves are mapped to semi-infinite domains in t = -ln(p) or
/// t = -ln(1 - p), where the tails of every supported family decay
/// exponentially.
inline OracleValue oracle_superquantile(const DistributionSpec& d, double alpha, const OracleConfig& cfg = {}) {
    detail::validate(cfg);
    if (!(alpha >= 0.0 && alpha < 1.0)) throw domain_error("oracle_superquantile: level must lie in [0,1)");
    if (std::isinf(mean(d))) return {kInfinity, 0.0};

    const quad::QuadOptions opt{cfg.abs_tol * (1.0 - alpha) * 0.25, cfg.rel_tol, cfg.max_subdivisions};
    double total = 0.0;
    double err = 0.0;

    if (alpha < 0.5) {
        auto lower = [&](double t) {
            const double p = std::exp(-t);
            return p > 0.0 ? quantile(d, p) * p : 0.0;
        };
        const double t0 = std::numbers::ln2;
        const auto r = alpha == 0.0 ? quad::integrate_to_infinity(lower, t0, 1.0, opt)
                                    : quad::integrate(lower, t0, -std::log(alpha), opt);
        detail::checked(r, "lower");
        total += r.value;
        err += r.error;
    }
    auto upper = [&](double t) {
        const double u = std::exp(-t);
        return u > 0.0 ? quantile_upper(d, u) * u : 0.0;
    };
    const double start = std::max(alpha, 0.5);
    const auto r = quad::integrate_to_infinity(upper, -std::log1p(-start), 1.0, opt);
    detail::checked(r, "upper");
    total += r.value;
    err += r.error;
    return {total / (1.0 - alpha), err / (1.0 - alpha)};
}

/// bPOE by root finding on the quadrature superquantile over the level.
inline OracleValue oracle_bpoe(const DistributionSpec& d, double x, const OracleConfig& cfg = {}) {
    detail::validate(cfg);
    if (!std::isfinite(x)) throw domain_error("oracle_bpoe: threshold must be finite");
    const double m = mean(d);
    if (std::isinf(m) || x <= m) return {1.0, 0.0};
    if (x >= support(d).upper) return {0.0, 0.0};

    auto h = [&](double a) { return oracle_superquantile(d, a, cfg).value - x; };
    double hi = 0.9;
    int k = 1;
    while (h(hi) < 0.0) {
        ++k;
        if (k > 15) throw numeric_error("oracle_bpoe: threshold lies beyond the resolvable tail");
        hi = 1.0 - std::pow(10.0, -k);
    }
    const double lo = k == 1 ? 0.0 : 1.0 - std::pow(10.0, -(k - 1));
    const double a = roots::brent(h, lo, hi, 1e-15 * (1.0 - lo));
    const double u = 1.0 - a;
    // Propagate the quadrature error through the slope of the superquantile.
    const double step = 1e-6 * u;
    const auto plus = oracle_superquantile(d, std::min(a + step, 1.0 - 0.5 * u), cfg);
    const auto minus = oracle_superquantile(d, std::max(a - step, 0.0), cfg);
    const double slope = (plus.value - minus.value) / (std::min(a + step, 1.0 - 0.5 * u) - std::max(a - step, 0.0));
    const double err = oracle_superquantile(d, a, cfg).error_estimate / std::max(slope, 1e-300) + 1e-15;
    return {u, err};
}

/// Seeded Monte Carlo superquantile: inverse-transform draws from
/// mt19937_64, then the sample tail average. The standard error is the
/// asymptotic one for the tail-average estimator.
inline McEstimate mc_superquantile(const DistributionSpec& d, double alpha, const OracleConfig& cfg = {}) {
    detail::validate(cfg);
    if (!(alpha >= 0.0 && alpha < 1.0)) throw domain_error("mc_superquantile: level must lie in [0,1)");
    std::mt19937_64 engine(cfg.seed);
    std::vector<double> xs(cfg.mc_samples);
    for (auto& x : xs) x = sample(d, engine);
    std::sort(xs.begin(), xs.end());

    const double n = static_cast<double>(xs.size());
    McEstimate out;
    out.samples = xs.size();
    out.estimate = empirical_superquantile_sorted(xs, alpha);
    const auto k = static_cast<std::size_t>(std::min(std::floor(n * alpha), n - 1.0));
    const double q = xs[k];
    double mean_tail = 0.0;
    for (std::size_t i = k; i < xs.size(); ++i) mean_tail += xs[i];
    const double m = static_cast<double>(xs.size() - k);
    mean_tail /= m;
    double var_tail = 0.0;
    for (std::size_t i = k; i < xs.size(); ++i) var_tail += (xs[i] - mean_tail) * (xs[i] - mean_tail);
    var_tail /= std::max(m - 1.0, 1.0);
    const double spread = mean_tail - q;
    out.standard_error = std::sqrt((var_tail + alpha * spread * spread) / (n * (1.0 - alpha)));
    return out;
}

}  // namespace tailrisk
