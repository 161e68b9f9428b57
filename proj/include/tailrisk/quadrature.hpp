#pragma once

// Globally adaptive Gauss-Kronrod (10/21) quadrature on finite and
// semi-infinite intervals.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <queue>
#include <vector>

namespace tailrisk::quad {

struct QuadResult {
    double value = 0.0;
    double error = 0.0;
    int evaluations = 0;
    int subdivisions = 0;
    bool converged = false;
};

struct QuadOptions {
    double abs_tol = 1e-10;
    double rel_tol = 1e-12;
    int max_subdivisions = 2000;
};

namespace detail {

inline constexpr std::array<double, 5> kGaussWeights = {
    0.066671344308688137593568809893332, 0.149451349150580593145776339657697,
    0.219086362515982043995534934228163, 0.269266719309996355091226921569469,
    0.295524224714752870173892994651338};

inline constexpr std::array<double, 11> kKronrodNodes = {
    0.995657163025808080735527280689003, 0.973906528517171720077964012084452,
    0.930157491355708226001207180059508, 0.865063366688984510732096688423493,
    0.780817726586416897063717578345042, 0.679409568299024406234327365114874,
    0.562757134668604683339000099272694, 0.433395394129247190799265943165784,
    0.294392862701460198131126603103866, 0.148874338981631210884826001129720,
    0.0};

inline constexpr std::array<double, 11> kKronrodWeights = {
    0.011694638867371874278064396062192, 0.032558162307964727478818972459390,
    0.054755896574351996031381300244580, 0.075039674810919952767043140916190,
    0.093125454583697605535065465083366, 0.109387158802297641899210590325805,
    0.123491976262065851077958109831074, 0.134709217311473325928054001771707,
    0.142775938577060080797094273138717, 0.147739104901338491374841515972068,
    0.149445554002916905664936468389821};

struct Segment {
    double a, b, value, error;
    bool operator<(const Segment& other) const { return error < other.error; }
};

template <class F>
Segment gauss_kronrod21(F& f, double a, double b) {
    const double center = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    const double fc = f(center);
    double kronrod = fc * kKronrodWeights[10];
    double gauss = 0.0;
    for (int j = 0; j < 10; ++j) {
        const double dx = half * kKronrodNodes[j];
        const double sum = f(center - dx) + f(center + dx);
        kronrod += kKronrodWeights[j] * sum;
        if (j % 2 == 1) gauss += kGaussWeights[j / 2] * sum;
    }
    kronrod *= half;
    gauss *= half;
    double err = std::fabs(kronrod - gauss);
    // QUADPACK-style error scaling.
    err = std::min(err, 200.0 * err * std::sqrt(200.0 * err / std::max(std::fabs(kronrod), 1e-300)));
    if (!std::isfinite(err)) err = std::fabs(kronrod - gauss);
    return {a, b, kronrod, err};
}

}  // namespace detail

/// Integrate f over [a, b].
template <class F>
QuadResult integrate(F&& f, double a, double b, const QuadOptions& opt = {}) {
    QuadResult res;
    if (a == b) {
        res.converged = true;
        return res;
    }
    std::priority_queue<detail::Segment> heap;
    auto first = detail::gauss_kronrod21(f, a, b);
    heap.push(first);
    double total = first.value;
    double total_err = first.error;
    res.evaluations = 21;
    while (true) {
        const double tol = std::max(opt.abs_tol, opt.rel_tol * std::fabs(total));
        if (total_err <= tol) {
            res.converged = std::isfinite(total);
            break;
        }
        if (res.subdivisions >= opt.max_subdivisions) break;
        auto worst = heap.top();
        heap.pop();
        const double mid = 0.5 * (worst.a + worst.b);
        if (!(mid > worst.a && mid < worst.b)) {
            // Interval can no longer be split in floating point.
            heap.push(worst);
            break;
        }
        auto left = detail::gauss_kronrod21(f, worst.a, mid);
        auto right = detail::gauss_kronrod21(f, mid, worst.b);
        res.evaluations += 42;
        ++res.subdivisions;
        total += left.value + right.value - worst.value;
        total_err += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
    }
    // Re-sum to shed accumulated rounding from the incremental updates.
    double value = 0.0;
    double err = 0.0;
    while (!heap.empty()) {
        value += heap.top().value;
        err += heap.top().error;
        heap.pop();
    }
    res.value = value;
    res.error = err;
    if (!res.converged) res.converged = err <= std::max(opt.abs_tol, opt.rel_tol * std::fabs(value));
    return res;
}

/// Integrate f over [a, inf) through the map x = a + scale * t / (1 - t).
template <class F>
QuadResult integrate_to_infinity(F&& f, double a, double scale = 1.0, const QuadOptions& opt = {}) {
    auto mapped = [&](double t) {
        const double om = 1.0 - t;
        const double x = a + scale * t / om;
        if (!std::isfinite(x)) return 0.0;
        const double v = f(x) * scale / (om * om);
        return std::isfinite(v) ? v : 0.0;
    };
    return integrate(mapped, 0.0, 1.0, opt);
}

}  // namespace tailrisk::quad
