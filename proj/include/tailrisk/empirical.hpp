#pragma once

// Sample superquantile (mean of the worst 1 - alpha fraction of a sample).

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <vector>

#include "tailrisk/errors.hpp"

namespace tailrisk {

/// Superquantile of a sample already sorted ascending. Atoms at the cut are
/// split: with k = ceil(n alpha) the k-th order statistic carries weight
/// k/n - alpha.
inline double empirical_superquantile_sorted(std::span<const double> sorted, double alpha) {
    const std::size_t n = sorted.size();
    if (n == 0) throw validation_error("empirical_superquantile: sample is empty");
    if (!(alpha >= 0.0 && alpha < 1.0)) throw domain_error("empirical_superquantile: level must lie in [0,1)");
    const double na = static_cast<double>(n) * alpha;
    double kr = std::ceil(na);
    // n*alpha that is an integer up to rounding (e.g. 0.95 * 100).
    if (std::fabs(na - std::round(na)) <= 1e-9 * static_cast<double>(n)) kr = std::round(na);
    const auto k = static_cast<std::size_t>(kr);
    double tail = 0.0;
    for (std::size_t i = k; i < n; ++i) tail += sorted[i];
    const double dn = static_cast<double>(n);
    const double atom = k > 0 ? (static_cast<double>(k) / dn - alpha) * sorted[k - 1] : 0.0;
    return (atom + tail / dn) / (1.0 - alpha);
}

inline double empirical_superquantile(std::span<const double> sample, double alpha) {
    if (sample.empty()) throw validation_error("empirical_superquantile: sample is empty");
    for (double v : sample)
        if (!std::isfinite(v)) throw validation_error("empirical_superquantile: sample contains a non-finite value");
    if (alpha == 0.0) return std::accumulate(sample.begin(), sample.end(), 0.0) / static_cast<double>(sample.size());
    std::vector<double> sorted(sample.begin(), sample.end());
    std::sort(sorted.begin(), sorted.end());
    return empirical_superquantile_sorted(sorted, alpha);
}

}  // namespace tailrisk
