#pragma once

// Parametric density estimation by matching superquantiles: the exact system
// (MOS) and its weighted least-squares relaxation (LS-MOS), plus Weibull
// method-of-moments and maximum-likelihood baselines.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "tailrisk/distributions.hpp"
#include "tailrisk/empirical.hpp"
#include "tailrisk/errors.hpp"
#include "tailrisk/roots.hpp"
#include "tailrisk/tail_metrics.hpp"

namespace tailrisk {

/// Levels alpha_i with weights c_i and shifts eps_i; the target at alpha_i is
/// matched by the model superquantile at alpha_i - eps_i (a positive shift
/// makes the fit conservative in the tail).
struct FitProblem {
    Family family = Family::Normal;
    std::vector<double> levels;
    std::vector<double> weights;
    std::vector<double> shifts;
    std::vector<double> targets;

    std::size_t size() const { return levels.size(); }
    double model_level(std::size_t i) const { return levels[i] - (shifts.empty() ? 0.0 : shifts[i]); }
    double weight(std::size_t i) const { return weights.empty() ? 1.0 : weights[i]; }

    static FitProblem from_targets(Family f, std::vector<double> levels, std::vector<double> targets,
                                   std::vector<double> weights = {}, std::vector<double> shifts = {}) {
        FitProblem p{f, std::move(levels), std::move(weights), std::move(shifts), std::move(targets)};
        p.validate();
        return p;
    }

    /// Targets are the empirical superquantiles of the sample at the levels.
    static FitProblem from_sample(Family f, std::span<const double> sample, std::vector<double> levels,
                                  std::vector<double> weights = {}, std::vector<double> shifts = {}) {
        if (sample.empty()) throw validation_error("fit: sample is empty");
        std::vector<double> sorted(sample.begin(), sample.end());
        for (double v : sorted)
            if (!std::isfinite(v)) throw validation_error("fit: sample contains a non-finite value");
        std::sort(sorted.begin(), sorted.end());
        std::vector<double> targets;
        for (double a : levels) targets.push_back(a == 0.0 ? empirical_superquantile(sample, 0.0)
                                                           : empirical_superquantile_sorted(sorted, a));
        return from_targets(f, std::move(levels), std::move(targets), std::move(weights), std::move(shifts));
    }

    void validate() const {
        const std::size_t k = levels.size();
        if (k == 0) throw validation_error("fit: at least one level is required");
        if (targets.size() != k) throw validation_error("fit: number of targets must match number of levels");
        if (!weights.empty() && weights.size() != k) throw validation_error("fit: number of weights must match levels");
        if (!shifts.empty() && shifts.size() != k) throw validation_error("fit: number of shifts must match levels");
        for (std::size_t i = 0; i < k; ++i) {
            if (!(levels[i] >= 0.0 && levels[i] < 1.0)) throw validation_error("fit: levels must lie in [0,1)");
            if (i > 0 && !(levels[i] > levels[i - 1])) throw validation_error("fit: levels must be strictly increasing");
            if (!(weight(i) > 0.0) || !std::isfinite(weight(i))) throw validation_error("fit: weights must be positive");
            const double e = shifts.empty() ? 0.0 : shifts[i];
            if (!(e >= 0.0 && e <= levels[i])) throw validation_error("fit: shifts must satisfy 0 <= eps_i <= alpha_i");
            if (!std::isfinite(targets[i])) throw validation_error("fit: targets must be finite");
        }
    }
};

struct FitOptions {
    int max_simplex_iterations = 4000;
    int max_restarts = 6;
    int max_lm_iterations = 200;
    double gradient_tol = 1e-7;
    std::optional<std::vector<double>> initial;  // canonical-order parameters
};

struct FitResult {
    DistributionSpec params;
    std::vector<double> residuals;  // model superquantile minus target, per level
    double objective = 0.0;
    double gradient_norm = 0.0;
    int iterations = 0;
    int restarts = 0;
    bool converged = false;
};

/// Fit failure; carries the best parameters and residuals reached.
class fit_error : public numeric_error {
public:
    fit_error(const std::string& what, std::vector<double> params, std::vector<double> residuals, double objective)
        : numeric_error(what), params_(std::move(params)), residuals_(std::move(residuals)), objective_(objective) {}
    const std::vector<double>& params() const { return params_; }
    const std::vector<double>& residuals() const { return residuals_; }
    double objective() const { return objective_; }

private:
    std::vector<double> params_;
    std::vector<double> residuals_;
    double objective_;
};

namespace detail {

// Unconstrained coordinates: log for positive parameters, identity otherwise.
inline std::vector<double> to_free(Family f, const std::vector<double>& p) {
    const auto& info = family_info(f);
    std::vector<double> t(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) t[i] = info.positive[i] ? std::log(p[i]) : p[i];
    return t;
}

inline std::vector<double> from_free(Family f, const std::vector<double>& t) {
    const auto& info = family_info(f);
    std::vector<double> p(t.size());
    for (std::size_t i = 0; i < t.size(); ++i) p[i] = info.positive[i] ? std::exp(t[i]) : t[i];
    return p;
}

inline std::optional<DistributionSpec> try_make(Family f, const std::vector<double>& p) {
    for (double v : p)
        if (!std::isfinite(v)) return std::nullopt;
    try {
        return make_distribution(f, p);
    } catch (const validation_error&) {
        return std::nullopt;
    }
}

// Weighted residuals sqrt(c_i) (model_i - target_i); empty if the model is
// undefined or infinite at some level.
inline std::vector<double> weighted_residuals(const FitProblem& fp, const std::vector<double>& params) {
    auto d = try_make(fp.family, params);
    if (!d) return {};
    std::vector<double> r(fp.size());
    for (std::size_t i = 0; i < fp.size(); ++i) {
        double q;
        try {
            q = superquantile(*d, fp.model_level(i));
        } catch (const std::exception&) {
            return {};
        }
        if (!std::isfinite(q)) return {};
        r[i] = std::sqrt(fp.weight(i)) * (q - fp.targets[i]);
    }
    return r;
}

inline double sum_squares(const std::vector<double>& r) {
    if (r.empty()) return std::numeric_limits<double>::infinity();
    double s = 0.0;
    for (double v : r) s += v * v;
    return s;
}

inline double free_objective(const FitProblem& fp, const std::vector<double>& t) {
    return sum_squares(weighted_residuals(fp, from_free(fp.family, t)));
}

enum class ShapeRole { LocationScale, Scale };

struct InitTemplate {
    ShapeRole role;
    std::vector<double> shapes;  // candidate values of the fixed shape (empty: none)
};

inline InitTemplate init_template(Family f) {
    switch (f) {
        case Family::Exponential: return {ShapeRole::Scale, {}};
        case Family::Pareto: return {ShapeRole::Scale, {1.2, 1.5, 2.0, 3.0, 5.0, 10.0}};
        case Family::GPD: return {ShapeRole::LocationScale, {-0.4, -0.2, 0.0, 0.2, 0.4, 0.6, 0.8}};
        case Family::Laplace:
        case Family::Normal:
        case Family::Logistic: return {ShapeRole::LocationScale, {}};
        case Family::LogNormal: return {ShapeRole::Scale, {0.1, 0.25, 0.5, 1.0, 1.5, 2.0}};
        case Family::StudentT: return {ShapeRole::LocationScale, {1.5, 2.0, 3.0, 5.0, 10.0, 30.0}};
        case Family::Weibull: return {ShapeRole::Scale, {0.3, 0.5, 0.8, 1.0, 1.5, 2.0, 3.0, 5.0}};
        case Family::LogLogistic: return {ShapeRole::Scale, {1.5, 2.0, 3.0, 5.0, 8.0}};
        case Family::GEV: return {ShapeRole::LocationScale, {-0.4, -0.2, 0.0, 0.2, 0.4, 0.6, 0.8}};
    }
    return {ShapeRole::LocationScale, {}};
}

// Member of the family with unit scale (and zero location) at a given shape.
inline DistributionSpec unit_member(Family f, double shape) {
    switch (f) {
        case Family::Exponential: return DistributionSpec(Exponential{1.0});
        case Family::Pareto: return DistributionSpec(Pareto{shape, 1.0});
        case Family::GPD: return DistributionSpec(GPD{0.0, 1.0, shape});
        case Family::Laplace: return DistributionSpec(Laplace{0.0, 1.0});
        case Family::Normal: return DistributionSpec(Normal{0.0, 1.0});
        case Family::LogNormal: return DistributionSpec(LogNormal{0.0, shape});
        case Family::Logistic: return DistributionSpec(Logistic{0.0, 1.0});
        case Family::StudentT: return DistributionSpec(StudentT{shape, 1.0, 0.0});
        case Family::Weibull: return DistributionSpec(Weibull{1.0, shape});
        case Family::LogLogistic: return DistributionSpec(LogLogistic{1.0, shape});
        case Family::GEV: return DistributionSpec(GEV{0.0, 1.0, shape});
    }
    throw validation_error("unknown family");
}

inline std::vector<double> assemble(Family f, double shape, double loc, double scale) {
    switch (f) {
        case Family::Exponential: return {1.0 / scale};
        case Family::Pareto: return {shape, scale};
        case Family::GPD: return {loc, scale, shape};
        case Family::Laplace:
        case Family::Normal:
        case Family::Logistic: return {loc, scale};
        case Family::LogNormal: return {std::log(scale), shape};
        case Family::StudentT: return {shape, scale, loc};
        case Family::Weibull: return {scale, shape};
        case Family::LogLogistic: return {scale, shape};
        case Family::GEV: return {loc, scale, shape};
    }
    return {};
}

// Starting point: for each candidate shape the location/scale enter the
// superquantile linearly, so they are fitted by weighted linear least squares;
// the candidate with the smallest objective wins.
inline std::vector<double> initial_guess(const FitProblem& fp) {
    const auto tpl = init_template(fp.family);
    std::vector<double> shapes = tpl.shapes.empty() ? std::vector<double>{0.0} : tpl.shapes;
    std::vector<double> best;
    double best_obj = std::numeric_limits<double>::infinity();
    const std::size_t k = fp.size();
    for (double shape : shapes) {
        const auto base = unit_member(fp.family, shape);
        std::vector<double> z(k);
        bool ok = true;
        for (std::size_t i = 0; i < k; ++i) {
            z[i] = superquantile(base, fp.model_level(i));
            ok = ok && std::isfinite(z[i]);
        }
        if (!ok) continue;
        double loc = 0.0;
        double scale = 1.0;
        double sw = 0, sz = 0, st = 0, szz = 0, szt = 0;
        for (std::size_t i = 0; i < k; ++i) {
            const double c = fp.weight(i);
            sw += c;
            sz += c * z[i];
            st += c * fp.targets[i];
            szz += c * z[i] * z[i];
            szt += c * z[i] * fp.targets[i];
        }
        if (tpl.role == ShapeRole::LocationScale) {
            const double det = sw * szz - sz * sz;
            if (k >= 2 && det > 1e-14 * sw * szz) {
                scale = (sw * szt - sz * st) / det;
                loc = (st - scale * sz) / sw;
            }
            if (!(scale > 0.0)) {
                scale = 1.0;
                loc = (st - sz) / sw;
            }
        } else {
            scale = szz > 0.0 ? szt / szz : 1.0;
            if (!(scale > 0.0)) scale = 1.0;
        }
        const auto p = assemble(fp.family, shape, loc, scale);
        const double obj = sum_squares(weighted_residuals(fp, p));
        if (obj < best_obj || best.empty()) {
            best_obj = obj;
            best = p;
        }
    }
    return best;
}

struct SimplexResult {
    std::vector<double> x;
    double fx;
    int iterations;
};

inline SimplexResult nelder_mead(const FitProblem& fp, std::vector<double> x0, int max_iter) {
    const std::size_t n = x0.size();
    std::vector<std::vector<double>> pts(n + 1, x0);
    for (std::size_t j = 0; j < n; ++j) pts[j + 1][j] += 0.1 * std::max(1.0, std::fabs(x0[j]));
    std::vector<double> fv(n + 1);
    for (std::size_t j = 0; j <= n; ++j) fv[j] = free_objective(fp, pts[j]);

    int it = 0;
    std::vector<std::size_t> order(n + 1);
    for (; it < max_iter; ++it) {
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(), [&](auto a, auto b) { return fv[a] < fv[b]; });
        const auto best = order.front();
        const auto worst = order.back();
        const auto second = order[n - 1];
        double size = 0.0;
        for (std::size_t j = 0; j <= n; ++j)
            for (std::size_t i = 0; i < n; ++i) size = std::max(size, std::fabs(pts[j][i] - pts[best][i]));
        if (size < 1e-13 && std::fabs(fv[worst] - fv[best]) <= 1e-15 * (std::fabs(fv[best]) + 1e-300)) break;
        if (fv[best] == 0.0 && size < 1e-10) break;

        std::vector<double> centroid(n, 0.0);
        for (std::size_t j = 0; j <= n; ++j)
            if (j != worst)
                for (std::size_t i = 0; i < n; ++i) centroid[i] += pts[j][i] / static_cast<double>(n);
        auto along = [&](double t) {
            std::vector<double> p(n);
            for (std::size_t i = 0; i < n; ++i) p[i] = centroid[i] + t * (pts[worst][i] - centroid[i]);
            return p;
        };
        auto xr = along(-1.0);
        const double fr = free_objective(fp, xr);
        if (fr < fv[best]) {
            auto xe = along(-2.0);
            const double fe = free_objective(fp, xe);
            if (fe < fr) { pts[worst] = xe; fv[worst] = fe; }
            else { pts[worst] = xr; fv[worst] = fr; }
        } else if (fr < fv[second]) {
            pts[worst] = xr;
            fv[worst] = fr;
        } else {
            const bool outside = fr < fv[worst];
            auto xc = along(outside ? -0.5 : 0.5);
            const double fc = free_objective(fp, xc);
            if (fc < (outside ? fr : fv[worst])) {
                pts[worst] = xc;
                fv[worst] = fc;
            } else {
                for (std::size_t j = 0; j <= n; ++j) {
                    if (j == best) continue;
                    for (std::size_t i = 0; i < n; ++i) pts[j][i] = pts[best][i] + 0.5 * (pts[j][i] - pts[best][i]);
                    fv[j] = free_objective(fp, pts[j]);
                }
            }
        }
    }
    const auto best = static_cast<std::size_t>(std::min_element(fv.begin(), fv.end()) - fv.begin());
    return {pts[best], fv[best], it};
}

// Central-difference Jacobian of the weighted residuals in free coordinates.
inline std::optional<Eigen::MatrixXd> jacobian(const FitProblem& fp, const std::vector<double>& t) {
    const std::size_t n = t.size();
    Eigen::MatrixXd J(fp.size(), n);
    for (std::size_t j = 0; j < n; ++j) {
        const double h = 1e-6 * std::max(1.0, std::fabs(t[j]));
        auto tp = t, tm = t;
        tp[j] += h;
        tm[j] -= h;
        const auto rp = weighted_residuals(fp, from_free(fp.family, tp));
        const auto rm = weighted_residuals(fp, from_free(fp.family, tm));
        if (rp.empty() || rm.empty()) return std::nullopt;
        for (std::size_t i = 0; i < fp.size(); ++i) J(i, j) = (rp[i] - rm[i]) / (tp[j] - tm[j]);
    }
    return J;
}

// Levenberg-Marquardt polish from a point near the minimum.
inline std::pair<std::vector<double>, int> levenberg_marquardt(const FitProblem& fp, std::vector<double> t, int max_iter) {
    auto r = weighted_residuals(fp, from_free(fp.family, t));
    double f = sum_squares(r);
    double mu = 1e-3;
    int it = 0;
    for (; it < max_iter && f > 0.0; ++it) {
        const auto J = jacobian(fp, t);
        if (!J) break;
        const Eigen::Map<const Eigen::VectorXd> rv(r.data(), static_cast<Eigen::Index>(r.size()));
        const Eigen::MatrixXd A = J->transpose() * (*J);
        const Eigen::VectorXd g = J->transpose() * rv;
        bool improved = false;
        for (int tries = 0; tries < 30; ++tries) {
            Eigen::MatrixXd M = A;
            for (Eigen::Index i = 0; i < M.rows(); ++i) M(i, i) += mu * std::max(A(i, i), 1e-300);
            const Eigen::VectorXd step = M.ldlt().solve(-g);
            if (!step.allFinite()) {
                mu *= 10.0;
                continue;
            }
            auto tn = t;
            for (std::size_t i = 0; i < t.size(); ++i) tn[i] += step(static_cast<Eigen::Index>(i));
            auto rn = weighted_residuals(fp, from_free(fp.family, tn));
            const double fn = sum_squares(rn);
            if (fn < f) {
                double move = 0.0;
                for (std::size_t i = 0; i < t.size(); ++i) move = std::max(move, std::fabs(tn[i] - t[i]) / std::max(1.0, std::fabs(t[i])));
                t = std::move(tn);
                r = std::move(rn);
                f = fn;
                mu = std::max(mu / 3.0, 1e-12);
                improved = move > 1e-15;
                break;
            }
            mu *= 4.0;
        }
        if (!improved) break;
    }
    return {t, it};
}

}  // namespace detail

/// Weighted least-squares superquantile matching:
///   minimize  sum_i c_i (q-bar_{alpha_i - eps_i}(theta) - target_i)^2.
inline FitResult ls_mos_fit(const FitProblem& fp, const FitOptions& opt = {}) {
    fp.validate();
    const Family f = fp.family;
    std::vector<double> start = opt.initial ? *opt.initial : detail::initial_guess(fp);
    if (start.empty() || !std::isfinite(detail::sum_squares(detail::weighted_residuals(fp, start))))
        throw fit_error("fit: no starting point with finite superquantiles", start, {}, kInfinity);

    auto t = detail::to_free(f, start);
    double ft = detail::free_objective(fp, t);
    int iterations = 0;
    int restarts = 0;
    for (; restarts <= opt.max_restarts; ++restarts) {
        const auto nm = detail::nelder_mead(fp, t, opt.max_simplex_iterations);
        iterations += nm.iterations;
        const bool gain = nm.fx < ft - 1e-14 * std::fabs(ft);
        if (nm.fx <= ft) {
            t = nm.x;
            ft = nm.fx;
        }
        if (!gain) break;
    }
    auto [polished, lm_iter] = detail::levenberg_marquardt(fp, t, opt.max_lm_iterations);
    iterations += lm_iter;
    if (detail::free_objective(fp, polished) <= ft) t = polished;

    const auto params = detail::from_free(f, t);
    const auto wres = detail::weighted_residuals(fp, params);
    if (wres.empty()) throw fit_error("fit: optimizer ended at an invalid point", params, {}, kInfinity);

    // Gradient of the objective, 2 J^T r, in free coordinates.
    double gnorm = kInfinity;
    if (const auto J = detail::jacobian(fp, t)) {
        const Eigen::Map<const Eigen::VectorXd> rv(wres.data(), static_cast<Eigen::Index>(wres.size()));
        gnorm = (2.0 * J->transpose() * rv).lpNorm<Eigen::Infinity>();
    }
    std::vector<double> residuals(fp.size());
    for (std::size_t i = 0; i < fp.size(); ++i) residuals[i] = wres[i] / std::sqrt(fp.weight(i));
    const double obj = detail::sum_squares(wres);
    if (!(gnorm <= opt.gradient_tol))
        throw fit_error("fit: no stationary point found (gradient norm " + std::to_string(gnorm) + ", objective " +
                            std::to_string(obj) + ", " + std::to_string(iterations) + " iterations)",
                        params, residuals, obj);
    return FitResult{make_distribution(f, params), residuals, obj, gnorm, iterations, restarts, true};
}

/// Exact superquantile matching with as many levels as parameters.
inline FitResult mos_solve(const FitProblem& fp, const FitOptions& opt = {}) {
    fp.validate();
    const auto arity = static_cast<std::size_t>(family_info(fp.family).arity);
    if (fp.size() != arity)
        throw validation_error("mos: " + std::to_string(arity) + " levels are needed for family '" +
                               std::string(family_info(fp.family).name) + "', got " + std::to_string(fp.size()));
    FitProblem unit = fp;
    unit.weights.assign(fp.size(), 1.0);
    auto res = ls_mos_fit(unit, opt);
    double worst = 0.0;
    for (double r : res.residuals) worst = std::max(worst, std::fabs(r));
    if (!(worst <= 1e-8))
        throw fit_error("mos: the superquantile equations have no solution in this family (max residual " +
                            std::to_string(worst) + ")",
                        parameter_vector(res.params), res.residuals, res.objective);
    return res;
}

struct WeibullBaselines {
    Weibull method_of_moments;
    Weibull maximum_likelihood;
};

namespace detail {

inline void check_positive_sample(std::span<const double> xs) {
    if (xs.size() < 2) throw validation_error("weibull fit: at least two observations are required");
    for (double v : xs)
        if (!(v > 0.0) || !std::isfinite(v)) throw validation_error("weibull fit: sample must be positive and finite");
    const auto [mn, mx] = std::minmax_element(xs.begin(), xs.end());
    if (*mn == *mx) throw domain_error("weibull fit: sample has zero variance (shape diverges)");
}

}  // namespace detail

/// Weibull shape and scale from the first two sample moments.
inline Weibull weibull_method_of_moments(std::span<const double> xs) {
    detail::check_positive_sample(xs);
    const double n = static_cast<double>(xs.size());
    const double m = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
    double v = 0.0;
    for (double x : xs) v += (x - m) * (x - m);
    v /= n;
    const double cv2 = v / (m * m);
    // Gamma(1+2/k)/Gamma(1+1/k)^2 - 1 decreases in k.
    auto h = [&](double logk) {
        const double k = std::exp(logk);
        return std::expm1(std::lgamma(1.0 + 2.0 / k) - 2.0 * std::lgamma(1.0 + 1.0 / k)) - cv2;
    };
    const double lo = std::log(0.02);
    const double hi = std::log(500.0);
    if (h(lo) < 0.0 || h(hi) > 0.0) throw numeric_error("weibull moments: shape is outside [0.02, 500]");
    const double k = std::exp(roots::brent(h, lo, hi, 1e-15));
    return Weibull{m / std::tgamma(1.0 + 1.0 / k), k};
}

/// Weibull maximum likelihood: the profile equation in k, then the scale in
/// closed form.
inline Weibull weibull_maximum_likelihood(std::span<const double> xs) {
    detail::check_positive_sample(xs);
    const double n = static_cast<double>(xs.size());
    std::vector<double> lx(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) lx[i] = std::log(xs[i]);
    const double mean_log = std::accumulate(lx.begin(), lx.end(), 0.0) / n;
    const double max_log = *std::max_element(lx.begin(), lx.end());
    // sum x^k ln x / sum x^k - 1/k - mean(ln x), increasing in k; powers are
    // scaled by the largest observation to avoid overflow.
    auto g = [&](double logk) {
        const double k = std::exp(logk);
        double s0 = 0.0, s1 = 0.0;
        for (double l : lx) {
            const double w = std::exp(k * (l - max_log));
            s0 += w;
            s1 += w * l;
        }
        return s1 / s0 - 1.0 / k - mean_log;
    };
    const double lo = std::log(0.02);
    const double hi = std::log(500.0);
    if (g(lo) > 0.0 || g(hi) < 0.0) throw numeric_error("weibull likelihood: shape is outside [0.02, 500]");
    const double k = std::exp(roots::brent(g, lo, hi, 1e-15));
    double s0 = 0.0;
    for (double l : lx) s0 += std::exp(k * (l - max_log));
    const double scale = std::exp(max_log + std::log(s0 / n) / k);
    return Weibull{scale, k};
}

inline WeibullBaselines reference_fits(std::span<const double> xs) {
    return {weibull_method_of_moments(xs), weibull_maximum_likelihood(xs)};
}

}  // namespace tailrisk
