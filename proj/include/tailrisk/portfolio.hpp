#pragma once

// Parametric portfolio optimization when portfolio returns follow a
// location-scale ("qualified") family: minimal CVaR reduces to a mean/stdev
// trade-off, minimal bPOE to a generalized Sharpe ratio.
//
// Sign convention: the loss is X = -R, so thresholds x are loss levels.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <numbers>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "tailrisk/distributions.hpp"
#include "tailrisk/errors.hpp"
#include "tailrisk/roots.hpp"
#include "tailrisk/specfun.hpp"
#include "tailrisk/tail_metrics.hpp"

namespace tailrisk {

using Eigen::MatrixXd;
using Eigen::VectorXd;

struct AssetUniverse {
    std::vector<std::string> names;
    VectorXd expected_return;
    VectorXd stdev;
    MatrixXd correlation;
    MatrixXd covariance;

    std::size_t size() const { return names.size(); }

    /// Validates the inputs and derives the covariance diag(s) C diag(s).
    static AssetUniverse make(std::vector<std::string> names, VectorXd eta, VectorXd sd, MatrixXd corr) {
        const auto n = static_cast<Eigen::Index>(names.size());
        if (n == 0) throw validation_error("asset universe is empty");
        if (eta.size() != n || sd.size() != n || corr.rows() != n || corr.cols() != n)
            throw validation_error("asset universe: dimension mismatch between names, returns, stdevs and correlations");
        for (Eigen::Index i = 0; i < n; ++i) {
            if (!std::isfinite(eta(i))) throw validation_error("asset universe: non-finite expected return");
            if (!(sd(i) >= 0.0) || !std::isfinite(sd(i))) throw validation_error("asset universe: stdev must be >= 0");
            if (std::fabs(corr(i, i) - 1.0) > 1e-12) throw validation_error("correlation matrix must have a unit diagonal");
            for (Eigen::Index j = 0; j < n; ++j) {
                if (!(corr(i, j) >= -1.0 && corr(i, j) <= 1.0))
                    throw validation_error("correlation entries must lie in [-1,1]");
                if (std::fabs(corr(i, j) - corr(j, i)) > 1e-12) throw validation_error("correlation matrix must be symmetric");
            }
        }
        MatrixXd cov = sd.asDiagonal() * corr * sd.asDiagonal();
        cov = 0.5 * (cov + cov.transpose());
        Eigen::SelfAdjointEigenSolver<MatrixXd> eig(cov, Eigen::EigenvaluesOnly);
        if (eig.eigenvalues().minCoeff() < -1e-10)
            throw domain_error("covariance matrix is not positive semidefinite (smallest eigenvalue " +
                               std::to_string(eig.eigenvalues().minCoeff()) + ")");
        return {std::move(names), std::move(eta), std::move(sd), std::move(corr), std::move(cov)};
    }
};

/// A location-scale family for portfolio returns, with its shape held fixed
/// across assets (degrees of freedom for Student-t, xi for GEV).
struct QualifiedFamily {
    Family family = Family::Normal;
    double shape = 0.0;

    static QualifiedFamily normal() { return {Family::Normal, 0.0}; }
    static QualifiedFamily laplace() { return {Family::Laplace, 0.0}; }
    static QualifiedFamily logistic() { return {Family::Logistic, 0.0}; }
    static QualifiedFamily student_t(double nu) { return checked({Family::StudentT, nu}); }
    static QualifiedFamily gev(double xi) { return checked({Family::GEV, xi}); }

    static QualifiedFamily checked(QualifiedFamily q) {
        switch (q.family) {
            case Family::Normal:
            case Family::Laplace:
            case Family::Logistic:
                return q;
            case Family::StudentT:
                if (!(q.shape > 2.0) || !std::isfinite(q.shape))
                    throw domain_error("student_t portfolio model needs nu > 2 (finite variance)");
                return q;
            case Family::GEV:
                if (!(q.shape < 0.5) || !std::isfinite(q.shape))
                    throw domain_error("gev portfolio model needs xi < 1/2 (finite variance)");
                return q;
            default:
                throw validation_error("family '" + std::string(family_info(q.family).name) +
                                       "' is not a location-scale model for portfolio returns");
        }
    }

    std::string label() const {
        std::string s(family_info(family).name);
        if (family == Family::StudentT || family == Family::GEV) {
            char buf[32];
            std::snprintf(buf, sizeof buf, "(%g)", shape);
            s += buf;
        }
        return s;
    }

    /// Member of the family with zero mean and unit variance (the loss under a
    /// symmetric family has the same law as the return).
    DistributionSpec standardized() const {
        switch (family) {
            case Family::Normal: return DistributionSpec(Normal{0.0, 1.0});
            case Family::Laplace: return DistributionSpec(Laplace{0.0, std::numbers::sqrt2 / 2.0});
            case Family::Logistic: return DistributionSpec(Logistic{0.0, std::numbers::sqrt3 / std::numbers::pi});
            case Family::StudentT: return DistributionSpec(StudentT{shape, std::sqrt((shape - 2.0) / shape), 0.0});
            case Family::GEV: {
                const double g1 = std::tgamma(1.0 - shape);
                const double g2 = std::tgamma(1.0 - 2.0 * shape);
                if (is_zero_shape(shape)) {
                    const double s = std::sqrt(6.0) / std::numbers::pi;
                    return DistributionSpec(GEV{-s * std::numbers::egamma, s, 0.0});
                }
                const double s = std::fabs(shape) / std::sqrt(g2 - g1 * g1);
                return DistributionSpec(GEV{-s * (g1 - 1.0) / shape, s, shape});
            }
            default: throw validation_error("unsupported portfolio family");
        }
    }
};

/// Multiplier zeta with  CVaR_alpha(-w'R) = -w'eta + sqrt(w'Sigma w) * zeta(alpha).
/// zeta(0) = 0 and zeta increases to +inf as alpha -> 1.
inline double zeta(const QualifiedFamily& q, double alpha) {
    QualifiedFamily::checked(q);
    if (!(alpha >= 0.0 && alpha < 1.0)) throw domain_error("zeta: level must lie in [0,1)");
    if (alpha == 0.0) return 0.0;
    if (q.family != Family::GEV) return superquantile(q.standardized(), alpha);

    // Returns are GEV: zeta is the standardized gap between the mean and the
    // mean of the lowest 1 - alpha fraction of returns.
    const double u = 1.0 - alpha;
    const double xi = q.shape;
    const double b = -std::log(u);  // ln(1 / (1 - alpha))
    if (is_zero_shape(xi)) {
        // Gumbel: E - left tail mean, via the standardized returns law.
        const auto z = q.standardized();
        return -left_superquantile(z, u);
    }
    const double g1 = std::tgamma(1.0 - xi);
    const double g2 = std::tgamma(1.0 - 2.0 * xi);
    const double upper = specfun::upper_inc_gamma(1.0 - xi, b);
    const double sign = xi > 0.0 ? 1.0 : -1.0;
    return sign * (u * g1 - upper) / (u * std::sqrt(g2 - g1 * g1));
}

/// Level alpha in (1e-9, 1 - 1e-9) with zeta(alpha) = value; the endpoints are
/// returned when value lies outside the attainable range.
inline double zeta_inverse(const QualifiedFamily& q, double value) {
    constexpr double lo = 1e-9;
    constexpr double hi = 1.0 - 1e-9;
    if (!std::isfinite(value)) throw numeric_error("zeta_inverse: non-finite ratio");
    if (value <= 0.0) return 0.0;
    if (value <= zeta(q, lo)) return lo;
    if (value >= zeta(q, hi)) return hi;
    auto f = [&](double a) { return zeta(q, a) - value; };
    // Bisection to a tight bracket, then Brent for the last digits.
    const auto br = roots::bisect(f, lo, hi, 1e-6);
    return roots::brent(f, br.lo, br.hi, 1e-16);
}

struct CvarObjective {
    double alpha;
};
struct BpoeObjective {
    double threshold;
};

struct PortfolioProblem {
    AssetUniverse universe;
    VectorXd lower;
    VectorXd upper;
    std::variant<CvarObjective, BpoeObjective> objective;

    /// Long-only, fully invested bounds 0 <= w <= 1.
    static PortfolioProblem long_only(AssetUniverse u, std::variant<CvarObjective, BpoeObjective> obj) {
        const auto n = static_cast<Eigen::Index>(u.size());
        return {std::move(u), VectorXd::Zero(n), VectorXd::Ones(n), obj};
    }
};

struct SolverOptions {
    double stationarity_tol = 1e-9;
    int max_iterations = 200000;
    int starts = 5;
};

struct SolveReport {
    VectorXd weights;
    double objective = 0.0;
    double stationarity = 0.0;
    int iterations = 0;
    int best_start = 0;
    bool converged = false;
};

struct PortfolioReport {
    VectorXd weights;
    double expected_return = 0.0;
    double stdev = 0.0;
    double objective = 0.0;       // CVaR for CVaR problems, bPOE for bPOE problems
    double zeta = 0.0;
    double lambda_equiv = 0.0;    // Markowitz trade-off reproducing the CVaR optimum
    double sharpe_ratio = 0.0;    // (w'eta + x) / stdev for bPOE problems
    double alpha_star = 0.0;
    double stationarity = 0.0;
    int iterations = 0;
    std::vector<std::pair<std::string, double>> bpoe_by_family;
    std::vector<std::pair<std::string, double>> cvar_by_family;
};

namespace detail {

inline void check_bounds(const VectorXd& lower, const VectorXd& upper, Eigen::Index n) {
    if (lower.size() != n || upper.size() != n) throw validation_error("bounds: dimension mismatch");
    for (Eigen::Index i = 0; i < n; ++i)
        if (!(lower(i) <= upper(i))) throw domain_error("infeasible bounds: lower exceeds upper");
    if (lower.sum() > 1.0 + 1e-12 || upper.sum() < 1.0 - 1e-12)
        throw domain_error("infeasible bounds: budget sum(w) = 1 cannot be met");
}

}  // namespace detail

/// Euclidean projection onto {sum w = 1, lower <= w <= upper}: w = clamp(y - tau)
/// where tau solves a monotone piecewise-linear equation, found exactly by
/// scanning the breakpoints.
inline VectorXd project_to_budget_box(const VectorXd& y, const VectorXd& lower, const VectorXd& upper) {
    const Eigen::Index n = y.size();
    detail::check_bounds(lower, upper, n);
    auto total = [&](double tau) {
        double s = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) s += std::clamp(y(i) - tau, lower(i), upper(i));
        return s;
    };
    std::vector<double> bp;
    bp.reserve(2 * n);
    for (Eigen::Index i = 0; i < n; ++i) {
        bp.push_back(y(i) - lower(i));
        bp.push_back(y(i) - upper(i));
    }
    std::sort(bp.begin(), bp.end());
    // total() is non-increasing in tau; find adjacent breakpoints around 1.
    std::size_t k = 0;
    while (k + 1 < bp.size() && total(bp[k + 1]) >= 1.0) ++k;
    double tau;
    const double a = bp[k];
    const double b = k + 1 < bp.size() ? bp[k + 1] : bp[k];
    const double mid = 0.5 * (a + b);
    double fixed = 0.0;
    double free_sum = 0.0;
    int free_count = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
        const double v = y(i) - mid;
        if (v <= lower(i)) fixed += lower(i);
        else if (v >= upper(i)) fixed += upper(i);
        else {
            free_sum += y(i);
            ++free_count;
        }
    }
    tau = free_count > 0 ? (free_sum + fixed - 1.0) / free_count : mid;
    VectorXd w(n);
    for (Eigen::Index i = 0; i < n; ++i) w(i) = std::clamp(y(i) - tau, lower(i), upper(i));
    // Remove the last rounding from the budget on a free coordinate.
    const double excess = w.sum() - 1.0;
    for (Eigen::Index i = 0; i < n && excess != 0.0; ++i) {
        if (w(i) - excess >= lower(i) && w(i) - excess <= upper(i) && w(i) > lower(i) && w(i) < upper(i)) {
            w(i) -= excess;
            break;
        }
    }
    return w;
}

/// Maximizes a smooth function over {sum w = 1, lower <= w <= upper} by spectral
/// projected-gradient ascent with a non-monotone Armijo search, from several
/// deterministic starts (equal weights and blends toward single assets).
inline SolveReport maximize_on_budget_box(const std::function<double(const VectorXd&)>& f,
                                          const std::function<VectorXd(const VectorXd&)>& grad, const VectorXd& lower,
                                          const VectorXd& upper, const SolverOptions& opt = {}) {
    const Eigen::Index n = lower.size();
    detail::check_bounds(lower, upper, n);
    const VectorXd equal = VectorXd::Constant(n, 1.0 / static_cast<double>(n));

    std::vector<VectorXd> starts{project_to_budget_box(equal, lower, upper)};
    for (int s = 1; s < opt.starts; ++s) {
        VectorXd e = VectorXd::Zero(n);
        e((s - 1) % n) = 1.0;
        starts.push_back(project_to_budget_box(0.5 * equal + 0.5 * e, lower, upper));
    }

    SolveReport best;
    best.objective = -std::numeric_limits<double>::infinity();
    for (std::size_t s = 0; s < starts.size(); ++s) {
        VectorXd w = starts[s];
        double fw = f(w);
        VectorXd g = grad(w);
        double step = 1.0;
        std::vector<double> history{fw};
        int it = 0;
        double stat = std::numeric_limits<double>::infinity();
        for (; it < opt.max_iterations; ++it) {
            stat = (project_to_budget_box(w + g, lower, upper) - w).lpNorm<Eigen::Infinity>();
            if (stat <= opt.stationarity_tol) break;
            const VectorXd d = project_to_budget_box(w + step * g, lower, upper) - w;
            const double slope = g.dot(d);
            const double ref = *std::max_element(history.end() - std::min<std::ptrdiff_t>(history.size(), 10), history.end());
            double t = 1.0;
            VectorXd w_new;
            double f_new = 0.0;
            int backtracks = 0;
            while (true) {
                w_new = w + t * d;
                f_new = f(w_new);
                // Near the optimum, changes in f fall below rounding; allow for it.
                const double slack = 8.0 * std::numeric_limits<double>::epsilon() * std::fabs(ref);
                if (std::isfinite(f_new) && f_new >= ref + 1e-4 * t * slope - slack) break;
                t *= 0.5;
                if (++backtracks > 60) break;
            }
            if (backtracks > 60) break;
            const VectorXd g_new = grad(w_new);
            const VectorXd sv = w_new - w;
            const VectorXd yv = g_new - g;
            const double sy = sv.dot(yv);
            // Maximization: curvature is negative along sv for concave problems.
            step = sy < 0.0 ? std::clamp(sv.squaredNorm() / -sy, 1e-12, 1e12) : 1e3;
            w = w_new;
            fw = f_new;
            g = g_new;
            history.push_back(fw);
        }
        stat = (project_to_budget_box(w + g, lower, upper) - w).lpNorm<Eigen::Infinity>();
        if (fw > best.objective) {
            best.weights = w;
            best.objective = fw;
            best.stationarity = stat;
            best.iterations = it;
            best.best_start = static_cast<int>(s);
            best.converged = stat <= opt.stationarity_tol;
        }
    }
    if (!best.converged)
        throw numeric_error("portfolio solver did not reach stationarity (projected gradient " +
                            std::to_string(best.stationarity) + ")");
    return best;
}

inline double portfolio_stdev(const AssetUniverse& u, const VectorXd& w) {
    return std::sqrt(std::max(0.0, w.dot(u.covariance * w)));
}

/// CVaR of the loss -w'R at level alpha when returns follow family q.
inline double cvar_cross_evaluate(const VectorXd& w, const AssetUniverse& u, const QualifiedFamily& q, double alpha) {
    return -w.dot(u.expected_return) + portfolio_stdev(u, w) * zeta(q, alpha);
}

/// bPOE of the loss -w'R at threshold x when returns follow family q.
inline double portfolio_bpoe(const VectorXd& w, const AssetUniverse& u, const QualifiedFamily& q, double x) {
    const double sd = portfolio_stdev(u, w);
    if (sd == 0.0) return -w.dot(u.expected_return) < x ? 0.0 : 1.0;
    const double ratio = (w.dot(u.expected_return) + x) / sd;
    return 1.0 - zeta_inverse(q, ratio);
}

/// Families compared side by side in portfolio reports.
inline std::vector<QualifiedFamily> default_report_families() {
    return {QualifiedFamily::normal(), QualifiedFamily::student_t(3.0), QualifiedFamily::laplace(),
            QualifiedFamily::logistic()};
}

inline PortfolioReport min_cvar_portfolio(const PortfolioProblem& p, const QualifiedFamily& q,
                                          const SolverOptions& opt = {}) {
    const auto* obj = std::get_if<CvarObjective>(&p.objective);
    if (!obj) throw validation_error("min_cvar_portfolio: problem does not carry a CVaR objective");
    if (!(obj->alpha > 0.0 && obj->alpha < 1.0)) throw domain_error("CVaR level must lie in (0,1)");
    const auto& u = p.universe;
    const double z = zeta(q, obj->alpha);
    auto f = [&](const VectorXd& w) { return w.dot(u.expected_return) - z * portfolio_stdev(u, w); };
    auto g = [&](const VectorXd& w) -> VectorXd {
        const double sd = portfolio_stdev(u, w);
        return u.expected_return - z * (u.covariance * w) / std::max(sd, 1e-300);
    };
    const auto sol = maximize_on_budget_box(f, g, p.lower, p.upper, opt);

    PortfolioReport r;
    r.weights = sol.weights;
    r.expected_return = sol.weights.dot(u.expected_return);
    r.stdev = portfolio_stdev(u, sol.weights);
    r.objective = -sol.objective;
    r.zeta = z;
    r.lambda_equiv = r.stdev > 0.0 ? z / r.stdev : 0.0;
    r.alpha_star = obj->alpha;
    r.stationarity = sol.stationarity;
    r.iterations = sol.iterations;
    return r;
}

/// Largest attainable w'eta over the feasible set (greedy fill by return).
inline double max_feasible_return(const AssetUniverse& u, const VectorXd& lower, const VectorXd& upper) {
    const Eigen::Index n = lower.size();
    detail::check_bounds(lower, upper, n);
    std::vector<Eigen::Index> order(n);
    for (Eigen::Index i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](auto a, auto b) { return u.expected_return(a) > u.expected_return(b); });
    VectorXd w = lower;
    double budget = 1.0 - lower.sum();
    for (auto i : order) {
        const double add = std::min(budget, upper(i) - lower(i));
        w(i) += add;
        budget -= add;
    }
    return w.dot(u.expected_return);
}

inline PortfolioReport min_bpoe_portfolio(const PortfolioProblem& p, const QualifiedFamily& q,
                                          const std::vector<QualifiedFamily>& report_families = default_report_families(),
                                          const SolverOptions& opt = {}) {
    const auto* obj = std::get_if<BpoeObjective>(&p.objective);
    if (!obj) throw validation_error("min_bpoe_portfolio: problem does not carry a bPOE objective");
    QualifiedFamily::checked(q);
    const auto& u = p.universe;
    const double x = obj->threshold;
    if (!std::isfinite(x)) throw validation_error("bPOE threshold must be finite");
    if (!(x > -max_feasible_return(u, p.lower, p.upper)))
        throw domain_error("bPOE threshold must exceed minus the largest feasible portfolio return");

    auto f = [&](const VectorXd& w) {
        const double sd = portfolio_stdev(u, w);
        return (w.dot(u.expected_return) + x) / sd;
    };
    auto g = [&](const VectorXd& w) -> VectorXd {
        const double sd = portfolio_stdev(u, w);
        const double num = w.dot(u.expected_return) + x;
        return u.expected_return / sd - num * (u.covariance * w) / (sd * sd * sd);
    };
    const auto sol = maximize_on_budget_box(f, g, p.lower, p.upper, opt);

    PortfolioReport r;
    r.weights = sol.weights;
    r.expected_return = sol.weights.dot(u.expected_return);
    r.stdev = portfolio_stdev(u, sol.weights);
    r.sharpe_ratio = sol.objective;
    r.alpha_star = zeta_inverse(q, sol.objective);
    r.objective = 1.0 - r.alpha_star;
    r.zeta = zeta(q, r.alpha_star);
    r.stationarity = sol.stationarity;
    r.iterations = sol.iterations;
    std::vector<QualifiedFamily> fams = report_families;
    if (std::none_of(fams.begin(), fams.end(), [&](const auto& o) { return o.family == q.family && o.shape == q.shape; }))
        fams.insert(fams.begin(), q);
    for (const auto& other : fams) {
        r.bpoe_by_family.emplace_back(other.label(), 1.0 - zeta_inverse(other, sol.objective));
        r.cvar_by_family.emplace_back(other.label(), cvar_cross_evaluate(r.weights, u, other, r.alpha_star));
    }
    return r;
}

/// Markowitz utility maximization: max w'eta - (lambda/2) w'Sigma w.
inline VectorXd markowitz_portfolio(const AssetUniverse& u, const VectorXd& lower, const VectorXd& upper, double lambda,
                                    const SolverOptions& opt = {}) {
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw validation_error("markowitz: lambda must be finite and >= 0");
    auto f = [&](const VectorXd& w) { return w.dot(u.expected_return) - 0.5 * lambda * w.dot(u.covariance * w); };
    auto g = [&](const VectorXd& w) -> VectorXd { return u.expected_return - lambda * (u.covariance * w); };
    return maximize_on_budget_box(f, g, lower, upper, opt).weights;
}

/// Global minimum-variance portfolio.
inline VectorXd min_variance_portfolio(const AssetUniverse& u, const VectorXd& lower, const VectorXd& upper,
                                       const SolverOptions& opt = {}) {
    auto f = [&](const VectorXd& w) { return -w.dot(u.covariance * w); };
    auto g = [&](const VectorXd& w) -> VectorXd { return -2.0 * (u.covariance * w); };
    return maximize_on_budget_box(f, g, lower, upper, opt).weights;
}

struct MarkowitzCheck {
    bool matches = false;
    double max_gap = 0.0;
    VectorXd markowitz_weights;
};

/// Re-solves the Markowitz problem at lambda and compares with given weights.
inline MarkowitzCheck markowitz_equivalence_check(const VectorXd& w_cvar, const AssetUniverse& u, double lambda,
                                                  const VectorXd& lower, const VectorXd& upper, double tol = 5e-3) {
    MarkowitzCheck c;
    c.markowitz_weights = markowitz_portfolio(u, lower, upper, lambda);
    c.max_gap = (c.markowitz_weights - w_cvar).lpNorm<Eigen::Infinity>();
    c.matches = c.max_gap <= tol;
    return c;
}

}  // namespace tailrisk
