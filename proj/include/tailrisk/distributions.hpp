#pragma once

// Parameter containers and elementary evaluators for the eleven supported
// univariate families.

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numbers>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "tailrisk/errors.hpp"
#include "tailrisk/specfun.hpp"

namespace tailrisk {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

// |xi| below this is treated as an exact zero shape (Gumbel / exponential tail).
inline constexpr double kZeroShapeTol = 1e-9;

inline bool is_zero_shape(double xi) { return std::fabs(xi) < kZeroShapeTol; }

enum class Family {
    Exponential,
    Pareto,
    GPD,
    Laplace,
    Normal,
    LogNormal,
    Logistic,
    StudentT,
    Weibull,
    LogLogistic,
    GEV,
};

struct Exponential {
    double rate;  // lambda
};
struct Pareto {
    double shape;  // a
    double scale;  // x_m
};
struct GPD {
    double location;
    double scale;
    double shape;  // xi
};
struct Laplace {
    double location;
    double scale;  // b
};
struct Normal {
    double mean;
    double stdev;
};
struct LogNormal {
    double log_location;
    double log_scale;
};
struct Logistic {
    double location;
    double scale;
};
struct StudentT {
    double dof;  // nu
    double scale;
    double location;
};
struct Weibull {
    double scale;  // lambda
    double shape;  // k
};
struct LogLogistic {
    double scale;  // a
    double shape;  // b
};
struct GEV {
    double location;
    double scale;
    double shape;  // xi
};

using DistributionParams = std::variant<Exponential, Pareto, GPD, Laplace, Normal, LogNormal, Logistic,
                                        StudentT, Weibull, LogLogistic, GEV>;

/// Static description of a family: its CLI/JSON name and parameter names in
/// canonical order.
struct FamilyInfo {
    Family family;
    std::string_view name;
    int arity;
    std::array<std::string_view, 3> param_names;
    std::array<bool, 3> positive;  // parameter must be > 0
};

inline constexpr std::array<FamilyInfo, 11> kFamilies = {{
    {Family::Exponential, "exponential", 1, {"lambda", "", ""}, {true, false, false}},
    {Family::Pareto, "pareto", 2, {"a", "xm", ""}, {true, true, false}},
    {Family::GPD, "gpd", 3, {"mu", "s", "xi"}, {false, true, false}},
    {Family::Laplace, "laplace", 2, {"mu", "b", ""}, {false, true, false}},
    {Family::Normal, "normal", 2, {"mu", "sigma", ""}, {false, true, false}},
    {Family::LogNormal, "lognormal", 2, {"mu", "s", ""}, {false, true, false}},
    {Family::Logistic, "logistic", 2, {"mu", "s", ""}, {false, true, false}},
    {Family::StudentT, "student_t", 3, {"nu", "s", "mu"}, {true, true, false}},
    {Family::Weibull, "weibull", 2, {"lambda", "k", ""}, {true, true, false}},
    {Family::LogLogistic, "loglogistic", 2, {"a", "b", ""}, {true, true, false}},
    {Family::GEV, "gev", 3, {"mu", "s", "xi"}, {false, true, false}},
}};

inline const FamilyInfo& family_info(Family f) { return kFamilies[static_cast<std::size_t>(f)]; }

inline Family parse_family(std::string_view name) {
    for (const auto& info : kFamilies)
        if (info.name == name) return info.family;
    if (name == "t" || name == "studentt" || name == "student-t") return Family::StudentT;
    if (name == "gumbel") return Family::GEV;
    throw validation_error("unknown distribution family '" + std::string(name) + "'");
}

namespace detail {

inline void require(bool ok, std::string_view family, std::string_view constraint) {
    if (!ok) throw validation_error(std::string(family) + ": parameter violates " + std::string(constraint));
}

inline void require_finite(std::initializer_list<double> xs, std::string_view family) {
    for (double x : xs) require(std::isfinite(x), family, "finiteness");
}

inline void validate(const Exponential& p) {
    require_finite({p.rate}, "exponential");
    require(p.rate > 0, "exponential", "lambda > 0");
}
inline void validate(const Pareto& p) {
    require_finite({p.shape, p.scale}, "pareto");
    require(p.shape > 0, "pareto", "a > 0");
    require(p.scale > 0, "pareto", "xm > 0");
}
inline void validate(const GPD& p) {
    require_finite({p.location, p.scale, p.shape}, "gpd");
    require(p.scale > 0, "gpd", "s > 0");
}
inline void validate(const Laplace& p) {
    require_finite({p.location, p.scale}, "laplace");
    require(p.scale > 0, "laplace", "b > 0");
}
inline void validate(const Normal& p) {
    require_finite({p.mean, p.stdev}, "normal");
    require(p.stdev > 0, "normal", "sigma > 0");
}
inline void validate(const LogNormal& p) {
    require_finite({p.log_location, p.log_scale}, "lognormal");
    require(p.log_scale > 0, "lognormal", "s > 0");
}
inline void validate(const Logistic& p) {
    require_finite({p.location, p.scale}, "logistic");
    require(p.scale > 0, "logistic", "s > 0");
}
inline void validate(const StudentT& p) {
    require_finite({p.dof, p.scale, p.location}, "student_t");
    require(p.dof > 0, "student_t", "nu > 0");
    require(p.scale > 0, "student_t", "s > 0");
}
inline void validate(const Weibull& p) {
    require_finite({p.scale, p.shape}, "weibull");
    require(p.scale > 0, "weibull", "lambda > 0");
    require(p.shape > 0, "weibull", "k > 0");
}
inline void validate(const LogLogistic& p) {
    require_finite({p.scale, p.shape}, "loglogistic");
    require(p.scale > 0, "loglogistic", "a > 0");
    require(p.shape > 0, "loglogistic", "b > 0");
}
inline void validate(const GEV& p) {
    require_finite({p.location, p.scale, p.shape}, "gev");
    require(p.scale > 0, "gev", "s > 0");
}

}  // namespace detail

/// A validated, immutable distribution. The family is fixed by the
/// alternative held in the variant.
class DistributionSpec {
public:
    template <class P>
        requires std::is_constructible_v<DistributionParams, P>
    explicit DistributionSpec(P params) : params_(params) {
        detail::validate(params);
    }

    Family family() const { return static_cast<Family>(params_.index()); }
    const DistributionParams& params() const { return params_; }

    template <class P>
    const P& as() const {
        return std::get<P>(params_);
    }

    template <class P>
    bool holds() const {
        return std::holds_alternative<P>(params_);
    }

private:
    DistributionParams params_;
};

/// Build a spec from a family tag and parameters in canonical order.
inline DistributionSpec make_distribution(Family family, std::span<const double> v) {
    const auto& info = family_info(family);
    if (static_cast<int>(v.size()) != info.arity)
        throw validation_error(std::string(info.name) + ": expected " + std::to_string(info.arity) +
                               " parameters, got " + std::to_string(v.size()));
    switch (family) {
        case Family::Exponential: return DistributionSpec(Exponential{v[0]});
        case Family::Pareto: return DistributionSpec(Pareto{v[0], v[1]});
        case Family::GPD: return DistributionSpec(GPD{v[0], v[1], v[2]});
        case Family::Laplace: return DistributionSpec(Laplace{v[0], v[1]});
        case Family::Normal: return DistributionSpec(Normal{v[0], v[1]});
        case Family::LogNormal: return DistributionSpec(LogNormal{v[0], v[1]});
        case Family::Logistic: return DistributionSpec(Logistic{v[0], v[1]});
        case Family::StudentT: return DistributionSpec(StudentT{v[0], v[1], v[2]});
        case Family::Weibull: return DistributionSpec(Weibull{v[0], v[1]});
        case Family::LogLogistic: return DistributionSpec(LogLogistic{v[0], v[1]});
        case Family::GEV: return DistributionSpec(GEV{v[0], v[1], v[2]});
    }
    throw validation_error("unknown family");
}

/// Build a spec from a family name and named parameters (CLI / JSON form).
/// Unknown or missing parameter names are validation errors.
inline DistributionSpec make_distribution(std::string_view family_name, const std::map<std::string, double>& named) {
    const Family family = parse_family(family_name);
    const auto& info = family_info(family);
    std::vector<double> v;
    for (int i = 0; i < info.arity; ++i) {
        auto it = named.find(std::string(info.param_names[i]));
        if (it == named.end())
            throw validation_error(std::string(info.name) + ": missing parameter '" +
                                   std::string(info.param_names[i]) + "'");
        v.push_back(it->second);
    }
    for (const auto& [key, _] : named) {
        bool known = false;
        for (int i = 0; i < info.arity; ++i) known = known || info.param_names[i] == key;
        if (!known) throw validation_error(std::string(info.name) + ": unknown parameter '" + key + "'");
    }
    return make_distribution(family, v);
}

/// Parameters in canonical order (see kFamilies).
inline std::vector<double> parameter_vector(const DistributionSpec& d) {
    return std::visit(
        [](const auto& p) -> std::vector<double> {
            using P = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<P, Exponential>) return {p.rate};
            else if constexpr (std::is_same_v<P, Pareto>) return {p.shape, p.scale};
            else if constexpr (std::is_same_v<P, GPD>) return {p.location, p.scale, p.shape};
            else if constexpr (std::is_same_v<P, Laplace>) return {p.location, p.scale};
            else if constexpr (std::is_same_v<P, Normal>) return {p.mean, p.stdev};
            else if constexpr (std::is_same_v<P, LogNormal>) return {p.log_location, p.log_scale};
            else if constexpr (std::is_same_v<P, Logistic>) return {p.location, p.scale};
            else if constexpr (std::is_same_v<P, StudentT>) return {p.dof, p.scale, p.location};
            else if constexpr (std::is_same_v<P, Weibull>) return {p.scale, p.shape};
            else if constexpr (std::is_same_v<P, LogLogistic>) return {p.scale, p.shape};
            else return {p.location, p.scale, p.shape};
        },
        d.params());
}

inline std::map<std::string, double> named_parameters(const DistributionSpec& d) {
    const auto& info = family_info(d.family());
    const auto v = parameter_vector(d);
    std::map<std::string, double> out;
    for (int i = 0; i < info.arity; ++i) out[std::string(info.param_names[i])] = v[i];
    return out;
}

struct SupportBound {
    double lower;
    double upper;  // essential supremum, possibly +inf
};

namespace detail {

inline double check_level(double alpha, const char* fn) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw domain_error(std::string(fn) + ": level must lie in (0,1)");
    return alpha;
}

// ---- Exponential ----
inline double pdf(const Exponential& p, double x) { return x < 0 ? 0.0 : p.rate * std::exp(-p.rate * x); }
inline double cdf(const Exponential& p, double x) { return x < 0 ? 0.0 : -std::expm1(-p.rate * x); }
inline double sf(const Exponential& p, double x) { return x < 0 ? 1.0 : std::exp(-p.rate * x); }
inline double quantile(const Exponential& p, double a) { return -std::log1p(-a) / p.rate; }
inline double quantile_upper(const Exponential& p, double u) { return -std::log(u) / p.rate; }
inline double mean(const Exponential& p) { return 1.0 / p.rate; }
inline double variance(const Exponential& p) { return 1.0 / (p.rate * p.rate); }
inline SupportBound support(const Exponential&) { return {0.0, kInfinity}; }

// ---- Pareto ----
inline double pdf(const Pareto& p, double x) {
    return x < p.scale ? 0.0 : p.shape * std::pow(p.scale, p.shape) / std::pow(x, p.shape + 1.0);
}
inline double sf(const Pareto& p, double x) { return x < p.scale ? 1.0 : std::pow(p.scale / x, p.shape); }
inline double cdf(const Pareto& p, double x) { return x < p.scale ? 0.0 : -std::expm1(p.shape * std::log(p.scale / x)); }
inline double quantile(const Pareto& p, double a) { return p.scale * std::exp(-std::log1p(-a) / p.shape); }
inline double quantile_upper(const Pareto& p, double u) { return p.scale * std::pow(u, -1.0 / p.shape); }
inline double mean(const Pareto& p) { return p.shape <= 1.0 ? kInfinity : p.shape * p.scale / (p.shape - 1.0); }
inline double variance(const Pareto& p) {
    if (p.shape <= 2.0) return kInfinity;
    const double am1 = p.shape - 1.0;
    return p.shape * p.scale * p.scale / (am1 * am1 * (p.shape - 2.0));
}
inline SupportBound support(const Pareto& p) { return {p.scale, kInfinity}; }

// ---- Generalized Pareto ----
inline SupportBound support(const GPD& p) {
    if (!is_zero_shape(p.shape) && p.shape < 0) return {p.location, p.location - p.scale / p.shape};
    return {p.location, kInfinity};
}
// log survival for z >= 0 inside the support
inline double gpd_log_sf(const GPD& p, double z) {
    if (is_zero_shape(p.shape)) return -z;
    return -std::log1p(p.shape * z) / p.shape;
}
inline double pdf(const GPD& p, double x) {
    const auto sb = support(p);
    if (x < sb.lower || x > sb.upper) return 0.0;
    const double z = (x - p.location) / p.scale;
    if (is_zero_shape(p.shape)) return std::exp(-z) / p.scale;
    const double t = 1.0 + p.shape * z;
    if (t <= 0.0) return p.shape < -1.0 ? kInfinity : (p.shape == -1.0 ? 1.0 / p.scale : 0.0);
    return std::exp((-1.0 / p.shape - 1.0) * std::log(t)) / p.scale;
}
inline double sf(const GPD& p, double x) {
    const auto sb = support(p);
    if (x <= sb.lower) return 1.0;
    if (x >= sb.upper) return 0.0;
    return std::exp(gpd_log_sf(p, (x - p.location) / p.scale));
}
inline double cdf(const GPD& p, double x) {
    const auto sb = support(p);
    if (x <= sb.lower) return 0.0;
    if (x >= sb.upper) return 1.0;
    return -std::expm1(gpd_log_sf(p, (x - p.location) / p.scale));
}
inline double quantile_upper(const GPD& p, double u) {
    const double lu = std::log(u);
    if (is_zero_shape(p.shape)) return p.location - p.scale * lu;
    return p.location + p.scale * std::expm1(-p.shape * lu) / p.shape;
}
inline double quantile(const GPD& p, double a) {
    const double lu = std::log1p(-a);
    if (is_zero_shape(p.shape)) return p.location - p.scale * lu;
    return p.location + p.scale * std::expm1(-p.shape * lu) / p.shape;
}
inline double mean(const GPD& p) {
    if (is_zero_shape(p.shape)) return p.location + p.scale;
    return p.shape >= 1.0 ? kInfinity : p.location + p.scale / (1.0 - p.shape);
}
inline double variance(const GPD& p) {
    if (is_zero_shape(p.shape)) return p.scale * p.scale;
    if (p.shape >= 0.5) return kInfinity;
    const double om = 1.0 - p.shape;
    return p.scale * p.scale / (om * om * (1.0 - 2.0 * p.shape));
}

// ---- Laplace ----
inline double pdf(const Laplace& p, double x) { return std::exp(-std::fabs(x - p.location) / p.scale) / (2.0 * p.scale); }
inline double cdf(const Laplace& p, double x) {
    const double z = (x - p.location) / p.scale;
    return z < 0 ? 0.5 * std::exp(z) : 1.0 - 0.5 * std::exp(-z);
}
inline double sf(const Laplace& p, double x) {
    const double z = (x - p.location) / p.scale;
    return z < 0 ? 1.0 - 0.5 * std::exp(z) : 0.5 * std::exp(-z);
}
// sign(a - 1/2) is taken as 0 at a = 1/2, giving the median.
inline double quantile(const Laplace& p, double a) {
    if (a == 0.5) return p.location;
    if (a < 0.5) return p.location + p.scale * std::log(2.0 * a);
    return p.location - p.scale * std::log(2.0 * (1.0 - a));
}
inline double quantile_upper(const Laplace& p, double u) {
    if (u == 0.5) return p.location;
    if (u < 0.5) return p.location - p.scale * std::log(2.0 * u);
    return p.location + p.scale * std::log(2.0 * (1.0 - u));
}
inline double mean(const Laplace& p) { return p.location; }
inline double variance(const Laplace& p) { return 2.0 * p.scale * p.scale; }
inline SupportBound support(const Laplace&) { return {-kInfinity, kInfinity}; }

// ---- Normal ----
inline double pdf(const Normal& p, double x) { return specfun::std_normal_pdf((x - p.mean) / p.stdev) / p.stdev; }
inline double cdf(const Normal& p, double x) { return specfun::std_normal_cdf((x - p.mean) / p.stdev); }
inline double sf(const Normal& p, double x) { return specfun::std_normal_sf((x - p.mean) / p.stdev); }
inline double quantile(const Normal& p, double a) { return p.mean + p.stdev * specfun::std_normal_quantile(a); }
inline double quantile_upper(const Normal& p, double u) { return p.mean - p.stdev * specfun::std_normal_quantile(u); }
inline double mean(const Normal& p) { return p.mean; }
inline double variance(const Normal& p) { return p.stdev * p.stdev; }
inline SupportBound support(const Normal&) { return {-kInfinity, kInfinity}; }

// ---- LogNormal ----
inline double pdf(const LogNormal& p, double x) {
    if (x <= 0) return 0.0;
    const double z = (std::log(x) - p.log_location) / p.log_scale;
    return specfun::std_normal_pdf(z) / (x * p.log_scale);
}
inline double cdf(const LogNormal& p, double x) {
    return x <= 0 ? 0.0 : specfun::std_normal_cdf((std::log(x) - p.log_location) / p.log_scale);
}
inline double sf(const LogNormal& p, double x) {
    return x <= 0 ? 1.0 : specfun::std_normal_sf((std::log(x) - p.log_location) / p.log_scale);
}
inline double quantile(const LogNormal& p, double a) {
    return std::exp(p.log_location + p.log_scale * specfun::std_normal_quantile(a));
}
inline double quantile_upper(const LogNormal& p, double u) {
    return std::exp(p.log_location - p.log_scale * specfun::std_normal_quantile(u));
}
inline double mean(const LogNormal& p) { return std::exp(p.log_location + 0.5 * p.log_scale * p.log_scale); }
inline double variance(const LogNormal& p) {
    const double s2 = p.log_scale * p.log_scale;
    return std::expm1(s2) * std::exp(2.0 * p.log_location + s2);
}
inline SupportBound support(const LogNormal&) { return {0.0, kInfinity}; }

// ---- Logistic ----
inline double pdf(const Logistic& p, double x) {
    const double e = std::exp(-std::fabs(x - p.location) / p.scale);
    return e / (p.scale * (1.0 + e) * (1.0 + e));
}
inline double cdf(const Logistic& p, double x) { return 1.0 / (1.0 + std::exp(-(x - p.location) / p.scale)); }
inline double sf(const Logistic& p, double x) { return 1.0 / (1.0 + std::exp((x - p.location) / p.scale)); }
inline double quantile(const Logistic& p, double a) { return p.location + p.scale * (std::log(a) - std::log1p(-a)); }
inline double quantile_upper(const Logistic& p, double u) {
    return p.location + p.scale * (std::log1p(-u) - std::log(u));
}
inline double mean(const Logistic& p) { return p.location; }
inline double variance(const Logistic& p) { return p.scale * p.scale * std::numbers::pi * std::numbers::pi / 3.0; }
inline SupportBound support(const Logistic&) { return {-kInfinity, kInfinity}; }

// ---- Student-t ----
inline double std_t_log_norm(double nu) {
    return std::lgamma(0.5 * (nu + 1.0)) - std::lgamma(0.5 * nu) - 0.5 * std::log(nu * std::numbers::pi);
}
inline double std_t_pdf(double nu, double t) {
    return std::exp(std_t_log_norm(nu) - 0.5 * (nu + 1.0) * std::log1p(t * t / nu));
}
// upper tail P(T > t) for t >= 0
inline double std_t_upper(double nu, double t) {
    const double t2 = t * t;
    const double x = nu / (nu + t2);
    const double y = t2 / (nu + t2);
    return 0.5 * specfun::detail::reg_inc_beta_xy(x, y, 0.5 * nu, 0.5);
}
inline double std_t_sf(double nu, double t) { return t >= 0 ? std_t_upper(nu, t) : 1.0 - std_t_upper(nu, -t); }
inline double std_t_cdf(double nu, double t) { return t >= 0 ? 1.0 - std_t_upper(nu, t) : std_t_upper(nu, -t); }

// t >= 0 with P(T > t) = u, u in (0, 0.5]. Initial value from the inverse
// incomplete beta, then safeguarded Newton on log P(T > t).
inline double std_t_upper_quantile(double nu, double u) {
    if (u == 0.5) return 0.0;
    double t;
    if (u < 0.25) {
        const double x = specfun::reg_inc_beta_inv(2.0 * u, 0.5 * nu, 0.5);
        t = std::sqrt(nu * (1.0 - x) / x);
    } else {
        const double y = specfun::reg_inc_beta_inv(1.0 - 2.0 * u, 0.5, 0.5 * nu);
        t = std::sqrt(nu * y / (1.0 - y));
    }
    if (!std::isfinite(t) || t <= 0.0) t = 1.0;
    double lo = 0.0;
    double hi = kInfinity;
    const double log_u = std::log(u);
    for (int it = 0; it < 200; ++it) {
        const double s = std_t_upper(nu, t);
        if (s > u) lo = t; else hi = t;
        const double g = std::log(s) - log_u;
        if (g == 0.0) return t;
        const double dg = -std_t_pdf(nu, t) / s;
        double next = t - g / dg;
        if (!(next > lo && next < hi) || !std::isfinite(next)) next = std::isinf(hi) ? 2.0 * std::max(t, 1.0) : 0.5 * (lo + hi);
        if (std::fabs(next - t) <= 1e-15 * std::max(1.0, t)) return next;
        t = next;
    }
    throw numeric_error("student_t quantile did not converge");
}
inline double std_t_quantile_upper(double nu, double u) {
    return u <= 0.5 ? std_t_upper_quantile(nu, u) : -std_t_upper_quantile(nu, 1.0 - u);
}

inline double pdf(const StudentT& p, double x) { return std_t_pdf(p.dof, (x - p.location) / p.scale) / p.scale; }
inline double cdf(const StudentT& p, double x) { return std_t_cdf(p.dof, (x - p.location) / p.scale); }
inline double sf(const StudentT& p, double x) { return std_t_sf(p.dof, (x - p.location) / p.scale); }
inline double quantile(const StudentT& p, double a) {
    const double t = a >= 0.5 ? std_t_quantile_upper(p.dof, 1.0 - a) : -std_t_quantile_upper(p.dof, a);
    return p.location + p.scale * t;
}
inline double quantile_upper(const StudentT& p, double u) { return p.location + p.scale * std_t_quantile_upper(p.dof, u); }
inline double mean(const StudentT& p) { return p.dof > 1.0 ? p.location : kInfinity; }
inline double variance(const StudentT& p) { return p.dof > 2.0 ? p.scale * p.scale * p.dof / (p.dof - 2.0) : kInfinity; }
inline SupportBound support(const StudentT&) { return {-kInfinity, kInfinity}; }

// ---- Weibull ----
inline double pdf(const Weibull& p, double x) {
    if (x < 0) return 0.0;
    if (x == 0) return p.shape < 1 ? kInfinity : (p.shape == 1 ? 1.0 / p.scale : 0.0);
    const double z = x / p.scale;
    return p.shape / p.scale * std::pow(z, p.shape - 1.0) * std::exp(-std::pow(z, p.shape));
}
inline double cdf(const Weibull& p, double x) { return x <= 0 ? 0.0 : -std::expm1(-std::pow(x / p.scale, p.shape)); }
inline double sf(const Weibull& p, double x) { return x <= 0 ? 1.0 : std::exp(-std::pow(x / p.scale, p.shape)); }
inline double quantile(const Weibull& p, double a) { return p.scale * std::pow(-std::log1p(-a), 1.0 / p.shape); }
inline double quantile_upper(const Weibull& p, double u) { return p.scale * std::pow(-std::log(u), 1.0 / p.shape); }
inline double mean(const Weibull& p) { return p.scale * std::tgamma(1.0 + 1.0 / p.shape); }
inline double variance(const Weibull& p) {
    const double g1 = std::tgamma(1.0 + 1.0 / p.shape);
    return p.scale * p.scale * (std::tgamma(1.0 + 2.0 / p.shape) - g1 * g1);
}
inline SupportBound support(const Weibull&) { return {0.0, kInfinity}; }

// ---- Log-logistic ----
inline double pdf(const LogLogistic& p, double x) {
    if (x <= 0) return (x == 0 && p.shape < 1) ? kInfinity : (x == 0 && p.shape == 1 ? 1.0 / p.scale : 0.0);
    const double z = x / p.scale;
    const double r = std::pow(z, p.shape);
    return (p.shape / p.scale) * std::pow(z, p.shape - 1.0) / ((1.0 + r) * (1.0 + r));
}
inline double cdf(const LogLogistic& p, double x) { return x <= 0 ? 0.0 : 1.0 / (1.0 + std::pow(x / p.scale, -p.shape)); }
inline double sf(const LogLogistic& p, double x) { return x <= 0 ? 1.0 : 1.0 / (1.0 + std::pow(x / p.scale, p.shape)); }
inline double quantile(const LogLogistic& p, double a) { return p.scale * std::pow(a / (1.0 - a), 1.0 / p.shape); }
inline double quantile_upper(const LogLogistic& p, double u) { return p.scale * std::pow((1.0 - u) / u, 1.0 / p.shape); }
inline double pi_csc(double b) {
    const double t = std::numbers::pi / b;
    return t / std::sin(t);
}
inline double mean(const LogLogistic& p) { return p.shape > 1.0 ? p.scale * pi_csc(p.shape) : kInfinity; }
inline double variance(const LogLogistic& p) {
    if (p.shape <= 2.0) return kInfinity;
    const double m1 = pi_csc(p.shape);
    return p.scale * p.scale * (pi_csc(0.5 * p.shape) - m1 * m1);
}
inline SupportBound support(const LogLogistic&) { return {0.0, kInfinity}; }

// ---- GEV ----
inline SupportBound support(const GEV& p) {
    if (is_zero_shape(p.shape)) return {-kInfinity, kInfinity};
    const double edge = p.location - p.scale / p.shape;
    return p.shape > 0 ? SupportBound{edge, kInfinity} : SupportBound{-kInfinity, edge};
}
// T(x) with F(x) = exp(-T(x)); returns +inf/0 outside the support.
inline double gev_t(const GEV& p, double x) {
    const double z = (x - p.location) / p.scale;
    if (is_zero_shape(p.shape)) return std::exp(-z);
    const double t = 1.0 + p.shape * z;
    if (t <= 0.0) return p.shape > 0 ? kInfinity : 0.0;
    return std::exp(-std::log(t) / p.shape);
}
inline double pdf(const GEV& p, double x) {
    const double T = gev_t(p, x);
    if (T == 0.0 || std::isinf(T)) return 0.0;
    // f = (1/s) T^(xi+1) e^(-T)
    return std::exp((p.shape + 1.0) * std::log(T) - T) / p.scale;
}
inline double cdf(const GEV& p, double x) { return std::exp(-gev_t(p, x)); }
inline double sf(const GEV& p, double x) { return -std::expm1(-gev_t(p, x)); }
inline double gev_from_log_t(const GEV& p, double log_t) {
    // x with T(x) = exp(log_t)
    if (is_zero_shape(p.shape)) return p.location - p.scale * log_t;
    return p.location + p.scale * std::expm1(-p.shape * log_t) / p.shape;
}
inline double quantile(const GEV& p, double a) { return gev_from_log_t(p, std::log(-std::log(a))); }
inline double quantile_upper(const GEV& p, double u) { return gev_from_log_t(p, std::log(-std::log1p(-u))); }
inline double mean(const GEV& p) {
    if (is_zero_shape(p.shape)) return p.location + p.scale * std::numbers::egamma;
    if (p.shape >= 1.0) return kInfinity;
    return p.location + p.scale * (std::tgamma(1.0 - p.shape) - 1.0) / p.shape;
}
inline double variance(const GEV& p) {
    if (is_zero_shape(p.shape)) return p.scale * p.scale * std::numbers::pi * std::numbers::pi / 6.0;
    if (p.shape >= 0.5) return kInfinity;
    const double g1 = std::tgamma(1.0 - p.shape);
    const double g2 = std::tgamma(1.0 - 2.0 * p.shape);
    return p.scale * p.scale * (g2 - g1 * g1) / (p.shape * p.shape);
}

}  // namespace detail

inline double pdf(const DistributionSpec& d, double x) {
    return std::visit([x](const auto& p) { return detail::pdf(p, x); }, d.params());
}
inline double cdf(const DistributionSpec& d, double x) {
    return std::visit([x](const auto& p) { return detail::cdf(p, x); }, d.params());
}
/// Survival function 1 - F(x), evaluated without cancellation in the right tail.
inline double sf(const DistributionSpec& d, double x) {
    return std::visit([x](const auto& p) { return detail::sf(p, x); }, d.params());
}
inline double quantile(const DistributionSpec& d, double alpha) {
    detail::check_level(alpha, "quantile");
    return std::visit([alpha](const auto& p) { return detail::quantile(p, alpha); }, d.params());
}
/// Quantile at level 1 - u, parameterized by the tail mass u so that levels
/// closer to one than machine epsilon remain representable.
inline double quantile_upper(const DistributionSpec& d, double u) {
    detail::check_level(u, "quantile_upper");
    return std::visit([u](const auto& p) { return detail::quantile_upper(p, u); }, d.params());
}
inline double mean(const DistributionSpec& d) {
    return std::visit([](const auto& p) { return detail::mean(p); }, d.params());
}
inline double variance(const DistributionSpec& d) {
    return std::visit([](const auto& p) { return detail::variance(p); }, d.params());
}
inline SupportBound support(const DistributionSpec& d) {
    return std::visit([](const auto& p) { return detail::support(p); }, d.params());
}

/// Map a 64-bit random word to a double in the open interval (0, 1).
inline double open_unit_interval(std::uint64_t bits) {
    return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
}

/// Inverse-transform sample from a uniform word source (e.g. std::mt19937_64).
template <class Engine>
double sample(const DistributionSpec& d, Engine& engine) {
    const double u = open_unit_interval(static_cast<std::uint64_t>(engine()));
    return u < 0.5 ? quantile(d, u) : quantile_upper(d, 1.0 - u);
}

}  // namespace tailrisk
