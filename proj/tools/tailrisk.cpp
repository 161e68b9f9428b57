// tailrisk: command-line front end for tail metrics, oracle checks,
// portfolio optimization and superquantile fitting.
//
// Exit codes: 0 success, 1 input/validation error, 2 domain or numeric error.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <iterator>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "tailrisk/distributions.hpp"
#include "tailrisk/estimation.hpp"
#include "tailrisk/io.hpp"
#include "tailrisk/numeric_oracle.hpp"
#include "tailrisk/portfolio.hpp"
#include "tailrisk/tail_metrics.hpp"

using json = nlohmann::json;
using namespace tailrisk;

namespace {

constexpr std::uint64_t kDefaultSeed = 20240611;

// Infinite and NaN values are written as strings so output stays valid JSON.
json num(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    return v;
}

json num_array(const std::vector<double>& v) {
    json a = json::array();
    for (double x : v) a.push_back(num(x));
    return a;
}

std::string cell(const json& v) {
    if (v.is_string()) return v.get<std::string>();
    std::ostringstream s;
    s.precision(17);
    if (v.is_number()) s << v.get<double>();
    else s << v.dump();
    return s.str();
}

struct Output {
    std::string format = "json";
    std::string path;

    void write(const std::string& text) const {
        if (path.empty()) {
            std::cout << text;
            return;
        }
        std::ofstream out(path);
        if (!out) throw validation_error("cannot write '" + path + "'");
        out << text;
    }

    // CSV: one header row of the scalar keys and one value row.
    void emit(const json& j) const {
        if (format == "json") {
            write(j.dump(2) + "\n");
            return;
        }
        std::string head, row;
        for (const auto& [k, v] : j.items()) {
            if (v.is_object() || v.is_array()) continue;
            head += (head.empty() ? "" : ",") + k;
            row += (row.empty() ? "" : ",") + cell(v);
        }
        write(head + "\n" + row + "\n");
    }
};

std::uint64_t default_seed() {
    if (const char* env = std::getenv("TAILRISK_SEED")) {
        try {
            return std::stoull(env);
        } catch (const std::exception&) {
            throw validation_error("TAILRISK_SEED must be a non-negative integer");
        }
    }
    return kDefaultSeed;
}

// Parameter flags shared by the subcommands that take a distribution.
struct DistFlags {
    std::string family;
    std::string spec;
    std::map<std::string, std::optional<double>> values{
        {"lambda", {}}, {"a", {}}, {"xm", {}}, {"mu", {}}, {"s", {}}, {"xi", {}},
        {"b", {}},      {"sigma", {}}, {"nu", {}}, {"k", {}}};

    void attach(CLI::App* app) {
        app->add_option("--family", family, "Distribution family");
        app->add_option("--spec", spec, "Distribution as JSON {\"family\", \"params\"} or @file");
        for (auto& [name, slot] : values) app->add_option("--" + name, slot, "Parameter " + name);
    }

    DistributionSpec build() const {
        if (!spec.empty()) {
            std::string text = spec;
            if (text.front() == '@') {
                std::ifstream in(text.substr(1));
                if (!in) throw validation_error("cannot open '" + text.substr(1) + "'");
                text.assign(std::istreambuf_iterator<char>(in), {});
            }
            json j;
            try {
                j = json::parse(text);
            } catch (const json::exception& e) {
                throw validation_error(std::string("--spec: ") + e.what());
            }
            if (!j.contains("family") || !j["family"].is_string() || !j.contains("params") || !j["params"].is_object())
                throw validation_error("--spec needs {\"family\": string, \"params\": {name: number}}");
            std::map<std::string, double> named;
            for (const auto& [k, v] : j["params"].items()) {
                if (!v.is_number()) throw validation_error("--spec: parameter '" + k + "' is not a number");
                named[k] = v.get<double>();
            }
            return make_distribution(j["family"].get<std::string>(), named);
        }
        if (family.empty()) throw validation_error("--family or --spec is required");
        std::map<std::string, double> named;
        for (const auto& [name, slot] : values)
            if (slot) named[name] = *slot;
        return make_distribution(family, named);
    }
};

json distribution_json(const DistributionSpec& d) {
    json p = json::object();
    for (const auto& [k, v] : named_parameters(d)) p[k] = num(v);
    return {{"family", std::string(family_info(d.family()).name)}, {"params", p}};
}

std::string regime_name(BpoeRegime r) {
    switch (r) {
        case BpoeRegime::Interior: return "interior";
        case BpoeRegime::AtOrBelowMean: return "at_or_below_mean";
        case BpoeRegime::AtOrAboveSupremum: return "at_or_above_supremum";
        case BpoeRegime::InfiniteMean: return "infinite_mean";
    }
    return "interior";
}

QualifiedFamily parse_qualified(const std::string& name, double nu, double xi) {
    const Family f = parse_family(name);
    switch (f) {
        case Family::Normal: return QualifiedFamily::normal();
        case Family::Laplace: return QualifiedFamily::laplace();
        case Family::Logistic: return QualifiedFamily::logistic();
        case Family::StudentT: return QualifiedFamily::student_t(nu);
        case Family::GEV: return QualifiedFamily::gev(xi);
        default: return QualifiedFamily::checked({f, 0.0});
    }
}

Eigen::VectorXd bound_vector(const std::vector<double>& v, Eigen::Index n, double fallback, const char* name) {
    if (v.empty()) return Eigen::VectorXd::Constant(n, fallback);
    if (v.size() == 1) return Eigen::VectorXd::Constant(n, v[0]);
    if (static_cast<Eigen::Index>(v.size()) != n)
        throw validation_error(std::string("--") + name + " needs one value or one per asset");
    return Eigen::Map<const Eigen::VectorXd>(v.data(), n);
}

json portfolio_json(const PortfolioReport& r, const AssetUniverse& u, const std::string& objective) {
    json j;
    j["assets"] = u.names;
    j["weights"] = num_array(std::vector<double>(r.weights.data(), r.weights.data() + r.weights.size()));
    j["return"] = num(r.expected_return);
    j["stdev"] = num(r.stdev);
    j["objective"] = num(r.objective);
    j["objective_type"] = objective;
    j["zeta"] = num(r.zeta);
    j["alpha_star"] = num(r.alpha_star);
    j["lambda_equiv"] = objective == "cvar" ? num(r.lambda_equiv) : json(nullptr);
    json bf = json::object(), cf = json::object();
    for (const auto& [k, v] : r.bpoe_by_family) bf[k] = num(v);
    for (const auto& [k, v] : r.cvar_by_family) cf[k] = num(v);
    j["bpoe_by_family"] = bf;
    j["cvar_by_family"] = cf;
    j["diagnostics"] = {{"iterations", r.iterations}, {"stationarity", num(r.stationarity)}};
    return j;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Superquantile (CVaR) and bPOE analytics"};
    app.require_subcommand(1);
    Output out;
    std::optional<std::uint64_t> seed_flag;
    app.add_option("--format", out.format, "Output format")->check(CLI::IsMember({"json", "csv"}));
    app.add_option("--out", out.path, "Write output to PATH instead of standard output");
    app.add_option("--seed", seed_flag, "Random seed (default: TAILRISK_SEED or built-in)");

    // dist
    auto* dist = app.add_subcommand("dist", "Evaluate a distribution or tail metric");
    DistFlags dist_flags;
    dist_flags.attach(dist);
    std::string metric;
    std::optional<double> d_x, d_alpha;
    std::string engine = "auto";
    dist->add_option("--metric", metric, "pdf|cdf|quantile|cvar|bpoe|mean|variance")
        ->required()
        ->check(CLI::IsMember({"pdf", "cdf", "quantile", "cvar", "bpoe", "mean", "variance"}));
    dist->add_option("--x", d_x, "Point or loss threshold");
    dist->add_option("--alpha", d_alpha, "Probability level");
    dist->add_option("--engine", engine, "bPOE engine")->check(CLI::IsMember({"auto", "closed", "root", "minimization"}));

    // oracle
    auto* oracle = app.add_subcommand("oracle", "Numerical reference values (quadrature or Monte Carlo)");
    DistFlags oracle_flags;
    oracle_flags.attach(oracle);
    std::optional<double> o_x, o_alpha;
    bool o_mc = false;
    OracleConfig ocfg;
    oracle->add_option("--alpha", o_alpha, "Superquantile level");
    oracle->add_option("--x", o_x, "bPOE threshold");
    oracle->add_flag("--mc", o_mc, "Monte Carlo superquantile instead of quadrature");
    oracle->add_option("--samples", ocfg.mc_samples, "Monte Carlo sample count");
    oracle->add_option("--abs-tol", ocfg.abs_tol, "Quadrature absolute tolerance");
    oracle->add_option("--max-subdivisions", ocfg.max_subdivisions, "Quadrature subdivision limit");

    // portfolio
    auto* port = app.add_subcommand("portfolio", "Minimal CVaR or bPOE portfolio");
    std::string assets_path, corr_path, objective = "cvar", qfamily = "normal", frontier_csv;
    std::optional<double> p_alpha, p_x;
    double p_nu = 3.0, p_xi = 0.0;
    std::vector<double> lower, upper, sweep;
    port->add_option("--assets", assets_path, "CSV with name, expected_return, stdev")->required();
    port->add_option("--correlations", corr_path, "Correlation matrix CSV")->required();
    port->add_option("--objective", objective, "cvar|bpoe")->check(CLI::IsMember({"cvar", "bpoe"}));
    port->add_option("--alpha", p_alpha, "CVaR level");
    port->add_option("--x", p_x, "bPOE loss threshold");
    port->add_option("--family", qfamily, "normal|student_t|laplace|logistic|gev");
    port->add_option("--nu", p_nu, "Student-t degrees of freedom");
    port->add_option("--xi", p_xi, "GEV shape");
    port->add_option("--lower", lower, "Lower weight bound(s)")->delimiter(',');
    port->add_option("--upper", upper, "Upper weight bound(s)")->delimiter(',');
    port->add_option("--sweep", sweep, "Levels or thresholds for a frontier")->delimiter(',');
    port->add_option("--frontier-csv", frontier_csv, "Write the sweep as CSV to PATH");

    // fit
    auto* fit = app.add_subcommand("fit", "Superquantile matching (LS-MOS / MOS)");
    DistFlags fit_flags;
    fit_flags.attach(fit);
    std::string sample_path, pdf_csv;
    std::vector<double> levels, weights, shifts, targets;
    bool self_test = false, exact = false, baselines = false;
    std::size_t simulate = 0;
    fit->add_option("--sample", sample_path, "Single-column sample CSV");
    fit->add_option("--targets", targets, "Explicit superquantile targets")->delimiter(',');
    fit->add_option("--levels", levels, "Levels alpha_i")->delimiter(',')->required();
    fit->add_option("--weights", weights, "Weights c_i")->delimiter(',');
    fit->add_option("--shifts", shifts, "Conservative shifts eps_i")->delimiter(',');
    fit->add_flag("--self-test", self_test, "Fit exact targets generated from the given parameters");
    fit->add_option("--simulate", simulate, "Draw a sample of this size from the given parameters");
    fit->add_flag("--exact", exact, "Solve the square system (one level per parameter)");
    fit->add_flag("--baselines", baselines, "Add Weibull method-of-moments and maximum-likelihood fits");
    fit->add_option("--pdf-csv", pdf_csv, "Write x, fitted pdf (and baselines) to PATH");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    try {
        const std::uint64_t seed = seed_flag ? *seed_flag : default_seed();

        if (*dist) {
            const auto d = dist_flags.build();
            json j;
            j["metric"] = metric;
            j["distribution"] = distribution_json(d);
            auto need = [](const std::optional<double>& v, const char* flag) {
                if (!v) throw validation_error(std::string("--") + flag + " is required for this metric");
                return *v;
            };
            if (metric == "pdf") j["value"] = num(pdf(d, need(d_x, "x")));
            else if (metric == "cdf") j["value"] = num(cdf(d, need(d_x, "x")));
            else if (metric == "quantile") j["value"] = num(quantile(d, need(d_alpha, "alpha")));
            else if (metric == "mean") j["value"] = num(mean(d));
            else if (metric == "variance") j["value"] = num(variance(d));
            else {
                TailResult r;
                if (metric == "cvar") {
                    r = superquantile_result(d, need(d_alpha, "alpha"));
                } else {
                    const double x = need(d_x, "x");
                    if (engine == "closed") r = detail::with_companions(d, bpoe_closed(d, x), 0);
                    else if (engine == "root") r = bpoe_by_root(d, x);
                    else if (engine == "minimization") r = bpoe_by_minimization(d, x);
                    else r = bpoe(d, x);
                    j["regime"] = regime_name(r.regime);
                }
                j["value"] = num(r.value);
                j["alpha_star"] = num(r.alpha_star);
                j["quantile_star"] = num(r.quantile_star);
            }
            out.emit(j);
            return 0;
        }

        if (*oracle) {
            const auto d = oracle_flags.build();
            ocfg.seed = seed;
            json j;
            j["distribution"] = distribution_json(d);
            if (o_alpha.has_value() == o_x.has_value()) throw validation_error("give exactly one of --alpha or --x");
            if (o_alpha) {
                j["alpha"] = *o_alpha;
                j["closed_form"] = num(superquantile(d, *o_alpha));
                if (o_mc) {
                    const auto m = mc_superquantile(d, *o_alpha, ocfg);
                    j["method"] = "monte_carlo";
                    j["value"] = num(m.estimate);
                    j["error_estimate"] = num(m.standard_error);
                    j["samples"] = m.samples;
                    j["seed"] = seed;
                } else {
                    const auto v = oracle_superquantile(d, *o_alpha, ocfg);
                    j["method"] = "quadrature";
                    j["value"] = num(v.value);
                    j["error_estimate"] = num(v.error_estimate);
                }
            } else {
                if (o_mc) throw validation_error("--mc applies to superquantiles (--alpha) only");
                const auto v = oracle_bpoe(d, *o_x, ocfg);
                j["x"] = *o_x;
                j["closed_form"] = num(bpoe(d, *o_x).value);
                j["method"] = "quadrature";
                j["value"] = num(v.value);
                j["error_estimate"] = num(v.error_estimate);
            }
            out.emit(j);
            return 0;
        }

        if (*port) {
            const auto u = io::load_universe(assets_path, corr_path);
            const auto n = static_cast<Eigen::Index>(u.size());
            const auto q = parse_qualified(qfamily, p_nu, p_xi);
            const Eigen::VectorXd lo = bound_vector(lower, n, 0.0, "lower");
            const Eigen::VectorXd hi = bound_vector(upper, n, 1.0, "upper");
            auto solve = [&](double level) {
                PortfolioProblem p{u, lo, hi, CvarObjective{level}};
                if (objective == "bpoe") {
                    p.objective = BpoeObjective{level};
                    return min_bpoe_portfolio(p, q);
                }
                return min_cvar_portfolio(p, q);
            };
            const auto& chosen = objective == "cvar" ? p_alpha : p_x;
            if (!chosen && sweep.empty())
                throw validation_error(objective == "cvar" ? "--alpha is required" : "--x is required");

            json j;
            if (chosen) {
                const auto r = solve(*chosen);
                j = portfolio_json(r, u, objective);
                j["family"] = q.label();
                j[objective == "cvar" ? "alpha" : "x"] = *chosen;
                if (objective == "cvar") {
                    const auto mc = markowitz_equivalence_check(r.weights, u, r.lambda_equiv, lo, hi);
                    j["markowitz_gap"] = num(mc.max_gap);
                }
            }
            if (!sweep.empty()) {
                std::ostringstream csv;
                csv.precision(12);
                csv << (objective == "cvar" ? "alpha" : "x") << ",return,stdev,objective";
                for (const auto& name : u.names) csv << ',' << name;
                csv << '\n';
                json frontier = json::array();
                for (double level : sweep) {
                    const auto r = solve(level);
                    csv << level << ',' << r.expected_return << ',' << r.stdev << ',' << r.objective;
                    for (Eigen::Index i = 0; i < n; ++i) csv << ',' << r.weights(i);
                    csv << '\n';
                    frontier.push_back({{"level", level}, {"return", num(r.expected_return)}, {"stdev", num(r.stdev)},
                                        {"objective", num(r.objective)}});
                }
                if (!frontier_csv.empty()) {
                    std::ofstream f(frontier_csv);
                    if (!f) throw validation_error("cannot write '" + frontier_csv + "'");
                    f << csv.str();
                }
                j["frontier"] = frontier;
            }
            if (out.format == "csv" && !sweep.empty() && !chosen) {
                std::ostringstream csv;
                csv.precision(12);
                csv << "level,return,stdev,objective\n";
                for (const auto& row : j["frontier"])
                    csv << cell(row["level"]) << ',' << cell(row["return"]) << ',' << cell(row["stdev"]) << ','
                        << cell(row["objective"]) << '\n';
                out.write(csv.str());
            } else {
                out.emit(j);
            }
            return 0;
        }

        if (*fit) {
            std::optional<DistributionSpec> truth;
            Family family;
            const bool has_params = std::any_of(fit_flags.values.begin(), fit_flags.values.end(),
                                                [](const auto& kv) { return kv.second.has_value(); }) ||
                                    !fit_flags.spec.empty();
            if (self_test || simulate > 0) {
                if (!has_params) throw validation_error("--self-test and --simulate need generating parameters");
                truth = fit_flags.build();
                family = truth->family();
            } else {
                if (fit_flags.family.empty()) throw validation_error("--family is required");
                family = parse_family(fit_flags.family);
            }

            std::vector<double> xs;
            FitProblem problem;
            if (self_test) {
                std::vector<double> t;
                for (std::size_t i = 0; i < levels.size(); ++i) {
                    const double e = shifts.empty() ? 0.0 : shifts.at(i);
                    t.push_back(superquantile(*truth, levels[i] - e));
                }
                problem = FitProblem::from_targets(family, levels, t, weights, shifts);
            } else if (!targets.empty()) {
                problem = FitProblem::from_targets(family, levels, targets, weights, shifts);
            } else {
                if (simulate > 0) {
                    std::mt19937_64 engine(seed);
                    xs.resize(simulate);
                    for (auto& x : xs) x = sample(*truth, engine);
                } else if (!sample_path.empty()) {
                    xs = io::read_sample_csv(sample_path);
                } else {
                    throw validation_error("one of --sample, --targets, --simulate or --self-test is required");
                }
                problem = FitProblem::from_sample(family, xs, levels, weights, shifts);
            }

            json j;
            j["family"] = std::string(family_info(family).name);
            j["levels"] = levels;
            j["targets"] = num_array(problem.targets);
            try {
                const auto r = exact ? mos_solve(problem) : ls_mos_fit(problem);
                j["params"] = distribution_json(r.params)["params"];
                j["residuals"] = num_array(r.residuals);
                j["objective"] = num(r.objective);
                j["diagnostics"] = {{"iterations", r.iterations}, {"restarts", r.restarts},
                                    {"gradient_norm", num(r.gradient_norm)}, {"converged", r.converged}};
                if (truth) j["generating"] = distribution_json(*truth)["params"];

                std::optional<WeibullBaselines> base;
                if (baselines) {
                    if (family != Family::Weibull || xs.empty())
                        throw validation_error("--baselines needs a Weibull fit on a sample");
                    base = reference_fits(xs);
                    j["baselines"] = {
                        {"method_of_moments", distribution_json(DistributionSpec(base->method_of_moments))["params"]},
                        {"maximum_likelihood", distribution_json(DistributionSpec(base->maximum_likelihood))["params"]}};
                }
                if (!pdf_csv.empty()) {
                    std::ofstream f(pdf_csv);
                    if (!f) throw validation_error("cannot write '" + pdf_csv + "'");
                    f.precision(12);
                    const double lo_x = xs.empty() ? quantile(r.params, 0.001) : *std::min_element(xs.begin(), xs.end());
                    const double hi_x = xs.empty() ? quantile(r.params, 0.999) : *std::max_element(xs.begin(), xs.end());
                    f << "x,fitted_pdf" << (base ? ",mm_pdf,ml_pdf" : "") << '\n';
                    for (int i = 0; i <= 200; ++i) {
                        const double x = lo_x + (hi_x - lo_x) * i / 200.0;
                        f << x << ',' << pdf(r.params, x);
                        if (base)
                            f << ',' << pdf(DistributionSpec(base->method_of_moments), x) << ','
                              << pdf(DistributionSpec(base->maximum_likelihood), x);
                        f << '\n';
                    }
                }
            } catch (const fit_error& e) {
                j["error"] = e.what();
                j["params"] = num_array(e.params());
                j["residuals"] = num_array(e.residuals());
                j["objective"] = num(e.objective());
                out.emit(j);
                std::cerr << "error: " << e.what() << '\n';
                return 2;
            }
            out.emit(j);
            return 0;
        }
    } catch (const validation_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 1;
}
