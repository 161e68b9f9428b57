#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "support/catalog.hpp"
#include "tailrisk/distributions.hpp"
#include "tailrisk/quadrature.hpp"

using namespace tailrisk;
using tailrisk::testing::catalog;

TEST(Validation, AcceptsValidParameters) {
    EXPECT_NO_THROW(DistributionSpec(Exponential{1.0}));
    EXPECT_NO_THROW(DistributionSpec(Weibull{0.5, 1.4}));
    EXPECT_NO_THROW(DistributionSpec(StudentT{3.0, 1.0, -1e6}));
}

TEST(Validation, NamesTheViolatedConstraint) {
    try {
        DistributionSpec(Pareto{-1.0, 1.0});
        FAIL() << "expected validation_error";
    } catch (const validation_error& e) {
        EXPECT_NE(std::string(e.what()).find("a > 0"), std::string::npos) << e.what();
    }
    EXPECT_THROW(DistributionSpec(Normal{0.0, 0.0}), validation_error);
    EXPECT_THROW(DistributionSpec(GEV{0.0, 1.0, NAN}), validation_error);
    EXPECT_THROW(DistributionSpec(LogLogistic{1.0, -2.0}), validation_error);
}

TEST(Construction, NamedParameters) {
    const auto d = make_distribution("student_t", {{"nu", 3.0}, {"s", 2.0}, {"mu", 1.0}});
    EXPECT_EQ(d.family(), Family::StudentT);
    EXPECT_EQ(parameter_vector(d), (std::vector<double>{3.0, 2.0, 1.0}));
    EXPECT_EQ(named_parameters(d).at("mu"), 1.0);
    EXPECT_THROW(make_distribution("normal", {{"mu", 0.0}}), validation_error);
    EXPECT_THROW(make_distribution("normal", {{"mu", 0.0}, {"sigma", 1.0}, {"xi", 0.0}}), validation_error);
    EXPECT_THROW(make_distribution("cauchy", {}), validation_error);
    EXPECT_EQ(parse_family("gumbel"), Family::GEV);
}

TEST(Construction, CanonicalOrderRoundTrips) {
    for (const auto& s : catalog()) {
        const auto v = parameter_vector(s.dist);
        const auto back = make_distribution(s.dist.family(), v);
        EXPECT_EQ(parameter_vector(back), v) << s.label;
        std::map<std::string, double> named = named_parameters(s.dist);
        EXPECT_EQ(parameter_vector(make_distribution(family_info(s.dist.family()).name, named)), v) << s.label;
    }
}

TEST(Evaluators, SimpleValues) {
    EXPECT_DOUBLE_EQ(cdf(DistributionSpec(Logistic{0.0, 1.0}), 0.0), 0.5);
    EXPECT_EQ(cdf(DistributionSpec(Exponential{2.0}), -1.0), 0.0);
    EXPECT_NEAR(pdf(DistributionSpec(Normal{0.0, 1.0}), 0.0), 1.0 / std::sqrt(2.0 * std::numbers::pi), 1e-16);
    EXPECT_NEAR(quantile(DistributionSpec(Exponential{1.0}), -std::expm1(-1.0)), 1.0, 1e-15);
    EXPECT_EQ(quantile(DistributionSpec(Laplace{0.0, 1.0}), 0.5), 0.0);
    EXPECT_EQ(mean(DistributionSpec(Exponential{2.0})), 0.5);
    EXPECT_NEAR(variance(DistributionSpec(Logistic{3.0, 1.0})), std::numbers::pi * std::numbers::pi / 3.0, 1e-14);
    EXPECT_TRUE(std::isinf(mean(DistributionSpec(Pareto{0.9, 1.0}))));
    EXPECT_TRUE(std::isinf(variance(DistributionSpec(StudentT{2.0, 1.0, 0.0}))));
    EXPECT_TRUE(std::isinf(mean(DistributionSpec(GEV{0.0, 1.0, 1.0}))));
}

TEST(Evaluators, StudentTQuantileMatchesReference) {
    const DistributionSpec t(StudentT{3.0, 1.0, 0.0});
    // mpmath root of the regularized-beta cdf at 0.95
    EXPECT_NEAR(quantile(t, 0.95), 2.3533634348018239, 1e-12);
    EXPECT_NEAR(cdf(t, quantile(t, 0.95)), 0.95, 1e-10);
}

TEST(Evaluators, SupportBounds) {
    const DistributionSpec g(GPD{1.0, 2.0, -0.5});
    EXPECT_EQ(support(g).lower, 1.0);
    EXPECT_NEAR(support(g).upper, 1.0 - 2.0 / -0.5, 1e-15);
    EXPECT_TRUE(std::isinf(support(DistributionSpec(Normal{0, 1})).upper));
    const DistributionSpec w(GEV{0.0, 1.0, -0.4});
    EXPECT_NEAR(support(w).upper, 2.5, 1e-15);
    for (const auto& s : catalog()) EXPECT_LE(support(s.dist).lower, support(s.dist).upper) << s.label;
}

TEST(Evaluators, QuantileRejectsLevelsOutsideUnitInterval) {
    const DistributionSpec d(Normal{0, 1});
    EXPECT_THROW(quantile(d, 0.0), domain_error);
    EXPECT_THROW(quantile(d, 1.0), domain_error);
    EXPECT_THROW(quantile(d, NAN), domain_error);
}

TEST(Evaluators, ZeroShapeDispatch) {
    // Shapes within the zero band use the dedicated xi = 0 forms.
    const DistributionSpec g0(GEV{0.0, 1.0, 0.0});
    const DistributionSpec g1(GEV{0.0, 1.0, 1e-12});
    EXPECT_NEAR(quantile(g0, 0.9), quantile(g1, 0.9), 1e-11);
    const DistributionSpec p0(GPD{0.0, 1.0, 0.0});
    EXPECT_NEAR(quantile(p0, 0.9), -std::log(0.1), 1e-14);
}

class EveryDistribution : public ::testing::TestWithParam<int> {
protected:
    tailrisk::testing::Setting setting() const { return catalog()[GetParam()]; }
};

TEST_P(EveryDistribution, CdfInvertsQuantile) {
    const auto s = setting();
    for (int i = 1; i <= 99; ++i) {
        const double a = 0.01 * i;
        EXPECT_NEAR(cdf(s.dist, quantile(s.dist, a)), a, 1e-9) << s.label << " at " << a;
        EXPECT_NEAR(sf(s.dist, quantile_upper(s.dist, 1.0 - a)), 1.0 - a, 1e-9) << s.label << " at " << a;
    }
}

TEST_P(EveryDistribution, SurvivalIsComplementOfCdf) {
    const auto s = setting();
    for (int i = 1; i <= 49; ++i) {
        const double x = quantile(s.dist, 0.02 * i);
        EXPECT_NEAR(cdf(s.dist, x) + sf(s.dist, x), 1.0, 1e-14) << s.label;
    }
}

TEST_P(EveryDistribution, DensityIntegratesToOne) {
    const auto s = setting();
    const auto& d = s.dist;
    auto f = [&](double x) { return pdf(d, x); };
    const double med = quantile(d, 0.5);
    const auto sb = support(d);
    quad::QuadOptions opt{1e-10, 1e-10, 4000};
    double total = 0.0;
    // Lower half: x = med - t^2 style maps keep endpoint singularities integrable.
    if (std::isfinite(sb.lower)) {
        const double w = med - sb.lower;
        total += quad::integrate([&](double t) { return 2.0 * t * w * f(sb.lower + w * t * t); }, 0.0, 1.0, opt).value;
    } else {
        total += quad::integrate_to_infinity([&](double t) { return f(2.0 * med - t); }, med, 1.0, opt).value;
    }
    if (std::isfinite(sb.upper)) {
        const double w = sb.upper - med;
        total += quad::integrate([&](double t) { return 2.0 * t * w * f(sb.upper - w * t * t); }, 0.0, 1.0, opt).value;
    } else {
        total += quad::integrate_to_infinity(f, med, 1.0, opt).value;
    }
    EXPECT_NEAR(total, 1.0, 1e-6) << s.label;
}

TEST_P(EveryDistribution, SampleMeanWithinFourStandardErrors) {
    const auto s = setting();
    const double v = variance(s.dist);
    if (!std::isfinite(v)) GTEST_SKIP() << "infinite variance";
    std::mt19937_64 g(97 + GetParam());
    const int n = 1'000'000;
    double sum = 0.0;
    for (int i = 0; i < n; ++i) sum += sample(s.dist, g);
    EXPECT_NEAR(sum / n, mean(s.dist), 4.0 * std::sqrt(v / n)) << s.label;
}

INSTANTIATE_TEST_SUITE_P(Catalog, EveryDistribution, ::testing::Range(0, static_cast<int>(catalog().size())),
                         [](const auto& info) {
                             std::string n = catalog()[info.param].label;
                             for (auto& c : n)
                                 if (!std::isalnum(static_cast<unsigned char>(c))) c = '_';
                             return n;
                         });
