#include "qibem/quadrature.hpp"

#include "graded_quadrature.hpp"

#include <gtest/gtest.h>

using namespace qibem;

namespace {

QuadratureConfig config(Procedure proc, int p, int nodes, QiVariant v) {
    QuadratureConfig c;
    c.procedure = proc;
    c.qi_degree = p;
    c.nodes = nodes;
    c.variant = v;
    return c;
}

// Span-wise Gauss of B_i g over the restricted support; g smooth.
double reference_regular(const SplineSpace& sp, int i, const std::function<double(double)>& g) {
    double sum = 0.0;
    const auto [lo, hi] = sp.restricted_support(i);
    for (int mu : sp.spans()) {
        const double a = sp.knot(mu), b = sp.knot(mu + 1);
        if (b <= lo || a >= hi) continue;
        sum += composite_gauss([&](double t) { return sp.value_in_span(i, mu, t, 0) * g(t); }, a, b, 20, 4);
    }
    return sum;
}

} // namespace

TEST(Gauss, Basics) {
    EXPECT_NEAR(gauss_legendre([](double x) { return x * x * x; }, 0, 1, 2), 0.25, 1e-16);
    EXPECT_NEAR(gauss_legendre([](double x) { return std::exp(x); }, 0, 1, 10), std::exp(1.0) - 1.0, 1e-14);
    for (int n = 1; n <= 12; ++n) {
        const int deg = 2 * n - 1;
        EXPECT_NEAR(gauss_legendre([&](double x) { return std::pow(x, deg); }, 0, 1, n), 1.0 / (deg + 1), 1e-14);
    }
}

TEST(Telles, LogEndpointAndInterior) {
    EXPECT_NEAR(telles([](double) { return 1.0; }, 0.0, 0.0, 1.0, 20), -1.0, 1e-6);
    const double exact = 2.0 * (0.5 * std::log(0.5) - 0.5);
    EXPECT_NEAR(telles([](double) { return 1.0; }, 0.5, 0.0, 1.0, 40), exact, 1e-6);
    EXPECT_NEAR(telles_log_baseline([](double) { return 1.0; }, 0.3, 0.0, 1.0, 30),
                log_power_moment(0, 0.3, 0.0, 1.0), 1e-6);
}

TEST(Classify, Routing) {
    EXPECT_EQ(classify_integral(0.5, 0.0, 1.0, 2.0), IntegralClass::singular);
    EXPECT_EQ(classify_integral(1.5, 0.0, 1.0, 2.0), IntegralClass::nearly_singular);
    EXPECT_EQ(classify_integral(-10.0, 0.0, 1.0, 2.0), IntegralClass::regular);
}

TEST(Qi1, HermiteConstantIsExact) {
    SplineSpace sp(KnotVector::open_uniform(-1, 1, 2, 10));
    const auto cfg = config(Procedure::qi1, 2, 7, QiVariant::hermite);
    for (int i = 0; i < sp.dimension(); ++i) {
        const double v = qi1_regular([](double) { return 1.0; }, sp, i, cfg, [](double) { return 0.0; });
        EXPECT_NEAR(v, sp.bspline_integral(i), 1e-13);
    }
}

TEST(Qi1, DerivativeFreeConstantIsInexact) {
    SplineSpace sp(KnotVector::open_uniform(-1, 1, 2, 10));
    const auto cfg = config(Procedure::qi1, 2, 7, QiVariant::derivative_free);
    const double v = qi1_regular([](double) { return 1.0; }, sp, 5, cfg);
    EXPECT_GT(std::abs(v - sp.bspline_integral(5)), 1e-10);
}

TEST(Qi1, HermiteRequiresKnotSubset) {
    SplineSpace sp(KnotVector::open_uniform(-1, 1, 2, 10));
    EXPECT_THROW(SupportRule(sp, 5, config(Procedure::qi1, 2, 6, QiVariant::hermite)), std::invalid_argument);
    EXPECT_THROW(SupportRule(sp, 5, config(Procedure::qi1, 1, 7, QiVariant::hermite)), std::invalid_argument);
}

TEST(Qi1, HermiteSingularConstantIsExact) {
    for (int d : {2, 3}) {
        SplineSpace sp(KnotVector::open_uniform(0, 1, d, 8));
        const auto cfg = config(Procedure::qi1, d, 13, QiVariant::hermite);
        for (double s : {0.13, 0.5, 0.777}) {
            const auto mu = modified_moments(sp, s, DomainKind::open_arc, 1.0);
            for (int i = 0; i < sp.dimension(); ++i) {
                const double v = qi1_singular([](double) { return 1.0; }, s, sp, i, DomainKind::open_arc, 1.0, cfg,
                                              [](double) { return 0.0; });
                const SupportRule rule(sp, i, cfg);
                if (classify_integral(s, rule.lo(), rule.hi(), cfg.near_radius) == IntegralClass::regular) continue;
                EXPECT_NEAR(v, mu[i], 1e-12) << d << " " << s << " " << i;
            }
        }
    }
}

TEST(Qi2, PolynomialExactness) {
    SplineSpace sp(KnotVector::open_uniform(-1, 1, 2, 10));
    for (int p : {2, 3}) {
        const auto cfg = config(Procedure::qi2, p, 7, QiVariant::derivative_free);
        for (int m = 0; m <= p; ++m) {
            auto g = [m](double t) { return std::pow(t + 0.3, m); };
            for (int i : {0, 1, 5, 11}) EXPECT_NEAR(qi2_regular(g, sp, i, cfg), reference_regular(sp, i, g), 1e-12);
        }
    }
}

TEST(Qi2, SingularConstantMatchesMoments) {
    std::vector<double> br;
    for (int k = 0; k <= 6; ++k) br.push_back(-1.0 + k / 3.0);
    SplineSpace sp(KnotVector::periodic(br, std::vector<int>(7, 1), 3));
    const auto cfg = config(Procedure::qi2, 2, 5, QiVariant::derivative_free);
    for (double s : {-0.9, 0.0, 0.35}) {
        const auto mu = modified_moments(sp, s, DomainKind::closed_curve, 2.0);
        for (int i = 3; i <= 5; ++i) {
            const SupportRule rule(sp, i, cfg);
            EXPECT_NEAR(rule.integrate_singular([](double) { return 1.0; }, s, DomainKind::closed_curve, 2.0), mu[i],
                        1e-10);
        }
    }
}

TEST(Qi2, SingularPolynomialLinearity) {
    SplineSpace sp(KnotVector::open_uniform(0, 1, 2, 6));
    const auto cfg = config(Procedure::qi2, 2, 7, QiVariant::derivative_free);
    auto g = [](double t) { return 1.0 - 2.0 * t + 3.0 * t * t; };
    const double s = 0.41;
    for (int i = 0; i < sp.dimension(); ++i) {
        const SupportRule rule(sp, i, cfg);
        const double v = rule.integrate_singular(g, s, DomainKind::open_arc, 1.0);
        double ref = 0.0;
        for (int mu : sp.spans()) {
            const double a = sp.knot(mu), b = sp.knot(mu + 1);
            if (b <= rule.lo() || a >= rule.hi()) continue;
            auto f = [&](double t) { return t == s ? 0.0 : sp.value_in_span(i, mu, t, 0) * g(t) * std::log(std::abs(t - s)); };
            ref += testing_oracle::graded_around(f, a, b, s);
        }
        EXPECT_NEAR(v, ref, 1e-12);
    }
}

TEST(Qi2, HermiteVariantMatchesDerivativeFreeOnCubics) {
    SplineSpace sp(KnotVector::open_uniform(0, 1, 3, 5));
    auto g = [](double t) { return t * t * t - t; };
    auto dg = [](double t) { return 3 * t * t - 1; };
    const auto h = config(Procedure::qi2, 3, 9, QiVariant::hermite);
    const auto f = config(Procedure::qi2, 3, 9, QiVariant::derivative_free);
    for (int i = 0; i < sp.dimension(); ++i)
        EXPECT_NEAR(qi2_regular(g, sp, i, h, dg), qi2_regular(g, sp, i, f), 1e-13);
}

// The jump across the routing boundary is the regular rule's error on log|s - t| g
// at distance 2 |D_i|. It meets 1e-8 with enough nodes; with p = 2 and few
// nodes it does not, and the test records that rather than hiding it.
TEST(Routing, GapAtNearRadius) {
    auto g = [](double t) { return std::sqrt(1 + 4 * t * t); };
    for (int E : {10, 20, 40})
        for (int p : {2, 3}) {
            double prev = 1.0;
            for (int nodes : {7, 13, 25}) {
                SplineSpace sp(KnotVector::open_uniform(0, 1, 2, E));
                auto cfg = config(Procedure::qi2, p, nodes, QiVariant::derivative_free);
                cfg.near_radius = 2.0;
                const SupportRule rule(sp, E / 2, cfg);
                const double w = rule.hi() - rule.lo();
                double gap = 0.0;
                for (double sign : {-1.0, 1.0}) {
                    const double s = sign < 0 ? rule.lo() - cfg.near_radius * w : rule.hi() + cfg.near_radius * w;
                    const double a = singular_routed(rule, g, s - 1e-9 * sign, DomainKind::open_arc, 1.0, cfg.near_radius);
                    const double b = singular_routed(rule, g, s + 1e-9 * sign, DomainKind::open_arc, 1.0, cfg.near_radius);
                    gap = std::max(gap, std::abs(a - b));
                }
                EXPECT_LT(gap, prev) << E << " " << p << " " << nodes;
                if (nodes == 25 || (p == 3 && nodes == 13)) EXPECT_LT(gap, 1e-8) << E << " " << p << " " << nodes;
                prev = gap;
            }
        }
}

TEST(Routing, ClosedCurveImagesCount) {
    EXPECT_EQ(classify_integral(0.95, -1.0, -0.8, 2.0, DomainKind::closed_curve, 2.0), IntegralClass::nearly_singular);
    EXPECT_EQ(classify_integral(0.95, -1.0, -0.8, 2.0), IntegralClass::regular);
    EXPECT_EQ(classify_integral(1.0, -1.0, -0.8, 2.0, DomainKind::closed_curve, 2.0), IntegralClass::singular);
}

TEST(Monotone, MoreNodesNoWorse) {
    SplineSpace sp(KnotVector::open_uniform(-1, 1, 2, 10));
    auto g = [](double t) { return 3 * std::sin(std::numbers::pi * (t + 1)) * std::cos(t + 1); };
    for (Procedure proc : {Procedure::qi1, Procedure::qi2}) {
        double e7 = 0, e13 = 0;
        for (int i = 0; i < sp.dimension(); ++i) {
            const double ref = reference_regular(sp, i, g);
            e7 = std::max(e7, std::abs(SupportRule(sp, i, config(proc, 2, 7, QiVariant::derivative_free))
                                           .integrate_regular(g) - ref));
            e13 = std::max(e13, std::abs(SupportRule(sp, i, config(proc, 2, 13, QiVariant::derivative_free))
                                             .integrate_regular(g) - ref));
        }
        EXPECT_LE(e13, e7);
    }
}
