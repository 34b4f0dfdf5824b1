#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "mfgc/errors.hpp"
#include "mfgc/mufix.hpp"

using namespace mfgc;
constexpr double kTwoPi = 2.0 * std::numbers::pi;

namespace {

ScalarField random_density(const TorusGrid& g, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> ud(-0.3, 0.3);
    const double a = ud(rng), b = ud(rng), c = ud(rng);
    ScalarField m = ScalarField::sample(
        g, [&](double x) { return 1.0 + a * std::cos(kTwoPi * x) + b * std::sin(kTwoPi * x) + c * std::cos(2 * kTwoPi * x); });
    const double mass = integrate(m);
    for (double& v : m) v /= mass;
    return m;
}

ScalarField random_p(const TorusGrid& g, std::mt19937_64& rng, double scale = 2.0) {
    std::uniform_real_distribution<double> ud(-scale, scale);
    const double a = ud(rng), b = ud(rng), c = ud(rng);
    return ScalarField::sample(g, [&](double x) { return c + a * std::cos(kTwoPi * x) + b * std::sin(2 * kTwoPi * x); });
}

} // namespace

TEST(TruncateTM, Examples) {
    EXPECT_EQ(truncate_TM(0.05, 0.1), 0.05);
    EXPECT_EQ(truncate_TM(-0.3, 0.1), -0.1);
    EXPECT_EQ(truncate_TM(123.0, kInfinity), 123.0);
}

TEST(TruncateTM, BoundedAndLipschitz) {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> ud(-10.0, 10.0);
    for (int s = 0; s < 1000; ++s) {
        const double a = ud(rng), b = ud(rng), M = std::abs(ud(rng)) + 1e-3;
        EXPECT_LE(std::abs(truncate_TM(a, M)), M * (1.0 + 1e-15));
        EXPECT_LE(std::abs(truncate_TM(a, M) - truncate_TM(b, M)), std::abs(a - b) * (1.0 + 1e-12));
    }
}

TEST(SolveMu, LinearDemandExamples) {
    const TorusGrid g(16);
    const ScalarField zero(g), uni(g, 1.0);
    const auto a = solve_mu(Model(g, LinearDemand{1.0}), zero, uni);
    for (double v : a.alpha) EXPECT_NEAR(v, 0.2, 1e-12);
    const auto b = solve_mu(Model(g, LinearDemand{0.0}), zero, uni);
    for (double v : b.alpha) EXPECT_NEAR(v, 0.5, 1e-12);
    const auto c = solve_mu(Model(g, LinearDemand{1.0}), zero, uni, MuOptions{0.1, 1e-12, 200, nullptr});
    for (double v : c.alpha) EXPECT_EQ(v, 0.1);
    EXPECT_TRUE(c.report.converged);
}

TEST(SolveMu, ReportInvariants) {
    const TorusGrid g(16);
    const auto r = solve_mu(Model(g, LinearDemand{2.0}), ScalarField(g, 0.3), ScalarField(g, 1.0));
    EXPECT_TRUE(r.report.converged);
    EXPECT_LE(r.report.final_residual, 1e-12);
    EXPECT_GE(r.report.iterations, 2u);
    ASSERT_TRUE(r.report.contraction_estimate.has_value());
    EXPECT_LE(*r.report.contraction_estimate, 1.0 / 3.0 + 0.05);

    // One iteration is not enough to estimate a ratio.
    const auto one = solve_mu(Model(g, LinearDemand{0.0}), ScalarField(g), ScalarField(g, 1.0));
    EXPECT_LE(one.report.iterations, 2u);
    if (one.report.iterations < 2) EXPECT_FALSE(one.report.contraction_estimate.has_value());
}

TEST(SolveMu, BudgetExhaustedWhileContractingReturns) {
    const TorusGrid g(16);
    const auto r = solve_mu(Model(g, LinearDemand{10.0}), ScalarField(g, 0.3), ScalarField(g, 1.0),
                            MuOptions{kInfinity, 1e-14, 3, nullptr});
    EXPECT_FALSE(r.report.converged);
    EXPECT_EQ(r.report.iterations, 3u);
}

TEST(SolveMu, NonContractingThrows) {
    // |M| = 2 is outside the model range; the map then has ratio 1.
    const TorusGrid g(16);
    const Model m(g, NegCorrResources{2.0}, {}, {}, false);
    EXPECT_THROW(solve_mu(m, ScalarField(g, 1.0), ScalarField(g, 1.0), MuOptions{kInfinity, 1e-12, 50, nullptr}),
                 NoConvergence);
}

TEST(SolveMu, ClosedFormOracleAndRatios) {
    const TorusGrid g(32);
    std::mt19937_64 rng(11);
    const std::vector<Model> models{Model(g, LinearDemand{0.5}), Model(g, LinearDemand{3.0}),
                                    Model(g, NegCorrResources{-0.7}), Model(g, NegCorrResources{0.4}),
                                    Model(g, PriceImpact{0.2}), Model(g, PriceImpact{0.45})};
    for (const Model& m : models) {
        for (int s = 0; s < 10; ++s) {
            const ScalarField rho = random_density(g, rng);
            const ScalarField p = random_p(g, rng);
            const auto it = solve_mu(m, p, rho);
            const auto cf = solve_mu_closed_form(m, p, rho);
            ASSERT_TRUE(cf.has_value());
            EXPECT_LE(sup_distance(it.alpha.values(), cf->values()), 1e-10) << variant_name(m.spec());
            if (it.report.contraction_estimate)
                EXPECT_LE(*it.report.contraction_estimate, contraction_constant(m) + 0.05) << variant_name(m.spec());
        }
    }
    EXPECT_FALSE(solve_mu_closed_form(Model(g, Flocking{KernelTable::cosine(g, 0.5)}), ScalarField(g),
                                      ScalarField(g, 1.0))
                     .has_value());
}

TEST(SolveMu, KernelModelsContract) {
    const TorusGrid g(32);
    std::mt19937_64 rng(12);
    const std::vector<Model> models{
        Model(g, CrowdMotion{0.5, 0.5, 2.0, 2.0, 2.0, KernelTable::cosine(g, 0.5)}),
        Model(g, CrowdMotion{1.0, -0.8, 3.0, 2.0, 1.5, KernelTable::gaussian(g, 1.0, 0.2)}),
        Model(g, Flocking{KernelTable::cosine(g, 0.5)})};
    for (const Model& m : models) {
        for (int s = 0; s < 5; ++s) {
            const auto r = solve_mu(m, random_p(g, rng), random_density(g, rng));
            EXPECT_TRUE(r.report.converged);
            if (r.report.contraction_estimate)
                EXPECT_LE(*r.report.contraction_estimate, contraction_constant(m) + 0.05) << variant_name(m.spec());
        }
    }
}

TEST(SolveMu, TruncationConsistencyAndUniqueness) {
    const TorusGrid g(32);
    std::mt19937_64 rng(13);
    const Model m(g, CrowdMotion{0.5, 0.6, 2.0, 2.0, 2.0, KernelTable::cosine(g, 0.7)});
    const double tol = 1e-12, lam = contraction_constant(m);
    for (int s = 0; s < 5; ++s) {
        const ScalarField rho = random_density(g, rng), p = random_p(g, rng);
        const auto free = solve_mu(m, p, rho, MuOptions{kInfinity, tol, 500, nullptr});
        const double linf = lambda_moment(JointMeasure{rho, free.alpha}, kInfinity);
        const auto cut = solve_mu(m, p, rho, MuOptions{1.5 * linf, tol, 500, nullptr});
        EXPECT_LE(sup_distance(free.alpha.values(), cut.alpha.values()), tol);

        ControlField start(g);
        std::uniform_real_distribution<double> ud(-3.0, 3.0);
        for (double& v : start) v = ud(rng);
        const auto other = solve_mu(m, p, rho, MuOptions{kInfinity, tol, 500, &start});
        EXPECT_LE(sup_distance(free.alpha.values(), other.alpha.values()), 2.0 * tol / (1.0 - lam));
    }
}

TEST(SolveMu, MomentBoundAtFixedPoint) {
    const TorusGrid g(32);
    std::mt19937_64 rng(14);
    const std::vector<Model> models{Model(g, LinearDemand{1.0}), Model(g, PriceImpact{0.3}),
                                    Model(g, CrowdMotion{0.5, 0.5, 2.0, 2.0, 2.0, KernelTable::cosine(g, 0.5)})};
    for (const Model& m : models) {
        const auto& c = m.constants();
        for (int s = 0; s < 10; ++s) {
            const ScalarField rho = random_density(g, rng), p = random_p(g, rng, 5.0);
            const auto r = solve_mu(m, p, rho);
            const JointMeasure mu{rho, r.alpha};
            for (double qt : {1.0, 2.0, c.q0, kInfinity}) {
                const double qq = std::max(c.q0, qt);
                ControlField pw(g);
                for (std::size_t i = 0; i < g.size(); ++i) pw[i] = std::pow(std::abs(p[i]), c.q - 1.0);
                const double rhs = c.C0 / (1.0 - c.lambda0) * (1.0 + lambda_moment(JointMeasure{rho, pw}, qq));
                EXPECT_LE(lambda_moment(mu, qt), rhs) << variant_name(m.spec()) << " q~=" << qt;
            }
        }
    }
}

TEST(LambdaMoment, Examples) {
    const TorusGrid g(64);
    const ScalarField uni(g, 1.0);
    for (double q : {1.0, 1.5, 2.0, 7.0, kInfinity})
        EXPECT_NEAR(lambda_moment(JointMeasure{uni, ControlField(g, -0.35)}, q), 0.35, 1e-14);
    const JointMeasure s{uni, ControlField::sample(g, [](double x) { return std::sin(kTwoPi * x); })};
    EXPECT_NEAR(lambda_moment(s, 2.0), 1.0 / std::sqrt(2.0), 1e-12);
    EXPECT_THROW(lambda_moment(s, 0.5), DomainError);
}

TEST(LambdaMoment, SupportMaxIgnoresEmptyNodes) {
    const TorusGrid g(8);
    ScalarField m(g, 0.0);
    m[2] = 8.0;
    ControlField a(g, 100.0);
    a[2] = 0.5;
    EXPECT_EQ(lambda_moment(JointMeasure{m, a}, kInfinity), 0.5);
}

TEST(LambdaMoment, JensenOrdering) {
    const TorusGrid g(32);
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> ud(-5.0, 5.0);
    const std::vector<double> qs{1.0, 1.25, 1.5, 2.0, 3.0, 4.0, 8.0, kInfinity};
    for (int s = 0; s < 200; ++s) {
        const ScalarField rho = random_density(g, rng);
        ControlField a(g);
        for (double& v : a) v = ud(rng);
        const JointMeasure mu{rho, a};
        for (std::size_t k = 1; k < qs.size(); ++k)
            EXPECT_LE(lambda_moment(mu, qs[k - 1]), lambda_moment(mu, qs[k]) + 1e-12);
    }
}
