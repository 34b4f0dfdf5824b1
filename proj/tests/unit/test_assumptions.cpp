#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "mfgc/assumptions.hpp"
#include "mfgc/errors.hpp"
#include "oracles.hpp"

using namespace mfgc;

namespace {

Model linear_demand(std::size_t n) {
    const TorusGrid g(n);
    TerminalCost term;
    term.g0.resize(n);
    for (std::size_t i = 0; i < n; ++i) term.g0[i] = 0.2 * std::cos(2.0 * std::numbers::pi * g.node(i));
    return Model(g, LinearDemand{1.0}, RunningCost{}, term);
}

} // namespace

TEST(OptimalControl, QuadraticClosedForm) {
    // a = b = 2: theta (alpha - l V) + (1 - theta) alpha + p = 0.
    EXPECT_NEAR(optimal_control(0.5, 0.5, 2.0, 2.0, 0.1, 0.8), 0.1, 1e-12);
    for (double theta : {0.2, 0.5, 0.9})
        for (double p : {-2.0, 0.0, 0.7})
            for (double V : {-1.0, 0.3})
                EXPECT_NEAR(optimal_control(theta, 0.6, 2.0, 2.0, p, V), theta * 0.6 * V - p, 1e-10);
}

TEST(OptimalControl, MatchesBruteForceLegendre) {
    const double theta = 0.4, lt = 0.5, a = 3.0, b = 2.5;
    for (double p : {-1.5, -0.2, 0.0, 0.4, 2.0}) {
        for (double V : {-0.8, 0.0, 1.1}) {
            const auto L = [&](double al) { return crowd_lagrangian(theta, lt, a, b, al, V); };
            const auto ref = oracle::brute_force_legendre(L, p, 5.0, 20001);
            const OptimalControlResult r = optimal_control_detailed(theta, lt, a, b, p, V);
            EXPECT_NEAR(r.alpha, ref.alpha, 1e-4) << "p=" << p << " V=" << V;
            EXPECT_LT(r.residual, 1e-9);
            EXPECT_NEAR(h_tilde(theta, lt, a, b, p, V), -ref.value, 1e-9);
        }
    }
}

TEST(OptimalControl, ConjugacyInequality) {
    // Fenchel-Young: H~(p, V) + L~(alpha, V) >= -alpha p for any alpha, equality at the optimum.
    const double theta = 0.3, lt = 0.7, a = 2.0, b = 4.0, V = 0.5;
    for (double p : {-1.0, 0.25, 1.5}) {
        const double H = h_tilde(theta, lt, a, b, p, V);
        const double al = optimal_control(theta, lt, a, b, p, V);
        EXPECT_NEAR(H + crowd_lagrangian(theta, lt, a, b, al, V) + al * p, 0.0, 1e-9);
        for (double other : {-2.0, -0.5, 0.0, 0.5, 2.0})
            EXPECT_GE(H + crowd_lagrangian(theta, lt, a, b, other, V) + other * p, -1e-12);
    }
}

TEST(OptimalControl, RejectsOutOfRangeParameters) {
    EXPECT_THROW(optimal_control(1.5, 0.5, 2.0, 2.0, 0.0, 0.0), DomainError);
    EXPECT_THROW(optimal_control(0.5, 0.5, 1.5, 2.0, 0.0, 0.0), DomainError);
}

TEST(HTilde, ZeroCoefficient) {
    EXPECT_DOUBLE_EQ(h_tilde_zero_coefficient(0.5, 0.5, 2.0), -0.03125);
    for (double theta : {0.25, 0.5, 0.8}) {
        const double c = h_tilde_zero_coefficient(theta, 0.6, 3.0);
        const double V = 0.7;
        EXPECT_NEAR(h_tilde(theta, 0.6, 3.0, 3.0, 0.0, V), c * std::pow(V, 1.5), 1e-9);
    }
}

TEST(HTilde, ThetaOnePowerLaw) {
    const double a = 3.0, lt = 0.4;
    for (double p : {-1.2, 0.5})
        for (double V : {-0.3, 0.9})
            EXPECT_NEAR(h_tilde(1.0, lt, a, a, p, V), std::pow(std::abs(p), a) / a - lt * p * V, 1e-9);
    EXPECT_EQ(h_tilde(0.5, 0.5, 2.0, 3.0, 0.0, 0.0), 0.0);
}

TEST(H4, IdentityCase) {
    for (double k : {0.01, 1.0, 7.0}) {
        const H4Eigen e = h4_min_eigenvalue(1.0, 1.0, k, 0.7);
        // A double eigenvalue puts the discriminant at rounding level, and its square root
        // costs the quadratic formula about half the digits.
        EXPECT_NEAR(e.explicit_min, (1.0 + k) * (1.0 + k), 1e-7 * (1.0 + k) * (1.0 + k));
        EXPECT_NEAR(e.direct_min, (1.0 + k) * (1.0 + k), 1e-10 * (1.0 + k) * (1.0 + k));
    }
}

TEST(H4, RoutesAgreeAndWitnessBelowOne) {
    const H4Eigen e = h4_min_eigenvalue(0.5, 2.0, 1.0, std::numbers::pi / 4.0);
    EXPECT_GE(e.direct_min, 1.0);
    EXPECT_NEAR(e.explicit_min, e.direct_min, 1e-12 * e.direct_min);
    const H4Sweep sw = h4_sweep(20000, 7);
    EXPECT_LT(sw.max_relative_disagreement, 1e-9);
    // The claimed lower bound of 1 does not survive sampling.
    EXPECT_GT(sw.below_one, 0u);
    const H4Eigen w = h4_min_eigenvalue(sw.worst_r, sw.worst_s, sw.worst_k, sw.worst_chi);
    EXPECT_EQ(w.explicit_min, sw.min_eigenvalue);
    EXPECT_LT(w.direct_min, 1.0);
    EXPECT_THROW(h4_min_eigenvalue(0.0, 2.0, 1.0, 0.0), DomainError);
}

TEST(CrowdRegion, Cases) {
    const CrowdRegion a = crowd_existence_region(0.5, 0.5, 2.0, 3.0, 1.5);
    EXPECT_TRUE(a.case_a);
    EXPECT_FALSE(a.case_c);
    const CrowdRegion b = crowd_existence_region(0.5, 0.1, 2.0, 2.0, 2.0);
    EXPECT_TRUE(b.case_b);
    EXPECT_TRUE(b.smallness.ok);
    const CrowdRegion not_b = crowd_existence_region(0.5, 0.5, 2.0, 2.0, 2.0);
    EXPECT_FALSE(not_b.case_b);
    const CrowdRegion c = crowd_existence_region(1.0, 0.5, 3.0, 3.0, 1.5, true);
    EXPECT_TRUE(c.case_c);
    EXPECT_TRUE(c.case_d);
    EXPECT_EQ(c.labels(), (std::vector<std::string>{"c", "d", "e"}));
    EXPECT_EQ(not_b.labels(), (std::vector<std::string>{"e"}));
}

TEST(VerifySampled, DeclaredConstantsHold) {
    const AssumptionReport r = verify_sampled(linear_demand(32), 2000, 42);
    EXPECT_EQ(r.total_violations(), 0u);
    ASSERT_NE(r.find("B3"), nullptr);
    EXPECT_EQ(r.find("B3")->samples, 2000u);
    EXPECT_EQ(r.find("nope"), nullptr);
}

TEST(VerifySampled, DeterministicInSeed) {
    const Model m = linear_demand(32);
    const AssumptionReport a = verify_sampled(m, 500, 3), b = verify_sampled(m, 500, 3);
    ASSERT_EQ(a.checks.size(), b.checks.size());
    for (std::size_t i = 0; i < a.checks.size(); ++i) EXPECT_EQ(a.checks[i].worst_margin, b.checks[i].worst_margin);
}

TEST(VerifySampled, UnderstatedConstantsProduceWitness) {
    Model m = linear_demand(32);
    StructuralConstants c = m.constants();
    c.C0 = 0.01;
    m.override_constants(c);
    const AssumptionReport r = verify_sampled(m, 1000, 42);
    EXPECT_GT(r.total_violations(), 0u);
    const CheckResult* fp1 = r.find("FP1");
    ASSERT_NE(fp1, nullptr);
    EXPECT_GT(fp1->violations, 0u);
    ASSERT_TRUE(fp1->witness.has_value());
    EXPECT_LT(fp1->witness->margin, 0.0);
    EXPECT_EQ(fp1->witness->margin, fp1->worst_margin);
    EXPECT_EQ(fp1->witness->m.size(), 32u);
}
