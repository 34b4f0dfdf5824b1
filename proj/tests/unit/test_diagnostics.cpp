#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "mfgc/coupler.hpp"
#include "mfgc/diagnostics.hpp"
#include "mfgc/errors.hpp"

using namespace mfgc;
constexpr double kTwoPi = 2.0 * std::numbers::pi;

namespace {

ScalarField bump_density(const TorusGrid& g) {
    ScalarField m = ScalarField::sample(g, [](double x) { return 1.0 + 0.5 * std::cos(kTwoPi * x); });
    const double mass = integrate(m);
    for (double& v : m) v /= mass;
    return m;
}

Model linear_demand(const TorusGrid& g, double eps = 1.0) {
    TerminalCost term;
    term.g0.resize(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) term.g0[i] = 0.2 * std::cos(kTwoPi * g.node(i));
    return Model(g, LinearDemand{eps}, RunningCost{}, term);
}

SolveResult solve_linear(std::size_t n, std::size_t max_outer = 200) {
    const TorusGrid g(n);
    SolverConfig c;
    c.tol_outer = 1e-11;
    c.max_outer = max_outer;
    return solve(linear_demand(g), TimeGrid(1.0, 2 * n), bump_density(g), c);
}

} // namespace

TEST(MassPositivity, ConvergedSolution) {
    const SolveResult r = solve_linear(64);
    const MassPositivity mp = check_mass_and_positivity(r);
    EXPECT_LE(mp.mass_max_dev, 1e-12);
    EXPECT_GT(mp.m_min, 0.0);
    EXPECT_EQ(mp.mass_max_dev, r.diagnostics.mass_max_dev);
}

TEST(MassPositivity, DetectsInjectedFaults) {
    SolveResult r = solve_linear(32);
    // Negative node with mass conserved, then a pure mass defect on another slice.
    r.m_traj[5][4] += r.m_traj[5][3] + 1e-3;
    r.m_traj[5][3] = -1e-3;
    r.m_traj[7][0] += 1.0;
    const MassPositivity mp = check_mass_and_positivity(r);
    EXPECT_DOUBLE_EQ(mp.m_min, -1e-3);
    EXPECT_NEAR(mp.mass_max_dev, 1.0 / 32.0, 1e-12);
    r.diagnostics = diagnose(r, linear_demand(TorusGrid(32)));
    EXPECT_FALSE(r.diagnostics.verified());
}

TEST(EnergyIdentity, ZeroSolutionIsExact) {
    const TorusGrid g(32);
    const Model model(g, CrowdMotion{0.5, 0.5, 2.0, 2.0, 2.0, KernelTable::cosine(g, 0.5)});
    const SolveResult r = solve(model, TimeGrid(1.0, 64), bump_density(g), SolverConfig{});
    EXPECT_EQ(energy_identity_residual(r, model), 0.0);
}

TEST(EnergyIdentity, SeparatesConvergedFromUnconverged) {
    const SolveResult good = solve_linear(64);
    const SolveResult early = solve_linear(64, 2);
    ASSERT_TRUE(good.converged);
    ASSERT_FALSE(early.converged);
    EXPECT_GE(early.diagnostics.energy_identity_residual, 5.0 * good.diagnostics.energy_identity_residual);
}

TEST(EnergyIdentity, FirstOrderUnderRefinement) {
    const double a = solve_linear(64).diagnostics.energy_identity_residual;
    const double b = solve_linear(128).diagnostics.energy_identity_residual;
    EXPECT_GE(std::log2(a / b), 0.8);
}

TEST(LambdaBound, HoldsForLinearDemand) {
    const SolveResult r = solve_linear(64);
    EXPECT_GE(r.diagnostics.lambda_bound_margin, 0.0);
    EXPECT_EQ(check_lambda_bound(r, linear_demand(TorusGrid(64))), r.diagnostics.lambda_bound_margin);
}

TEST(MaxPrinciple, DeclaredConstantsHold) {
    const SolveResult r = solve_linear(64);
    ASSERT_TRUE(r.diagnostics.max_principle_margin.has_value());
    EXPECT_GE(*r.diagnostics.max_principle_margin, 0.0);
    EXPECT_TRUE(r.diagnostics.verified());
}

TEST(MaxPrinciple, UnderstatedConstantsFail) {
    const TorusGrid g(64);
    Model model = linear_demand(g);
    StructuralConstants c = model.constants();
    c.C0 = 0.01;
    model.override_constants(c);
    SolverConfig cfg;
    const SolveResult r = solve(model, TimeGrid(1.0, 128), bump_density(g), cfg);
    EXPECT_LT(check_max_principle(r, model), 0.0);
    EXPECT_FALSE(r.diagnostics.verified());
}

TEST(MaxPrinciple, RequiresLambda2) {
    const TorusGrid g(32);
    Model model = linear_demand(g);
    StructuralConstants c = model.constants();
    c.lambda2.reset();
    model.override_constants(c);
    const SolveResult r = solve(model, TimeGrid(1.0, 64), bump_density(g), SolverConfig{});
    EXPECT_THROW(check_max_principle(r, model), MissingConstants);
    EXPECT_FALSE(r.diagnostics.max_principle_margin.has_value());
    EXPECT_FALSE(r.diagnostics.small_param.has_value());
    EXPECT_FALSE(r.diagnostics.verified());
}

TEST(SmallParam, PublishedLinearDemandConstants) {
    const SmallParamCheck s = small_param_check(linear_demand_reference_constants(1.0));
    EXPECT_TRUE(s.ok);
    EXPECT_DOUBLE_EQ(s.lhs, 1.0);
    EXPECT_DOUBLE_EQ(s.rhs, 2.25);
}

TEST(SmallParam, FailsForLargeLambda2OrLambda0NearOne) {
    StructuralConstants c = linear_demand_reference_constants(1.0);
    c.lambda2 = 10.0;
    EXPECT_FALSE(small_param_check(c).ok);
    c = linear_demand_reference_constants(1.0);
    c.lambda0 = 1.0 - 1e-9;
    EXPECT_FALSE(small_param_check(c).ok);
    c.lambda1.reset();
    EXPECT_THROW(small_param_check(c), MissingConstants);
}

TEST(GradValueRatio, StableUnderRefinement) {
    const double a = solve_linear(64).diagnostics.grad_value_ratio;
    const double b = solve_linear(128).diagnostics.grad_value_ratio;
    EXPECT_GT(a, 0.0);
    EXPECT_LT(std::max(a / b, b / a), 2.0);
}

TEST(StabilityProbe, LinearDemandClosedForm) {
    const TorusGrid g(32);
    const double eps = 1.0;
    const Model model = linear_demand(g, eps);
    const ScalarField m(g, 1.0);
    for (double delta : {1.0, 0.1, 0.01, 1e-3}) {
        const StabilityProbe s = mu_stability_probe(model, ScalarField(g, 0.0), m, ScalarField(g, delta), m, kInfinity);
        // Constant p gives constant alpha = (b - p) / (2 + a), a = eps / (1 + eps).
        EXPECT_NEAR(s.lhs, delta / (2.0 + eps / (1.0 + eps)), 1e-12);
        EXPECT_NEAR(s.rhs, delta, 1e-15);
        EXPECT_LE(s.lhs, s.rhs);
    }
    const StabilityProbe same = mu_stability_probe(model, ScalarField(g, 0.3), m, ScalarField(g, 0.3), m, kInfinity);
    EXPECT_EQ(same.lhs, 0.0);
    EXPECT_EQ(same.rhs, 0.0);
}

TEST(StabilityProbe, ShrinksWithPerturbation) {
    const TorusGrid g(64);
    const Model model(g, CrowdMotion{0.5, 0.5, 2.0, 2.0, 2.0, KernelTable::cosine(g, 0.5)});
    const ScalarField p1 = ScalarField::sample(g, [](double x) { return std::sin(kTwoPi * x); });
    const ScalarField m1 = bump_density(g);
    double prev = kInfinity;
    for (double delta : {1e-1, 1e-2, 1e-3, 1e-4}) {
        const ScalarField p2 = ScalarField::sample(g, [&](double x) { return std::sin(kTwoPi * x) + delta * std::cos(kTwoPi * x); });
        const StabilityProbe s = mu_stability_probe(model, p1, m1, p2, m1, kInfinity);
        EXPECT_LT(s.lhs, prev);
        EXPECT_LE(s.lhs, 2.0 * s.rhs);
        prev = s.lhs;
    }
}
