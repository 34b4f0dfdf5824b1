#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "mfgc/errors.hpp"
#include "mfgc/models.hpp"
#include "oracles.hpp"

using namespace mfgc;
constexpr double kTwoPi = 2.0 * std::numbers::pi;

namespace {

JointMeasure uniform_measure(const TorusGrid& g, double alpha) { return {ScalarField(g, 1.0), ControlField(g, alpha)}; }

Aggregates mean_agg(double mean) { return Aggregates{MeanControl{mean}, {}}; }

std::vector<Model> all_models(const TorusGrid& g) {
    std::vector<Model> out;
    out.emplace_back(g, LinearDemand{1.0});
    out.emplace_back(g, NegCorrResources{-0.6});
    out.emplace_back(g, PriceImpact{0.3});
    out.emplace_back(g, CrowdMotion{0.5, 0.5, 2.0, 2.0, 2.0, KernelTable::cosine(g, 0.5)});
    out.emplace_back(g, CrowdMotion{1.0, 0.4, 3.0, 2.0, 1.5, KernelTable::cosine(g, 0.5)});
    out.emplace_back(g, Flocking{KernelTable::cosine(g, 0.5)});
    return out;
}

} // namespace

TEST(EvalH, LinearDemandVertex) {
    const TorusGrid g(8);
    const Model m(g, LinearDemand{0.0});
    EXPECT_EQ(eval_H(m, 0, 1.0, mean_agg(0.0)), 0.0);
}

TEST(EvalH, CrowdQuadraticAtZeroMomentum) {
    const TorusGrid g(8);
    const double theta = 0.3, lt = 0.7;
    const Model m(g, CrowdMotion{theta, lt, 2.0, 2.0, 2.0, KernelTable::constant(g, 1.0)});
    for (double V : {-1.5, 0.0, 0.4, 2.0}) {
        Aggregates agg{FieldAggregate{std::vector<double>(8, V), std::vector<double>(8, 1.0)}, {}};
        EXPECT_NEAR(eval_H(m, 2, 0.0, agg), -(lt * lt * theta * (1.0 - theta) / 2.0) * V * V, 1e-15);
    }
}

TEST(EvalH, PriceImpactAtZeroMomentum) {
    const TorusGrid g(10);
    const double et = 0.3;
    const Model m(g, PriceImpact{et});
    const Aggregates agg{PriceImpactAggregate{1.0, 0.0}, {}};
    EXPECT_NEAR(eval_H(m, 3, 0.0, agg), et * et / 2.0, 1e-15);  // node 3 is x = 0.3

    // h(z) = sup_a (a z - a^2/2) by grid search.
    const double z = et;
    const auto r = oracle::brute_force_legendre([](double a) { return 0.5 * a * a; }, -z, 5.0, 20001);
    EXPECT_NEAR(-r.value, eval_H(m, 0, 0.0, agg), 1e-9);
}

TEST(EvalH, CrowdTheta1PowerLaw) {
    const TorusGrid g(8);
    const double lt = 0.5;
    const Model m(g, CrowdMotion{1.0, lt, 2.0, 2.0, 2.0, KernelTable::cosine(g, 0.5)});
    for (double p : {-1.3, 0.2, 2.5})
        for (double V : {-0.7, 0.0, 1.1}) {
            Aggregates agg{FieldAggregate{std::vector<double>(8, V), std::vector<double>(8, 1.0)}, {}};
            EXPECT_NEAR(eval_H(m, 1, p, agg), 0.5 * p * p - lt * p * V, 1e-14);
        }
}

TEST(EvalH, GeneralCrowdIsUnsupported) {
    const TorusGrid g(8);
    const Model m(g, CrowdMotion{0.5, 0.5, 3.0, 4.0, 2.0, KernelTable::cosine(g, 0.5)});
    EXPECT_FALSE(m.has_closed_form());
    Aggregates agg{FieldAggregate{std::vector<double>(8, 0.1), std::vector<double>(8, 1.0)}, {}};
    EXPECT_THROW(eval_H(m, 0, 0.1, agg), UnsupportedVariant);
    EXPECT_THROW(eval_Hp(m, 0, 0.1, agg), UnsupportedVariant);
}

TEST(EvalHp, LinearDemandExample) {
    const TorusGrid g(8);
    const Model m(g, LinearDemand{1.0});
    EXPECT_NEAR(eval_Hp(m, 0, 0.0, mean_agg(0.2)), -0.2, 1e-15);
}

TEST(EvalHp, CrowdQuadraticMatchesOptimalControlFormula) {
    const TorusGrid g(8);
    const double theta = 0.5, lt = 0.6, V = 1.0;
    const Model m(g, CrowdMotion{theta, lt, 2.0, 2.0, 2.0, KernelTable::constant(g, 1.0)});
    Aggregates agg{FieldAggregate{std::vector<double>(8, V), std::vector<double>(8, 1.0)}, {}};
    const double alpha = lt * theta / (theta + (1.0 - theta)) * V;
    EXPECT_NEAR(eval_Hp(m, 0, 0.0, agg), -alpha, 1e-15);
    EXPECT_NEAR(-eval_Hp(m, 0, 0.0, agg), 0.3, 1e-15);
}

TEST(EvalHp, FiniteDifferenceOfH) {
    const TorusGrid g(16);
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> ud(-1.0, 1.0);
    for (const Model& m : all_models(g)) {
        JointMeasure mu{ScalarField::sample(g, [](double x) { return 1.0 + 0.3 * std::cos(kTwoPi * x); }),
                        ControlField::sample(g, [](double x) { return 0.4 * std::sin(kTwoPi * x) + 0.1; })};
        const Aggregates agg = compute_aggregates(m, mu);
        const double d = 1e-5;
        for (int s = 0; s < 20; ++s) {
            const std::size_t i = static_cast<std::size_t>(s) % g.size();
            const double p = 3.0 * ud(rng);
            const double fd = (eval_H(m, i, p + d, agg) - eval_H(m, i, p - d, agg)) / (2.0 * d);
            EXPECT_NEAR(fd, eval_Hp(m, i, p, agg), 1e-6) << variant_name(m.spec()) << " p=" << p;
        }
    }
}

TEST(Aggregates, ConstantControlPassesThrough) {
    const TorusGrid g(16);
    const Model ld(g, LinearDemand{1.0});
    EXPECT_NEAR(std::get<MeanControl>(compute_aggregates(ld, uniform_measure(g, 0.7)).value).mean, 0.7, 1e-15);

    const Model crowd(g, CrowdMotion{0.5, 0.5, 2.0, 2.0, 2.0, KernelTable::constant(g, 2.0)});
    const auto fa = std::get<FieldAggregate>(compute_aggregates(crowd, uniform_measure(g, 0.7)).value);
    // Z_2 = (sum k^2 m h)^{1/2} = 2 and sum k alpha m h = 1.4.
    for (double v : fa.v) EXPECT_NEAR(v, 0.7, 1e-14);
}

TEST(Aggregates, OddHarmonicHasZeroMean) {
    const TorusGrid g(32);
    const Model ld(g, LinearDemand{1.0});
    JointMeasure mu{ScalarField(g, 1.0), ControlField::sample(g, [](double x) { return std::sin(kTwoPi * x); })};
    EXPECT_NEAR(std::get<MeanControl>(compute_aggregates(ld, mu).value).mean, 0.0, 1e-15);
}

TEST(Aggregates, CrowdMatchesDoubleLoop) {
    const std::size_t n = 32;
    const TorusGrid g(n);
    const auto kf = [](double x, double y) { return 1.0 + std::cos(kTwoPi * (x - y)); };
    for (double q0 : {2.0, 1.0, 3.0, kInfinity}) {
        const Model crowd(g, CrowdMotion{0.5, 0.5, 2.0, 2.0, q0, KernelTable::sample(g, kf)});
        // Bump the density so Z is not a constant.
        JointMeasure mu{ScalarField::sample(g, [](double x) { return 1.0 + 0.5 * std::sin(kTwoPi * x); }),
                        ControlField::sample(g, [](double x) { return std::sin(kTwoPi * x); })};
        const auto fa = std::get<FieldAggregate>(compute_aggregates(crowd, mu).value);
        const double h = g.spacing();
        const double q0p = q0 == kInfinity ? 1.0 : (q0 == 1.0 ? kInfinity : q0 / (q0 - 1.0));
        for (std::size_t i = 0; i < n; ++i) {
            double num = 0.0, z = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                const double k = kf(g.node(i), g.node(j));
                num += mu.alpha[j] * k * mu.m[j] * h;
                if (q0p == kInfinity) z = std::max(z, k);
                else z += std::pow(k, q0p) * mu.m[j] * h;
            }
            if (q0p != kInfinity) z = std::pow(z, 1.0 / q0p);
            EXPECT_NEAR(fa.z[i], z, 1e-12) << "q0=" << q0;
            EXPECT_NEAR(fa.v[i], num / z, 1e-12) << "q0=" << q0;
        }
    }
}

TEST(Aggregates, DegenerateKernelIsReported) {
    const TorusGrid g(8);
    const Model crowd(g, CrowdMotion{0.5, 0.5, 2.0, 2.0, 2.0, KernelTable::constant(g, 0.0)});
    EXPECT_THROW(compute_aggregates(crowd, uniform_measure(g, 0.1)), DegenerateKernel);
}

TEST(TerminalCost, PassThroughAndSmoothing) {
    const TorusGrid g(16);
    EXPECT_EQ(sup_norm(terminal_cost(Model(g, LinearDemand{1.0}), ScalarField(g, 1.0)).values()), 0.0);

    TerminalCost tc;
    tc.g0.resize(16);
    for (std::size_t i = 0; i < 16; ++i) tc.g0[i] = std::cos(kTwoPi * g.node(i));
    const ScalarField out = terminal_cost(Model(g, LinearDemand{1.0}, {}, tc), ScalarField(g, 1.0));
    for (std::size_t i = 0; i < 16; ++i) EXPECT_EQ(out[i], tc.g0[i]);

    tc.density_coupling = 1.0;
    const Model crowd(g, CrowdMotion{0.5, 0.5, 2.0, 2.0, 2.0, KernelTable::cosine(g, 0.8)}, {}, tc);
    const ScalarField sm = terminal_cost(crowd, ScalarField(g, 1.0));
    for (std::size_t i = 0; i < 16; ++i) EXPECT_NEAR(sm[i], tc.g0[i] + 1.0, 1e-14);
}

TEST(ContractionConstant, PerModel) {
    const TorusGrid g(8);
    EXPECT_DOUBLE_EQ(contraction_constant(Model(g, LinearDemand{1.0})), 0.25);
    EXPECT_DOUBLE_EQ(contraction_constant(Model(g, NegCorrResources{0.8})), 0.4);
    EXPECT_DOUBLE_EQ(contraction_constant(Model(g, PriceImpact{0.3})), 0.3);
    EXPECT_DOUBLE_EQ(
        contraction_constant(Model(g, CrowdMotion{0.5, -0.6, 2.0, 2.0, 2.0, KernelTable::cosine(g, 0.5)})), 0.3);
    EXPECT_DOUBLE_EQ(
        contraction_constant(Model(g, CrowdMotion{1.0, -0.6, 3.0, 2.0, 2.0, KernelTable::cosine(g, 0.5)})), 0.6);
    const double fl = contraction_constant(Model(g, Flocking{KernelTable::cosine(g, 0.5)}));
    EXPECT_GT(fl, 0.0);
    EXPECT_LT(fl, 1.0);
}

TEST(Model, RangeChecks) {
    const TorusGrid g(8);
    EXPECT_THROW(Model(g, NegCorrResources{1.0}), DomainError);
    EXPECT_THROW(Model(g, PriceImpact{0.5}), DomainError);
    EXPECT_THROW(Model(g, CrowdMotion{1.2, 0.5, 2.0, 2.0, 2.0, KernelTable::cosine(g, 0.5)}), DomainError);
    EXPECT_THROW(Model(g, CrowdMotion{0.5, 1.0, 2.0, 2.0, 2.0, KernelTable::cosine(g, 0.5)}), DomainError);
    EXPECT_THROW(Model(g, CrowdMotion{0.5, 0.5, 2.0, 2.0, 2.0, KernelTable::cosine(TorusGrid(16), 0.5)}),
                 DomainError);
    EXPECT_NO_THROW(Model(g, PriceImpact{0.5}, {}, {}, false));
}

TEST(Constants, ReferenceLinearDemandValues) {
    const StructuralConstants c = linear_demand_reference_constants(1.0);
    EXPECT_DOUBLE_EQ(c.q_prime(), 2.0);
    EXPECT_DOUBLE_EQ(c.C0, 0.5);
    EXPECT_DOUBLE_EQ(c.lambda0, 0.25);
    EXPECT_DOUBLE_EQ(*c.lambda1, 1.0);
    EXPECT_DOUBLE_EQ(*c.lambda2, 0.0);
}

TEST(Constants, DeclaredConstantsAreValid) {
    const TorusGrid g(16);
    for (const Model& m : all_models(g)) {
        const auto& c = m.constants();
        EXPECT_GT(c.q, 1.0) << variant_name(m.spec());
        EXPECT_GE(c.lambda0, 0.0);
        EXPECT_LT(c.lambda0, 1.0);
        EXPECT_GT(c.C0, 0.0);
        EXPECT_EQ(c.lambda0, contraction_constant(m));
    }
}

TEST(ResourceCoupling, OperatorNormAndAggregate) {
    // Diagonal matrix: the norm is the largest absolute entry.
    EXPECT_NEAR(operator_norm({0.8, 0.0, 0.0, -0.3}, 2), 0.8, 1e-14);
    // Rank-one u v^T has norm |u||v|.
    EXPECT_NEAR(operator_norm({0.3, 0.4, 0.0, 0.0}, 2), 0.5, 1e-14);

    const std::vector<double> M{0.2, -0.3, 0.1, 0.1, 0.4, -0.2, 0.0, 0.3, -0.5};
    const std::vector<double> P{1.0, -0.5, 0.25};
    ASSERT_LT(operator_norm(M, 3), 1.0);
    const auto direct = negcorr_mean_direct(M, P, 3);
    const auto iter = negcorr_mean_iterative(M, P, 3);
    // Independent check: (I + M/2) x = -P/2.
    std::vector<double> A(9);
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 3; ++j) A[i * 3 + j] = (i == j ? 1.0 : 0.0) + 0.5 * M[i * 3 + j];
    const auto ref = oracle::dense_solve(A, {-0.5 * P[0], -0.5 * P[1], -0.5 * P[2]});
    for (std::size_t i = 0; i < 3; ++i) {
        EXPECT_NEAR(direct[i], ref[i], 1e-14);
        EXPECT_NEAR(iter[i], ref[i], 1e-12);
    }
    EXPECT_THROW(operator_norm(std::vector<double>(16, 0.0), 4), DomainError);
}

TEST(KernelTable, Summaries) {
    const TorusGrid g(64);
    const KernelTable k = KernelTable::cosine(g, 0.5);
    EXPECT_NEAR(k.max_value(), 1.5, 1e-14);
    EXPECT_NEAR(k.min_value(), 0.5, 1e-3);
    EXPECT_FALSE(k.is_constant());
    EXPECT_TRUE(KernelTable::constant(g, 2.0).is_constant());
    // |d/dx (1 + 0.5 cos)| <= pi with centred differences slightly below.
    EXPECT_LE(k.max_x_derivative(), std::numbers::pi + 1e-12);
    EXPECT_GT(k.max_x_derivative(), 0.99 * std::numbers::pi);
}
