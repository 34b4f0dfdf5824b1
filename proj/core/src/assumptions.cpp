#include "mfgc/assumptions.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <random>

#include "mfgc/errors.hpp"
#include "mfgc/mufix.hpp"

namespace mfgc {

std::size_t AssumptionReport::total_violations() const noexcept {
    std::size_t n = 0;
    for (const auto& c : checks) n += c.violations;
    return n;
}

const CheckResult* AssumptionReport::find(const std::string& name) const noexcept {
    for (const auto& c : checks)
        if (c.name == name) return &c;
    return nullptr;
}

namespace {

constexpr int kMaxModes = 8;

// 1 + sum of at most 8 harmonics whose coefficients sum to at most 1/2 in
// absolute value. The rectangle rule integrates it to one exactly.
std::vector<double> random_density(const TorusGrid& grid, std::mt19937_64& rng) {
    std::uniform_int_distribution<int> modes(1, kMaxModes);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    std::uniform_real_distribution<double> amp(0.0, 0.5);
    const int K = modes(rng);
    std::vector<double> ca(K), cb(K);
    double total = 0.0;
    for (int k = 0; k < K; ++k) {
        ca[k] = unit(rng);
        cb[k] = unit(rng);
        total += std::abs(ca[k]) + std::abs(cb[k]);
    }
    const double scale = total > 0.0 ? amp(rng) / total : 0.0;
    std::vector<double> m(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double x = 2.0 * std::numbers::pi * grid.node(i);
        double v = 1.0;
        for (int k = 0; k < K; ++k) v += scale * (ca[k] * std::cos((k + 1) * x) + cb[k] * std::sin((k + 1) * x));
        m[i] = v;
    }
    const double mass = integrate(m, grid.spacing());
    for (double& v : m) v /= mass;
    return m;
}

// Random bounded Fourier control with amplitude log-uniform in [1e-2, 10].
std::vector<double> random_control(const TorusGrid& grid, std::mt19937_64& rng) {
    std::uniform_int_distribution<int> modes(0, kMaxModes);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    std::uniform_real_distribution<double> logamp(-2.0, 1.0);
    const int K = modes(rng);
    const double A = std::pow(10.0, logamp(rng));
    std::vector<double> ca(K + 1), cb(K + 1);
    double total = 0.0;
    for (int k = 0; k <= K; ++k) {
        ca[k] = unit(rng);
        cb[k] = k == 0 ? 0.0 : unit(rng);
        total += std::abs(ca[k]) + std::abs(cb[k]);
    }
    std::vector<double> a(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double x = 2.0 * std::numbers::pi * grid.node(i);
        double v = 0.0;
        for (int k = 0; k <= K; ++k) v += ca[k] * std::cos(k * x) + cb[k] * std::sin(k * x);
        a[i] = A * v / total;
    }
    return a;
}

// H and H_p with the closed form when available and the numerical Legendre
// transform for general crowd motion.
struct Evaluator {
    const Model& model;

    double H(std::size_t i, double p, const Aggregates& agg) const {
        if (model.has_closed_form()) return eval_H(model, i, p, agg);
        return general_crowd_H(i, p, agg);
    }
    double Hp(std::size_t i, double p, const Aggregates& agg) const {
        if (model.has_closed_form()) return eval_Hp(model, i, p, agg);
        const auto& c = std::get<CrowdMotion>(model.spec());
        return -optimal_control(c.theta, c.lambda_tilde, c.a, c.b, p, std::get<FieldAggregate>(agg.value).v[i]);
    }

private:
    double general_crowd_H(std::size_t i, double p, const Aggregates& agg) const {
        const auto& c = std::get<CrowdMotion>(model.spec());
        const auto& f = model.running_cost();
        double cost = f.f0.empty() ? 0.0 : f.f0[i];
        cost += f.local_coupling * agg.density[i];
        return h_tilde(c.theta, c.lambda_tilde, c.a, c.b, p, std::get<FieldAggregate>(agg.value).v[i]) - cost;
    }
};

struct Tracker {
    CheckResult result;

    // Records margin = rhs - lhs; a violation beyond rounding stores the witness.
    void record(double lhs, double rhs, std::size_t index, std::size_t node, double x, double p,
                const JointMeasure& mu, const ControlField* alpha2) {
        const double margin = rhs - lhs;
        ++result.samples;
        const double slack = 1e-9 * (1.0 + std::abs(lhs) + std::abs(rhs));
        const bool violated = margin < -slack;
        if (violated) ++result.violations;
        if (margin < result.worst_margin) {
            result.worst_margin = margin;
            if (violated) {
                Witness w;
                w.sample_index = index;
                w.node = node;
                w.x = x;
                w.p = p;
                w.margin = margin;
                w.lhs = lhs;
                w.rhs = rhs;
                w.m = mu.m.data();
                w.alpha = mu.alpha.data();
                if (alpha2) w.alpha2 = alpha2->data();
                result.witness = std::move(w);
            }
        }
    }
};

} // namespace

AssumptionReport verify_sampled(const Model& model, std::size_t n_samples, std::uint64_t seed, double p_max) {
    if (!(p_max > 0.0)) throw DomainError("verify_sampled: p_max must be positive");
    const auto& grid = model.grid();
    const std::size_t n = grid.size();
    const double h = grid.spacing();
    const StructuralConstants& c = model.constants();
    const double q = c.q, qp = c.q_prime();
    const bool kernel_model = std::holds_alternative<CrowdMotion>(model.spec());
    // x * mean in the price-impact Hamiltonian is not periodic: skip the seam.
    const bool periodic_in_x = !std::holds_alternative<PriceImpact>(model.spec());

    Evaluator ev{model};
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> node_dist(0, n - 1);
    std::uniform_real_distribution<double> p_dist(-p_max, p_max);

    auto tracker = [](const char* name) {
        Tracker t;
        t.result.name = name;
        return t;
    };
    Tracker a1 = tracker("A1"), fp1 = tracker("FP1"), fp2 = tracker("FP2"), b1 = tracker("B1"), b2 = tracker("B2"),
            b3 = tracker("B3"), vb = tracker("V_bound");
    b1.result.declared = c.lambda2.has_value() && std::isfinite(*c.lambda2);
    b3.result.declared = c.lambda1.has_value();

    for (std::size_t s = 0; s < n_samples; ++s) {
        const std::size_t i = node_dist(rng);
        const double p = p_dist(rng);
        const double x = grid.node(i);
        const ScalarField m(grid, random_density(grid, rng));
        const JointMeasure mu{m, ControlField(grid, random_control(grid, rng))};
        const ControlField alpha2(grid, random_control(grid, rng));
        const JointMeasure mu2{m, alpha2};

        const Aggregates agg = compute_aggregates(model, mu);
        const Aggregates agg2 = compute_aggregates(model, mu2);
        const double Lam = lambda_moment(mu, c.q0);

        const double H = ev.H(i, p, agg);
        const double Hp = ev.Hp(i, p, agg);

        // A1: second differences along p.
        {
            const double d = 0.05 * (1.0 + std::abs(p));
            const double d2 = ev.H(i, p + d, agg) - 2.0 * H + ev.H(i, p - d, agg);
            const double scale = 1e-8 * (1.0 + std::abs(H));
            a1.record(-d2, scale, s, i, x, p, mu, nullptr);
        }
        fp1.record(std::abs(Hp), c.C0 * (1.0 + std::pow(std::abs(p), q - 1.0)) + c.lambda0 * Lam, s, i, x, p, mu,
                   nullptr);
        {
            JointMeasure diff{m, ControlField(grid)};
            for (std::size_t j = 0; j < n; ++j) diff.alpha[j] = mu.alpha[j] - alpha2[j];
            const double lhs = std::abs(Hp - ev.Hp(i, p, agg2));
            fp2.record(lhs, c.lambda0 * lambda_moment(diff, c.q0), s, i, x, p, mu, &alpha2);
        }
        if (b1.result.declared)
            b1.record(std::abs(ev.H(i, 0.0, agg)), c.C0 + *c.lambda2 * std::pow(Lam, qp), s, i, x, p, mu, nullptr);
        if (periodic_in_x || (i > 0 && i + 1 < n)) {
            const double Hx = (ev.H(grid.wrap(static_cast<std::ptrdiff_t>(i) + 1), p, agg) -
                               ev.H(grid.wrap(static_cast<std::ptrdiff_t>(i) - 1), p, agg)) /
                              (2.0 * h);
            b2.record(std::abs(Hx), c.C0 * (1.0 + std::pow(std::abs(p), q) + std::pow(Lam, qp)), s, i, x, p, mu,
                      nullptr);
        }
        if (b3.result.declared) {
            const double rhs = (std::pow(std::abs(p), q) - *c.lambda1 * std::pow(Lam, qp)) / c.C0 - c.C0;
            // Written as lhs <= rhs' with lhs = -(H_p p - H) so the margin keeps its sign convention.
            b3.record(rhs, Hp * p - H, s, i, x, p, mu, nullptr);
        }
        if (kernel_model) {
            const auto& v = std::get<FieldAggregate>(agg.value).v;
            vb.record(sup_norm(v), Lam, s, i, x, p, mu, nullptr);
        }
    }

    AssumptionReport rep;
    rep.seed = seed;
    rep.n_samples = n_samples;
    rep.p_max = p_max;
    rep.constants = c;
    rep.checks = {a1.result, fp1.result, fp2.result, b1.result, b2.result, b3.result};
    if (kernel_model) rep.checks.push_back(vb.result);
    if (c.lambda1 && c.lambda2 && std::isfinite(*c.lambda2)) rep.small_param = small_param_check(c);
    if (c.lambda1) rep.b3_side_condition = *c.lambda1 < std::pow(1.0 - c.lambda0, qp) / std::pow(c.C0, qp);
    return rep;
}

} // namespace mfgc
