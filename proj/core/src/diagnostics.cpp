#include "mfgc/diagnostics.hpp"

#include <algorithm>
#include <cmath>

#include "mfgc/coupler.hpp"
#include "mfgc/errors.hpp"
#include "mfgc/mufix.hpp"

namespace mfgc {

bool DiagnosticsReport::verified() const noexcept {
    if (!(mass_max_dev <= 1e-12) || !(m_min > 0.0)) return false;
    if (!(lambda_bound_margin >= 0.0)) return false;
    if (!max_principle_margin || !(*max_principle_margin >= 0.0)) return false;
    return true;
}

MassPositivity check_mass_and_positivity(const SolveResult& result) {
    if (result.m_traj.empty()) throw DomainError("check_mass_and_positivity: empty trajectory");
    MassPositivity out{0.0, kInfinity};
    for (const auto& m : result.m_traj) {
        out.mass_max_dev = std::max(out.mass_max_dev, std::abs(integrate(m) - 1.0));
        for (double v : m) out.m_min = std::min(out.m_min, v);
    }
    return out;
}

double energy_identity_residual(const SolveResult& result, const Model& model) {
    const std::size_t nt = result.tgrid.steps();
    const double dt = result.tgrid.dt();
    const double h = model.grid().spacing();
    const std::size_t n = model.grid().size();

    double lhs = 0.0;
    for (std::size_t k = 0; k <= nt; ++k) {
        const JointMeasure mu{result.m_traj[k], result.alpha_traj[k]};
        const Aggregates agg = compute_aggregates(model, mu);
        const ScalarField p = gradient_centered(result.u_traj[k]);
        double slice = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            slice += (eval_Hp(model, i, p[i], agg) * p[i] - eval_H(model, i, p[i], agg)) * mu.m[i];
        const double w = (k == 0 || k == nt) ? 0.5 : 1.0;
        lhs += w * dt * h * slice;
    }

    const ScalarField g = terminal_cost(model, result.m_traj[nt]);
    double rhs = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        rhs += h * (result.u_traj[0][i] * result.m_traj[0][i] - g[i] * result.m_traj[nt][i]);
    return std::abs(lhs - rhs);
}

double check_lambda_bound(const SolveResult& result, const Model& model) {
    const auto& c = model.constants();
    const double factor = c.C0 / (1.0 - c.lambda0);
    double margin = kInfinity;
    for (std::size_t k = 0; k < result.m_traj.size(); ++k) {
        const JointMeasure mu{result.m_traj[k], result.alpha_traj[k]};
        const ScalarField p = gradient_centered(result.u_traj[k]);
        double pmax = 0.0;
        for (std::size_t i = 0; i < p.size(); ++i)
            if (mu.m[i] > kMassFloor) pmax = std::max(pmax, std::pow(std::abs(p[i]), c.q - 1.0));
        const double rhs = factor * (1.0 + pmax);
        margin = std::min(margin, rhs - lambda_moment(mu, kInfinity));
    }
    return margin;
}

double check_max_principle(const SolveResult& result, const Model& model) {
    const auto& c = model.constants();
    if (!c.lambda2) throw MissingConstants("check_max_principle: model does not declare lambda2");
    const double qp = c.q_prime();
    const double T = result.tgrid.horizon();
    const double theta = 0.5;
    double usup = 0.0, gsup = 0.0;
    for (const auto& u : result.u_traj) {
        usup = std::max(usup, sup_norm(u.values()));
        gsup = std::max(gsup, sup_norm(gradient_centered(u).values()));
    }
    const double rhs = c.C0 * (1.0 + T) +
                       (*c.lambda2 * std::pow(c.C0, qp) / std::pow(1.0 - c.lambda0, qp)) *
                           (std::pow(theta, 1.0 - qp) * T + std::pow(1.0 - theta, 1.0 - qp) * std::pow(gsup, c.q));
    return rhs - usup;
}

SmallParamCheck small_param_check(const StructuralConstants& c) {
    if (!c.lambda1 || !c.lambda2) throw MissingConstants("small_param_check: lambda1 and lambda2 must be declared");
    const double qp = c.q_prime();
    SmallParamCheck out;
    out.lhs = *c.lambda1 + c.C0 * *c.lambda2;
    out.rhs = std::pow(1.0 - c.lambda0, qp) / std::pow(c.C0, qp);
    out.ok = out.lhs < out.rhs;
    return out;
}

SmallParamCheck small_param_check(const Model& model) { return small_param_check(model.constants()); }

double grad_value_ratio(const SolveResult& result) {
    const std::size_t levels = result.u_traj.size();
    std::vector<double> tail_max(levels + 1, 0.0);
    for (std::size_t k = levels; k-- > 0;)
        tail_max[k] = std::max(tail_max[k + 1], sup_norm(result.u_traj[k].values()));
    double ratio = 0.0;
    for (std::size_t k = 0; k < levels; ++k)
        ratio = std::max(ratio, sup_norm(gradient_centered(result.u_traj[k]).values()) / (1.0 + tail_max[k]));
    return ratio;
}

StabilityProbe mu_stability_probe(const Model& model, const ScalarField& p1, const ScalarField& m1,
                                  const ScalarField& p2, const ScalarField& m2, double M, double tol) {
    const MuOptions opts{M, tol, 1000, nullptr};
    const MuSolution a = solve_mu(model, p1, m1, opts);
    const MuSolution b = solve_mu(model, p2, m2, opts);
    const double beta = model.constants().beta0;
    StabilityProbe out;
    out.lhs = sup_distance(a.alpha.values(), b.alpha.values());
    out.rhs = std::pow(sup_distance(p1.values(), p2.values()), beta) +
              std::pow(sup_distance(m1.values(), m2.values()), beta);
    return out;
}

DiagnosticsReport diagnose(const SolveResult& result, const Model& model) {
    DiagnosticsReport rep;
    const MassPositivity mp = check_mass_and_positivity(result);
    rep.mass_max_dev = mp.mass_max_dev;
    rep.m_min = mp.m_min;
    rep.energy_identity_residual = energy_identity_residual(result, model);
    rep.lambda_bound_margin = check_lambda_bound(result, model);
    rep.grad_value_ratio = grad_value_ratio(result);
    const auto& c = model.constants();
    if (c.lambda2) rep.max_principle_margin = check_max_principle(result, model);
    if (c.lambda1 && c.lambda2) rep.small_param = small_param_check(c);
    if (c.lambda1) rep.b3_side_condition = *c.lambda1 < std::pow(1.0 - c.lambda0, c.q_prime()) / std::pow(c.C0, c.q_prime());
    return rep;
}

} // namespace mfgc
