#include "mfgc/pde.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "mfgc/errors.hpp"

namespace mfgc {

namespace {

void check_scheme(const SchemeConfig& scheme, double dt) {
    if (!(scheme.nu > 0.0)) throw DomainError("scheme: nu must be positive");
    if (!(dt > 0.0)) throw DomainError("scheme: dt must be positive");
}

} // namespace

ScalarField hjb_step_backward(const ScalarField& u_next, const Aggregates& agg, const Model& model,
                              const SchemeConfig& scheme, double dt) {
    check_scheme(scheme, dt);
    const auto& grid = u_next.grid();
    const std::size_t n = grid.size();
    const double h = grid.spacing();

    ScalarField p = gradient_centered(u_next);
    if (scheme.hjb_gradient == Advection::Upwind) {
        // Backward in time, u(x) is carried from x + alpha dt with alpha = -H_p, so the
        // one-sided difference is backward where H_p > 0.
        std::vector<double> wind(n);
        for (std::size_t i = 0; i < n; ++i) wind[i] = eval_Hp(model, i, p[i], agg);
        p = gradient_upwind(u_next, wind);
    }

    ScalarField rhs(grid);
    for (std::size_t i = 0; i < n; ++i) rhs[i] = u_next[i] - dt * eval_H(model, i, p[i], agg);

    const double r = scheme.nu * dt / (h * h);
    return periodic_tridiag_solve(1.0 + 2.0 * r, -r, rhs);
}

ScalarField fpk_step_forward(const ScalarField& m_now, const ControlField& drift, const SchemeConfig& scheme,
                             double dt) {
    check_scheme(scheme, dt);
    const auto& grid = m_now.grid();
    const std::size_t n = grid.size();
    const double h = grid.spacing();
    if (drift.size() != n) throw DomainError("fpk_step_forward: drift has wrong length");

    if (scheme.cfl_guard) {
        const double cfl = dt * sup_norm(drift.values()) / h;
        if (cfl > 1.0)
            throw CflViolation("fpk_step_forward: dt*max|b|/h = " + std::to_string(cfl) + " exceeds 1");
    }

    // Face i carries the flux between nodes i and i+1, upwinded on the face velocity.
    // A node draining through both faces loses at most (b_{i+1} - b_{i-1})/2 <= max|b|,
    // so the explicit part stays positive under the CFL bound.
    std::vector<double> flux(n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t ip = (i + 1 == n) ? 0 : i + 1;
        const double bf = 0.5 * (drift[i] + drift[ip]);
        flux[i] = std::max(bf, 0.0) * m_now[i] + std::min(bf, 0.0) * m_now[ip];
    }
    ScalarField rhs(grid);
    const double c = dt / h;
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t im = (i == 0) ? n - 1 : i - 1;
        rhs[i] = m_now[i] - c * (flux[i] - flux[im]);
    }

    const double r = scheme.nu * dt / (h * h);
    return periodic_tridiag_solve(1.0 + 2.0 * r, -r, rhs);
}

std::vector<ScalarField> solve_hjb_backward(const std::vector<JointMeasure>& mu_traj, const ScalarField& m_T,
                                            const Model& model, const SchemeConfig& scheme, const TimeGrid& tgrid) {
    const std::size_t nt = tgrid.steps();
    if (mu_traj.size() != nt + 1) throw DomainError("solve_hjb_backward: need nt+1 measure slices");
    std::vector<ScalarField> u(nt + 1, ScalarField(model.grid()));
    u[nt] = terminal_cost(model, m_T);
    for (std::size_t k = nt; k-- > 0;) {
        const Aggregates agg = compute_aggregates(model, mu_traj[k + 1]);
        u[k] = hjb_step_backward(u[k + 1], agg, model, scheme, tgrid.dt());
    }
    return u;
}

ForwardSweep solve_fpk_forward(const std::vector<ScalarField>& u_traj, const Model& model, const SchemeConfig& scheme,
                               const TimeGrid& tgrid, const ScalarField& m0, const MuSettings& mu_settings) {
    const std::size_t nt = tgrid.steps();
    if (u_traj.size() != nt + 1) throw DomainError("solve_fpk_forward: need nt+1 value slices");
    for (double v : m0)
        if (!(v > 0.0)) throw DomainError("solve_fpk_forward: m0 must be positive");

    ForwardSweep out;
    out.m.reserve(nt + 1);
    out.mu.reserve(nt + 1);
    out.reports.reserve(nt + 1);
    out.m.push_back(m0);

    const MuOptions opts{mu_settings.M, mu_settings.tol, mu_settings.max_iter, nullptr};
    for (std::size_t k = 0; k <= nt; ++k) {
        const ScalarField p = gradient_centered(u_traj[k]);
        MuSolution sol = solve_mu(model, p, out.m[k], opts);
        out.reports.push_back(sol.report);
        if (k < nt) out.m.push_back(fpk_step_forward(out.m[k], sol.alpha, scheme, tgrid.dt()));
        out.mu.push_back(JointMeasure{out.m[k], std::move(sol.alpha)});
    }
    return out;
}

} // namespace mfgc
