#include "mfgc/coupler.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "mfgc/errors.hpp"
#include "mfgc/mufix.hpp"

namespace mfgc {

void validate(const SolverConfig& c) {
    if (!(c.M > 0.0)) throw DomainError("solver.M must be positive");
    if (!(c.omega > 0.0 && c.omega <= 1.0)) throw DomainError("solver.omega must lie in (0, 1]");
    if (!(c.tol_outer > 0.0)) throw DomainError("solver.tol_outer must be positive");
    if (!(c.tol_mu > 0.0)) throw DomainError("solver.tol_mu must be positive");
    if (c.max_outer < 1) throw DomainError("solver.max_outer must be at least 1");
    if (c.max_mu < 1) throw DomainError("solver.max_mu must be at least 1");
    if (!(c.scheme.nu > 0.0)) throw DomainError("solver.nu must be positive");
    for (std::size_t i = 0; i < c.continuation.size(); ++i) {
        if (!(c.continuation[i] > 0.0)) throw DomainError("solver.continuation entries must be positive");
        if (i > 0 && !(c.continuation[i] > c.continuation[i - 1]))
            throw DomainError("solver.continuation must be strictly increasing");
    }
}

namespace {

double trajectory_distance(const std::vector<ScalarField>& a, const std::vector<ScalarField>& b) {
    double d = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) d = std::max(d, sup_distance(a[k].values(), b[k].values()));
    return d;
}

// Residual grew tenfold across the last five steps, increasing each time.
bool diverging(const std::vector<double>& hist) {
    const std::size_t n = hist.size();
    if (n < 6) return false;
    for (std::size_t k = n - 5; k < n; ++k)
        if (!(hist[k] > hist[k - 1])) return false;
    return hist[n - 1] >= 10.0 * hist[n - 6];
}

std::vector<ScalarField> initial_u(const Model& model, const TimeGrid& tgrid, const ScalarField& m0,
                                   const SolverConfig& config) {
    if (config.initial_guess == InitialGuess::Terminal)
        return std::vector<ScalarField>(tgrid.steps() + 1, terminal_cost(model, m0));
    return std::vector<ScalarField>(tgrid.steps() + 1, ScalarField(model.grid()));
}

} // namespace

SystemResiduals system_residuals(const Model& model, const TimeGrid& tgrid, const std::vector<ScalarField>& u,
                                 const std::vector<ScalarField>& m, const std::vector<ControlField>& alpha,
                                 const SolverConfig& config) {
    const std::size_t nt = tgrid.steps();
    const std::size_t n = model.grid().size();
    const double h = model.grid().spacing();
    const double dt = tgrid.dt();
    const double nu = config.scheme.nu;
    SystemResiduals r;

    for (std::size_t k = 0; k <= nt; ++k) {
        const JointMeasure mu{m[k], alpha[k]};
        const Aggregates agg = compute_aggregates(model, mu);
        const ScalarField p = gradient_centered(u[k]);
        for (std::size_t i = 0; i < n; ++i)
            r.mu = std::max(r.mu, std::abs(alpha[k][i] - truncate_TM(-eval_Hp(model, i, p[i], agg), config.M)));
        if (k == 0 || k == nt) continue;

        const ScalarField lu = laplacian(u[k]);
        const ScalarField lm = laplacian(m[k]);
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t ip = (i + 1) % n, im = (i + n - 1) % n;
            const double hjb = -(u[k + 1][i] - u[k - 1][i]) / (2.0 * dt) - nu * lu[i] + eval_H(model, i, p[i], agg);
            const double div = (alpha[k][ip] * m[k][ip] - alpha[k][im] * m[k][im]) / (2.0 * h);
            const double fpk = (m[k + 1][i] - m[k - 1][i]) / (2.0 * dt) - nu * lm[i] + div;
            r.hjb = std::max(r.hjb, std::abs(hjb));
            r.fpk = std::max(r.fpk, std::abs(fpk));
        }
    }
    return r;
}

SolveResult solve(const Model& model, const TimeGrid& tgrid, const ScalarField& m0, const SolverConfig& config,
                  const WarmStart* warm) {
    validate(config);
    if (!(m0.grid() == model.grid())) throw DomainError("solve: m0 lives on a different grid");
    const std::size_t nt = tgrid.steps();
    const MuSettings mus{config.M, config.tol_mu, config.max_mu};

    std::vector<ScalarField> u;
    if (warm) {
        if (warm->u_traj.size() != nt + 1) throw DomainError("solve: warm start has the wrong number of slices");
        u = warm->u_traj;
    } else {
        u = initial_u(model, tgrid, m0, config);
    }

    SolveResult res;
    res.tgrid = tgrid;
    res.M = config.M;

    std::vector<ScalarField> m_prev;
    std::vector<ScalarField> best_u = u;
    double best_res = kInfinity;

    for (std::size_t it = 1; it <= config.max_outer; ++it) {
        ForwardSweep fw = solve_fpk_forward(u, model, config.scheme, tgrid, m0, mus);
        std::vector<ScalarField> u_new = solve_hjb_backward(fw.mu, fw.m.back(), model, config.scheme, tgrid);

        double du = 0.0;
        for (std::size_t k = 0; k <= nt; ++k) {
            for (std::size_t i = 0; i < u_new[k].size(); ++i) {
                const double next = (1.0 - config.omega) * u[k][i] + config.omega * u_new[k][i];
                du = std::max(du, std::abs(next - u[k][i]));
                u_new[k][i] = next;
            }
        }
        // The first sweep has no previous density to compare with.
        const double dm = m_prev.empty() ? 0.0 : trajectory_distance(fw.m, m_prev);
        const double r = std::max(du, dm);
        res.residual_history.push_back(r);
        res.outer_iterations = it;
        u = std::move(u_new);
        m_prev = std::move(fw.m);

        if (r < best_res) {
            best_res = r;
            best_u = u;
        }
        if (r <= config.tol_outer) {
            res.converged = true;
            break;
        }
        if (!std::isfinite(r) || diverging(res.residual_history)) {
            res.diverged = true;
            break;
        }
    }

    // Final pass: regenerate m and mu from the returned u so the triple is self-consistent.
    const std::vector<ScalarField>& u_out = res.converged ? u : best_u;
    ForwardSweep fin = solve_fpk_forward(u_out, model, config.scheme, tgrid, m0, mus);
    res.u_traj = u_out;
    res.m_traj = std::move(fin.m);
    res.alpha_traj.reserve(nt + 1);
    res.truncation_inactive = true;
    for (auto& mu : fin.mu) {
        if (config.M != kInfinity && !(lambda_moment(mu, kInfinity) < config.M)) res.truncation_inactive = false;
        res.alpha_traj.push_back(std::move(mu.alpha));
    }
    for (const auto& rep : fin.reports)
        res.max_mu_contraction = std::max(res.max_mu_contraction, rep.contraction_estimate.value_or(0.0));

    res.system_residuals = system_residuals(model, tgrid, res.u_traj, res.m_traj, res.alpha_traj, config);
    res.diagnostics = diagnose(res, model);
    return res;
}

SolveResult solve_with_continuation(const Model& model, const TimeGrid& tgrid, const ScalarField& m0,
                                    const SolverConfig& config) {
    if (config.continuation.empty()) throw DomainError("solve_with_continuation: empty schedule");
    validate(config);

    SolveResult out;
    std::vector<double> history;
    std::size_t iterations = 0;
    WarmStart warm;
    for (std::size_t s = 0; s < config.continuation.size(); ++s) {
        SolverConfig stage = config;
        stage.M = config.continuation[s];
        stage.continuation.clear();
        out = solve(model, tgrid, m0, stage, s == 0 ? nullptr : &warm);
        history.insert(history.end(), out.residual_history.begin(), out.residual_history.end());
        iterations += out.outer_iterations;
        if (!out.converged) break;
        warm.u_traj = out.u_traj;
    }
    out.residual_history = std::move(history);
    out.outer_iterations = iterations;
    return out;
}

} // namespace mfgc
