#pragma once

#include <optional>
#include <vector>

#include "mfgc/diagnostics.hpp"
#include "mfgc/grid.hpp"
#include "mfgc/models.hpp"
#include "mfgc/pde.hpp"

namespace mfgc {

enum class InitialGuess { Zero, Terminal };

struct SolverConfig {
    double M = kInfinity;
    double omega = 0.5;
    double tol_outer = 1e-8;
    std::size_t max_outer = 200;
    double tol_mu = 1e-12;
    std::size_t max_mu = 200;
    SchemeConfig scheme;
    std::vector<double> continuation;
    InitialGuess initial_guess = InitialGuess::Zero;
};

/// Throws DomainError naming the offending field.
void validate(const SolverConfig& config);

/// Residuals of the continuous equations evaluated on the discrete triple with
/// second-order centred differences at interior time levels.
struct SystemResiduals {
    double hjb = 0.0;
    double fpk = 0.0;
    double mu = 0.0;
};

struct SolveResult {
    std::vector<ScalarField> u_traj;
    std::vector<ScalarField> m_traj;
    std::vector<ControlField> alpha_traj;
    std::vector<double> residual_history;
    std::size_t outer_iterations = 0;
    bool converged = false;
    bool diverged = false;
    DiagnosticsReport diagnostics;
    SystemResiduals system_residuals;
    double M = kInfinity;                  ///< truncation radius of the final solve
    bool truncation_inactive = false;      ///< Lambda_inf(mu_k) < M on every slice
    double max_mu_contraction = 0.0;       ///< largest inner ratio seen in the final pass
    TimeGrid tgrid{1.0, 1};
};

/// Optional warm start for solve(); lengths must match the time grid.
struct WarmStart {
    std::vector<ScalarField> u_traj;
};

SolveResult solve(const Model& model, const TimeGrid& tgrid, const ScalarField& m0, const SolverConfig& config,
                  const WarmStart* warm = nullptr);

/// Solves at each M of config.continuation in turn, warm-starting from the previous u.
SolveResult solve_with_continuation(const Model& model, const TimeGrid& tgrid, const ScalarField& m0,
                                    const SolverConfig& config);

/// Recomputes mu from (u, m) and evaluates the residuals of the three equations.
SystemResiduals system_residuals(const Model& model, const TimeGrid& tgrid, const std::vector<ScalarField>& u,
                                 const std::vector<ScalarField>& m, const std::vector<ControlField>& alpha,
                                 const SolverConfig& config);

} // namespace mfgc
