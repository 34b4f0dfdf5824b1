#pragma once

#include <optional>

#include "mfgc/grid.hpp"
#include "mfgc/models.hpp"

namespace mfgc {

struct MuSolveReport {
    std::size_t iterations = 0;
    double final_residual = 0.0;      ///< sup norm of the last successive difference
    bool converged = false;
    /// Largest ratio of consecutive residuals; empty before the second iteration.
    std::optional<double> contraction_estimate;
};

struct MuSolution {
    ControlField alpha;
    MuSolveReport report;
};

/// Radial projection onto the ball of radius M; M = kInfinity is the identity.
double truncate_TM(double v, double M) noexcept;

struct MuOptions {
    double M = kInfinity;
    double tol = 1e-12;
    std::size_t max_iter = 200;
    /// Starting iterate; zero when absent.
    const ControlField* initial = nullptr;
};

/// Banach iteration alpha <- T_M(-H_p(x, p, (Id, alpha)#m)).
/// Throws NoConvergence only when the budget runs out and the observed ratio is >= 1.
MuSolution solve_mu(const Model& model, const ScalarField& p_field, const ScalarField& m, const MuOptions& opts = {});

/// Direct solve for models whose aggregate enters H_p linearly (untruncated only).
/// Returns nullopt for variants without a closed form.
std::optional<ControlField> solve_mu_closed_form(const Model& model, const ScalarField& p_field, const ScalarField& m);

/// ||alpha||_{L^q(m)}; q = kInfinity takes the max over nodes with m_i > kMassFloor.
double lambda_moment(const JointMeasure& mu, double q_tilde);

} // namespace mfgc
