#pragma once

#include <optional>
#include <vector>

#include "mfgc/grid.hpp"
#include "mfgc/models.hpp"

namespace mfgc {

struct SolveResult;

struct SmallParamCheck {
    bool ok = false;
    double lhs = 0.0;  ///< lambda1 + C0 lambda2
    double rhs = 0.0;  ///< (1 - lambda0)^{q'} / C0^{q'}
};

struct DiagnosticsReport {
    double mass_max_dev = 0.0;
    double m_min = 0.0;
    double energy_identity_residual = 0.0;
    double lambda_bound_margin = 0.0;   ///< min over t of RHS - LHS of the moment bound at q~ = inf
    double grad_value_ratio = 0.0;
    std::optional<double> max_principle_margin;  ///< empty when lambda2 is undeclared
    std::optional<SmallParamCheck> small_param;  ///< empty when lambda1 or lambda2 is undeclared
    /// B3's side condition lambda1 < (1 - lambda0)^{q'} / C0^{q'}; structural, not part of VERIFIED.
    bool b3_side_condition = false;

    /// Every margin-type check passes. The energy residual and the ratio are reported only.
    bool verified() const noexcept;
};

struct MassPositivity {
    double mass_max_dev = 0.0;
    double m_min = 0.0;
};

MassPositivity check_mass_and_positivity(const SolveResult& result);

/// |int_0^T int (H_p p - H) dm dt - (int u(0) dm0 - int g(m_T) dm_T)| with the
/// rectangle rule in space and the trapezoid rule in time.
double energy_identity_residual(const SolveResult& result, const Model& model);

/// min over slices of C0/(1-lambda0) (1 + max_supp |p|^{q-1}) - Lambda_inf(mu_t).
double check_lambda_bound(const SolveResult& result, const Model& model);

/// Margin of the sup bound on u at theta = 1/2. Throws MissingConstants without lambda2.
double check_max_principle(const SolveResult& result, const Model& model);

/// Throws MissingConstants without lambda1 and lambda2.
SmallParamCheck small_param_check(const StructuralConstants& constants);
SmallParamCheck small_param_check(const Model& model);

/// sup_t ||D u(t)|| / (1 + max_{s >= t} ||u(s)||).
double grad_value_ratio(const SolveResult& result);

struct StabilityProbe {
    double lhs = 0.0;  ///< ||alpha1 - alpha2||_inf
    double rhs = 0.0;  ///< ||p1 - p2||^beta0 + ||m1 - m2||^beta0
};

StabilityProbe mu_stability_probe(const Model& model, const ScalarField& p1, const ScalarField& m1,
                                  const ScalarField& p2, const ScalarField& m2, double M, double tol = 1e-13);

/// Runs every check. The max-principle and small-parameter entries stay empty when
/// constants are missing.
DiagnosticsReport diagnose(const SolveResult& result, const Model& model);

} // namespace mfgc
