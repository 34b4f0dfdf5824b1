#pragma once

#include <vector>

#include "mfgc/grid.hpp"
#include "mfgc/models.hpp"
#include "mfgc/mufix.hpp"

namespace mfgc {

enum class Advection { Centered, Upwind };

struct SchemeConfig {
    double nu = 0.05;
    /// Gradient used inside the HJB Hamiltonian. The FPK flux is always upwind.
    Advection hjb_gradient = Advection::Centered;
    bool cfl_guard = true;
};

/// One implicit-diffusion, explicit-Hamiltonian step from level k+1 to k:
/// (I - nu dt Lap) u = u_next - dt H(x, D u_next, mu_{k+1}).
ScalarField hjb_step_backward(const ScalarField& u_next, const Aggregates& agg, const Model& model,
                              const SchemeConfig& scheme, double dt);

/// Conservative step (I - nu dt Lap) m_new = m_now - dt D F with the upwind face flux
/// F_{i+1/2} = max(b_f,0) m_i + min(b_f,0) m_{i+1}, b_f = (b_i + b_{i+1})/2.
/// Throws CflViolation when guarded.
ScalarField fpk_step_forward(const ScalarField& m_now, const ControlField& drift, const SchemeConfig& scheme,
                             double dt);

/// Backward sweep; u(T) = g(., m_T) and each earlier level uses mu at the later level.
std::vector<ScalarField> solve_hjb_backward(const std::vector<JointMeasure>& mu_traj, const ScalarField& m_T,
                                            const Model& model, const SchemeConfig& scheme, const TimeGrid& tgrid);

struct ForwardSweep {
    std::vector<ScalarField> m;      ///< nt+1 levels
    std::vector<JointMeasure> mu;    ///< nt+1 slices, mu_k = (m_k, alpha_k)
    std::vector<MuSolveReport> reports;
};

struct MuSettings {
    double M = kInfinity;
    double tol = 1e-12;
    std::size_t max_iter = 200;
};

/// Forward sweep: alpha_k = solve_mu(D u_k, m_k), then m_{k+1} from drift alpha_k.
ForwardSweep solve_fpk_forward(const std::vector<ScalarField>& u_traj, const Model& model, const SchemeConfig& scheme,
                               const TimeGrid& tgrid, const ScalarField& m0, const MuSettings& mu_settings);

} // namespace mfgc
