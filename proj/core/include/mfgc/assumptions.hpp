#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mfgc/diagnostics.hpp"
#include "mfgc/models.hpp"

namespace mfgc {

/// The exact sample that produced the worst violation, enough to replay it.
struct Witness {
    std::size_t sample_index = 0;
    std::size_t node = 0;
    double x = 0.0;
    double p = 0.0;
    double margin = 0.0;
    double lhs = 0.0;
    double rhs = 0.0;
    std::vector<double> m;
    std::vector<double> alpha;
    std::vector<double> alpha2;  ///< second control field (FP2 only)
};

struct CheckResult {
    std::string name;
    bool declared = true;        ///< false when the constants needed are missing
    std::size_t samples = 0;
    std::size_t violations = 0;
    double worst_margin = kInfinity;
    std::optional<Witness> witness;
};

struct AssumptionReport {
    std::uint64_t seed = 0;
    std::size_t n_samples = 0;
    double p_max = 10.0;
    StructuralConstants constants;
    std::vector<CheckResult> checks;
    /// Structural inequalities on the constants alone, reported next to the samples.
    std::optional<SmallParamCheck> small_param;
    bool b3_side_condition = false;

    std::size_t total_violations() const noexcept;
    const CheckResult* find(const std::string& name) const noexcept;
};

/// Samples (x, p, mu) and records worst margins of A1 (convexity), FP1, FP2, B1, B2, B3,
/// and for kernel models the bound ||V|| <= Lambda_{q0}. Deterministic in `seed`.
AssumptionReport verify_sampled(const Model& model, std::size_t n_samples, std::uint64_t seed, double p_max = 10.0);

// Crowd-motion optimal control ----------------------------------------------------------

/// L~(alpha, V) = theta/a' |alpha - l V|^{a'} + (1-theta)/b' |alpha|^{b'}.
double crowd_lagrangian(double theta, double lambda_tilde, double a, double b, double alpha, double V);

struct OptimalControlResult {
    double alpha = 0.0;
    double residual = 0.0;       ///< |p + D_alpha L~(alpha, V)|
    std::size_t iterations = 0;
    bool used_bisection = false;
};

/// Minimiser of L~(alpha, V) + alpha p. Damped fixed point first, bisection on the
/// monotone scalar equation as fallback. Throws DomainError outside a, b >= 2, theta in [0,1].
OptimalControlResult optimal_control_detailed(double theta, double lambda_tilde, double a, double b, double p, double V);
double optimal_control(double theta, double lambda_tilde, double a, double b, double p, double V);

/// H~(p, V) = -alpha* p - L~(alpha*, V).
double h_tilde(double theta, double lambda_tilde, double a, double b, double p, double V);

/// Coefficient c with H~(0, V) = c |V|^{a'} when a = b.
double h_tilde_zero_coefficient(double theta, double lambda_tilde, double a);

struct H4Eigen {
    double explicit_min = 0.0;  ///< quadratic formula on the explicit 2x2 entries
    double direct_min = 0.0;    ///< eigensolver on I + k(BC+CB) + k^2 B C^2 B
};

/// Smaller eigenvalue of the kernel-gradient positivity matrix, by both routes.
H4Eigen h4_min_eigenvalue(double r, double s, double k, double chi);

struct H4Sweep {
    std::size_t tuples = 0;
    double min_eigenvalue = kInfinity;
    double worst_r = 0.0, worst_s = 0.0, worst_k = 0.0, worst_chi = 0.0;
    std::size_t below_one = 0;             ///< tuples with eigenvalue < 1 - 1e-10
    double max_relative_disagreement = 0.0;
};

/// r ~ U(0,1], s and k log-uniform in [1,10] and [1e-2,10], chi ~ U[0, 2 pi).
H4Sweep h4_sweep(std::size_t tuples, std::uint64_t seed);

struct CrowdRegion {
    bool case_a = false;  ///< q0 <= q' and a != b
    bool case_b = false;  ///< q0 <= q' and the small-parameter inequality holds
    bool case_c = false;  ///< theta = 1
    bool case_d = false;  ///< constant kernel
    SmallParamCheck smallness;
    /// Case (e), T < T0, is always available but T0 is not computable.
    std::vector<std::string> labels() const;
};

CrowdRegion crowd_existence_region(double theta, double lambda_tilde, double a, double b, double q0,
                                   bool kernel_constant = false);

} // namespace mfgc
