#pragma once

#include <limits>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "mfgc/grid.hpp"

namespace mfgc {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

/// Nodes with m_i at or below this floor are outside the support for sup-type moments.
inline constexpr double kMassFloor = 1e-14;

/// Discrete image measure mu = (Id, alpha)#m.
struct JointMeasure {
    ScalarField m;
    ControlField alpha;
};

/// Throws DomainError if m is not a probability density or the fields disagree.
void validate_measure(const JointMeasure& mu, double mass_tol = 1e-12);

/// Dense n-by-n table k(x_i, x_j), sampled once per grid.
class KernelTable {
public:
    KernelTable(const TorusGrid& grid, std::vector<double> table);

    template <class Fn>
    static KernelTable sample(const TorusGrid& grid, Fn&& fn) {
        const std::size_t n = grid.size();
        std::vector<double> t(n * n);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) t[i * n + j] = fn(grid.node(i), grid.node(j));
        return KernelTable(grid, std::move(t));
    }

    /// 1 + kappa cos(2 pi (x - y)); kappa in [0, 1].
    static KernelTable cosine(const TorusGrid& grid, double kappa);
    /// weight * exp(-(d/length)^2) with d the torus distance.
    static KernelTable gaussian(const TorusGrid& grid, double weight, double length);
    static KernelTable constant(const TorusGrid& grid, double value);

    const TorusGrid& grid() const noexcept { return grid_; }
    double operator()(std::size_t i, std::size_t j) const noexcept { return table_[i * grid_.size() + j]; }
    const double* row(std::size_t i) const noexcept { return table_.data() + i * grid_.size(); }

    double min_value() const noexcept { return min_; }
    double max_value() const noexcept { return max_; }
    /// Largest centred difference quotient in x over the table.
    double max_x_derivative() const noexcept { return dmax_; }
    /// Largest |d_x k| / k over the table; infinite when k touches zero.
    double max_log_derivative() const noexcept { return log_dmax_; }
    /// True when all entries agree to rounding.
    bool is_constant() const noexcept { return max_ - min_ <= 1e-14 * std::max(1.0, max_); }

private:
    TorusGrid grid_;
    std::vector<double> table_;
    double min_ = 0.0;
    double max_ = 0.0;
    double dmax_ = 0.0;
    double log_dmax_ = 0.0;
};

/// Smooth running cost f(x, m) = f0(x) + c * m(x).
struct RunningCost {
    std::vector<double> f0;        ///< empty means f0 = 0
    double local_coupling = 0.0;   ///< c
    /// Bounds on |f0| and |f0'| used when declaring constants.
    double sup_f0() const;
    double sup_df0(double h) const;
};

/// Terminal cost g(x, m) = g0(x) + c_g * (K m)(x) with a row-normalised kernel K.
struct TerminalCost {
    std::vector<double> g0;            ///< empty means g0 = 0
    double density_coupling = 0.0;     ///< c_g
    std::optional<KernelTable> smoothing; ///< defaults to the model kernel, else identity
};

// Model variants -------------------------------------------------------------

/// Bertrand competition with linear demand, H = (p + a mean - b)^2 / 4.
struct LinearDemand {
    double eps = 1.0;
};

/// Exhaustible resources with coupling matrix M. Only d_r = 1 enters the PDE loop.
struct NegCorrResources {
    double coupling = 0.0;
};

/// Price impact with quadratic transaction cost, H = (p + eps~ L2)^2 / 2 + x mean.
struct PriceImpact {
    double eps_tilde = 0.25;
};

/// Crowd motion with V-aggregate. Closed forms exist for a = b = 2 or theta = 1.
struct CrowdMotion {
    double theta = 0.5;
    double lambda_tilde = 0.5;
    double a = 2.0;
    double b = 2.0;
    double q0 = 2.0;
    KernelTable kernel;
};

/// First-order flocking with unnormalised aggregates A and Z.
struct Flocking {
    KernelTable phi;
};

using ModelSpec = std::variant<LinearDemand, NegCorrResources, PriceImpact, CrowdMotion, Flocking>;

std::string variant_name(const ModelSpec& spec);

/// Constants of the structural assumptions. Unset optionals mean "not declared".
struct StructuralConstants {
    double q = 2.0;
    double q0 = 1.0;        ///< may be kInfinity
    double lambda0 = 0.0;
    double C0 = 1.0;
    std::optional<double> lambda1;
    std::optional<double> lambda2;
    double beta0 = 1.0;     ///< Hoelder exponent for stability probes; metadata

    double q_prime() const noexcept { return q / (q - 1.0); }
};

/// Aggregates of mu that H and H_p need, plus the density for the local coupling.
struct MeanControl {
    double mean = 0.0;
};
struct PriceImpactAggregate {
    double l2 = 0.0;    ///< Lambda_2(mu)
    double mean = 0.0;  ///< integral of alpha dm
};
struct FieldAggregate {
    std::vector<double> v;  ///< V for crowd motion, A for flocking
    std::vector<double> z;  ///< Z_{q0} for crowd motion, Z for flocking
};

struct Aggregates {
    std::variant<MeanControl, PriceImpactAggregate, FieldAggregate> value;
    std::vector<double> density;  ///< m_i, for f(x, m) = f0 + c m
};

class Model {
public:
    /// Validates parameter ranges of the variant unless `check_ranges` is false.
    Model(TorusGrid grid, ModelSpec spec, RunningCost running = {}, TerminalCost terminal = {},
          bool check_ranges = true);

    const TorusGrid& grid() const noexcept { return grid_; }
    const ModelSpec& spec() const noexcept { return spec_; }
    const RunningCost& running_cost() const noexcept { return running_; }
    const TerminalCost& terminal() const noexcept { return terminal_; }

    /// Declared constants (derived per variant, or the override when set).
    const StructuralConstants& constants() const noexcept { return constants_; }
    void override_constants(const StructuralConstants& c) { constants_ = c; }

    /// True if eval_H / eval_Hp have closed forms for this variant.
    bool has_closed_form() const noexcept;

    /// k(x_i, x_j)^{q0'} row-major for crowd motion with q0' outside {1, 2, inf}; empty otherwise.
    const std::vector<double>& kernel_power() const noexcept { return kernel_power_; }

private:
    TorusGrid grid_;
    ModelSpec spec_;
    RunningCost running_;
    TerminalCost terminal_;
    StructuralConstants constants_;
    std::vector<double> kernel_power_;
};

/// H(x_i, p, mu) including the running cost.
double eval_H(const Model& model, std::size_t i, double p, const Aggregates& agg);
/// dH/dp at (x_i, p, mu).
double eval_Hp(const Model& model, std::size_t i, double p, const Aggregates& agg);

Aggregates compute_aggregates(const Model& model, const JointMeasure& mu);

/// g(., m_T) sampled on the grid.
ScalarField terminal_cost(const Model& model, const ScalarField& m_T);

/// The model's lambda_0.
double contraction_constant(const Model& model);

/// Constants that hold for the variant, derived from its parameters.
StructuralConstants declared_constants(const Model& model);

/// Reference constants for LinearDemand: q' = 2, C0 = 1/2,
/// lambda0 = eps/(2(1+eps)), lambda1 = 1, lambda2 = 0.
StructuralConstants linear_demand_reference_constants(double eps);

// Resource coupling with d_r <= 3 ------------------------------------------------

/// Operator 2-norm of a d x d matrix given row-major.
double operator_norm(const std::vector<double>& M, std::size_t d);

/// Closed-form resource aggregate: mean = -1/2 (I + M/2)^{-1} P with P = integral of p dm.
std::vector<double> negcorr_mean_direct(const std::vector<double>& M, const std::vector<double>& P,
                                        std::size_t d);

/// Banach iteration of mean <- -1/2 (P + M mean), from mean = 0.
std::vector<double> negcorr_mean_iterative(const std::vector<double>& M, const std::vector<double>& P,
                                           std::size_t d, double tol = 1e-14, int max_iter = 10000);

} // namespace mfgc
