#include "mfgc/models.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "mfgc/errors.hpp"

namespace mfgc {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

// The sampler in the assumption checker draws densities whose values stay
// below this cap and whose slopes stay below the second cap. Constants that
// involve the local coupling c*m are declared relative to these.
constexpr double kDensityCap = 1.5;
constexpr double kDensitySlopeCap = 8.0 * std::numbers::pi;

// Safety factor on table-estimated kernel derivatives.
constexpr double kKernelSafety = 2.0;

double torus_distance(double x, double y) {
    double d = std::abs(x - y);
    return std::min(d, 1.0 - d);
}

double local_cost(const Model& model, std::size_t i, const Aggregates& agg) {
    const auto& f = model.running_cost();
    double v = f.f0.empty() ? 0.0 : f.f0[i];
    if (f.local_coupling != 0.0) v += f.local_coupling * agg.density[i];
    return v;
}

const MeanControl& mean_of(const Aggregates& agg) {
    const auto* p = std::get_if<MeanControl>(&agg.value);
    if (!p) throw DomainError("aggregates do not match the model variant");
    return *p;
}

const PriceImpactAggregate& price_of(const Aggregates& agg) {
    const auto* p = std::get_if<PriceImpactAggregate>(&agg.value);
    if (!p) throw DomainError("aggregates do not match the model variant");
    return *p;
}

const FieldAggregate& fields_of(const Aggregates& agg) {
    const auto* p = std::get_if<FieldAggregate>(&agg.value);
    if (!p) throw DomainError("aggregates do not match the model variant");
    return *p;
}

enum class CrowdForm { Quadratic, PowerTheta1, General };

CrowdForm crowd_form(const CrowdMotion& c) {
    if (c.theta == 1.0) return CrowdForm::PowerTheta1;
    if (c.a == 2.0 && c.b == 2.0) return CrowdForm::Quadratic;
    return CrowdForm::General;
}

[[noreturn]] void unsupported_crowd() {
    throw UnsupportedVariant(
        "crowd motion with a != b or a = b != 2 and theta < 1 has no closed-form Hamiltonian; "
        "use the assumption checker");
}

double signed_pow(double x, double e) { return std::copysign(std::pow(std::abs(x), e), x); }

double flocking_lambda0(const KernelTable& phi) {
    // |dH_p| = Z |dA| / (1 + Z^2) with Z in [phi_min, phi_max] and |dA| <= phi_max ||d alpha||_{L1(m)}.
    const double z = std::clamp(1.0, phi.min_value(), phi.max_value());
    return phi.max_value() * z / (1.0 + z * z);
}

double terminal_sup(const Model& model) {
    const auto& g = model.terminal();
    double s = 0.0;
    for (double v : g.g0) s = std::max(s, std::abs(v));
    if (g.density_coupling == 0.0) return s;
    // (K m)(x_i) <= max_j k_ij / (h sum_j k_ij) for any probability density m.
    const auto& grid = model.grid();
    const std::size_t n = grid.size();
    double kmax = 0.0;
    auto scan = [&](const KernelTable& k) {
        for (std::size_t i = 0; i < n; ++i) {
            double row = 0.0, top = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                row += k(i, j);
                top = std::max(top, k(i, j));
            }
            kmax = std::max(kmax, top / (row * grid.spacing()));
        }
    };
    if (g.smoothing) {
        scan(*g.smoothing);
    } else if (const auto* c = std::get_if<CrowdMotion>(&model.spec())) {
        scan(c->kernel);
    } else if (const auto* fl = std::get_if<Flocking>(&model.spec())) {
        scan(fl->phi);
    } else {
        scan(KernelTable::cosine(grid, 1.0));
    }
    return s + std::abs(g.density_coupling) * kmax;
}

} // namespace

void validate_measure(const JointMeasure& mu, double mass_tol) {
    if (!(mu.m.grid() == mu.alpha.grid())) throw DomainError("JointMeasure: m and alpha live on different grids");
    if (!mu.m.all_finite() || !mu.alpha.all_finite()) throw DomainError("JointMeasure: non-finite entries");
    for (double v : mu.m)
        if (v < 0.0) throw DomainError("JointMeasure: negative density");
    const double mass = integrate(mu.m);
    if (std::abs(mass - 1.0) > mass_tol)
        throw DomainError("JointMeasure: density integrates to " + std::to_string(mass));
}

// KernelTable -------------------------------------------------------------------

KernelTable::KernelTable(const TorusGrid& grid, std::vector<double> table) : grid_(grid), table_(std::move(table)) {
    const std::size_t n = grid_.size();
    if (table_.size() != n * n) throw DomainError("KernelTable: table must be n*n");
    min_ = *std::min_element(table_.begin(), table_.end());
    max_ = *std::max_element(table_.begin(), table_.end());
    if (min_ < 0.0) throw DomainError("KernelTable: kernel samples must be nonnegative");
    const double inv2h = 0.5 / grid_.spacing();
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t ip = (i + 1) % n, im = (i + n - 1) % n;
        for (std::size_t j = 0; j < n; ++j) {
            const double d = std::abs(table_[ip * n + j] - table_[im * n + j]) * inv2h;
            dmax_ = std::max(dmax_, d);
            const double k = table_[i * n + j];
            if (d > 0.0) log_dmax_ = std::max(log_dmax_, k > 0.0 ? d / k : kInfinity);
        }
    }
}

KernelTable KernelTable::cosine(const TorusGrid& grid, double kappa) {
    if (!(kappa >= 0.0 && kappa <= 1.0)) throw DomainError("cosine kernel: kappa must lie in [0,1]");
    return sample(grid, [kappa](double x, double y) { return 1.0 + kappa * std::cos(2.0 * std::numbers::pi * (x - y)); });
}

KernelTable KernelTable::gaussian(const TorusGrid& grid, double weight, double length) {
    if (!(weight >= 0.0) || !(length > 0.0)) throw DomainError("gaussian kernel: need weight >= 0, length > 0");
    return sample(grid, [=](double x, double y) {
        const double d = torus_distance(x, y) / length;
        return weight * std::exp(-d * d);
    });
}

KernelTable KernelTable::constant(const TorusGrid& grid, double value) {
    return sample(grid, [value](double, double) { return value; });
}

double RunningCost::sup_f0() const {
    double s = 0.0;
    for (double v : f0) s = std::max(s, std::abs(v));
    return s;
}

double RunningCost::sup_df0(double h) const {
    const std::size_t n = f0.size();
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s = std::max(s, std::abs(f0[(i + 1) % n] - f0[(i + n - 1) % n]) / (2.0 * h));
    return s;
}

std::string variant_name(const ModelSpec& spec) {
    return std::visit(overloaded{[](const LinearDemand&) { return std::string("linear_demand"); },
                                 [](const NegCorrResources&) { return std::string("neg_corr_resources"); },
                                 [](const PriceImpact&) { return std::string("price_impact"); },
                                 [](const CrowdMotion&) { return std::string("crowd_motion"); },
                                 [](const Flocking&) { return std::string("flocking"); }},
                      spec);
}

// Model ------------------------------------------------------------------------

Model::Model(TorusGrid grid, ModelSpec spec, RunningCost running, TerminalCost terminal, bool check_ranges)
    : grid_(grid), spec_(std::move(spec)), running_(std::move(running)), terminal_(std::move(terminal)) {
    const std::size_t n = grid_.size();
    if (!running_.f0.empty() && running_.f0.size() != n) throw DomainError("running cost f0 has wrong length");
    if (!terminal_.g0.empty() && terminal_.g0.size() != n) throw DomainError("terminal cost g0 has wrong length");
    if (terminal_.smoothing && !(terminal_.smoothing->grid() == grid_))
        throw DomainError("terminal smoothing kernel sampled on a different grid");

    std::visit(overloaded{
                   [&](const LinearDemand& s) {
                       if (!(s.eps >= 0.0) || !std::isfinite(s.eps)) throw DomainError("linear_demand: eps must be >= 0");
                   },
                   [&](const NegCorrResources& s) {
                       if (check_ranges && !(std::abs(s.coupling) < 1.0))
                           throw DomainError("neg_corr_resources: |coupling| must be < 1");
                   },
                   [&](const PriceImpact& s) {
                       if (check_ranges && !(s.eps_tilde > 0.0 && s.eps_tilde < 0.5))
                           throw DomainError("price_impact: eps_tilde must lie in (0, 1/2)");
                   },
                   [&](const CrowdMotion& s) {
                       if (!(s.kernel.grid() == grid_)) throw DomainError("crowd_motion: kernel sampled on a different grid");
                       if (!(s.theta >= 0.0 && s.theta <= 1.0)) throw DomainError("crowd_motion: theta must lie in [0,1]");
                       if (check_ranges && !(std::abs(s.lambda_tilde) < 1.0))
                           throw DomainError("crowd_motion: lambda_tilde must lie in (-1,1)");
                       if (!(s.a >= 2.0) || !(s.b >= 2.0)) throw DomainError("crowd_motion: exponents a, b must be >= 2");
                       if (!(s.q0 >= 1.0)) throw DomainError("crowd_motion: q0 must be >= 1");
                   },
                   [&](const Flocking& s) {
                       if (!(s.phi.grid() == grid_)) throw DomainError("flocking: kernel sampled on a different grid");
                       if (check_ranges && !(flocking_lambda0(s.phi) < 1.0))
                           throw DomainError("flocking: kernel too strong, contraction constant >= 1");
                   }},
               spec_);
    if (const auto* c = std::get_if<CrowdMotion>(&spec_)) {
        const double q0p = c->q0 == kInfinity ? 1.0 : (c->q0 == 1.0 ? kInfinity : c->q0 / (c->q0 - 1.0));
        if (q0p != 1.0 && q0p != 2.0 && q0p != kInfinity) {
            kernel_power_.resize(n * n);
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < n; ++j) kernel_power_[i * n + j] = std::pow(c->kernel(i, j), q0p);
        }
    }
    constants_ = declared_constants(*this);
}

bool Model::has_closed_form() const noexcept {
    if (const auto* c = std::get_if<CrowdMotion>(&spec_)) return crowd_form(*c) != CrowdForm::General;
    return true;
}

// Hamiltonians -----------------------------------------------------------------

double eval_H(const Model& model, std::size_t i, double p, const Aggregates& agg) {
    const double f = local_cost(model, i, agg);
    return std::visit(
        overloaded{
            [&](const LinearDemand& s) {
                const double a = s.eps / (1.0 + s.eps), b = 1.0 / (1.0 + s.eps);
                const double w = p + a * mean_of(agg).mean - b;
                return 0.25 * w * w - f;
            },
            [&](const NegCorrResources& s) {
                const double w = p + s.coupling * mean_of(agg).mean;
                return 0.25 * w * w - f;
            },
            [&](const PriceImpact& s) {
                const auto& pa = price_of(agg);
                const double w = p + s.eps_tilde * pa.l2;
                return 0.5 * w * w + model.grid().node(i) * pa.mean - f;
            },
            [&](const CrowdMotion& s) {
                const double V = fields_of(agg).v[i];
                const double lt = s.lambda_tilde;
                switch (crowd_form(s)) {
                case CrowdForm::PowerTheta1:
                    return std::pow(std::abs(p), s.a) / s.a - lt * p * V - f;
                case CrowdForm::Quadratic:
                    return 0.5 * p * p - lt * s.theta * p * V - 0.5 * lt * lt * s.theta * (1.0 - s.theta) * V * V - f;
                case CrowdForm::General:
                    break;
                }
                unsupported_crowd();
            },
            [&](const Flocking&) {
                const auto& fa = fields_of(agg);
                const double A = fa.v[i], Z = fa.z[i];
                return (p * p - 2.0 * Z * A * p - A * A) / (2.0 * (1.0 + Z * Z)) - f;
            }},
        model.spec());
}

double eval_Hp(const Model& model, std::size_t i, double p, const Aggregates& agg) {
    return std::visit(
        overloaded{
            [&](const LinearDemand& s) {
                const double a = s.eps / (1.0 + s.eps), b = 1.0 / (1.0 + s.eps);
                return 0.5 * (p + a * mean_of(agg).mean - b);
            },
            [&](const NegCorrResources& s) { return 0.5 * (p + s.coupling * mean_of(agg).mean); },
            [&](const PriceImpact& s) { return p + s.eps_tilde * price_of(agg).l2; },
            [&](const CrowdMotion& s) {
                const double V = fields_of(agg).v[i];
                switch (crowd_form(s)) {
                case CrowdForm::PowerTheta1:
                    return signed_pow(p, s.a - 1.0) - s.lambda_tilde * V;
                case CrowdForm::Quadratic:
                    return p - s.lambda_tilde * s.theta * V;
                case CrowdForm::General:
                    break;
                }
                unsupported_crowd();
            },
            [&](const Flocking&) {
                const auto& fa = fields_of(agg);
                const double A = fa.v[i], Z = fa.z[i];
                return (p - Z * A) / (1.0 + Z * Z);
            }},
        model.spec());
}

// Aggregates -------------------------------------------------------------------

namespace {

FieldAggregate crowd_fields(const CrowdMotion& s, const std::vector<double>& kpow, const JointMeasure& mu) {
    const auto& grid = mu.m.grid();
    const std::size_t n = grid.size();
    const double h = grid.spacing();
    FieldAggregate out{std::vector<double>(n), std::vector<double>(n)};
    const double q0p = s.q0 == kInfinity ? 1.0 : (s.q0 == 1.0 ? kInfinity : s.q0 / (s.q0 - 1.0));

    std::vector<double> am(n);
    for (std::size_t j = 0; j < n; ++j) am[j] = mu.alpha[j] * mu.m[j] * h;

    for (std::size_t i = 0; i < n; ++i) {
        const double* k = s.kernel.row(i);
        double num = 0.0, zz = 0.0;
        for (std::size_t j = 0; j < n; ++j) num += am[j] * k[j];
        if (q0p == kInfinity) {
            for (std::size_t j = 0; j < n; ++j)
                if (mu.m[j] > kMassFloor) zz = std::max(zz, k[j]);
        } else if (q0p == 1.0) {
            for (std::size_t j = 0; j < n; ++j) zz += k[j] * mu.m[j] * h;
        } else if (q0p == 2.0) {
            for (std::size_t j = 0; j < n; ++j) zz += k[j] * k[j] * mu.m[j] * h;
            zz = std::sqrt(zz);
        } else {
            const double* kp = kpow.data() + i * n;
            for (std::size_t j = 0; j < n; ++j) zz += kp[j] * mu.m[j] * h;
            zz = std::pow(zz, 1.0 / q0p);
        }
        if (!(zz > 0.0))
            throw DegenerateKernel("crowd_motion: Z vanishes at node " + std::to_string(i) +
                                   " (kernel is zero on the support of m)");
        out.z[i] = zz;
        out.v[i] = num / zz;
    }
    return out;
}

FieldAggregate flocking_fields(const Flocking& s, const JointMeasure& mu) {
    const auto& grid = mu.m.grid();
    const std::size_t n = grid.size();
    const double h = grid.spacing();
    FieldAggregate out{std::vector<double>(n), std::vector<double>(n)};
    std::vector<double> am(n), mh(n);
    for (std::size_t j = 0; j < n; ++j) {
        mh[j] = mu.m[j] * h;
        am[j] = mu.alpha[j] * mh[j];
    }
    for (std::size_t i = 0; i < n; ++i) {
        const double* k = s.phi.row(i);
        double A = 0.0, Z = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            A += am[j] * k[j];
            Z += mh[j] * k[j];
        }
        out.v[i] = A;
        out.z[i] = Z;
    }
    return out;
}

} // namespace

Aggregates compute_aggregates(const Model& model, const JointMeasure& mu) {
    const double h = model.grid().spacing();
    Aggregates agg;
    agg.density = mu.m.data();
    std::visit(overloaded{
                   [&](const LinearDemand&) {
                       double s = 0.0;
                       for (std::size_t i = 0; i < mu.m.size(); ++i) s += mu.alpha[i] * mu.m[i];
                       agg.value = MeanControl{s * h};
                   },
                   [&](const NegCorrResources&) {
                       double s = 0.0;
                       for (std::size_t i = 0; i < mu.m.size(); ++i) s += mu.alpha[i] * mu.m[i];
                       agg.value = MeanControl{s * h};
                   },
                   [&](const PriceImpact&) {
                       double s = 0.0, s2 = 0.0;
                       for (std::size_t i = 0; i < mu.m.size(); ++i) {
                           s += mu.alpha[i] * mu.m[i];
                           s2 += mu.alpha[i] * mu.alpha[i] * mu.m[i];
                       }
                       agg.value = PriceImpactAggregate{std::sqrt(s2 * h), s * h};
                   },
                   [&](const CrowdMotion& s) { agg.value = crowd_fields(s, model.kernel_power(), mu); },
                   [&](const Flocking& s) { agg.value = flocking_fields(s, mu); }},
               model.spec());
    return agg;
}

ScalarField terminal_cost(const Model& model, const ScalarField& m_T) {
    const auto& grid = model.grid();
    const std::size_t n = grid.size();
    const auto& g = model.terminal();
    ScalarField out(grid);
    if (!g.g0.empty())
        for (std::size_t i = 0; i < n; ++i) out[i] = g.g0[i];
    if (g.density_coupling == 0.0) return out;

    const KernelTable* k = nullptr;
    std::optional<KernelTable> fallback;
    if (g.smoothing) {
        k = &*g.smoothing;
    } else if (const auto* c = std::get_if<CrowdMotion>(&model.spec())) {
        k = &c->kernel;
    } else if (const auto* fl = std::get_if<Flocking>(&model.spec())) {
        k = &fl->phi;
    } else {
        fallback = KernelTable::cosine(grid, 1.0);
        k = &*fallback;
    }
    for (std::size_t i = 0; i < n; ++i) {
        const double* row = k->row(i);
        double num = 0.0, den = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            num += row[j] * m_T[j];
            den += row[j];
        }
        out[i] += g.density_coupling * (den > 0.0 ? num / den : 0.0);
    }
    return out;
}

double contraction_constant(const Model& model) {
    return std::visit(overloaded{[](const LinearDemand& s) { return s.eps / (2.0 * (1.0 + s.eps)); },
                                 [](const NegCorrResources& s) { return std::abs(s.coupling) / 2.0; },
                                 [](const PriceImpact& s) { return s.eps_tilde; },
                                 [](const CrowdMotion& s) {
                                     // In one dimension |D_V alpha| <= |lambda~| for every (a, b, theta);
                                     // the quadratic case has the sharper lambda~ theta.
                                     if (crowd_form(s) == CrowdForm::Quadratic) return std::abs(s.lambda_tilde) * s.theta;
                                     return std::abs(s.lambda_tilde);
                                 },
                                 [](const Flocking& s) { return flocking_lambda0(s.phi); }},
                      model.spec());
}

StructuralConstants declared_constants(const Model& model) {
    const auto& rc = model.running_cost();
    const double h = model.grid().spacing();
    const double F = rc.sup_f0() + std::abs(rc.local_coupling) * kDensityCap;
    const double Fx = rc.sup_df0(h) + std::abs(rc.local_coupling) * kDensitySlopeCap;
    const double G = terminal_sup(model);

    StructuralConstants c;
    c.lambda0 = contraction_constant(model);
    std::visit(
        overloaded{
            [&](const LinearDemand& s) {
                const double a = s.eps / (1.0 + s.eps);
                c.q = 2.0;
                c.q0 = 1.0;
                c.C0 = std::max({4.0, 0.5 + F, Fx, G});
                c.lambda1 = 2.0 * a * a;
                c.lambda2 = 0.5 * a * a;
            },
            [&](const NegCorrResources& s) {
                const double M2 = s.coupling * s.coupling;
                c.q = 2.0;
                c.q0 = 1.0;
                c.C0 = std::max({4.0, F, Fx, G});
                c.lambda1 = M2;
                c.lambda2 = 0.25 * M2;
            },
            [&](const PriceImpact& s) {
                const double e2 = s.eps_tilde * s.eps_tilde;
                c.q = 2.0;
                c.q0 = 2.0;
                c.C0 = std::max({2.0, 0.5 + F, 0.5 + Fx, G});
                c.lambda1 = c.C0 * (1.0 + e2) / 2.0;
                c.lambda2 = (1.0 + e2) / 2.0;
            },
            [&](const CrowdMotion& s) {
                const double lt = std::abs(s.lambda_tilde), th = s.theta;
                const double Ck = 2.0 * kKernelSafety * s.kernel.max_log_derivative();
                c.q0 = s.q0;
                switch (crowd_form(s)) {
                case CrowdForm::Quadratic:
                    c.q = 2.0;
                    c.C0 = std::max({2.0, F, Fx, G, lt * th * Ck / 2.0 + lt * lt * th * (1.0 - th) * Ck});
                    c.lambda1 = 0.0;
                    c.lambda2 = lt * lt * th * (1.0 - th) / 2.0;
                    break;
                case CrowdForm::PowerTheta1: {
                    c.q = s.a;
                    const double ap = s.a / (s.a - 1.0);
                    c.C0 = std::max({ap, F, lt * Ck, Fx, G});
                    c.lambda1 = 0.0;
                    c.lambda2 = 0.0;
                    break;
                }
                case CrowdForm::General: {
                    // Bounds from the optimality condition of the reduced Lagrangian.
                    const double a = s.a, b = s.b;
                    const double ap = a / (a - 1.0), bp = b / (b - 1.0);
                    c.q = std::min(a, b);
                    const double qp = c.q / (c.q - 1.0);
                    const double C1 = std::max(1.0 / th, 1.0 / (1.0 - th));
                    const double coerc = std::min(1.0 / (std::pow(2.0, a) * ap * std::pow(th, a - 1.0)),
                                                  1.0 / (std::pow(2.0, b) * bp * std::pow(1.0 - th, b - 1.0)));
                    const double l2 = th * std::pow(lt, ap) / ap;
                    const double cb = std::pow(C1, bp - 1.0);
                    const double K = lt * Ck;
                    c.C0 = std::max({C1, 1.0 + F, 1.0 / coerc, F + l2, K * (2.0 + 3.0 * cb) + Fx, G});
                    c.lambda1 = 0.0;
                    // |V|^{a'} <= 1 + |V|^{q'} when a' <= q'.
                    c.lambda2 = ap <= qp ? l2 : kInfinity;
                    break;
                }
                }
            },
            [&](const Flocking& s) {
                const double pm = s.phi.max_value();
                const double dphi = kKernelSafety * s.phi.max_x_derivative();
                c.q = 2.0;
                c.q0 = 1.0;
                c.C0 = std::max({2.0 * (1.0 + pm * pm), F, Fx + dphi * (2.5 + 2.0 * pm * pm + pm), G});
                c.lambda1 = 0.0;
                c.lambda2 = pm * pm / 2.0;
            }},
        model.spec());
    return c;
}

StructuralConstants linear_demand_reference_constants(double eps) {
    StructuralConstants c;
    c.q = 2.0;
    c.q0 = 1.0;
    c.lambda0 = eps / (2.0 * (1.0 + eps));
    c.C0 = 0.5;
    c.lambda1 = 1.0;
    c.lambda2 = 0.0;
    return c;
}

// Resource coupling algebra ----------------------------------------------------------

double operator_norm(const std::vector<double>& M, std::size_t d) {
    if (d == 0 || d > 3 || M.size() != d * d) throw DomainError("operator_norm: need a d x d matrix with d <= 3");
    Eigen::MatrixXd A(d, d);
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j) A(i, j) = M[i * d + j];
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(A);
    return svd.singularValues()(0);
}

std::vector<double> negcorr_mean_direct(const std::vector<double>& M, const std::vector<double>& P, std::size_t d) {
    if (d == 0 || d > 3 || M.size() != d * d || P.size() != d) throw DomainError("negcorr_mean_direct: bad sizes");
    Eigen::MatrixXd A = Eigen::MatrixXd::Identity(d, d);
    Eigen::VectorXd rhs(d);
    for (std::size_t i = 0; i < d; ++i) {
        rhs(i) = -0.5 * P[i];
        for (std::size_t j = 0; j < d; ++j) A(i, j) += 0.5 * M[i * d + j];
    }
    Eigen::VectorXd x = A.partialPivLu().solve(rhs);
    return {x.data(), x.data() + d};
}

std::vector<double> negcorr_mean_iterative(const std::vector<double>& M, const std::vector<double>& P, std::size_t d,
                                           double tol, int max_iter) {
    if (d == 0 || d > 3 || M.size() != d * d || P.size() != d) throw DomainError("negcorr_mean_iterative: bad sizes");
    std::vector<double> x(d, 0.0), next(d);
    for (int it = 0; it < max_iter; ++it) {
        double diff = 0.0;
        for (std::size_t i = 0; i < d; ++i) {
            double mx = 0.0;
            for (std::size_t j = 0; j < d; ++j) mx += M[i * d + j] * x[j];
            next[i] = -0.5 * (P[i] + mx);
            diff = std::max(diff, std::abs(next[i] - x[i]));
        }
        x = next;
        if (diff <= tol) return x;
    }
    throw NoConvergence("negcorr_mean_iterative: no convergence; is ||M|| < 2?");
}

} // namespace mfgc
