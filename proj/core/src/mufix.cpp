#include "mfgc/mufix.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "mfgc/errors.hpp"

namespace mfgc {

double truncate_TM(double v, double M) noexcept {
    if (M == kInfinity) return v;
    const double a = std::abs(v);
    return a <= M ? v : (M / a) * v;
}

MuSolution solve_mu(const Model& model, const ScalarField& p_field, const ScalarField& m, const MuOptions& opts) {
    if (!(opts.tol > 0.0)) throw DomainError("solve_mu: tol must be positive");
    if (!(opts.M > 0.0)) throw DomainError("solve_mu: M must be positive");
    const std::size_t n = m.size();
    if (p_field.size() != n) throw DomainError("solve_mu: p and m differ in length");

    JointMeasure mu{m, opts.initial ? *opts.initial : ControlField(m.grid())};
    ControlField next(m.grid());
    MuSolveReport rep;
    double prev_res = -1.0;

    for (std::size_t it = 1; it <= opts.max_iter; ++it) {
        const Aggregates agg = compute_aggregates(model, mu);
        double res = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            next[i] = truncate_TM(-eval_Hp(model, i, p_field[i], agg), opts.M);
            res = std::max(res, std::abs(next[i] - mu.alpha[i]));
        }
        std::swap(mu.alpha, next);
        rep.iterations = it;
        rep.final_residual = res;
        if (prev_res > 0.0) {
            const double ratio = res / prev_res;
            rep.contraction_estimate = std::max(rep.contraction_estimate.value_or(0.0), ratio);
        }
        if (!std::isfinite(res)) break;
        if (res <= opts.tol) {
            rep.converged = true;
            break;
        }
        prev_res = res;
    }

    if (!rep.converged && rep.contraction_estimate.value_or(1.0) >= 1.0)
        throw NoConvergence("solve_mu: no convergence after " + std::to_string(rep.iterations) +
                            " iterations (residual " + std::to_string(rep.final_residual) + ", contraction estimate " +
                            std::to_string(rep.contraction_estimate.value_or(1.0)) + ")");
    return {std::move(mu.alpha), rep};
}

std::optional<ControlField> solve_mu_closed_form(const Model& model, const ScalarField& p_field, const ScalarField& m) {
    const std::size_t n = m.size();
    const double h = m.grid().spacing();
    double P = 0.0, P2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        P += p_field[i] * m[i] * h;
        P2 += p_field[i] * p_field[i] * m[i] * h;
    }
    ControlField alpha(m.grid());
    Aggregates agg;
    agg.density = m.data();

    if (const auto* s = std::get_if<LinearDemand>(&model.spec())) {
        // mean = -(P + a mean - b)/2 with a = eps/(1+eps), b = 1/(1+eps).
        const double a = s->eps / (1.0 + s->eps), b = 1.0 / (1.0 + s->eps);
        agg.value = MeanControl{(b - P) / (2.0 + a)};
    } else if (const auto* s = std::get_if<NegCorrResources>(&model.spec())) {
        agg.value = MeanControl{-P / (2.0 + s->coupling)};
    } else if (const auto* s = std::get_if<PriceImpact>(&model.spec())) {
        // L^2 = P2 + 2 e P L + e^2 L^2 with L >= 0: take the nonnegative root.
        const double e = s->eps_tilde;
        const double L = (e * P + std::sqrt(e * e * P * P + (1.0 - e * e) * P2)) / (1.0 - e * e);
        agg.value = PriceImpactAggregate{L, 0.0};
        double mean = 0.0;
        for (std::size_t i = 0; i < n; ++i) mean -= (p_field[i] + e * L) * m[i] * h;
        agg.value = PriceImpactAggregate{L, mean};
    } else {
        return std::nullopt;
    }
    for (std::size_t i = 0; i < n; ++i) alpha[i] = -eval_Hp(model, i, p_field[i], agg);
    return alpha;
}

double lambda_moment(const JointMeasure& mu, double q_tilde) {
    if (!(q_tilde >= 1.0)) throw DomainError("lambda_moment: exponent must be >= 1");
    const std::size_t n = mu.m.size();
    if (q_tilde == kInfinity) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            if (mu.m[i] > kMassFloor) s = std::max(s, std::abs(mu.alpha[i]));
        return s;
    }
    const double h = mu.m.grid().spacing();
    double s = 0.0;
    if (q_tilde == 1.0) {
        for (std::size_t i = 0; i < n; ++i) s += std::abs(mu.alpha[i]) * mu.m[i];
        return s * h;
    }
    if (q_tilde == 2.0) {
        for (std::size_t i = 0; i < n; ++i) s += mu.alpha[i] * mu.alpha[i] * mu.m[i];
        return std::sqrt(s * h);
    }
    // Scale by the max to keep pow() away from overflow for large exponents.
    double amax = 0.0;
    for (std::size_t i = 0; i < n; ++i) amax = std::max(amax, std::abs(mu.alpha[i]));
    if (amax == 0.0) return 0.0;
    for (std::size_t i = 0; i < n; ++i) s += std::pow(std::abs(mu.alpha[i]) / amax, q_tilde) * mu.m[i];
    return amax * std::pow(s * h, 1.0 / q_tilde);
}

} // namespace mfgc
