#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <string>

#include "mfgc/assumptions.hpp"
#include "mfgc/errors.hpp"

namespace mfgc {

namespace {

double phi(double z, double r) { return std::copysign(std::pow(std::abs(z), r - 1.0), z); }

void check_crowd_params(double theta, double a, double b) {
    if (!(theta >= 0.0 && theta <= 1.0)) throw DomainError("crowd motion: theta must lie in [0,1]");
    if (!(a >= 2.0) || !(b >= 2.0)) throw DomainError("crowd motion: exponents a, b must be >= 2");
}

struct Reduced {
    double theta, lt, ap, bp, p, V;
    // p + D_alpha L~(alpha, V); strictly increasing in alpha.
    double operator()(double alpha) const {
        return theta * phi(alpha - lt * V, ap) + (1.0 - theta) * phi(alpha, bp) + p;
    }
};

} // namespace

double crowd_lagrangian(double theta, double lambda_tilde, double a, double b, double alpha, double V) {
    const double ap = a / (a - 1.0), bp = b / (b - 1.0);
    return theta / ap * std::pow(std::abs(alpha - lambda_tilde * V), ap) +
           (1.0 - theta) / bp * std::pow(std::abs(alpha), bp);
}

OptimalControlResult optimal_control_detailed(double theta, double lambda_tilde, double a, double b, double p,
                                              double V) {
    check_crowd_params(theta, a, b);
    const double ap = a / (a - 1.0), bp = b / (b - 1.0);
    const Reduced F{theta, lambda_tilde, ap, bp, p, V};
    OptimalControlResult out;

    // Closed forms: the quadratic case is linear, and a single active term inverts directly.
    if (ap == 2.0 && bp == 2.0) {
        out.alpha = theta * lambda_tilde * V - p;
    } else if (theta == 1.0) {
        out.alpha = lambda_tilde * V - phi(p, a);
    } else if (theta == 0.0) {
        out.alpha = -phi(p, b);
    }
    if (theta == 1.0 || theta == 0.0 || (ap == 2.0 && bp == 2.0)) {
        out.residual = std::abs(F(out.alpha));
        return out;
    }

    const double tol = 1e-10 * (1.0 + std::abs(p));

    // Damped fixed point on alpha = (-p + l theta w_a V) / (theta w_a + (1-theta) w_b).
    double alpha = theta * lambda_tilde * V - p;
    for (std::size_t it = 1; it <= 200; ++it) {
        const double wa = std::pow(std::abs(alpha - lambda_tilde * V), ap - 2.0);
        const double wb = std::pow(std::abs(alpha), bp - 2.0);
        const double next = (-p + lambda_tilde * theta * wa * V) / (theta * wa + (1.0 - theta) * wb);
        if (!std::isfinite(next)) break;
        alpha = 0.5 * alpha + 0.5 * next;
        out.iterations = it;
        if (std::abs(F(alpha)) <= tol) {
            out.alpha = alpha;
            out.residual = std::abs(F(alpha));
            return out;
        }
    }

    // Bisection on the monotone reduced equation.
    out.used_bisection = true;
    const double guess = std::isfinite(alpha) ? alpha : theta * lambda_tilde * V - p;
    double step = 1.0 + std::abs(guess);
    double lo = guess - step, hi = guess + step;
    while (F(lo) > 0.0) {
        step *= 2.0;
        lo = guess - step;
    }
    step = 1.0 + std::abs(guess);
    while (F(hi) < 0.0) {
        step *= 2.0;
        hi = guess + step;
    }
    double mid = 0.5 * (lo + hi);
    for (std::size_t it = 0; it < 2000; ++it) {
        mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        const double f = F(mid);
        if (f == 0.0) break;
        (f < 0.0 ? lo : hi) = mid;
        ++out.iterations;
    }
    const double flo = std::abs(F(lo)), fhi = std::abs(F(hi)), fmid = std::abs(F(mid));
    out.alpha = fmid <= flo && fmid <= fhi ? mid : (flo <= fhi ? lo : hi);
    out.residual = std::min({flo, fhi, fmid});
    // A collapsed bracket is the best double precision allows near the singular points.
    const bool collapsed = std::nextafter(lo, hi) >= hi || hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * std::abs(mid);
    if (out.residual > tol && !collapsed)
        throw NoConvergence("optimal_control: residual " + std::to_string(out.residual) + " above tolerance");
    return out;
}

double optimal_control(double theta, double lambda_tilde, double a, double b, double p, double V) {
    return optimal_control_detailed(theta, lambda_tilde, a, b, p, V).alpha;
}

double h_tilde(double theta, double lambda_tilde, double a, double b, double p, double V) {
    const double alpha = optimal_control(theta, lambda_tilde, a, b, p, V);
    return -alpha * p - crowd_lagrangian(theta, lambda_tilde, a, b, alpha, V);
}

double h_tilde_zero_coefficient(double theta, double lambda_tilde, double a) {
    check_crowd_params(theta, a, a);
    const double ap = a / (a - 1.0);
    const double num = theta * std::pow(1.0 - theta, a) + (1.0 - theta) * std::pow(theta, a);
    const double den = std::pow(std::pow(1.0 - theta, a - 1.0) + std::pow(theta, a - 1.0), ap);
    return -(std::pow(std::abs(lambda_tilde), ap) / ap) * num / den;
}

// Kernel-gradient positivity bound ------------------------------------------------------------------

H4Eigen h4_min_eigenvalue(double r, double s, double k, double chi) {
    if (!(r > 0.0 && r <= 1.0)) throw DomainError("h4_min_eigenvalue: need 0 < r <= 1");
    if (!(s >= 1.0) || !std::isfinite(s)) throw DomainError("h4_min_eigenvalue: need s >= 1");
    if (!(k > 0.0) || !std::isfinite(k)) throw DomainError("h4_min_eigenvalue: need k > 0");
    if (!std::isfinite(chi)) throw DomainError("h4_min_eigenvalue: chi must be finite");

    const double c = std::cos(chi), sn = std::sin(chi);
    const double c2 = c * c, s2 = sn * sn;

    // Entries, trace and determinant in closed form.
    const double m11 = c2 * (1.0 + k) * (1.0 + k) + s2 * (1.0 + k * s) * (1.0 + k * s);
    const double m22 = c2 * (1.0 + k * r * s) * (1.0 + k * r * s) + s2 * (1.0 + k * r) * (1.0 + k * r);
    const double root = (1.0 + k) * (1.0 + k * r * s) * c2 + (1.0 + k * r) * (1.0 + k * s) * s2;
    const double det = root * root;
    const double tr = m11 + m22;
    const double disc = std::max(tr * tr - 4.0 * det, 0.0);

    H4Eigen out;
    // Smaller root in the cancellation-free form 2 det / (tr + sqrt(disc)).
    out.explicit_min = 2.0 * det / (tr + std::sqrt(disc));

    Eigen::Matrix2d U;
    U << c, sn, -sn, c;
    const Eigen::Matrix2d B = U * Eigen::Vector2d(1.0, r).asDiagonal() * U.transpose();
    const Eigen::Matrix2d C = Eigen::Vector2d(1.0, s).asDiagonal();
    const Eigen::Matrix2d M = Eigen::Matrix2d::Identity() + k * (B * C + C * B) + k * k * B * C * C * B;
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(M, Eigen::EigenvaluesOnly);
    out.direct_min = es.eigenvalues()(0);
    return out;
}

H4Sweep h4_sweep(std::size_t tuples, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    H4Sweep out;
    out.tuples = tuples;
    for (std::size_t t = 0; t < tuples; ++t) {
        const double r = 1.0 - unit(rng);                      // (0, 1]
        const double s = std::pow(10.0, unit(rng));            // [1, 10)
        const double k = std::pow(10.0, -2.0 + 3.0 * unit(rng));
        const double chi = 2.0 * std::numbers::pi * unit(rng);
        const H4Eigen e = h4_min_eigenvalue(r, s, k, chi);
        out.max_relative_disagreement =
            std::max(out.max_relative_disagreement, std::abs(e.explicit_min - e.direct_min) / std::abs(e.direct_min));
        if (e.explicit_min < 1.0 - 1e-10) ++out.below_one;
        if (e.explicit_min < out.min_eigenvalue) {
            out.min_eigenvalue = e.explicit_min;
            out.worst_r = r;
            out.worst_s = s;
            out.worst_k = k;
            out.worst_chi = chi;
        }
    }
    return out;
}

// Existence cases ----------------------------------------------------------------------

std::vector<std::string> CrowdRegion::labels() const {
    std::vector<std::string> out;
    if (case_a) out.emplace_back("a");
    if (case_b) out.emplace_back("b");
    if (case_c) out.emplace_back("c");
    if (case_d) out.emplace_back("d");
    out.emplace_back("e");
    return out;
}

CrowdRegion crowd_existence_region(double theta, double lambda_tilde, double a, double b, double q0,
                                   bool kernel_constant) {
    check_crowd_params(theta, a, b);
    if (!(std::abs(lambda_tilde) < 1.0)) throw DomainError("crowd_existence_region: |lambda_tilde| must be < 1");
    if (!(q0 >= 1.0)) throw DomainError("crowd_existence_region: q0 must be >= 1");
    const double q = std::min(a, b);
    const double qp = q / (q - 1.0);

    CrowdRegion out;
    const bool moments_ok = q0 <= qp;
    out.case_a = moments_ok && a != b;
    out.case_c = theta == 1.0;
    out.case_d = kernel_constant;

    if (a == b && theta > 0.0 && theta < 1.0) {
        // lambda2 from H~(0, V) = c |V|^{a'}, lambda1 = 0, C0 from the growth and coercivity bounds.
        const double ap = a / (a - 1.0);
        const double coerc = std::min(1.0 / (std::pow(2.0, a) * ap * std::pow(theta, a - 1.0)),
                                      1.0 / (std::pow(2.0, a) * ap * std::pow(1.0 - theta, a - 1.0)));
        StructuralConstants c;
        c.q = a;
        c.lambda0 = std::abs(lambda_tilde);
        c.C0 = std::max({1.0, 1.0 / theta, 1.0 / (1.0 - theta), 1.0 / coerc});
        c.lambda1 = 0.0;
        c.lambda2 = std::abs(h_tilde_zero_coefficient(theta, lambda_tilde, a));
        out.smallness = small_param_check(c);
        out.case_b = moments_ok && out.smallness.ok;
    }
    return out;
}

} // namespace mfgc
