#include "mfgc/grid.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "mfgc/errors.hpp"

namespace mfgc {

TorusGrid::TorusGrid(std::size_t n) : n_(n), h_(0.0) {
    if (n < 4) throw DomainError("TorusGrid: need n >= 4, got " + std::to_string(n));
    h_ = 1.0 / static_cast<double>(n);
}

TimeGrid::TimeGrid(double horizon, std::size_t steps) : T_(horizon), nt_(steps), dt_(0.0) {
    if (!(horizon > 0.0) || !std::isfinite(horizon))
        throw DomainError("TimeGrid: horizon must be positive and finite");
    if (steps < 1) throw DomainError("TimeGrid: need at least one step");
    dt_ = horizon / static_cast<double>(steps);
}

template <class Tag>
NodalField<Tag>::NodalField(const TorusGrid& grid, std::vector<double> values)
    : grid_(grid), values_(std::move(values)) {
    if (values_.size() != grid_.size())
        throw DomainError("field length " + std::to_string(values_.size()) +
                          " does not match grid size " + std::to_string(grid_.size()));
}

template <class Tag>
bool NodalField<Tag>::all_finite() const noexcept {
    return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

template class NodalField<ScalarTag>;
template class NodalField<ControlTag>;

ScalarField gradient_centered(const ScalarField& f) {
    const auto& g = f.grid();
    const std::size_t n = g.size();
    const double inv2h = 0.5 / g.spacing();
    ScalarField out(g);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t ip = (i + 1 == n) ? 0 : i + 1;
        const std::size_t im = (i == 0) ? n - 1 : i - 1;
        out[i] = (f[ip] - f[im]) * inv2h;
    }
    return out;
}

ScalarField gradient_upwind(const ScalarField& f, std::span<const double> wind) {
    const auto& g = f.grid();
    const std::size_t n = g.size();
    if (wind.size() != n) throw DomainError("gradient_upwind: wind has wrong length");
    const double invh = 1.0 / g.spacing();
    ScalarField out(g);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t ip = (i + 1 == n) ? 0 : i + 1;
        const std::size_t im = (i == 0) ? n - 1 : i - 1;
        out[i] = wind[i] > 0.0 ? (f[i] - f[im]) * invh : (f[ip] - f[i]) * invh;
    }
    return out;
}

ScalarField laplacian(const ScalarField& f) {
    const auto& g = f.grid();
    const std::size_t n = g.size();
    const double invh2 = 1.0 / (g.spacing() * g.spacing());
    ScalarField out(g);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t ip = (i + 1 == n) ? 0 : i + 1;
        const std::size_t im = (i == 0) ? n - 1 : i - 1;
        out[i] = (f[ip] - 2.0 * f[i] + f[im]) * invh2;
    }
    return out;
}

double integrate(std::span<const double> f, double h) {
    double s = 0.0;
    for (double v : f) s += v;
    return h * s;
}

double integrate(const ScalarField& f) { return integrate(f.values(), f.grid().spacing()); }

namespace {

// Thomas algorithm for constant off-diagonals with per-row diagonal.
void thomas(std::span<const double> diag, double off, std::span<double> x) {
    const std::size_t n = diag.size();
    std::vector<double> c(n);
    double denom = diag[0];
    c[0] = off / denom;
    x[0] /= denom;
    for (std::size_t i = 1; i < n; ++i) {
        denom = diag[i] - off * c[i - 1];
        c[i] = off / denom;
        x[i] = (x[i] - off * x[i - 1]) / denom;
    }
    for (std::size_t i = n - 1; i-- > 0;) x[i] -= c[i] * x[i + 1];
}

} // namespace

ScalarField periodic_tridiag_solve(double diag, double off, const ScalarField& rhs) {
    if (!(std::abs(diag) > 2.0 * std::abs(off)))
        throw DominanceViolation("periodic_tridiag_solve: |diag| = " + std::to_string(diag) +
                                 " must exceed 2|off| = " + std::to_string(2.0 * std::abs(off)));
    const auto& g = rhs.grid();
    const std::size_t n = g.size();
    ScalarField y(g, std::vector<double>(rhs.begin(), rhs.end()));
    if (off == 0.0) {
        for (auto& v : y) v /= diag;
        return y;
    }

    // Sherman-Morrison: A = T + u v^T with u = (gamma, 0.., off), v = (1, 0.., off/gamma).
    const double gamma = -diag;
    std::vector<double> d(n, diag);
    d[0] = diag - gamma;
    d[n - 1] = diag - off * off / gamma;

    thomas(d, off, y.values());
    std::vector<double> z(n, 0.0);
    z[0] = gamma;
    z[n - 1] = off;
    thomas(d, off, z);

    const double vy = y[0] + off / gamma * y[n - 1];
    const double vz = z[0] + off / gamma * z[n - 1];
    const double factor = vy / (1.0 + vz);
    for (std::size_t i = 0; i < n; ++i) y[i] -= factor * z[i];
    return y;
}

ScalarField periodic_tridiag_apply(double diag, double off, const ScalarField& y) {
    const std::size_t n = y.size();
    ScalarField out(y.grid());
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t ip = (i + 1 == n) ? 0 : i + 1;
        const std::size_t im = (i == 0) ? n - 1 : i - 1;
        out[i] = diag * y[i] + off * (y[im] + y[ip]);
    }
    return out;
}

double sup_norm(std::span<const double> f) {
    double m = 0.0;
    for (double v : f) m = std::max(m, std::abs(v));
    return m;
}

double sup_distance(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw DomainError("sup_distance: length mismatch");
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

} // namespace mfgc
