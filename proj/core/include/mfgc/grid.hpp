#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace mfgc {

/// Uniform periodic mesh of [0,1) with nodes x_i = i*h.
class TorusGrid {
public:
    explicit TorusGrid(std::size_t n);

    std::size_t size() const noexcept { return n_; }
    double spacing() const noexcept { return h_; }
    double node(std::size_t i) const noexcept { return static_cast<double>(i) * h_; }

    /// Wraps any signed index into [0, n).
    std::size_t wrap(std::ptrdiff_t i) const noexcept {
        const auto n = static_cast<std::ptrdiff_t>(n_);
        return static_cast<std::size_t>(((i % n) + n) % n);
    }

    friend bool operator==(const TorusGrid&, const TorusGrid&) = default;

private:
    std::size_t n_;
    double h_;
};

/// Uniform mesh of [0,T] with nt steps, so nt+1 time levels.
class TimeGrid {
public:
    TimeGrid(double horizon, std::size_t steps);

    double horizon() const noexcept { return T_; }
    std::size_t steps() const noexcept { return nt_; }
    double dt() const noexcept { return dt_; }
    double time(std::size_t k) const noexcept { return static_cast<double>(k) * dt_; }

private:
    double T_;
    std::size_t nt_;
    double dt_;
};

/// Nodal values of one time slice. The tag keeps states and controls apart.
template <class Tag>
class NodalField {
public:
    explicit NodalField(const TorusGrid& grid) : grid_(grid), values_(grid.size(), 0.0) {}
    NodalField(const TorusGrid& grid, double fill) : grid_(grid), values_(grid.size(), fill) {}
    NodalField(const TorusGrid& grid, std::vector<double> values);

    template <class Fn>
    static NodalField sample(const TorusGrid& grid, Fn&& fn) {
        NodalField out(grid);
        for (std::size_t i = 0; i < grid.size(); ++i) out.values_[i] = fn(grid.node(i));
        return out;
    }

    const TorusGrid& grid() const noexcept { return grid_; }
    std::size_t size() const noexcept { return values_.size(); }

    double& operator[](std::size_t i) noexcept { return values_[i]; }
    double operator[](std::size_t i) const noexcept { return values_[i]; }

    std::span<double> values() noexcept { return values_; }
    std::span<const double> values() const noexcept { return values_; }
    const std::vector<double>& data() const noexcept { return values_; }

    auto begin() noexcept { return values_.begin(); }
    auto end() noexcept { return values_.end(); }
    auto begin() const noexcept { return values_.begin(); }
    auto end() const noexcept { return values_.end(); }

    bool all_finite() const noexcept;

private:
    TorusGrid grid_;
    std::vector<double> values_;
};

struct ScalarTag;
struct ControlTag;
using ScalarField = NodalField<ScalarTag>;
using ControlField = NodalField<ControlTag>;

extern template class NodalField<ScalarTag>;
extern template class NodalField<ControlTag>;

/// out_i = (f_{i+1} - f_{i-1}) / (2h), indices mod n.
ScalarField gradient_centered(const ScalarField& f);

/// One-sided differences selected by the sign of `wind`: backward where wind > 0.
ScalarField gradient_upwind(const ScalarField& f, std::span<const double> wind);

/// Discrete Laplacian (f_{i+1} - 2 f_i + f_{i-1}) / h^2.
ScalarField laplacian(const ScalarField& f);

/// Rectangle rule h * sum_i f_i.
double integrate(std::span<const double> f, double h);
double integrate(const ScalarField& f);

/// Solves diag*y_i + off*(y_{i-1} + y_{i+1}) = rhs_i with cyclic wrap.
/// Throws DominanceViolation unless |diag| > 2|off|.
ScalarField periodic_tridiag_solve(double diag, double off, const ScalarField& rhs);

/// Applies the cyclic operator of periodic_tridiag_solve; used for residual checks.
ScalarField periodic_tridiag_apply(double diag, double off, const ScalarField& y);

/// out_i = f_{i-k} (content moves right by k nodes).
template <class Tag>
NodalField<Tag> shift(const NodalField<Tag>& f, std::ptrdiff_t k) {
    NodalField<Tag> out(f.grid());
    const auto& g = f.grid();
    for (std::size_t i = 0; i < g.size(); ++i)
        out[i] = f[g.wrap(static_cast<std::ptrdiff_t>(i) - k)];
    return out;
}

double sup_norm(std::span<const double> f);
double sup_distance(std::span<const double> a, std::span<const double> b);

} // namespace mfgc
