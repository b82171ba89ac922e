#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace soundheat {

using Vec = std::vector<double>;

enum class Boundary { Dirichlet, Neumann };

inline std::string to_string(Boundary bc) { return bc == Boundary::Dirichlet ? "dirichlet" : "neumann"; }

/// Uniform grid on the unit interval.
///
/// Dirichlet grids are vertex-centered with the two boundary nodes removed
/// (x_i = (i+1) dx, dx = 1/(n+1)). Neumann grids are cell-centered
/// (x_i = (i+1/2) dx, dx = 1/n).
class Grid1D {
public:
    Grid1D(std::size_t n_interior, Boundary bc) : n_(n_interior), bc_(bc) {
        if (n_interior < 2) throw std::invalid_argument("Grid1D: n_interior must be >= 2");
        dx_ = bc == Boundary::Dirichlet ? 1.0 / static_cast<double>(n_ + 1) : 1.0 / static_cast<double>(n_);
    }

    std::size_t size() const noexcept { return n_; }
    double dx() const noexcept { return dx_; }
    Boundary bc() const noexcept { return bc_; }

    double x(std::size_t i) const noexcept {
        return bc_ == Boundary::Dirichlet ? static_cast<double>(i + 1) * dx_ : (static_cast<double>(i) + 0.5) * dx_;
    }

    /// First mode index of the discrete Laplacian's eigenbasis (1 for sine modes, 0 for cosine modes).
    std::size_t first_mode() const noexcept { return bc_ == Boundary::Dirichlet ? 1 : 0; }

    /// Eigenvalue of the unit-coefficient discrete -Laplacian on mode k.
    double laplacian_eigenvalue(std::size_t k) const noexcept {
        return 2.0 / (dx_ * dx_) * (1.0 - std::cos(static_cast<double>(k) * std::numbers::pi * dx_));
    }

    /// Grid samples of the k-th eigenvector: sin(k pi x) or cos(k pi x).
    Vec mode(std::size_t k) const {
        Vec u(n_);
        const double w = static_cast<double>(k) * std::numbers::pi;
        for (std::size_t i = 0; i < n_; ++i)
            u[i] = bc_ == Boundary::Dirichlet ? std::sin(w * x(i)) : std::cos(w * x(i));
        return u;
    }

    /// Exact squared H-norm of mode(k).
    double mode_norm_sq(std::size_t k) const noexcept {
        if (bc_ == Boundary::Neumann && k == 0) return 1.0;
        return 0.5;
    }

    bool operator==(const Grid1D&) const = default;

private:
    std::size_t n_;
    Boundary bc_;
    double dx_ = 0.0;
};

namespace detail {
inline void require_dim(std::size_t a, std::size_t b, const char* what) {
    if (a != b) throw std::invalid_argument(std::string(what) + ": dimension mismatch");
}
}  // namespace detail

/// Discrete L2 inner product dx * sum u_i w_i.
inline double h_inner(const Grid1D& grid, std::span<const double> u, std::span<const double> w) {
    detail::require_dim(u.size(), grid.size(), "h_inner");
    detail::require_dim(w.size(), grid.size(), "h_inner");
    double s = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) s += u[i] * w[i];
    return grid.dx() * s;
}

inline double h_norm(const Grid1D& grid, std::span<const double> u) { return std::sqrt(h_inner(grid, u, u)); }

/// Squared discrete gradient seminorm dx * sum ((u_{i+1}-u_i)/dx)^2.
/// Dirichlet rows see zero ghost values at both ends; Neumann rows carry no boundary flux.
inline double grad_norm_sq(const Grid1D& grid, std::span<const double> u) {
    detail::require_dim(u.size(), grid.size(), "grad_norm_sq");
    const std::size_t n = u.size();
    double s = 0.0;
    for (std::size_t i = 0; i + 1 < n; ++i) {
        const double d = u[i + 1] - u[i];
        s += d * d;
    }
    if (grid.bc() == Boundary::Dirichlet) s += u[0] * u[0] + u[n - 1] * u[n - 1];
    return s / grid.dx();
}

inline double v_norm_sq(const Grid1D& grid, std::span<const double> u) {
    return h_inner(grid, u, u) + grad_norm_sq(grid, u);
}

inline double v_norm(const Grid1D& grid, std::span<const double> u) { return std::sqrt(v_norm_sq(grid, u)); }

inline double sup_norm(std::span<const double> u) {
    double m = 0.0;
    for (double x : u) m = std::max(m, std::abs(x));
    return m;
}

// Small vector helpers used throughout.

inline Vec axpy(double a, std::span<const double> x, std::span<const double> y) {
    detail::require_dim(x.size(), y.size(), "axpy");
    Vec r(y.begin(), y.end());
    for (std::size_t i = 0; i < r.size(); ++i) r[i] += a * x[i];
    return r;
}

inline Vec diff(std::span<const double> a, std::span<const double> b) {
    detail::require_dim(a.size(), b.size(), "diff");
    Vec r(a.size());
    for (std::size_t i = 0; i < r.size(); ++i) r[i] = a[i] - b[i];
    return r;
}

inline Vec scaled(double a, std::span<const double> x) {
    Vec r(x.begin(), x.end());
    for (double& v : r) v *= a;
    return r;
}

}  // namespace soundheat
