#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "soundheat/grid.hpp"

namespace soundheat {

/// Symmetric tridiagonal matrix realizing one of L, A1, A2, B1, B2 on a grid.
///
/// Every operator used by the presets is either zero, a multiple of the
/// identity, or a multiple of the unit-coefficient discrete -Laplacian; `kind`
/// and `scale` record which, so that modal code can read eigenvalues off
/// without touching the matrix.
struct DiscreteOperator {
    enum class Kind { Zero, Identity, Laplacian };

    Kind kind = Kind::Zero;
    double scale = 0.0;
    Vec diag;
    Vec offdiag;

    std::size_t dim() const noexcept { return diag.size(); }

    static DiscreteOperator zero(std::size_t n) { return {Kind::Zero, 0.0, Vec(n, 0.0), Vec(n - 1, 0.0)}; }

    static DiscreteOperator identity(std::size_t n, double s = 1.0) {
        return {Kind::Identity, s, Vec(n, s), Vec(n - 1, 0.0)};
    }

    Vec apply(std::span<const double> x) const {
        detail::require_dim(x.size(), dim(), "DiscreteOperator::apply");
        const std::size_t n = dim();
        Vec y(n);
        for (std::size_t i = 0; i < n; ++i) {
            double s = diag[i] * x[i];
            if (i > 0) s += offdiag[i - 1] * x[i - 1];
            if (i + 1 < n) s += offdiag[i] * x[i + 1];
            y[i] = s;
        }
        return y;
    }

    /// Eigenvalue on mode k of the grid's Laplacian eigenbasis.
    double mode_eigenvalue(const Grid1D& grid, std::size_t k) const noexcept {
        switch (kind) {
            case Kind::Zero: return 0.0;
            case Kind::Identity: return scale;
            case Kind::Laplacian: return scale * grid.laplacian_eigenvalue(k);
        }
        return 0.0;
    }

    /// Gershgorin bound on the spectral radius.
    double norm_bound() const noexcept {
        const std::size_t n = dim();
        double m = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double r = std::abs(diag[i]);
            if (i > 0) r += std::abs(offdiag[i - 1]);
            if (i + 1 < n) r += std::abs(offdiag[i]);
            m = std::max(m, r);
        }
        return m;
    }

    /// Operator equality on the stored matrix (kind and scale ignored).
    bool same_matrix(const DiscreteOperator& o) const { return diag == o.diag && offdiag == o.offdiag; }
};

/// Unit-coefficient second-difference stencil scaled by coeff/dx^2 (a discretization of -coeff * Laplacian).
inline DiscreteOperator assemble_laplacian(const Grid1D& grid, double coeff) {
    if (!(coeff > 0.0)) throw std::invalid_argument("assemble_laplacian: coeff must be positive");
    const std::size_t n = grid.size();
    const double s = coeff / (grid.dx() * grid.dx());
    DiscreteOperator op{DiscreteOperator::Kind::Laplacian, coeff, Vec(n, 2.0 * s), Vec(n - 1, -s)};
    if (grid.bc() == Boundary::Neumann) {
        op.diag.front() = s;
        op.diag.back() = s;
    }
    return op;
}

/// Linear combination sum_i c_i * op_i of tridiagonal operators (kind is lost).
inline DiscreteOperator combine(std::initializer_list<std::pair<double, const DiscreteOperator*>> terms, std::size_t n) {
    DiscreteOperator r{DiscreteOperator::Kind::Zero, 0.0, Vec(n, 0.0), Vec(n - 1, 0.0)};
    for (const auto& [c, op] : terms) {
        detail::require_dim(op->dim(), n, "combine");
        for (std::size_t i = 0; i < n; ++i) r.diag[i] += c * op->diag[i];
        for (std::size_t i = 0; i + 1 < n; ++i) r.offdiag[i] += c * op->offdiag[i];
    }
    return r;
}

/// Solves T x = rhs for a symmetric tridiagonal T without pivoting (T must be nonsingular
/// with nonvanishing leading minors, which holds for the shifted monotone operators here).
inline Vec tridiagonal_solve(std::span<const double> diag, std::span<const double> offdiag, std::span<const double> rhs) {
    const std::size_t n = diag.size();
    detail::require_dim(rhs.size(), n, "tridiagonal_solve");
    Vec c(n), x(rhs.begin(), rhs.end());
    double d = diag[0];
    if (d == 0.0) throw std::runtime_error("tridiagonal_solve: zero pivot");
    c[0] = n > 1 ? offdiag[0] / d : 0.0;
    x[0] /= d;
    for (std::size_t i = 1; i < n; ++i) {
        d = diag[i] - offdiag[i - 1] * c[i - 1];
        if (d == 0.0) throw std::runtime_error("tridiagonal_solve: zero pivot");
        c[i] = i + 1 < n ? offdiag[i] / d : 0.0;
        x[i] = (x[i] - offdiag[i - 1] * x[i - 1]) / d;
    }
    for (std::size_t i = n - 1; i-- > 0;) x[i] -= c[i] * x[i + 1];
    return x;
}

/// x with (I + h op) x = rhs. One step of iterative refinement is applied if the
/// residual exceeds 1e-13 ||rhs||.
inline Vec resolvent_solve(const DiscreteOperator& op, double h, std::span<const double> rhs) {
    if (!(h > 0.0)) throw std::invalid_argument("resolvent_solve: h must be positive");
    detail::require_dim(rhs.size(), op.dim(), "resolvent_solve");
    const std::size_t n = op.dim();
    if (op.kind == DiscreteOperator::Kind::Zero) return Vec(rhs.begin(), rhs.end());
    Vec d(n), e(n - 1);
    for (std::size_t i = 0; i < n; ++i) d[i] = 1.0 + h * op.diag[i];
    for (std::size_t i = 0; i + 1 < n; ++i) e[i] = h * op.offdiag[i];
    Vec x = tridiagonal_solve(d, e, rhs);

    auto residual = [&](const Vec& y) {
        Vec r(n);
        for (std::size_t i = 0; i < n; ++i) {
            double s = d[i] * y[i];
            if (i > 0) s += e[i - 1] * y[i - 1];
            if (i + 1 < n) s += e[i] * y[i + 1];
            r[i] = rhs[i] - s;
        }
        return r;
    };
    double rhs_norm = 0.0;
    for (double v : rhs) rhs_norm += v * v;
    Vec r = residual(x);
    double r_norm = 0.0;
    for (double v : r) r_norm += v * v;
    if (r_norm > 1e-26 * rhs_norm) {
        const Vec dx = tridiagonal_solve(d, e, r);
        for (std::size_t i = 0; i < n; ++i) x[i] += dx[i];
    }
    return x;
}

/// Number of eigenvalues of the symmetric tridiagonal matrix strictly below `shift` (Sturm count).
inline std::size_t sturm_count(std::span<const double> diag, std::span<const double> offdiag, double shift) {
    std::size_t count = 0;
    double q = 1.0;
    const double tiny = 1e-300;
    for (std::size_t i = 0; i < diag.size(); ++i) {
        const double e2 = i > 0 ? offdiag[i - 1] * offdiag[i - 1] : 0.0;
        q = diag[i] - shift - (i > 0 ? e2 / q : 0.0);
        if (q == 0.0) q = -tiny;
        if (q < 0.0) ++count;
    }
    return count;
}

/// Smallest eigenvalue by Sturm bisection to absolute accuracy ~1e-15 * ||op||.
inline double min_eigenvalue(const DiscreteOperator& op) {
    const double r = op.norm_bound();
    if (r == 0.0) return 0.0;
    double lo = -r - 1.0, hi = r + 1.0;
    for (int it = 0; it < 200 && hi - lo > 1e-15 * r; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (sturm_count(op.diag, op.offdiag, mid) >= 1) hi = mid;
        else lo = mid;
    }
    return 0.5 * (lo + hi);
}

/// Monotonicity audit: min eigenvalue >= -1e-12 ||op||.
inline bool is_monotone(const DiscreteOperator& op) {
    return min_eigenvalue(op) >= -1e-12 * std::max(1.0, op.norm_bound());
}

}  // namespace soundheat
