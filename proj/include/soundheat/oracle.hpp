#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <variant>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include "soundheat/bundle.hpp"
#include "soundheat/nonlinearity.hpp"
#include "soundheat/state.hpp"
#include "soundheat/stepper.hpp"

namespace soundheat {

/// Coefficients of u in the Laplacian eigenbasis mode(k), k = first_mode() + j.
inline Vec modal_transform(std::span<const double> u, const Grid1D& grid) {
    detail::require_dim(u.size(), grid.size(), "modal_transform");
    const std::size_t n = grid.size();
    Vec c(n);
    for (std::size_t j = 0; j < n; ++j) {
        const std::size_t k = grid.first_mode() + j;
        c[j] = h_inner(grid, u, grid.mode(k)) / grid.mode_norm_sq(k);
    }
    return c;
}

inline Vec inverse_modal_transform(std::span<const double> c, const Grid1D& grid) {
    detail::require_dim(c.size(), grid.size(), "inverse_modal_transform");
    const std::size_t n = grid.size();
    Vec u(n, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
        if (c[j] == 0.0) continue;
        const Vec m = grid.mode(grid.first_mode() + j);
        for (std::size_t i = 0; i < n; ++i) u[i] += c[j] * m[i];
    }
    return u;
}

/// Slope of a linear pi, or throws if the nonlinearity is not linear.
inline double linear_pi_slope(const NonlinearitySpec& nl) {
    if (!nl.is_linear()) throw std::invalid_argument("oracle: nonlinearity must be linear (beta = 0, pi zero or linear)");
    if (const auto* l = std::get_if<LinearPi>(&nl.pi_kind())) return l->slope;
    return 0.0;
}

/// Per-mode generator M_k of d/dt (theta, phi, v) for the semi-discrete linear system
///
///   theta' = -a1 theta - eta v,   phi' = v,   l v' = b2 theta - (a2 + s) phi - b1 v,
///
/// where a1, a2, b1, b2, l are the eigenvalues of A1, A2, B1, B2, L on mode k and s is the slope of pi.
inline Eigen::Matrix3d modal_generator(const OperatorBundle& b, double pi_slope, std::size_t k) {
    const Grid1D& g = b.grid;
    const double a1 = b.A1.mode_eigenvalue(g, k), a2 = b.A2.mode_eigenvalue(g, k);
    const double b1 = b.B1.mode_eigenvalue(g, k), b2 = b.B2.mode_eigenvalue(g, k);
    const double l = b.L.mode_eigenvalue(g, k);
    Eigen::Matrix3d M;
    M << -a1, 0.0, -b.eta,
         0.0, 0.0, 1.0,
         b2 / l, -(a2 + pi_slope) / l, -b1 / l;
    return M;
}

/// Exact solution of the linear semi-discrete system (same grid, exact in time), by
/// per-mode matrix exponentials.
class LinearOracle {
public:
    LinearOracle(const InitialData& init, const OperatorBundle& b, const NonlinearitySpec& nl)
        : grid_(b.grid), slope_(linear_pi_slope(nl)) {
        const Vec ct = modal_transform(init.theta0, grid_);
        const Vec cp = modal_transform(init.phi0, grid_);
        const Vec cv = modal_transform(init.v0, grid_);
        const std::size_t n = grid_.size();
        gens_.reserve(n);
        coeffs_.reserve(n);
        for (std::size_t j = 0; j < n; ++j) {
            gens_.push_back(modal_generator(b, slope_, grid_.first_mode() + j));
            coeffs_.emplace_back(ct[j], cp[j], cv[j]);
        }
    }

    /// State at time t; z holds the exact acceleration v'(t).
    State at(double t) const {
        const std::size_t n = grid_.size();
        Vec ct(n), cp(n), cv(n), cz(n);
        for (std::size_t j = 0; j < n; ++j) {
            if (coeffs_[j].isZero(0.0)) {
                ct[j] = cp[j] = cv[j] = cz[j] = 0.0;
                continue;
            }
            const Eigen::Vector3d x = t == 0.0 ? coeffs_[j] : Eigen::Vector3d((t * gens_[j]).exp() * coeffs_[j]);
            const Eigen::Vector3d dx = gens_[j] * x;
            ct[j] = x(0);
            cp[j] = x(1);
            cv[j] = x(2);
            cz[j] = dx(2);
        }
        State s;
        s.theta = inverse_modal_transform(ct, grid_);
        s.phi = inverse_modal_transform(cp, grid_);
        s.v = inverse_modal_transform(cv, grid_);
        s.z = inverse_modal_transform(cz, grid_);
        return s;
    }

    const Eigen::Matrix3d& generator(std::size_t j) const { return gens_.at(j); }

private:
    Grid1D grid_;
    double slope_;
    std::vector<Eigen::Matrix3d> gens_;
    std::vector<Eigen::Vector3d> coeffs_;
};

inline State exact_linear_solution(const InitialData& init, const OperatorBundle& b, const NonlinearitySpec& nl, double t) {
    return LinearOracle(init, b, nl).at(t);
}

/// Stepper run at h_ref with tightened Newton tolerance, used as the reference when no closed form exists.
inline RunResult fine_reference(const InitialData& init, const OperatorBundle& b, const NonlinearitySpec& nl, double T,
                                double h_ref) {
    StepConfig cfg;
    cfg.h = h_ref;
    cfg.newton_tol = 1e-13;
    cfg.newton_max_iter = 50;
    RunResult r = run(init, b, nl, T, cfg);
    if (!r.ok()) throw NewtonDiverged(cfg.newton_max_iter, r.failure_residual);
    return r;
}

}  // namespace soundheat
