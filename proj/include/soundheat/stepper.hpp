#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "soundheat/banded.hpp"
#include "soundheat/bundle.hpp"
#include "soundheat/energy.hpp"
#include "soundheat/nonlinearity.hpp"
#include "soundheat/state.hpp"

namespace soundheat {

struct CoupledDirect {};

/// Newton on the Yosida-regularized equation, continued down a decreasing lambda schedule.
struct YosidaRegularized {
    std::vector<double> lambdas{1e-2, 1e-4, 1e-6, 1e-8, 1e-10};
};

using SolvePath = std::variant<CoupledDirect, YosidaRegularized>;

struct StepConfig {
    double h = 0.0;
    double newton_tol = 1e-12;  ///< relative to 1 + ||g||_H
    int newton_max_iter = 25;
    SolvePath solve_path = CoupledDirect{};
};

struct StepReport {
    int newton_iters = 0;
    double final_residual = 0.0;   ///< ||F(phi_{n+1})||_H of the per-step elliptic problem
    double g_norm = 0.0;           ///< ||g||_H
    double theta_residual = 0.0;   ///< ||theta_{n+1} - theta_n + eta h v_{n+1} + h A1 theta_{n+1}||_H
    double scheme_residual = 0.0;  ///< h^2 ||L z + B1 v + A2 phi + beta(phi) + pi(phi) - B2 theta||_H at n+1
    EnergyRecord energy_snapshot;
};

class NewtonDiverged : public std::runtime_error {
public:
    NewtonDiverged(int iters, double residual)
        : std::runtime_error("Newton iteration did not converge after " + std::to_string(iters) +
                             " iterations (residual " + std::to_string(residual) + ")"),
          iterations(iters),
          last_residual(residual) {}

    int iterations;
    double last_residual;
};

/// g = L phi_n + h L v_n + h B1 phi_n + h^2 B2 (I + h A1)^{-1} (eta phi_n + theta_n).
inline Vec phi_equation_rhs(const State& s, const OperatorBundle& b, double h) {
    const std::size_t n = b.dim();
    detail::require_dim(s.phi.size(), n, "phi_equation_rhs");
    Vec g = b.L.apply(s.phi);
    const Vec Lv = b.L.apply(s.v);
    const Vec B1phi = b.B1.apply(s.phi);
    Vec w(n);
    for (std::size_t i = 0; i < n; ++i) w[i] = b.eta * s.phi[i] + s.theta[i];
    const Vec coupling = b.B2.apply(resolvent_solve(b.A1, h, w));
    for (std::size_t i = 0; i < n; ++i) g[i] += h * Lv[i] + h * B1phi[i] + h * h * coupling[i];
    return g;
}

namespace detail {

/// Pointwise monotone part: beta itself, or its Yosida approximation.
struct MonotonePart {
    const NonlinearitySpec* spec;
    std::optional<double> lambda;

    double value(double r) const { return lambda ? yosida_eval(*spec, *lambda, r) : spec->beta(r); }
    double slope(double r) const { return lambda ? yosida_prime(*spec, *lambda, r) : spec->beta_prime(r); }
};

/// F(phi) = L phi + h B1 phi + h^2 A2 phi + h^2 Phi(phi) + h^2 pi(phi) + eta h^2 B2 (I + h A1)^{-1} phi - g.
inline Vec elliptic_residual(const Vec& phi, const Vec& g, const OperatorBundle& b, const NonlinearitySpec& nl,
                             const MonotonePart& mono, double h) {
    const std::size_t n = b.dim();
    Vec F = b.L.apply(phi);
    const Vec B1phi = b.B1.apply(phi);
    const Vec A2phi = b.A2.apply(phi);
    const Vec coupling = b.B2.apply(resolvent_solve(b.A1, h, phi));
    const double h2 = h * h;
    for (std::size_t i = 0; i < n; ++i) {
        F[i] += h * B1phi[i] + h2 * (A2phi[i] + mono.value(phi[i]) + nl.pi(phi[i])) + b.eta * h2 * coupling[i] - g[i];
    }
    return F;
}

/// Newton correction for the coupled system.
///
/// With J = L + h B1 + h^2 A2 + h^2 diag(Phi' + pi') and S = I + h A1, the
/// Jacobian is J + eta h^2 B2 S^{-1}. Writing delta = S y turns the correction
/// equation into the banded system (J S + eta h^2 B2) y = -F, which has
/// bandwidth two because J, S and B2 are tridiagonal.
inline Vec newton_correction(const Vec& phi, const Vec& F, const OperatorBundle& b, const NonlinearitySpec& nl,
                             const MonotonePart& mono, double h) {
    const std::size_t n = b.dim();
    const double h2 = h * h;
    Vec Jd(n), Je(n - 1), Sd(n), Se(n - 1);
    for (std::size_t i = 0; i < n; ++i) {
        Jd[i] = b.L.diag[i] + h * b.B1.diag[i] + h2 * b.A2.diag[i] + h2 * (mono.slope(phi[i]) + nl.pi_prime(phi[i]));
        Sd[i] = 1.0 + h * b.A1.diag[i];
    }
    for (std::size_t i = 0; i + 1 < n; ++i) {
        Je[i] = b.L.offdiag[i] + h * b.B1.offdiag[i] + h2 * b.A2.offdiag[i];
        Se[i] = h * b.A1.offdiag[i];
    }
    // Tridiagonal entries with (i, j) indexing; zero outside |i - j| <= 1.
    auto tri = [](const Vec& d, const Vec& e, std::size_t i, std::size_t j) -> double {
        if (i == j) return d[i];
        if (i + 1 == j) return e[i];
        if (j + 1 == i) return e[j];
        return 0.0;
    };
    BandMatrix P(n, 2, 2);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t j0 = i >= 2 ? i - 2 : 0;
        const std::size_t j1 = std::min(n - 1, i + 2);
        for (std::size_t j = j0; j <= j1; ++j) {
            double s = 0.0;
            const std::size_t k0 = std::max(i, j) >= 1 ? std::max(i, j) - 1 : 0;
            const std::size_t k1 = std::min({n - 1, i + 1, j + 1});
            for (std::size_t k = k0; k <= k1; ++k) s += tri(Jd, Je, i, k) * tri(Sd, Se, k, j);
            s += b.eta * h2 * tri(b.B2.diag, b.B2.offdiag, i, j);
            P(i, j) = s;
        }
    }
    Vec rhs(n);
    for (std::size_t i = 0; i < n; ++i) rhs[i] = -F[i];
    const Vec y = std::move(P).solve(std::move(rhs));
    Vec delta(n);
    for (std::size_t i = 0; i < n; ++i) {
        double s = Sd[i] * y[i];
        if (i > 0) s += Se[i - 1] * y[i - 1];
        if (i + 1 < n) s += Se[i] * y[i + 1];
        delta[i] = s;
    }
    return delta;
}

struct NewtonOutcome {
    Vec phi;
    int iters = 0;
    double residual = 0.0;
    bool converged = false;
};

inline NewtonOutcome newton(Vec phi, const Vec& g, const OperatorBundle& b, const NonlinearitySpec& nl,
                            const MonotonePart& mono, double h, double tol, int max_iter) {
    NewtonOutcome out;
    Vec F = elliptic_residual(phi, g, b, nl, mono, h);
    double res = h_norm(b.grid, F);
    int it = 0;
    while (res > tol && it < max_iter) {
        const Vec delta = newton_correction(phi, F, b, nl, mono, h);
        ++it;
        // Backtrack if the full step does not reduce the residual.
        double step = 1.0;
        Vec trial, Ft;
        double rt = 0.0;
        for (int k = 0; k < 20; ++k) {
            trial = axpy(step, delta, phi);
            Ft = elliptic_residual(trial, g, b, nl, mono, h);
            rt = h_norm(b.grid, Ft);
            if (std::isfinite(rt) && rt < res) break;
            step *= 0.5;
        }
        if (!(std::isfinite(rt) && rt < res)) break;
        phi = std::move(trial);
        F = std::move(Ft);
        res = rt;
    }
    // One extra full step once converged: quadratic convergence takes the residual to round-off.
    if (res <= tol && res > 0.0) {
        const Vec trial = axpy(1.0, newton_correction(phi, F, b, nl, mono, h), phi);
        const double rt = h_norm(b.grid, elliptic_residual(trial, g, b, nl, mono, h));
        if (std::isfinite(rt) && rt < res) {
            phi = trial;
            res = rt;
            ++it;
        }
    }
    out.phi = std::move(phi);
    out.iters = it;
    out.residual = res;
    out.converged = res <= tol;
    return out;
}

}  // namespace detail

struct PhiSolution {
    Vec phi;
    int iters = 0;
    double residual = 0.0;
};

/// Solves L phi + h B1 phi + h^2 A2 phi + h^2 beta(phi) + h^2 pi(phi) + eta h^2 B2 (I + h A1)^{-1} phi = g.
///
/// The Newton start is `guess` (the stepper passes phi_n + h v_n). Throws
/// NewtonDiverged if ||F||_H > newton_tol (1 + ||g||_H) after newton_max_iter
/// iterations.
inline PhiSolution solve_phi(const Vec& g, const OperatorBundle& b, const NonlinearitySpec& nl, const StepConfig& cfg,
                             std::optional<Vec> guess = std::nullopt) {
    detail::require_dim(g.size(), b.dim(), "solve_phi");
    if (!(cfg.h > 0.0)) throw std::invalid_argument("solve_phi: h must be positive");
    const double tol = cfg.newton_tol * (1.0 + h_norm(b.grid, g));
    Vec phi = guess ? std::move(*guess) : Vec(b.dim(), 0.0);

    if (const auto* y = std::get_if<YosidaRegularized>(&cfg.solve_path); y && !nl.beta_is_zero()) {
        PhiSolution out;
        for (double lambda : y->lambdas) {
            auto r = detail::newton(std::move(phi), g, b, nl, {&nl, lambda}, cfg.h, tol, cfg.newton_max_iter);
            out.iters += r.iters;
            if (!r.converged) throw NewtonDiverged(out.iters, r.residual);
            phi = std::move(r.phi);
            out.residual = r.residual;
        }
        out.phi = std::move(phi);
        return out;
    }
    auto r = detail::newton(std::move(phi), g, b, nl, {&nl, std::nullopt}, cfg.h, tol, cfg.newton_max_iter);
    if (!r.converged) throw NewtonDiverged(r.iters, r.residual);
    return {std::move(r.phi), r.iters, r.residual};
}

/// Residuals of both scheme equations at step n -> n+1, scaled by h and h^2 respectively
/// (the scaling under which the second equation and g share units).
inline std::pair<double, double> scheme_residuals(const State& prev, const State& next, const OperatorBundle& b,
                                                  const NonlinearitySpec& nl) {
    const std::size_t n = b.dim();
    const double h = next.h;
    const Vec A1theta = b.A1.apply(next.theta);
    Vec r1(n);
    for (std::size_t i = 0; i < n; ++i)
        r1[i] = next.theta[i] - prev.theta[i] + b.eta * h * next.v[i] + h * A1theta[i];

    const Vec Lz = b.L.apply(next.z);
    const Vec B1v = b.B1.apply(next.v);
    const Vec A2phi = b.A2.apply(next.phi);
    const Vec B2theta = b.B2.apply(next.theta);
    Vec r2(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double p = next.phi[i];
        r2[i] = h * h * (Lz[i] + B1v[i] + A2phi[i] + nl.beta(p) + nl.pi(p) - B2theta[i]);
    }
    return {h_norm(b.grid, r1), h_norm(b.grid, r2)};
}

/// One step of the scheme: phi from the elliptic solve, then theta by a resolvent
/// solve, then v and z by difference quotients.
inline std::pair<State, StepReport> step(const State& s, const OperatorBundle& b, const NonlinearitySpec& nl,
                                         const StepConfig& cfg) {
    const std::size_t n = b.dim();
    const double h = cfg.h;
    const Vec g = phi_equation_rhs(s, b, h);
    PhiSolution sol = solve_phi(g, b, nl, cfg, axpy(h, s.v, s.phi));

    State next;
    next.h = h;
    next.t_index = s.t_index + 1;
    next.phi = std::move(sol.phi);
    Vec w(n);
    for (std::size_t i = 0; i < n; ++i) w[i] = s.theta[i] + b.eta * (s.phi[i] - next.phi[i]);
    next.theta = resolvent_solve(b.A1, h, w);
    next.v.resize(n);
    next.z.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        next.v[i] = (next.phi[i] - s.phi[i]) / h;
        next.z[i] = (next.v[i] - s.v[i]) / h;
    }

    StepReport rep;
    rep.newton_iters = sol.iters;
    rep.final_residual = sol.residual;
    rep.g_norm = h_norm(b.grid, g);
    std::tie(rep.theta_residual, rep.scheme_residual) = scheme_residuals(s, next, b, nl);
    rep.energy_snapshot = energy(next, b, nl);
    return {std::move(next), rep};
}

struct RunResult {
    std::vector<State> trajectory;
    std::vector<StepReport> reports;
    std::optional<std::size_t> failure_index;  ///< step index n whose solve n -> n+1 failed
    double failure_residual = 0.0;
    bool above_threshold = false;  ///< h >= h_tilde (solvability not guaranteed)
    double h_tilde = 0.0;

    bool ok() const noexcept { return !failure_index; }
};

/// Number of steps N = T/h, or nullopt if T/h is not (numerically) a positive integer.
inline std::optional<std::size_t> step_count(double T, double h) {
    if (!(T > 0.0) || !(h > 0.0)) return std::nullopt;
    const double q = T / h;
    const double r = std::round(q);
    if (r < 1.0 || std::abs(q - r) > 1e-9 * r) return std::nullopt;
    return static_cast<std::size_t>(r);
}

/// Runs N = T/h steps from (theta0, phi0, v0). State 0 receives z_0 := z_1 after the first step.
inline RunResult run(const InitialData& init, const OperatorBundle& b, const NonlinearitySpec& nl, double T,
                     const StepConfig& cfg) {
    const std::size_t n = b.dim();
    detail::require_dim(init.theta0.size(), n, "run");
    detail::require_dim(init.phi0.size(), n, "run");
    detail::require_dim(init.v0.size(), n, "run");
    for (const Vec* u : {&init.theta0, &init.phi0, &init.v0})
        for (double x : *u)
            if (!std::isfinite(x)) throw std::invalid_argument("run: initial data must be finite");
    const auto N = step_count(T, cfg.h);
    if (!N) throw std::invalid_argument("run: T/h must be a positive integer");

    RunResult out;
    out.h_tilde = estimate_structural_constants(b, nl.c_lip()).h_tilde;
    out.above_threshold = cfg.h >= out.h_tilde;
    out.trajectory.reserve(*N + 1);
    out.reports.reserve(*N);
    out.trajectory.push_back(State{init.theta0, init.phi0, init.v0, Vec(n, 0.0), 0, cfg.h});
    for (std::size_t k = 0; k < *N; ++k) {
        try {
            auto [next, rep] = step(out.trajectory.back(), b, nl, cfg);
            out.trajectory.push_back(std::move(next));
            out.reports.push_back(rep);
        } catch (const NewtonDiverged& e) {
            out.failure_index = k;
            out.failure_residual = e.last_residual;
            break;
        }
        if (k == 0) out.trajectory[0].z = out.trajectory[1].z;
    }
    return out;
}

}  // namespace soundheat
