#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "soundheat/bundle.hpp"
#include "soundheat/energy.hpp"
#include "soundheat/nonlinearity.hpp"
#include "soundheat/state.hpp"

namespace soundheat {

/// Absolute residual of the exact per-step energy balance
///
///   E(n+1) - E(n) + 1/2 (L dv, dv) + 1/2 (A2 dphi, dphi) + 1/(2 eta) (B2 dtheta, dtheta)
///     + h (B1 v', v') + (h/eta) (B2 theta', A1 theta') + (beta(phi'), dphi) + h (pi(phi'), v') = 0,
///
/// with E = kinetic + elastic + thermal, d = forward difference and ' = index n+1.
/// It is an algebraic consequence of both scheme equations, so the residual only
/// reflects solver tolerance and rounding.
inline double step_identity_residual(const State& prev, const State& next, const OperatorBundle& b,
                                     const NonlinearitySpec& nl) {
    const Grid1D& g = b.grid;
    const double h = next.h;
    const Vec dv = diff(next.v, prev.v);
    const Vec dphi = diff(next.phi, prev.phi);
    const Vec dtheta = diff(next.theta, prev.theta);
    const EnergyRecord e0 = energy(prev, b, nl);
    const EnergyRecord e1 = energy(next, b, nl);

    double mono = 0.0, lip = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        mono += nl.beta(next.phi[i]) * dphi[i];
        lip += nl.pi(next.phi[i]) * next.v[i];
    }
    mono *= g.dx();
    lip *= g.dx() * h;

    const double r = (e1.total() - e0.total()) + 0.5 * form(g, b.L, dv) + 0.5 * form(g, b.A2, dphi) +
                     form(g, b.B2, dtheta) / (2.0 * b.eta) + h * form(g, b.B1, next.v) +
                     h / b.eta * h_inner(g, b.B2.apply(next.theta), b.A1.apply(next.theta)) + mono + lip;
    return std::abs(r);
}

struct LyapunovViolation {
    std::size_t index;  ///< step n -> n+1
    double amount;
};

/// Checks E(n+1) + i(phi_{n+1}) <= E(n) + i(phi_n) + 1e-10 (1 + E(n)) along a trajectory.
/// Only meaningful without the Lipschitz term, so pi must be zero.
inline std::vector<LyapunovViolation> lyapunov_check(const std::vector<State>& traj, const OperatorBundle& b,
                                                     const NonlinearitySpec& nl) {
    if (!nl.pi_is_zero()) throw std::invalid_argument("lyapunov_check: requires pi == 0");
    std::vector<LyapunovViolation> out;
    if (traj.empty()) return out;
    EnergyRecord prev = energy(traj.front(), b, nl);
    for (std::size_t k = 0; k + 1 < traj.size(); ++k) {
        const EnergyRecord next = energy(traj[k + 1], b, nl);
        const double lhs = next.total() + next.potential;
        const double rhs = prev.total() + prev.potential + 1e-10 * (1.0 + prev.total());
        if (lhs > rhs) out.push_back({k, lhs - rhs});
        prev = next;
    }
    return out;
}

enum class Field { Theta, Phi, V, Z };

inline const Vec& field_of(const State& s, Field f) {
    switch (f) {
        case Field::Theta: return s.theta;
        case Field::Phi: return s.phi;
        case Field::V: return s.v;
        case Field::Z: return s.z;
    }
    return s.theta;
}

/// Piecewise-linear (hat) and piecewise-constant (bar) in-time reconstructions of a trajectory.
///
/// hat(t) interpolates the node values linearly; bar(t) = y_{n+1} on (nh, (n+1)h].
class Interpolants {
public:
    explicit Interpolants(const std::vector<State>& traj) : traj_(&traj) {
        if (traj.size() < 2) throw std::invalid_argument("Interpolants: need at least one step");
        h_ = traj.front().h;
    }

    double h() const noexcept { return h_; }
    std::size_t steps() const noexcept { return traj_->size() - 1; }
    double final_time() const noexcept { return h_ * static_cast<double>(steps()); }
    const State& node(std::size_t n) const { return (*traj_)[n]; }

    Vec hat(Field f, double t) const {
        const auto [n, s] = locate(t);
        const Vec& a = field_of(node(n), f);
        const Vec& b = field_of(node(n + 1), f);
        Vec r(a.size());
        for (std::size_t i = 0; i < r.size(); ++i) r[i] = (1.0 - s) * a[i] + s * b[i];
        return r;
    }

    /// Time derivative of hat on interval n: (y_{n+1} - y_n)/h.
    Vec hat_slope(Field f, std::size_t n) const {
        return scaled(1.0 / h_, diff(field_of(node(n + 1), f), field_of(node(n), f)));
    }

    Vec bar(Field f, double t) const {
        std::size_t n = 0;
        if (t > 0.0) n = std::min(steps() - 1, static_cast<std::size_t>(std::ceil(t / h_ - 1e-12)) - 1);
        return field_of(node(n + 1), f);
    }

    /// bar on interval n, i.e. y_{n+1}.
    const Vec& bar_on(Field f, std::size_t n) const { return field_of(node(n + 1), f); }

private:
    std::pair<std::size_t, double> locate(double t) const {
        const double q = t / h_;
        std::size_t n = q <= 0.0 ? 0 : static_cast<std::size_t>(std::floor(q));
        if (n >= steps()) n = steps() - 1;
        return {n, q - static_cast<double>(n)};
    }

    const std::vector<State>* traj_;
    double h_ = 0.0;
};

struct IdentityDeviations {
    std::vector<std::pair<std::string, double>> items;  ///< relative deviation per identity

    double worst() const {
        double m = 0.0;
        for (const auto& [_, d] : items) m = std::max(m, d);
        return m;
    }
};

namespace detail {
inline double rel_dev(double a, double b) {
    const double s = std::max(std::abs(a), std::abs(b));
    return s == 0.0 ? 0.0 : std::abs(a - b) / s;
}
}  // namespace detail

/// Verifies the interpolant identities: sup norms of hat functions against node maxima,
/// hat-bar distances against h times the slope, and the h^2/3 law for the L2(V) distance.
/// Left-hand sides are evaluated through the interpolant evaluators; right-hand sides from node data.
inline IdentityDeviations interpolation_identities_check(const Interpolants& ip, const Grid1D& grid) {
    const std::size_t N = ip.steps();
    const double h = ip.h();
    IdentityDeviations out;

    auto sup_hat_vs_nodes = [&](Field f) {
        double lhs = 0.0;
        for (std::size_t n = 0; n < N; ++n) {
            const double t = h * static_cast<double>(n);
            lhs = std::max({lhs, v_norm(grid, ip.hat(f, t)), v_norm(grid, ip.hat(f, t + 0.5 * h))});
        }
        lhs = std::max(lhs, v_norm(grid, ip.hat(f, ip.final_time())));
        double rhs = v_norm(grid, field_of(ip.node(0), f));
        for (std::size_t n = 0; n < N; ++n) rhs = std::max(rhs, v_norm(grid, ip.bar_on(f, n)));
        return detail::rel_dev(lhs, rhs);
    };
    out.items.emplace_back("sup_phi_hat_V", sup_hat_vs_nodes(Field::Phi));
    out.items.emplace_back("sup_v_hat_V", sup_hat_vs_nodes(Field::V));
    out.items.emplace_back("sup_theta_hat_V", sup_hat_vs_nodes(Field::Theta));

    // ||bar(y) - hat(y)||_inf = h ||d hat(y)/dt||_inf = h ||bar(y')||_inf
    auto gap = [&](Field y, Field dy, bool v_space) {
        auto norm = [&](const Vec& u) { return v_space ? v_norm(grid, u) : h_norm(grid, u); };
        double lhs = 0.0, slope = 0.0, rhs = 0.0;
        for (std::size_t n = 0; n < N; ++n) {
            const double t = h * static_cast<double>(n);
            // sup over the open interval is the left limit; the midpoint is checked too
            lhs = std::max({lhs, norm(diff(ip.bar_on(y, n), ip.hat(y, t))),
                            norm(diff(ip.bar_on(y, n), ip.hat(y, t + 0.5 * h)))});
            slope = std::max(slope, norm(ip.hat_slope(y, n)));
            rhs = std::max(rhs, norm(ip.bar_on(dy, n)));
        }
        return std::max(detail::rel_dev(lhs, h * slope), detail::rel_dev(h * slope, h * rhs));
    };
    out.items.emplace_back("phi_bar_minus_hat_V", gap(Field::Phi, Field::V, true));
    out.items.emplace_back("v_bar_minus_hat_H", gap(Field::V, Field::Z, false));

    // ||bar(theta) - hat(theta)||^2_{L2 V} = h^2/3 ||d hat(theta)/dt||^2_{L2 V}; Simpson is exact for the quadratic integrand.
    double lhs = 0.0, rhs = 0.0;
    for (std::size_t n = 0; n < N; ++n) {
        const double t = h * static_cast<double>(n);
        const Vec& b = ip.bar_on(Field::Theta, n);
        const double f0 = v_norm_sq(grid, diff(b, ip.hat(Field::Theta, t)));
        const double fm = v_norm_sq(grid, diff(b, ip.hat(Field::Theta, t + 0.5 * h)));
        const double f1 = v_norm_sq(grid, diff(b, ip.hat(Field::Theta, t + h)));
        lhs += h / 6.0 * (f0 + 4.0 * fm + f1);
        rhs += h * v_norm_sq(grid, ip.hat_slope(Field::Theta, n));
    }
    out.items.emplace_back("theta_bar_minus_hat_L2V", detail::rel_dev(lhs, h * h / 3.0 * rhs));
    return out;
}

/// Named a-priori quantities of one trajectory.
struct BoundReport {
    double h = 0.0;
    std::vector<std::pair<std::string, double>> items;

    double get(const std::string& name) const {
        for (const auto& [k, v] : items)
            if (k == name) return v;
        throw std::out_of_range("BoundReport: no quantity " + name);
    }
};

/// Every quantity bounded uniformly in h by the a-priori estimates, evaluated on one trajectory.
inline BoundReport apriori_monitor(const std::vector<State>& traj, const OperatorBundle& b, const NonlinearitySpec& nl) {
    const Grid1D& g = b.grid;
    const Interpolants ip(traj);
    const std::size_t N = ip.steps();
    const double h = ip.h();
    BoundReport rep;
    rep.h = h;

    auto linf_bar = [&](auto&& f) {
        double m = 0.0;
        for (std::size_t n = 0; n < N; ++n) m = std::max(m, f(n));
        return m;
    };
    auto l2_bar = [&](auto&& f) {
        double s = 0.0;
        for (std::size_t n = 0; n < N; ++n) s += h * f(n);
        return s;
    };
    auto bar = [&](Field f, std::size_t n) -> const Vec& { return ip.bar_on(f, n); };
    auto vsq = [&](const Vec& u) { return v_norm_sq(g, u); };
    auto hsq = [&](const Vec& u) { return h_inner(g, u, u); };
    auto sq_of = [&](const DiscreteOperator& op, const Vec& u) { return hsq(op.apply(u)); };

    // energy-level bounds
    rep.items.emplace_back("v_bar_Linf_H_sq", linf_bar([&](std::size_t n) { return hsq(bar(Field::V, n)); }));
    rep.items.emplace_back("h_z_bar_L2_H_sq", h * l2_bar([&](std::size_t n) { return hsq(bar(Field::Z, n)); }));
    rep.items.emplace_back("B1_half_v_bar_L2_H_sq", l2_bar([&](std::size_t n) { return form(g, b.B1, bar(Field::V, n)); }));
    rep.items.emplace_back("phi_bar_Linf_V_sq", linf_bar([&](std::size_t n) { return vsq(bar(Field::Phi, n)); }));
    rep.items.emplace_back("h_v_bar_L2_V_sq", h * l2_bar([&](std::size_t n) { return vsq(bar(Field::V, n)); }));
    rep.items.emplace_back("B2_half_theta_bar_Linf_H_sq",
                           linf_bar([&](std::size_t n) { return form(g, b.B2, bar(Field::Theta, n)); }));
    rep.items.emplace_back("h_B2_half_dtheta_L2_H_sq",
                           h * l2_bar([&](std::size_t n) { return form(g, b.B2, ip.hat_slope(Field::Theta, n)); }));

    // first-step bounds
    {
        const State& s1 = traj[1];
        Vec w = b.A1.apply(s1.theta);
        for (std::size_t i = 0; i < w.size(); ++i) w[i] += b.eta * s1.v[i];
        rep.items.emplace_back("z1_H_sq", hsq(s1.z));
        rep.items.emplace_back("h_B1_half_z1_H_sq", h * form(g, b.B1, s1.z));
        rep.items.emplace_back("v1_V_sq", vsq(s1.v));
        rep.items.emplace_back("h2_z1_V_sq", h * h * vsq(s1.z));
        rep.items.emplace_back("B2_eta_v1_plus_A1_theta1", form(g, b.B2, w));
    }

    // acceleration bounds
    rep.items.emplace_back("z_bar_Linf_H_sq", linf_bar([&](std::size_t n) { return hsq(bar(Field::Z, n)); }));
    rep.items.emplace_back("B1_half_z_bar_L2_H_sq", l2_bar([&](std::size_t n) { return form(g, b.B1, bar(Field::Z, n)); }));
    rep.items.emplace_back("v_bar_Linf_V_sq", linf_bar([&](std::size_t n) { return vsq(bar(Field::V, n)); }));
    rep.items.emplace_back("h_z_bar_L2_V_sq", h * l2_bar([&](std::size_t n) { return vsq(bar(Field::Z, n)); }));

    rep.items.emplace_back("beta_phi_bar_Linf_H", linf_bar([&](std::size_t n) {
                               Vec u = bar(Field::Phi, n);
                               for (double& x : u) x = nl.beta(x);
                               return h_norm(g, u);
                           }));

    // temperature bounds
    rep.items.emplace_back("dtheta_L2_H_sq", l2_bar([&](std::size_t n) { return hsq(ip.hat_slope(Field::Theta, n)); }));
    rep.items.emplace_back("h_dtheta_L2_V_sq", h * l2_bar([&](std::size_t n) { return vsq(ip.hat_slope(Field::Theta, n)); }));
    rep.items.emplace_back("theta_bar_Linf_V_sq", linf_bar([&](std::size_t n) { return vsq(bar(Field::Theta, n)); }));
    rep.items.emplace_back("dtheta_L2_V_sq", l2_bar([&](std::size_t n) { return vsq(ip.hat_slope(Field::Theta, n)); }));
    rep.items.emplace_back("A1_theta_bar_Linf_H_sq", linf_bar([&](std::size_t n) { return sq_of(b.A1, bar(Field::Theta, n)); }));

    // elliptic bounds
    rep.items.emplace_back("B2_theta_bar_Linf_H_sq", linf_bar([&](std::size_t n) { return sq_of(b.B2, bar(Field::Theta, n)); }));
    rep.items.emplace_back("B1_v_bar_L2_H_sq", l2_bar([&](std::size_t n) { return sq_of(b.B1, bar(Field::V, n)); }));
    rep.items.emplace_back("A2_phi_bar_L2_H_sq", l2_bar([&](std::size_t n) { return sq_of(b.A2, bar(Field::Phi, n)); }));

    // norms of the interpolants themselves
    auto linf_nodes = [&](Field f, bool v_space) {
        double m = 0.0;
        for (std::size_t n = 0; n <= N; ++n) {
            const Vec& u = field_of(traj[n], f);
            m = std::max(m, v_space ? v_norm(g, u) : h_norm(g, u));
        }
        return m;
    };
    const double sup_v_bar_V = std::sqrt(rep.get("v_bar_Linf_V_sq"));
    const double sup_z_bar_H = std::sqrt(rep.get("z_bar_Linf_H_sq"));
    rep.items.emplace_back("phi_hat_W1inf_V", linf_nodes(Field::Phi, true) + sup_v_bar_V);
    rep.items.emplace_back("v_hat_W1inf_H", linf_nodes(Field::V, false) + sup_z_bar_H);
    rep.items.emplace_back("v_hat_Linf_V", linf_nodes(Field::V, true));
    {
        // integral of ||hat(theta)||_V^2 over each interval, exact for the quadratic integrand
        double l2 = 0.0;
        for (std::size_t n = 0; n < N; ++n) {
            const Vec& a = traj[n].theta;
            const Vec& c = traj[n + 1].theta;
            Vec mid(a.size());
            for (std::size_t i = 0; i < a.size(); ++i) mid[i] = 0.5 * (a[i] + c[i]);
            l2 += h / 6.0 * (vsq(a) + 4.0 * vsq(mid) + vsq(c));
        }
        rep.items.emplace_back("theta_hat_H1_V", std::sqrt(l2 + rep.get("dtheta_L2_V_sq")));
    }
    rep.items.emplace_back("theta_hat_Linf_V", linf_nodes(Field::Theta, true));
    return rep;
}

struct UniformityViolation {
    std::string quantity;
    double reference;  ///< value at the largest h
    double worst;      ///< max over the sweep
};

/// Flags quantities whose max over an h-sweep exceeds `factor` times the value at the largest h.
/// `reports` must be ordered by decreasing h.
inline std::vector<UniformityViolation> uniformity_check(const std::vector<BoundReport>& reports, double factor = 2.0) {
    std::vector<UniformityViolation> out;
    if (reports.empty()) return out;
    for (std::size_t q = 0; q < reports.front().items.size(); ++q) {
        const auto& [name, ref] = reports.front().items[q];
        double worst = ref;
        for (const auto& r : reports) worst = std::max(worst, r.items[q].second);
        if (worst > factor * ref + 1e-14) out.push_back({name, ref, worst});
    }
    return out;
}

}  // namespace soundheat
