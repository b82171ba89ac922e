#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

#include "soundheat/grid.hpp"
#include "soundheat/nonlinearity.hpp"
#include "soundheat/operator.hpp"

namespace soundheat {

enum class Preset { P1, P2, P3, P4, P5 };

inline std::string to_string(Preset p) {
    static constexpr const char* names[] = {"P1", "P2", "P3", "P4", "P5"};
    return names[static_cast<int>(p)];
}

inline std::optional<Preset> parse_preset(const std::string& s) {
    for (Preset p : {Preset::P1, Preset::P2, Preset::P3, Preset::P4, Preset::P5})
        if (to_string(p) == s) return p;
    return std::nullopt;
}

/// Physical parameters for the example problems.
///
///   P1: theta_t + (gamma-1) phi_t - sigma theta_xx = 0,  phi_tt - c^2 phi_xx - m^2 phi = -c^2 theta_xx
///   P2: P1 with damping eps phi_t and beta(phi) + pi(phi) in place of -m^2 phi
///   P3: P2 with viscous damping -eps phi_txx
///   P4: theta_t + phi_t - theta_xx = 0,  phi_tt + phi_t - phi_xx + beta + pi = theta
///   P5: P4 with -phi_txx damping
///
/// P4 and P5 fix every coefficient to 1 and ignore sigma, c, epsilon, gamma.
struct ProblemPreset {
    Preset preset = Preset::P1;
    double sigma = 1.0;
    double c = 1.0;
    double m = 0.0;
    double epsilon = 0.0;
    double gamma = 2.0;

    void validate() const {
        if (preset == Preset::P4 || preset == Preset::P5) return;
        if (!(gamma > 1.0)) throw std::invalid_argument("ProblemPreset: gamma must be > 1");
        if (!(sigma > 0.0)) throw std::invalid_argument("ProblemPreset: sigma must be positive");
        if (!(c > 0.0)) throw std::invalid_argument("ProblemPreset: c must be positive");
        if (!(epsilon >= 0.0)) throw std::invalid_argument("ProblemPreset: epsilon must be nonnegative");
        if (!std::isfinite(m)) throw std::invalid_argument("ProblemPreset: m must be finite");
    }
};

/// The operator tuple (L, A1, A2, B1, B2, eta) with its structural constants.
struct OperatorBundle {
    Grid1D grid;
    DiscreteOperator L, A1, A2, B1, B2;
    double eta = 1.0;
    double c_L = 1.0;
    double C_A1B2 = 0.0;

    std::size_t dim() const noexcept { return grid.size(); }

    /// Coercivity constant omega_{j,alpha} with (A_j w, w) + alpha ||w||^2 >= omega ||w||_V^2.
    /// Diagnostics only.
    double omega(int j, double alpha) const {
        const DiscreteOperator& A = j == 1 ? A1 : A2;
        return A.kind == DiscreteOperator::Kind::Laplacian ? std::min(A.scale, alpha) : 0.0;
    }
};

/// Lipschitz-type threshold below which the per-step elliptic problem is uniquely solvable.
inline double h_tilde_formula(double c_L, double C_lip, double eta, double C_A1B2) {
    const double denom = 1.0 + C_lip + eta * C_A1B2;
    const double b = eta * C_A1B2;
    return std::sqrt(c_L / denom + b * b / (4.0 * denom)) - b / (2.0 * denom);
}

struct StructuralConstants {
    double C_A1B2 = 0.0;
    double h_tilde = 0.0;
    double probe_max = 0.0;  ///< best ratio ||B2 x|| / (||A1 x|| + ||x||) seen on probes
};

class StructureError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace detail {

inline double euclid(const Vec& x) {
    double s = 0.0;
    for (double v : x) s += v * v;
    return std::sqrt(s);
}

/// Largest singular value of K = B2 (I + A1)^{-1} by power iteration on K^T K.
inline double relative_bound_power(const OperatorBundle& b, int iterations) {
    const std::size_t n = b.dim();
    Vec x(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = 1.0 + 0.5 * std::sin(1.7 * static_cast<double>(i + 1));
    double sigma2 = 0.0;
    for (int it = 0; it < iterations; ++it) {
        const double nx = euclid(x);
        if (nx == 0.0) return 0.0;
        for (double& v : x) v /= nx;
        // K^T K x = R B2 B2 R x with R = (I + A1)^{-1}; B2 and R are symmetric.
        const Vec y = b.B2.apply(resolvent_solve(b.A1, 1.0, x));
        Vec w = resolvent_solve(b.A1, 1.0, b.B2.apply(y));
        double rq = 0.0;
        for (std::size_t i = 0; i < n; ++i) rq += w[i] * x[i];
        sigma2 = rq;
        x = std::move(w);
    }
    return std::sqrt(std::max(sigma2, 0.0));
}

}  // namespace detail

/// C_{A1,B2} and the solvability threshold h_tilde.
///
/// Since ||A1 x|| + ||x|| >= ||(I + A1) x||, the spectral norm of B2 (I + A1)^{-1}
/// bounds the ratio from above; it is computed by power iteration. Deterministic
/// probes (grid modes and alternating vectors) give the attained ratio for reference.
inline StructuralConstants estimate_structural_constants(const OperatorBundle& b, double C_lip) {
    const std::size_t n = b.dim();
    StructuralConstants out;
    const Grid1D& g = b.grid;
    auto ratio = [&](const Vec& x) {
        const double den = h_norm(g, b.A1.apply(x)) + h_norm(g, x);
        return den > 0.0 ? h_norm(g, b.B2.apply(x)) / den : 0.0;
    };
    for (std::size_t k = g.first_mode(); k < g.first_mode() + n; ++k) out.probe_max = std::max(out.probe_max, ratio(g.mode(k)));
    Vec alt(n);
    for (std::size_t i = 0; i < n; ++i) alt[i] = (i % 2 == 0) ? 1.0 : -1.0;
    out.probe_max = std::max(out.probe_max, ratio(alt));

    const double power = detail::relative_bound_power(b, 400);
    out.C_A1B2 = std::max(power, out.probe_max);
    if (!std::isfinite(out.C_A1B2) || out.C_A1B2 > 1e12)
        throw StructureError("estimate_structural_constants: B2 is not relatively bounded by A1 on this grid");
    out.h_tilde = h_tilde_formula(b.c_L, C_lip, b.eta, out.C_A1B2);
    return out;
}

/// Operator bundle for one of the example problems on `grid`.
inline OperatorBundle build_bundle(const ProblemPreset& p, const Grid1D& grid) {
    p.validate();
    const std::size_t n = grid.size();
    OperatorBundle b{grid,
                     DiscreteOperator::identity(n),
                     DiscreteOperator::zero(n),
                     DiscreteOperator::zero(n),
                     DiscreteOperator::zero(n),
                     DiscreteOperator::zero(n),
                     1.0,
                     1.0,
                     0.0};
    switch (p.preset) {
        case Preset::P1:
        case Preset::P2:
        case Preset::P3: {
            b.A1 = assemble_laplacian(grid, p.sigma);
            b.A2 = assemble_laplacian(grid, p.c * p.c);
            b.B2 = b.A2;
            b.eta = p.gamma - 1.0;
            if (p.preset == Preset::P2 && p.epsilon > 0.0) b.B1 = DiscreteOperator::identity(n, p.epsilon);
            if (p.preset == Preset::P3 && p.epsilon > 0.0) b.B1 = assemble_laplacian(grid, p.epsilon);
            break;
        }
        case Preset::P4:
        case Preset::P5: {
            b.A1 = assemble_laplacian(grid, 1.0);
            b.A2 = assemble_laplacian(grid, 1.0);
            b.B1 = p.preset == Preset::P4 ? DiscreteOperator::identity(n) : assemble_laplacian(grid, 1.0);
            b.B2 = DiscreteOperator::identity(n);
            b.eta = 1.0;
            break;
        }
    }
    b.C_A1B2 = estimate_structural_constants(b, 0.0).C_A1B2;
    return b;
}

/// Nonlinearity implied by a preset: P1 carries pi(r) = -m^2 r and no beta; the
/// other presets take the user's choice.
inline NonlinearitySpec preset_nonlinearity(const ProblemPreset& p, const NonlinearitySpec& user) {
    if (p.preset == Preset::P1) {
        if (p.m == 0.0) return NonlinearitySpec(ZeroBeta{}, ZeroPi{});
        return NonlinearitySpec(ZeroBeta{}, LinearPi{-p.m * p.m});
    }
    return user;
}

}  // namespace soundheat
