#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "soundheat/grid.hpp"

namespace soundheat {

/// beta(r) = a r^3.
struct CubicBeta {
    double a = 1.0;
};

/// beta(r) = sum_j coeffs[j] r^(j+1); only odd powers may be nonzero and their
/// coefficients must be nonnegative, which makes beta monotone with beta(0) = 0.
struct OddPolynomialBeta {
    std::vector<double> coeffs;
};

struct ZeroBeta {};

using BetaKind = std::variant<ZeroBeta, CubicBeta, OddPolynomialBeta>;

struct ZeroPi {};
/// pi(r) = slope * r. Example: slope = -m^2 for the Klein-Gordon term.
struct LinearPi {
    double slope = 0.0;
};
/// pi(r) = amplitude * sin(r).
struct ScaledSinePi {
    double amplitude = 0.0;
};

using PiKind = std::variant<ZeroPi, LinearPi, ScaledSinePi>;

/// Growth data (p, q, C_Phi) of the local Lipschitz bound on Phi. Reported, not enforced.
struct GrowthConstants {
    double p = 2.0;
    double q = 2.0;
    double c_phi = 1.0;
};

/// Pointwise nonlinearities: the monotone part beta (with potential) and the Lipschitz part pi.
class NonlinearitySpec {
public:
    NonlinearitySpec() = default;
    NonlinearitySpec(BetaKind beta, PiKind pi, GrowthConstants growth = {})
        : beta_(std::move(beta)), pi_(std::move(pi)), growth_(growth) {
        validate();
    }

    const BetaKind& beta_kind() const noexcept { return beta_; }
    const PiKind& pi_kind() const noexcept { return pi_; }
    const GrowthConstants& growth() const noexcept { return growth_; }

    bool beta_is_zero() const noexcept { return std::holds_alternative<ZeroBeta>(beta_); }
    bool pi_is_zero() const noexcept { return std::holds_alternative<ZeroPi>(pi_); }
    bool is_linear() const noexcept { return beta_is_zero() && !std::holds_alternative<ScaledSinePi>(pi_); }

    /// Lipschitz constant of pi.
    double c_lip() const noexcept {
        if (const auto* l = std::get_if<LinearPi>(&pi_)) return std::abs(l->slope);
        if (const auto* s = std::get_if<ScaledSinePi>(&pi_)) return std::abs(s->amplitude);
        return 0.0;
    }

    double beta(double r) const noexcept {
        if (const auto* c = std::get_if<CubicBeta>(&beta_)) return c->a * r * r * r;
        if (const auto* p = std::get_if<OddPolynomialBeta>(&beta_)) {
            double s = 0.0, pw = r;
            for (double c : p->coeffs) {
                s += c * pw;
                pw *= r;
            }
            return s;
        }
        return 0.0;
    }

    double beta_prime(double r) const noexcept {
        if (const auto* c = std::get_if<CubicBeta>(&beta_)) return 3.0 * c->a * r * r;
        if (const auto* p = std::get_if<OddPolynomialBeta>(&beta_)) {
            double s = 0.0, pw = 1.0;
            for (std::size_t j = 0; j < p->coeffs.size(); ++j) {
                s += static_cast<double>(j + 1) * p->coeffs[j] * pw;
                pw *= r;
            }
            return s;
        }
        return 0.0;
    }

    /// Convex potential with beta_potential(0) = 0 and derivative beta.
    double beta_potential(double r) const noexcept {
        if (const auto* c = std::get_if<CubicBeta>(&beta_)) return 0.25 * c->a * r * r * r * r;
        if (const auto* p = std::get_if<OddPolynomialBeta>(&beta_)) {
            double s = 0.0, pw = r * r;
            for (std::size_t j = 0; j < p->coeffs.size(); ++j) {
                s += p->coeffs[j] * pw / static_cast<double>(j + 2);
                pw *= r;
            }
            return s;
        }
        return 0.0;
    }

    double pi(double r) const noexcept {
        if (const auto* l = std::get_if<LinearPi>(&pi_)) return l->slope * r;
        if (const auto* s = std::get_if<ScaledSinePi>(&pi_)) return s->amplitude * std::sin(r);
        return 0.0;
    }

    double pi_prime(double r) const noexcept {
        if (const auto* l = std::get_if<LinearPi>(&pi_)) return l->slope;
        if (const auto* s = std::get_if<ScaledSinePi>(&pi_)) return s->amplitude * std::cos(r);
        return 0.0;
    }

private:
    void validate() const {
        if (const auto* c = std::get_if<CubicBeta>(&beta_); c && !(c->a > 0.0))
            throw std::invalid_argument("NonlinearitySpec: cubic scale must be positive");
        if (const auto* p = std::get_if<OddPolynomialBeta>(&beta_)) {
            for (std::size_t j = 0; j < p->coeffs.size(); ++j) {
                const double c = p->coeffs[j];
                if (!std::isfinite(c)) throw std::invalid_argument("NonlinearitySpec: non-finite coefficient");
                if (j % 2 == 1 && c != 0.0)
                    throw std::invalid_argument("NonlinearitySpec: odd polynomial has an even-power coefficient");
                if (j % 2 == 0 && c < 0.0)
                    throw std::invalid_argument("NonlinearitySpec: odd polynomial coefficients must be nonnegative");
            }
        }
        if (const auto* l = std::get_if<LinearPi>(&pi_); l && !std::isfinite(l->slope))
            throw std::invalid_argument("NonlinearitySpec: non-finite slope");
        if (const auto* s = std::get_if<ScaledSinePi>(&pi_); s && !std::isfinite(s->amplitude))
            throw std::invalid_argument("NonlinearitySpec: non-finite amplitude");
    }

    BetaKind beta_ = ZeroBeta{};
    PiKind pi_ = ZeroPi{};
    GrowthConstants growth_{};
};

class YosidaError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Resolvent point s = (I + lambda beta)^{-1} r, by safeguarded Newton on the bracket [min(0,r), max(0,r)].
inline double yosida_resolvent(const NonlinearitySpec& spec, double lambda, double r) {
    if (!(lambda > 0.0)) throw std::invalid_argument("yosida: lambda must be positive");
    if (r == 0.0 || spec.beta_is_zero()) return r;
    double lo = std::min(0.0, r), hi = std::max(0.0, r);
    const double tol = 1e-14 * (1.0 + std::abs(r));
    // Start from the lambda -> 0 prediction, clipped into the bracket.
    double s = std::clamp(r - lambda * spec.beta(r), lo, hi);
    for (int it = 0; it < 200; ++it) {
        const double f = s + lambda * spec.beta(s) - r;
        if (std::abs(f) <= tol) return s;
        if (f > 0.0) hi = s;
        else lo = s;
        const double fp = 1.0 + lambda * spec.beta_prime(s);
        double next = s - f / fp;
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        if (next == s) return s;
        s = next;
    }
    throw YosidaError("yosida_resolvent: no convergence (beta not monotone?)");
}

/// Yosida approximation Phi_lambda(r) = (r - s)/lambda, evaluated as beta(s) to avoid cancellation.
inline double yosida_eval(const NonlinearitySpec& spec, double lambda, double r) {
    return spec.beta(yosida_resolvent(spec, lambda, r));
}

/// d/dr Phi_lambda(r) = beta'(s) / (1 + lambda beta'(s)).
inline double yosida_prime(const NonlinearitySpec& spec, double lambda, double r) {
    const double bp = spec.beta_prime(yosida_resolvent(spec, lambda, r));
    return bp / (1.0 + lambda * bp);
}

/// i(u) = dx * sum beta_potential(u_i).
inline double potential_total(const NonlinearitySpec& spec, const Grid1D& grid, std::span<const double> u) {
    detail::require_dim(u.size(), grid.size(), "potential_total");
    double s = 0.0;
    for (double x : u) s += spec.beta_potential(x);
    return grid.dx() * s;
}

}  // namespace soundheat
