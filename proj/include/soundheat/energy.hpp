#pragma once

#include <cmath>

#include "soundheat/bundle.hpp"
#include "soundheat/nonlinearity.hpp"
#include "soundheat/state.hpp"

namespace soundheat {

/// Energy terms of one state. Square-root norms are evaluated as bilinear forms (op u, u).
struct EnergyRecord {
    double kinetic = 0.0;            ///< 1/2 (L v, v)
    double elastic = 0.0;            ///< 1/2 (A2 phi, phi)
    double thermal = 0.0;            ///< 1/(2 eta) (B2 theta, theta)
    double potential = 0.0;          ///< i(phi)
    double dissipation_b1 = 0.0;     ///< h (B1 v, v)
    double dissipation_cross = 0.0;  ///< (h/eta) (B2 theta, A1 theta)

    /// kinetic + elastic + thermal
    double total() const noexcept { return kinetic + elastic + thermal; }

    bool finite() const noexcept {
        return std::isfinite(kinetic) && std::isfinite(elastic) && std::isfinite(thermal) && std::isfinite(potential) &&
               std::isfinite(dissipation_b1) && std::isfinite(dissipation_cross);
    }
};

/// (op u, u) in the discrete H inner product.
inline double form(const Grid1D& g, const DiscreteOperator& op, std::span<const double> u) {
    return h_inner(g, op.apply(u), u);
}

inline EnergyRecord energy(const State& s, const OperatorBundle& b, const NonlinearitySpec& nl) {
    const Grid1D& g = b.grid;
    EnergyRecord e;
    e.kinetic = 0.5 * form(g, b.L, s.v);
    e.elastic = 0.5 * form(g, b.A2, s.phi);
    e.thermal = form(g, b.B2, s.theta) / (2.0 * b.eta);
    e.potential = potential_total(nl, g, s.phi);
    e.dissipation_b1 = s.h * form(g, b.B1, s.v);
    e.dissipation_cross = s.h / b.eta * h_inner(g, b.B2.apply(s.theta), b.A1.apply(s.theta));
    return e;
}

}  // namespace soundheat
