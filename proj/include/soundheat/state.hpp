#pragma once

#include <cstddef>

#include "soundheat/grid.hpp"

namespace soundheat {

/// Node values (theta_n, phi_n, v_n, z_n) of a discrete trajectory.
struct State {
    Vec theta, phi, v, z;
    std::size_t t_index = 0;
    double h = 0.0;

    double time() const noexcept { return static_cast<double>(t_index) * h; }

    static State zero(std::size_t n, double h) { return {Vec(n, 0.0), Vec(n, 0.0), Vec(n, 0.0), Vec(n, 0.0), 0, h}; }

    bool operator==(const State&) const = default;
};

/// Initial data (theta_0, phi_0, v_0).
struct InitialData {
    Vec theta0, phi0, v0;
};

}  // namespace soundheat
