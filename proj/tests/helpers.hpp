#pragma once

#include <random>

#include <Eigen/Dense>

#include "soundheat/soundheat.hpp"

namespace th {

using namespace soundheat;

inline constexpr Preset kPresets[] = {Preset::P1, Preset::P2, Preset::P3, Preset::P4, Preset::P5};
inline constexpr Boundary kBoundaries[] = {Boundary::Dirichlet, Boundary::Neumann};

inline ProblemPreset preset_params(Preset p, double epsilon = 1.0) {
    ProblemPreset pp;
    pp.preset = p;
    pp.epsilon = epsilon;
    return pp;
}

inline OperatorBundle bundle_for(Preset p, Boundary bc = Boundary::Dirichlet, std::size_t n = 64, double epsilon = 1.0) {
    return build_bundle(preset_params(p, epsilon), Grid1D(n, bc));
}

/// P1 carries no nonlinearity (m = 0); the others use the cubic.
inline NonlinearitySpec default_nl(Preset p) {
    if (p == Preset::P1) return NonlinearitySpec();
    return NonlinearitySpec(CubicBeta{1.0}, ZeroPi{});
}

inline Vec random_vec(std::size_t n, std::mt19937_64& rng, double amp = 1.0) {
    std::uniform_real_distribution<double> U(-amp, amp);
    Vec v(n);
    for (double& x : v) x = U(rng);
    return v;
}

inline InitialData mode_data(const Grid1D& g, std::size_t k, double th0, double ph0, double v0) {
    const Vec m = g.mode(k);
    return {scaled(th0, m), scaled(ph0, m), scaled(v0, m)};
}

/// Smooth random data: random coefficients on the first few eigenmodes.
inline InitialData smooth_random_data(const Grid1D& g, std::uint64_t seed, double amp = 1.0, std::size_t modes = 4) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> U(-amp, amp);
    InitialData d{Vec(g.size(), 0.0), Vec(g.size(), 0.0), Vec(g.size(), 0.0)};
    for (Vec* u : {&d.theta0, &d.phi0, &d.v0})
        for (std::size_t j = 0; j < modes; ++j) *u = axpy(U(rng) / double(j + 1), g.mode(g.first_mode() + j), *u);
    return d;
}

inline Eigen::MatrixXd dense(const DiscreteOperator& op) {
    const std::size_t n = op.dim();
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        Vec e(n, 0.0);
        e[i] = 1.0;
        const Vec c = op.apply(e);
        for (std::size_t r = 0; r < n; ++r) M(r, i) = c[r];
    }
    return M;
}

inline Eigen::VectorXd to_eigen(const Vec& v) { return Eigen::Map<const Eigen::VectorXd>(v.data(), v.size()); }

}  // namespace th
