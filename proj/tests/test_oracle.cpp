#include <gtest/gtest.h>

#include <cmath>

#include <unsupported/Eigen/MatrixFunctions>

#include "helpers.hpp"

using namespace th;

namespace {
StepConfig cfg_h(double h) {
    StepConfig c;
    c.h = h;
    return c;
}
}  // namespace

TEST(Modal, UnitMode) {
    for (Boundary bc : kBoundaries) {
        const Grid1D g(16, bc);
        const Vec c = modal_transform(g.mode(g.first_mode()), g);
        EXPECT_NEAR(c[0], 1.0, 1e-14);
        for (std::size_t j = 1; j < c.size(); ++j) EXPECT_NEAR(c[j], 0.0, 1e-14);
    }
}

TEST(Modal, RoundTripAndParseval) {
    std::mt19937_64 rng(1);
    for (Boundary bc : kBoundaries) {
        const Grid1D g(40, bc);
        const Vec u = random_vec(40, rng);
        const Vec c = modal_transform(u, g);
        EXPECT_LE(sup_norm(diff(inverse_modal_transform(c, g), u)), 1e-12);
        double p = 0.0;
        for (std::size_t j = 0; j < c.size(); ++j) p += c[j] * c[j] * g.mode_norm_sq(g.first_mode() + j);
        EXPECT_NEAR(p, h_inner(g, u, u), 1e-12 * h_inner(g, u, u));
    }
}

TEST(Generator, SatisfiesModalEquations) {
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> U(-1, 1);
    for (Preset p : kPresets)
        for (Boundary bc : kBoundaries) {
            const auto b = bundle_for(p, bc, 16, 0.7);
            for (double slope : {0.0, -2.0})
                for (std::size_t k = b.grid.first_mode(); k < b.grid.first_mode() + 16; k += 5) {
                    const Eigen::Matrix3d M = modal_generator(b, slope, k);
                    const double a1 = b.A1.mode_eigenvalue(b.grid, k), a2 = b.A2.mode_eigenvalue(b.grid, k);
                    const double b1 = b.B1.mode_eigenvalue(b.grid, k), b2 = b.B2.mode_eigenvalue(b.grid, k);
                    const double l = b.L.mode_eigenvalue(b.grid, k);
                    const Eigen::Vector3d x(U(rng), U(rng), U(rng));
                    const Eigen::Vector3d d = M * x;
                    const double scale = 1.0 + a1 + a2 + b2;
                    // theta_t + eta phi_t + A1 theta = 0
                    EXPECT_LE(std::abs(d[0] + b.eta * d[1] + a1 * x[0]), 1e-12 * scale);
                    // phi_t = v
                    EXPECT_LE(std::abs(d[1] - x[2]), 1e-12 * scale);
                    // L v_t + B1 v + A2 phi + pi(phi) = B2 theta
                    EXPECT_LE(std::abs(l * d[2] + b1 * x[2] + a2 * x[1] + slope * x[1] - b2 * x[0]), 1e-12 * scale);
                }
        }
}

TEST(Generator, Semigroup) {
    const auto b = bundle_for(Preset::P2, Boundary::Dirichlet, 16);
    const Eigen::Matrix3d M = modal_generator(b, -1.0, 3);
    for (double t : {0.01, 0.3})
        for (double s : {0.02, 0.5}) {
            const Eigen::Matrix3d lhs = (t * M).exp() * (s * M).exp();
            const Eigen::Matrix3d rhs = ((t + s) * M).exp();
            EXPECT_LE((lhs - rhs).cwiseAbs().maxCoeff(), 1e-11 * std::max(1.0, rhs.cwiseAbs().maxCoeff()));
        }
}

TEST(Oracle, InitialDataAtZero) {
    const auto b = bundle_for(Preset::P1);
    const auto d = smooth_random_data(b.grid, 4);
    const State s = exact_linear_solution(d, b, NonlinearitySpec(), 0.0);
    EXPECT_LE(sup_norm(diff(s.theta, d.theta0)), 1e-13);
    EXPECT_LE(sup_norm(diff(s.phi, d.phi0)), 1e-13);
    EXPECT_LE(sup_norm(diff(s.v, d.v0)), 1e-13);
    const State z = exact_linear_solution({Vec(64, 0.0), Vec(64, 0.0), Vec(64, 0.0)}, b, NonlinearitySpec(), 0.3);
    EXPECT_EQ(sup_norm(z.theta) + sup_norm(z.phi) + sup_norm(z.v), 0.0);
}

TEST(Oracle, DecoupledHeatDecay) {
    auto b = bundle_for(Preset::P1, Boundary::Dirichlet, 32);
    b.B2 = DiscreteOperator::zero(32);
    const std::size_t k = 3;
    const auto d = mode_data(b.grid, k, 1.0, 0.0, 0.0);
    const double t = 0.01;
    const State s = exact_linear_solution(d, b, NonlinearitySpec(), t);
    const double decay = std::exp(-b.grid.laplacian_eigenvalue(k) * t);
    for (std::size_t i = 0; i < 32; ++i) {
        EXPECT_NEAR(s.theta[i], decay * d.theta0[i], 1e-12);
        EXPECT_NEAR(s.phi[i], 0.0, 1e-14);
    }
}

TEST(Oracle, RejectsNonlinear) {
    const auto b = bundle_for(Preset::P2, Boundary::Dirichlet, 8);
    EXPECT_THROW(LinearOracle(smooth_random_data(b.grid, 1), b, NonlinearitySpec(CubicBeta{1}, ZeroPi{})),
                 std::invalid_argument);
}

TEST(Oracle, MatchesFineStepper) {
    const auto b = bundle_for(Preset::P1);
    const auto d = mode_data(b.grid, 1, 1, 1, 0);
    const auto r = run(d, b, NonlinearitySpec(), 0.1, cfg_h(1e-5));
    ASSERT_TRUE(r.ok());
    const State ex = exact_linear_solution(d, b, NonlinearitySpec(), 0.1);
    const State& s = r.trajectory.back();
    EXPECT_LE(std::max({sup_norm(diff(s.theta, ex.theta)), sup_norm(diff(s.phi, ex.phi)), sup_norm(diff(s.v, ex.v))}), 1e-4);
}

TEST(Oracle, StepperErrorHalvesForLinearPresets) {
    for (Preset p : kPresets)
        for (Boundary bc : kBoundaries) {
            const auto b = bundle_for(p, bc, 32);
            const NonlinearitySpec nl(ZeroBeta{}, LinearPi{-0.5});
            const auto d = smooth_random_data(b.grid, 6);
            const State ex = exact_linear_solution(d, b, nl, 0.2);
            double prev = 0.0;
            for (double h : {0.004, 0.002, 0.001}) {
                const State s = run(d, b, nl, 0.2, cfg_h(h)).trajectory.back();
                const double e = sup_norm(diff(s.phi, ex.phi)) + sup_norm(diff(s.theta, ex.theta));
                if (prev > 0.0) {
                    EXPECT_LT(e, 0.6 * prev) << to_string(p) << " " << to_string(bc);
                }
                prev = e;
            }
        }
}

TEST(FineReference, LinearAgreesWithOracle) {
    const auto b = bundle_for(Preset::P1, Boundary::Dirichlet, 32);
    const auto d = mode_data(b.grid, 1, 1, 1, 0);
    const State ex = exact_linear_solution(d, b, NonlinearitySpec(), 0.25);
    double prev = 0.0;
    for (double h : {1.0 / 1024, 1.0 / 2048}) {
        const State s = fine_reference(d, b, NonlinearitySpec(), 0.25, h).trajectory.back();
        const double e = sup_norm(diff(s.phi, ex.phi));
        EXPECT_LE(e, 10.0 * h);
        if (prev > 0.0) {
            EXPECT_NEAR(e / prev, 0.5, 0.1);
        }
        prev = e;
    }
}

TEST(FineReference, SelfConsistentForCubic) {
    const auto b = bundle_for(Preset::P2, Boundary::Dirichlet, 32);
    const NonlinearitySpec nl(CubicBeta{1.0}, ZeroPi{});
    const auto d = mode_data(b.grid, 1, 1, 1, 0);
    const double T = 0.5, h_ref = 1.0 / 16384;
    const State a = fine_reference(d, b, nl, T, h_ref).trajectory.back();
    const State c = fine_reference(d, b, nl, T, h_ref / 2).trajectory.back();
    const State coarse = run(d, b, nl, T, cfg_h(1.0 / 32)).trajectory.back();
    const double ref_gap = v_norm(b.grid, diff(a.phi, c.phi)) + h_norm(b.grid, diff(a.theta, c.theta));
    const double coarse_err = v_norm(b.grid, diff(coarse.phi, c.phi)) + h_norm(b.grid, diff(coarse.theta, c.theta));
    EXPECT_LT(ref_gap, coarse_err / 100.0);
}
