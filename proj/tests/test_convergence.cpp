#include <gtest/gtest.h>

#include <cmath>

#include "helpers.hpp"

using namespace th;

namespace {

StepConfig cfg_h(double h) {
    StepConfig c;
    c.h = h;
    return c;
}

ReferenceSampler hat_sampler(const Interpolants& ip) {
    return [&ip](double t) {
        State s;
        s.theta = ip.hat(Field::Theta, t);
        s.phi = ip.hat(Field::Phi, t);
        s.v = ip.hat(Field::V, t);
        s.z = ip.hat(Field::Z, t);
        return s;
    };
}

// Same seven quantities by brute force: ten sub-samples per step, midpoint rule for integrals,
// the oracle evaluated directly at every sample.
std::array<double, 7> brute_force(const std::vector<State>& traj, const LinearOracle& o, const OperatorBundle& b) {
    const Interpolants ip(traj);
    const Grid1D& g = b.grid;
    const double h = ip.h();
    const int M = 10;
    std::array<double, 7> e{};
    for (std::size_t n = 0; n < ip.steps(); ++n) {
        for (int j = 0; j <= M; ++j) {
            const double t = h * (double(n) + double(j) / M);
            const State ex = o.at(t);
            const Vec dv = diff(ip.hat(Field::V, t), ex.v), dth = diff(ip.hat(Field::Theta, t), ex.theta);
            e[0] = std::max(e[0], std::sqrt(form(g, b.L, dv)));
            e[2] = std::max(e[2], v_norm(g, diff(ip.hat(Field::Phi, t), ex.phi)));
            e[3] = std::max(e[3], h_norm(g, dth));
            e[5] = std::max(e[5], std::sqrt(form(g, b.B2, dth)));
        }
        for (int j = 0; j < M; ++j) {
            const double t = h * (double(n) + (j + 0.5) / M);
            const State ex = o.at(t);
            const Vec dv = diff(ip.bar_on(Field::V, n), ex.v), dth = diff(ip.bar_on(Field::Theta, n), ex.theta);
            const double w = h / M;
            e[1] += w * form(g, b.B1, dv);
            e[4] += w * v_norm_sq(g, dth);
            e[6] += w * h_inner(g, b.B2.apply(dth), b.A1.apply(dth));
        }
    }
    e[1] = std::sqrt(e[1]);
    e[4] = std::sqrt(e[4]);
    return e;
}

}  // namespace

TEST(ErrorNorms, SelfComparison) {
    const auto b = bundle_for(Preset::P2, Boundary::Dirichlet, 16);
    const auto r = run(smooth_random_data(b.grid, 3), b, NonlinearitySpec(), 0.1, cfg_h(0.01));
    const Interpolants ip(r.trajectory);
    const ErrorReport e = error_norms(r.trajectory, hat_sampler(ip), b);
    EXPECT_EQ(e.e1, 0.0);
    EXPECT_EQ(e.e3, 0.0);
    EXPECT_EQ(e.e4, 0.0);
    EXPECT_EQ(e.e6, 0.0);

    std::vector<State> flat(4, r.trajectory.back());
    for (std::size_t k = 0; k < 4; ++k) flat[k].t_index = k;
    const Interpolants fp(flat);
    for (double v : error_norms(flat, hat_sampler(fp), b).values()) EXPECT_EQ(v, 0.0);
}

TEST(ErrorNorms, ZeroAgainstZero) {
    const auto b = bundle_for(Preset::P1, Boundary::Dirichlet, 16);
    const InitialData z{Vec(16, 0.0), Vec(16, 0.0), Vec(16, 0.0)};
    const auto r = run(z, b, NonlinearitySpec(), 0.1, cfg_h(0.01));
    const LinearOracle o(z, b, NonlinearitySpec());
    for (double v : error_norms(r.trajectory, oracle_sampler(o), b).values()) EXPECT_EQ(v, 0.0);
}

TEST(ErrorNorms, MatchOversampledQuadrature) {
    for (Preset p : {Preset::P1, Preset::P3}) {
        const auto b = bundle_for(p, Boundary::Dirichlet, 32);
        const auto d = mode_data(b.grid, 1, 1, 1, 0);
        const auto r = run(d, b, NonlinearitySpec(), 0.5, cfg_h(1.0 / 64));
        const LinearOracle o(d, b, NonlinearitySpec());
        const auto e = error_norms(r.trajectory, oracle_sampler(o), b).values();
        const auto bf = brute_force(r.trajectory, o, b);
        for (std::size_t i = 0; i < 7; ++i) EXPECT_NEAR(e[i], bf[i], 0.01 * bf[i] + 1e-15) << "e" << i + 1;
    }
}

TEST(ErrorNorms, SupConventionsAgree) {
    const auto b = bundle_for(Preset::P1);
    const auto d = mode_data(b.grid, 1, 1, 1, 0);
    const auto r = run(d, b, NonlinearitySpec(), 0.5, cfg_h(1.0 / 64));
    const LinearOracle o(d, b, NonlinearitySpec());
    const auto a = error_norms(r.trajectory, oracle_sampler(o), b, SupConvention::NodesAndMidpoints);
    const auto c = error_norms(r.trajectory, oracle_sampler(o), b, SupConvention::NodesOnly);
    for (std::size_t i : {0u, 2u, 3u, 5u}) {
        EXPECT_LE(c.values()[i], a.values()[i]);
        EXPECT_LE(a.values()[i], 2.0 * c.values()[i]);
    }
}

TEST(FitOrder, ExactPowerLaw) {
    std::vector<ErrorReport> reps;
    for (double h : {0.1, 0.05, 0.025}) {
        ErrorReport e;
        e.h = h;
        e.e1 = 3.0 * std::sqrt(h);
        reps.push_back(e);
    }
    const auto [order, M] = fit_order(reps);
    EXPECT_NEAR(order, 0.5, 1e-12);
    EXPECT_NEAR(M, 3.0, 1e-11);
}

TEST(Sweep, ValidatesInput) {
    const auto b = bundle_for(Preset::P1, Boundary::Dirichlet, 8);
    const auto d = mode_data(b.grid, 1, 1, 1, 0);
    EXPECT_THROW(sweep(d, b, {}, 0.5, {0.1}), std::invalid_argument);
    EXPECT_THROW(sweep(d, b, {}, 0.5, {0.1, 0.04}), std::invalid_argument);
    EXPECT_THROW(sweep(d, b, {}, 0.5, {0.3, 0.15}), std::invalid_argument);
}

TEST(Sweep, P1RateAndMonotoneDecay) {
    const auto b = bundle_for(Preset::P1);
    const auto d = mode_data(b.grid, 1, 1, 1, 0);
    const auto s = sweep(d, b, {}, 0.5, {1.0 / 32, 1.0 / 64, 1.0 / 128, 1.0 / 256, 1.0 / 512});
    ASSERT_FALSE(s.failed_member);
    EXPECT_GE(s.fitted_order, 0.45);
    EXPECT_TRUE(std::isfinite(s.fitted_M));
    for (const auto& r : s.reports) EXPECT_EQ(r.e2, 0.0);
    for (std::size_t k = 0; k + 1 < s.reports.size(); ++k)
        for (std::size_t i = 0; i < 7; ++i) {
            const double a = s.reports[k].values()[i], c = s.reports[k + 1].values()[i];
            if (a != 0.0) {
                EXPECT_LE(c, 1.05 * a) << "e" << i + 1 << " at h=" << s.reports[k + 1].h;
            }
        }
}

TEST(Sweep, ThreadCountDoesNotChangeResults) {
    const auto b = bundle_for(Preset::P2, Boundary::Dirichlet, 16);
    const auto d = mode_data(b.grid, 1, 1, 1, 0);
    const std::vector<double> hs{0.05, 0.025, 0.0125};
    const auto a = sweep(d, b, {}, 0.5, hs, 1);
    const auto c = sweep(d, b, {}, 0.5, hs, 3);
    for (std::size_t k = 0; k < hs.size(); ++k) EXPECT_EQ(a.reports[k].values(), c.reports[k].values());
    EXPECT_EQ(a.fitted_order, c.fitted_order);
}
