#pragma once

#include <algorithm>
#include <array>
#include <tuple>
#include <cmath>
#include <cstddef>
#include <functional>
#include <future>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "soundheat/bundle.hpp"
#include "soundheat/diagnostics.hpp"
#include "soundheat/oracle.hpp"
#include "soundheat/stepper.hpp"

namespace soundheat {

/// The seven error quantities between a discrete trajectory and a reference solution.
struct ErrorReport {
    double h = 0.0;
    double e1 = 0.0;  ///< sup_t ||L^{1/2}(v_hat - v)||_H
    double e2 = 0.0;  ///< ||B1^{1/2}(v_bar - v)||_{L2(H)}
    double e3 = 0.0;  ///< sup_t ||phi_hat - phi||_V
    double e4 = 0.0;  ///< sup_t ||theta_hat - theta||_H
    double e5 = 0.0;  ///< ||theta_bar - theta||_{L2(V)}
    double e6 = 0.0;  ///< sup_t ||B2^{1/2}(theta_hat - theta)||_H
    double e7 = 0.0;  ///< int (B2(theta_bar - theta), A1(theta_bar - theta)) dt, not square-rooted

    double total() const noexcept { return e1 + e2 + e3 + e4 + e5 + e6 + e7; }
    std::array<double, 7> values() const noexcept { return {e1, e2, e3, e4, e5, e6, e7}; }
};

/// Reference solution sampled at arbitrary times (theta, phi, v; z unused).
using ReferenceSampler = std::function<State(double)>;

enum class SupConvention { NodesAndMidpoints, NodesOnly };

/// Error norms of `traj` against `ref`. Sup norms are taken over nodes (and midpoints);
/// time integrals use composite Simpson on the two half intervals of each step, with the
/// reference sampled at quarter points (the bar interpolant is constant there).
inline ErrorReport error_norms(const std::vector<State>& traj, const ReferenceSampler& ref, const OperatorBundle& b,
                               SupConvention sup = SupConvention::NodesAndMidpoints) {
    const Grid1D& g = b.grid;
    const Interpolants ip(traj);
    for (const State& s : traj) detail::require_dim(s.phi.size(), g.size(), "error_norms");
    const std::size_t N = ip.steps();
    const double h = ip.h();

    ErrorReport r;
    r.h = h;
    double e2sq = 0.0, e5sq = 0.0;

    auto sup_terms = [&](double t, const State& rs) {
        const Vec dv = diff(ip.hat(Field::V, t), rs.v);
        const Vec dphi = diff(ip.hat(Field::Phi, t), rs.phi);
        const Vec dth = diff(ip.hat(Field::Theta, t), rs.theta);
        r.e1 = std::max(r.e1, std::sqrt(std::max(0.0, form(g, b.L, dv))));
        r.e3 = std::max(r.e3, v_norm(g, dphi));
        r.e4 = std::max(r.e4, h_norm(g, dth));
        r.e6 = std::max(r.e6, std::sqrt(std::max(0.0, form(g, b.B2, dth))));
    };

    State left = ref(0.0);
    sup_terms(0.0, left);
    for (std::size_t n = 0; n < N; ++n) {
        const double t0 = h * static_cast<double>(n);
        const State mid = ref(t0 + 0.5 * h);
        const State right = ref(t0 + h);
        if (sup == SupConvention::NodesAndMidpoints) sup_terms(t0 + 0.5 * h, mid);
        sup_terms(t0 + h, right);

        const Vec& vbar = ip.bar_on(Field::V, n);
        const Vec& thbar = ip.bar_on(Field::Theta, n);
        const State q1 = ref(t0 + 0.25 * h);
        const State q3 = ref(t0 + 0.75 * h);
        for (const auto& [a, m, c] : {std::tuple<const State*, const State*, const State*>{&left, &q1, &mid},
                                      {&mid, &q3, &right}}) {
            const Vec dv0 = diff(vbar, a->v), dvm = diff(vbar, m->v), dv1 = diff(vbar, c->v);
            const Vec dt0 = diff(thbar, a->theta), dtm = diff(thbar, m->theta), dt1 = diff(thbar, c->theta);
            const double w = 0.5 * h / 6.0;
            e2sq += w * (form(g, b.B1, dv0) + 4.0 * form(g, b.B1, dvm) + form(g, b.B1, dv1));
            e5sq += w * (v_norm_sq(g, dt0) + 4.0 * v_norm_sq(g, dtm) + v_norm_sq(g, dt1));
            auto cross = [&](const Vec& u) { return h_inner(g, b.B2.apply(u), b.A1.apply(u)); };
            r.e7 += w * (cross(dt0) + 4.0 * cross(dtm) + cross(dt1));
        }
        left = right;
    }
    r.e2 = std::sqrt(std::max(0.0, e2sq));
    r.e5 = std::sqrt(std::max(0.0, e5sq));
    return r;
}

/// Sampler over a fine trajectory; t must be a multiple of its step.
inline ReferenceSampler trajectory_sampler(const std::vector<State>& fine) {
    return [&fine](double t) {
        const double h = fine.front().h;
        const double q = t / h;
        const double k = std::round(q);
        if (std::abs(q - k) > 1e-6 || k < 0.0 || k >= static_cast<double>(fine.size()))
            throw std::invalid_argument("trajectory_sampler: time not on the reference grid");
        return fine[static_cast<std::size_t>(k)];
    };
}

inline ReferenceSampler oracle_sampler(const LinearOracle& oracle) {
    return [&oracle](double t) { return oracle.at(t); };
}

struct SweepResult {
    std::vector<ErrorReport> reports;
    std::vector<BoundReport> bounds;
    double fitted_order = 0.0;  ///< least-squares slope of log(total) against log(h)
    double fitted_M = 0.0;      ///< exp(intercept) of the same fit
    double max_half_ratio = 0.0;  ///< max over the sweep of total / h^{1/2}
    double h_ref = 0.0;           ///< 0 when the linear oracle is the reference
    std::optional<std::size_t> failed_member;
};

/// (slope, exp(intercept)) of the least-squares line through (log h, log total).
inline std::pair<double, double> fit_order(const std::vector<ErrorReport>& reports) {
    const double m = static_cast<double>(reports.size());
    if (reports.size() < 2) return {0.0, 0.0};
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (const auto& r : reports) {
        const double x = std::log(r.h), y = std::log(r.total());
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    const double slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
    const double icept = (sy - slope * sx) / m;
    return {slope, std::exp(icept)};
}

/// Runs one trajectory per h, measures the seven errors against the linear oracle (when the
/// nonlinearity is linear) or against a nested fine reference at h_ref = min(h)/32, and fits
/// the observed order.
inline SweepResult sweep(const InitialData& init, const OperatorBundle& b, const NonlinearitySpec& nl, double T,
                         const std::vector<double>& h_list, unsigned threads = 1, double newton_tol = 1e-12) {
    if (h_list.size() < 2) throw std::invalid_argument("sweep: need at least two step sizes");
    for (std::size_t i = 0; i + 1 < h_list.size(); ++i)
        if (std::abs(h_list[i + 1] * 2.0 - h_list[i]) > 1e-12 * h_list[i])
            throw std::invalid_argument("sweep: h_list must halve at each entry");
    for (double h : h_list)
        if (!step_count(T, h)) throw std::invalid_argument("sweep: T/h must be an integer for every h");

    SweepResult out;
    std::optional<LinearOracle> oracle;
    std::optional<RunResult> fine;
    ReferenceSampler ref;
    if (nl.is_linear()) {
        oracle.emplace(init, b, nl);
        ref = oracle_sampler(*oracle);
    } else {
        out.h_ref = h_list.back() / 32.0;
        fine = fine_reference(init, b, nl, T, out.h_ref);
        ref = trajectory_sampler(fine->trajectory);
    }

    struct Member {
        std::optional<ErrorReport> err;
        std::optional<BoundReport> bound;
    };
    auto work = [&](double h) {
        StepConfig cfg;
        cfg.h = h;
        cfg.newton_tol = newton_tol;
        const RunResult r = run(init, b, nl, T, cfg);
        Member m;
        if (!r.ok()) return m;
        m.err = error_norms(r.trajectory, ref, b);
        m.bound = apriori_monitor(r.trajectory, b, nl);
        return m;
    };

    std::vector<Member> members(h_list.size());
    const unsigned nt = std::max(1u, threads);
    for (std::size_t start = 0; start < h_list.size(); start += nt) {
        std::vector<std::future<Member>> batch;
        const std::size_t stop = std::min(h_list.size(), start + nt);
        for (std::size_t i = start + 1; i < stop; ++i) batch.push_back(std::async(std::launch::async, work, h_list[i]));
        members[start] = work(h_list[start]);
        for (std::size_t i = start + 1; i < stop; ++i) members[i] = batch[i - start - 1].get();
    }
    for (std::size_t i = 0; i < members.size(); ++i) {
        if (!members[i].err) {
            out.failed_member = i;
            break;
        }
        out.reports.push_back(*members[i].err);
        out.bounds.push_back(*members[i].bound);
    }
    std::tie(out.fitted_order, out.fitted_M) = fit_order(out.reports);
    for (const auto& r : out.reports) out.max_half_ratio = std::max(out.max_half_ratio, r.total() / std::sqrt(r.h));
    return out;
}

}  // namespace soundheat
