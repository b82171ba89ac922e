#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <system_error>
#include <variant>
#include <vector>

#include <json.hpp>

#include "soundheat/soundheat.hpp"

namespace soundheat::cli {

using json = nlohmann::ordered_json;

/// Shortest decimal string that round-trips to the same double.
inline std::string fmt(double x) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(std::vector<std::string> msgs) : std::runtime_error(join(msgs)), messages(std::move(msgs)) {}
    std::vector<std::string> messages;

private:
    static std::string join(const std::vector<std::string>& m) {
        std::string s;
        for (const auto& x : m) s += (s.empty() ? "" : "\n") + x;
        return s;
    }
};

struct SingleMode {
    std::size_t k = 1;
    double theta0 = 1.0, phi0 = 1.0, v0 = 0.0;
};
struct RandomSmooth {
    std::uint64_t seed = 1;
    double decay = 2.0;
};
struct ZeroProfile {};
using InitialProfile = std::variant<SingleMode, RandomSmooth, ZeroProfile>;

struct RunConfig {
    ProblemPreset preset;
    Boundary bc = Boundary::Dirichlet;
    std::size_t n_interior = 64;
    double T = 0.5;
    double h = 1.0 / 256.0;
    std::vector<double> h_list;
    NonlinearitySpec nonlinearity;  ///< resolved (P1 derives it from m)
    InitialProfile initial = SingleMode{};
    StepConfig step;
    json resolved;  ///< the full configuration after defaults, as written to output headers
};

namespace detail {

/// Parses a decimal string (or a ratio "a/b") into a double; from_chars rounds correctly.
inline std::optional<double> parse_decimal(const std::string& s) {
    auto one = [](std::string_view v) -> std::optional<double> {
        double x = 0.0;
        const auto res = std::from_chars(v.data(), v.data() + v.size(), x);
        if (res.ec != std::errc() || res.ptr != v.data() + v.size()) return std::nullopt;
        return x;
    };
    if (const auto slash = s.find('/'); slash != std::string::npos) {
        const auto a = one(std::string_view(s).substr(0, slash));
        const auto b = one(std::string_view(s).substr(slash + 1));
        if (!a || !b || *b == 0.0) return std::nullopt;
        return *a / *b;
    }
    return one(s);
}

class Reader {
public:
    explicit Reader(std::vector<std::string>& errors) : errors_(errors) {}

    /// Numeric field given as a JSON number or a decimal string; echoes the value into `out`.
    double number(const json& obj, const std::string& key, const std::string& path, double fallback, json& out) {
        if (!obj.is_object() || !obj.contains(key)) {
            out[key] = fmt(fallback);
            return fallback;
        }
        const json& v = obj.at(key);
        std::optional<double> x;
        if (v.is_number()) x = v.get<double>();
        else if (v.is_string()) x = parse_decimal(v.get<std::string>());
        if (!x || !std::isfinite(*x)) {
            errors_.push_back(path + key + ": expected a finite number or decimal string");
            out[key] = fmt(fallback);
            return fallback;
        }
        out[key] = v.is_string() ? v.get<std::string>() : fmt(*x);
        return *x;
    }

    std::uint64_t integer(const json& obj, const std::string& key, const std::string& path, std::uint64_t fallback,
                          json& out, std::uint64_t min_value = 0) {
        if (!obj.is_object() || !obj.contains(key)) {
            out[key] = fallback;
            return fallback;
        }
        const json& v = obj.at(key);
        if (!v.is_number_integer() || v.get<std::int64_t>() < static_cast<std::int64_t>(min_value)) {
            errors_.push_back(path + key + ": expected an integer >= " + std::to_string(min_value));
            out[key] = fallback;
            return fallback;
        }
        out[key] = v.get<std::uint64_t>();
        return v.get<std::uint64_t>();
    }

    std::string text(const json& obj, const std::string& key, const std::string& path, const std::string& fallback,
                     json& out) {
        if (!obj.is_object() || !obj.contains(key)) {
            out[key] = fallback;
            return fallback;
        }
        if (!obj.at(key).is_string()) {
            errors_.push_back(path + key + ": expected a string");
            out[key] = fallback;
            return fallback;
        }
        out[key] = obj.at(key).get<std::string>();
        return obj.at(key).get<std::string>();
    }

    void fail(std::string msg) { errors_.push_back(std::move(msg)); }

private:
    std::vector<std::string>& errors_;
};

inline BetaKind parse_beta(const json& j, Reader& rd, json& out) {
    const std::string kind = rd.text(j, "kind", "nonlinearity.beta.", "cubic", out);
    if (kind == "zero") return ZeroBeta{};
    if (kind == "cubic") {
        const double a = rd.number(j, "a", "nonlinearity.beta.", 1.0, out);
        if (!(a > 0.0)) rd.fail("nonlinearity.beta.a: must be positive");
        return CubicBeta{a > 0.0 ? a : 1.0};
    }
    if (kind == "odd_polynomial") {
        OddPolynomialBeta p;
        json arr = json::array();
        if (!j.contains("coefficients") || !j.at("coefficients").is_array() || j.at("coefficients").empty()) {
            rd.fail("nonlinearity.beta.coefficients: expected a non-empty array");
        } else {
            for (std::size_t i = 0; i < j.at("coefficients").size(); ++i) {
                json tmp = json::object();
                json holder = json::object({{"c", j.at("coefficients")[i]}});
                p.coeffs.push_back(rd.number(holder, "c", "nonlinearity.beta.coefficients[" + std::to_string(i) + "].", 0.0, tmp));
                arr.push_back(tmp["c"]);
            }
        }
        out["coefficients"] = arr;
        return p;
    }
    rd.fail("nonlinearity.beta.kind: expected zero, cubic or odd_polynomial");
    return ZeroBeta{};
}

inline PiKind parse_pi(const json& j, Reader& rd, json& out) {
    const std::string kind = rd.text(j, "kind", "nonlinearity.pi.", "zero", out);
    if (kind == "zero") return ZeroPi{};
    if (kind == "linear") return LinearPi{rd.number(j, "slope", "nonlinearity.pi.", 0.0, out)};
    if (kind == "scaled_sine") return ScaledSinePi{rd.number(j, "amplitude", "nonlinearity.pi.", 0.0, out)};
    rd.fail("nonlinearity.pi.kind: expected zero, linear or scaled_sine");
    return ZeroPi{};
}

}  // namespace detail

/// Validates a JSON configuration against every precondition before any computation.
/// Throws ConfigError listing each offending field.
inline RunConfig parse_config(const json& j) {
    std::vector<std::string> errors;
    detail::Reader rd(errors);
    RunConfig cfg;
    json& res = cfg.resolved;
    res = json::object();
    if (!j.is_object()) throw ConfigError({"config: expected a JSON object"});

    const std::string preset_name = rd.text(j, "preset", "", "P1", res);
    if (auto p = parse_preset(preset_name)) cfg.preset.preset = *p;
    else errors.push_back("preset: expected one of P1..P5");

    const std::string bc = rd.text(j, "bc", "", "dirichlet", res);
    if (bc == "dirichlet") cfg.bc = Boundary::Dirichlet;
    else if (bc == "neumann") cfg.bc = Boundary::Neumann;
    else errors.push_back("bc: expected dirichlet or neumann");

    cfg.n_interior = rd.integer(j, "n_interior", "", 64, res, 2);

    {
        const json empty = json::object();
        const json& pj = j.contains("params") ? j.at("params") : empty;
        if (!pj.is_object()) errors.push_back("params: expected an object");
        json po = json::object();
        cfg.preset.sigma = rd.number(pj, "sigma", "params.", 1.0, po);
        cfg.preset.c = rd.number(pj, "c", "params.", 1.0, po);
        cfg.preset.m = rd.number(pj, "m", "params.", 0.0, po);
        cfg.preset.epsilon = rd.number(pj, "epsilon", "params.", 1.0, po);
        cfg.preset.gamma = rd.number(pj, "gamma", "params.", 2.0, po);
        res["params"] = po;
        try {
            cfg.preset.validate();
        } catch (const std::invalid_argument& e) {
            errors.push_back(std::string("params: ") + e.what());
        }
    }

    cfg.T = rd.number(j, "T", "", 0.5, res);
    if (!(cfg.T > 0.0)) errors.push_back("T: must be positive");
    cfg.h = rd.number(j, "h", "", 1.0 / 256.0, res);
    if (!(cfg.h > 0.0)) errors.push_back("h: must be positive");
    else if (cfg.T > 0.0 && !step_count(cfg.T, cfg.h)) errors.push_back("h: T/h must be a positive integer");

    if (j.contains("h_list")) {
        json arr = json::array();
        if (!j.at("h_list").is_array() || j.at("h_list").size() < 2) {
            errors.push_back("h_list: expected an array of at least two step sizes");
        } else {
            for (std::size_t i = 0; i < j.at("h_list").size(); ++i) {
                json tmp = json::object();
                const json holder = json::object({{"h", j.at("h_list")[i]}});
                const double h = rd.number(holder, "h", "h_list[" + std::to_string(i) + "].", 0.0, tmp);
                arr.push_back(tmp["h"]);
                if (!(h > 0.0) || !step_count(cfg.T, h)) errors.push_back("h_list[" + std::to_string(i) + "]: T/h must be a positive integer");
                cfg.h_list.push_back(h);
            }
            for (std::size_t i = 0; i + 1 < cfg.h_list.size(); ++i)
                if (std::abs(2.0 * cfg.h_list[i + 1] - cfg.h_list[i]) > 1e-12 * cfg.h_list[i])
                    errors.push_back("h_list: entries must halve successively");
        }
        res["h_list"] = arr;
    }

    {
        NonlinearitySpec user;
        json no = json::object();
        const bool given = j.contains("nonlinearity");
        if (cfg.preset.preset == Preset::P1 && given)
            errors.push_back("nonlinearity: P1 fixes beta = 0 and pi(r) = -m^2 r; remove this block");
        const json empty = json::object();
        const json& nj = given ? j.at("nonlinearity") : empty;
        json bo = json::object(), pio = json::object();
        const json& bj = nj.is_object() && nj.contains("beta") ? nj.at("beta") : empty;
        const json& pij = nj.is_object() && nj.contains("pi") ? nj.at("pi") : empty;
        BetaKind beta = detail::parse_beta(bj, rd, bo);
        PiKind pi = detail::parse_pi(pij, rd, pio);
        GrowthConstants gc;
        json go = json::object();
        const json& gj = nj.is_object() && nj.contains("growth") ? nj.at("growth") : empty;
        gc.p = rd.number(gj, "p", "nonlinearity.growth.", 2.0, go);
        gc.q = rd.number(gj, "q", "nonlinearity.growth.", 2.0, go);
        gc.c_phi = rd.number(gj, "c_phi", "nonlinearity.growth.", 1.0, go);
        try {
            user = NonlinearitySpec(beta, pi, gc);
        } catch (const std::invalid_argument& e) {
            errors.push_back(std::string("nonlinearity: ") + e.what());
        }
        if (cfg.preset.preset == Preset::P1) {
            cfg.nonlinearity = preset_nonlinearity(cfg.preset, user);
            no["beta"] = json::object({{"kind", "zero"}});
            no["pi"] = cfg.preset.m == 0.0 ? json::object({{"kind", "zero"}})
                                           : json::object({{"kind", "linear"}, {"slope", fmt(-cfg.preset.m * cfg.preset.m)}});
        } else {
            cfg.nonlinearity = user;
            no["beta"] = bo;
            no["pi"] = pio;
            no["growth"] = go;
        }
        res["nonlinearity"] = no;
    }

    {
        const json empty = json::object();
        const json& ij = j.contains("initial") ? j.at("initial") : empty;
        json io = json::object();
        const std::string profile = rd.text(ij, "profile", "initial.", "single_mode", io);
        if (profile == "single_mode") {
            SingleMode s;
            s.k = rd.integer(ij, "k", "initial.", 1, io, 0);
            s.theta0 = rd.number(ij, "theta0", "initial.", 1.0, io);
            s.phi0 = rd.number(ij, "phi0", "initial.", 1.0, io);
            s.v0 = rd.number(ij, "v0", "initial.", 0.0, io);
            const std::size_t first = cfg.bc == Boundary::Dirichlet ? 1 : 0;
            if (s.k < first || s.k >= first + cfg.n_interior) errors.push_back("initial.k: mode index outside the grid's eigenbasis");
            cfg.initial = s;
        } else if (profile == "random_smooth") {
            RandomSmooth r;
            r.seed = rd.integer(ij, "seed", "initial.", 1, io);
            r.decay = rd.number(ij, "decay", "initial.", 2.0, io);
            if (!(r.decay >= 0.0)) errors.push_back("initial.decay: must be nonnegative");
            cfg.initial = r;
        } else if (profile == "zero") {
            cfg.initial = ZeroProfile{};
        } else {
            errors.push_back("initial.profile: expected single_mode, random_smooth or zero");
        }
        res["initial"] = io;
    }

    {
        const json empty = json::object();
        const json& sj = j.contains("solver") ? j.at("solver") : empty;
        json so = json::object();
        cfg.step.h = cfg.h;
        cfg.step.newton_tol = rd.number(sj, "newton_tol", "solver.", 1e-12, so);
        if (!(cfg.step.newton_tol > 0.0)) errors.push_back("solver.newton_tol: must be positive");
        cfg.step.newton_max_iter = static_cast<int>(rd.integer(sj, "newton_max_iter", "solver.", 25, so, 1));
        const std::string path = rd.text(sj, "path", "solver.", "coupled_direct", so);
        if (path == "coupled_direct") {
            cfg.step.solve_path = CoupledDirect{};
        } else if (path == "yosida") {
            YosidaRegularized y;
            if (sj.contains("lambda_schedule")) {
                y.lambdas.clear();
                json arr = json::array();
                const json& ls = sj.at("lambda_schedule");
                if (!ls.is_array() || ls.empty()) errors.push_back("solver.lambda_schedule: expected a non-empty array");
                else
                    for (std::size_t i = 0; i < ls.size(); ++i) {
                        json tmp = json::object();
                        const json holder = json::object({{"l", ls[i]}});
                        const double l = rd.number(holder, "l", "solver.lambda_schedule[" + std::to_string(i) + "].", 1.0, tmp);
                        if (!(l > 0.0)) errors.push_back("solver.lambda_schedule: entries must be positive");
                        y.lambdas.push_back(l);
                        arr.push_back(tmp["l"]);
                    }
                so["lambda_schedule"] = arr;
            } else {
                json arr = json::array();
                for (double l : y.lambdas) arr.push_back(fmt(l));
                so["lambda_schedule"] = arr;
            }
            cfg.step.solve_path = y;
        } else {
            errors.push_back("solver.path: expected coupled_direct or yosida");
        }
        res["solver"] = so;
    }

    if (!errors.empty()) throw ConfigError(errors);
    return cfg;
}

inline RunConfig load_config(const std::filesystem::path& p) {
    std::ifstream in(p);
    if (!in) throw ConfigError({"config: cannot open " + p.string()});
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError({std::string("config: invalid JSON: ") + e.what()});
    }
    return parse_config(j);
}

/// 53 uniform bits from the generator mapped to [0, 1); platform independent unlike std distributions.
inline double unit_uniform(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

/// Initial data for a profile. Profiles are combinations of the grid's Laplacian eigenvectors,
/// so they satisfy the boundary conditions and every operator applied to them stays finite.
inline InitialData make_initial(const InitialProfile& profile, const Grid1D& grid) {
    const std::size_t n = grid.size();
    if (const auto* s = std::get_if<SingleMode>(&profile)) {
        const Vec m = grid.mode(s->k);
        return {scaled(s->theta0, m), scaled(s->phi0, m), scaled(s->v0, m)};
    }
    if (const auto* r = std::get_if<RandomSmooth>(&profile)) {
        std::mt19937_64 rng(r->seed);
        InitialData d;
        for (Vec* u : {&d.theta0, &d.phi0, &d.v0}) {
            Vec c(n);
            for (std::size_t j = 0; j < n; ++j)
                c[j] = (2.0 * unit_uniform(rng) - 1.0) / std::pow(static_cast<double>(j + 1), r->decay);
            *u = inverse_modal_transform(c, grid);
        }
        return d;
    }
    return {Vec(n, 0.0), Vec(n, 0.0), Vec(n, 0.0)};
}

struct Prepared {
    Grid1D grid;
    OperatorBundle bundle;
    InitialData initial;
    StructuralConstants constants;
};

inline Prepared prepare(const RunConfig& cfg) {
    Grid1D grid(cfg.n_interior, cfg.bc);
    OperatorBundle b = build_bundle(cfg.preset, grid);
    InitialData init = make_initial(cfg.initial, grid);
    StructuralConstants sc = estimate_structural_constants(b, cfg.nonlinearity.c_lip());
    return {grid, std::move(b), std::move(init), sc};
}

/// Header block shared by every output: resolved config plus the structural constants.
inline json header_json(const RunConfig& cfg, const Prepared& p) {
    json h = json::object();
    h["config"] = cfg.resolved;
    h["h_tilde"] = fmt(p.constants.h_tilde);
    h["C_A1B2"] = fmt(p.constants.C_A1B2);
    return h;
}

inline std::string csv_header_block(const json& header) {
    std::string s;
    s += "# config: " + header["config"].dump() + "\n";
    s += "# h_tilde: " + header["h_tilde"].get<std::string>() + "\n";
    s += "# C_A1B2: " + header["C_A1B2"].get<std::string>() + "\n";
    return s;
}

inline void write_file(const std::filesystem::path& p, const std::string& content) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + p.string());
    out << content;
}

struct Options {
    std::filesystem::path out_dir = "out";
    std::size_t snapshot_stride = 0;
    unsigned threads = 1;
};

enum ExitCode : int { kOk = 0, kConfigError = 1, kDiverged = 2 };

inline std::string energy_csv(const RunResult& r, const OperatorBundle& b, const NonlinearitySpec& nl, const json& header) {
    std::string s = csv_header_block(header);
    s += "n,t,kinetic,elastic,thermal,potential,dissipation_b1,dissipation_cross,identity_residual\n";
    for (std::size_t k = 0; k < r.trajectory.size(); ++k) {
        const State& st = r.trajectory[k];
        const EnergyRecord e = energy(st, b, nl);
        const double id = k == 0 ? 0.0 : step_identity_residual(r.trajectory[k - 1], st, b, nl);
        s += std::to_string(k) + "," + fmt(st.time()) + "," + fmt(e.kinetic) + "," + fmt(e.elastic) + "," +
             fmt(e.thermal) + "," + fmt(e.potential) + "," + fmt(e.dissipation_b1) + "," + fmt(e.dissipation_cross) +
             "," + fmt(id) + "\n";
    }
    return s;
}

inline int cmd_run(const RunConfig& cfg, const Options& opt, std::ostream& log = std::cerr) {
    const Prepared p = prepare(cfg);
    const json header = header_json(cfg, p);
    if (cfg.h >= p.constants.h_tilde)
        log << "warning: h = " << fmt(cfg.h) << " >= h_tilde = " << fmt(p.constants.h_tilde)
            << "; unique solvability is not guaranteed\n";
    const RunResult r = run(p.initial, p.bundle, cfg.nonlinearity, cfg.T, cfg.step);
    std::filesystem::create_directories(opt.out_dir);

    write_file(opt.out_dir / "energy.csv", energy_csv(r, p.bundle, cfg.nonlinearity, header));

    std::string steps = csv_header_block(header);
    steps += "n,newton_iters,final_residual,g_norm,theta_residual,scheme_residual\n";
    for (std::size_t k = 0; k < r.reports.size(); ++k) {
        const StepReport& q = r.reports[k];
        steps += std::to_string(k + 1) + "," + std::to_string(q.newton_iters) + "," + fmt(q.final_residual) + "," +
                 fmt(q.g_norm) + "," + fmt(q.theta_residual) + "," + fmt(q.scheme_residual) + "\n";
    }
    write_file(opt.out_dir / "steps.csv", steps);

    if (opt.snapshot_stride > 0) {
        std::string snap = csv_header_block(header);
        snap += "n,t,x,theta,phi,v,z\n";
        for (std::size_t k = 0; k < r.trajectory.size(); k += opt.snapshot_stride) {
            const State& st = r.trajectory[k];
            for (std::size_t i = 0; i < p.grid.size(); ++i)
                snap += std::to_string(k) + "," + fmt(st.time()) + "," + fmt(p.grid.x(i)) + "," + fmt(st.theta[i]) +
                        "," + fmt(st.phi[i]) + "," + fmt(st.v[i]) + "," + fmt(st.z[i]) + "\n";
        }
        write_file(opt.out_dir / "snapshots.csv", snap);
    }

    json summary = json::object();
    summary["header"] = header;
    summary["steps_requested"] = *step_count(cfg.T, cfg.h);
    summary["steps_completed"] = r.reports.size();
    summary["above_threshold"] = r.above_threshold;
    if (r.failure_index) {
        summary["status"] = "newton_diverged";
        summary["failure_index"] = *r.failure_index;
        summary["failure_residual"] = fmt(r.failure_residual);
    } else {
        summary["status"] = "ok";
    }
    write_file(opt.out_dir / "summary.json", summary.dump(2) + "\n");
    if (r.failure_index) {
        log << "error: Newton diverged at step " << *r.failure_index << " (residual " << fmt(r.failure_residual) << ")\n";
        return kDiverged;
    }
    return kOk;
}

inline int cmd_sweep(const RunConfig& cfg, const Options& opt, std::ostream& log = std::cerr) {
    const Prepared p = prepare(cfg);
    const json header = header_json(cfg, p);
    std::vector<double> hs = cfg.h_list;
    if (hs.empty()) {
        for (double h = 1.0 / 32.0; h >= 1.0 / 512.0; h /= 2.0) hs.push_back(h);
        for (double h : hs)
            if (!step_count(cfg.T, h)) throw ConfigError({"h_list: default sweep 1/32..1/512 does not divide T; give h_list"});
    }
    for (double h : hs)
        if (h >= p.constants.h_tilde) log << "warning: sweep member h = " << fmt(h) << " >= h_tilde\n";
    const SweepResult sr = sweep(p.initial, p.bundle, cfg.nonlinearity, cfg.T, hs, opt.threads, cfg.step.newton_tol);
    std::filesystem::create_directories(opt.out_dir);

    std::string csv = csv_header_block(header);
    csv += "h,e1,e2,e3,e4,e5,e6,e7,total\n";
    for (const ErrorReport& e : sr.reports) {
        csv += fmt(e.h);
        for (double v : e.values()) csv += "," + fmt(v);
        csv += "," + fmt(e.total()) + "\n";
    }
    write_file(opt.out_dir / "sweep.csv", csv);

    std::string bounds = csv_header_block(header);
    if (!sr.bounds.empty()) {
        bounds += "h";
        for (const auto& [name, _] : sr.bounds.front().items) bounds += "," + name;
        bounds += "\n";
        for (const BoundReport& br : sr.bounds) {
            bounds += fmt(br.h);
            for (const auto& [_, v] : br.items) bounds += "," + fmt(v);
            bounds += "\n";
        }
    }
    write_file(opt.out_dir / "bounds.csv", bounds);

    json js = json::object();
    js["header"] = header;
    js["fitted_order"] = sr.fitted_order;
    js["fitted_M"] = sr.fitted_M;
    js["max_total_over_sqrt_h"] = sr.max_half_ratio;
    js["reference"] = sr.h_ref > 0.0 ? "fine_reference" : "linear_oracle";
    if (sr.h_ref > 0.0) js["h_ref"] = fmt(sr.h_ref);
    json viol = json::array();
    for (const auto& v : uniformity_check(sr.bounds)) viol.push_back(v.quantity);
    js["bound_uniformity_violations"] = viol;
    if (sr.failed_member) js["failed_member"] = *sr.failed_member;
    write_file(opt.out_dir / "sweep.json", js.dump(2) + "\n");
    if (sr.failed_member) {
        log << "error: sweep member " << *sr.failed_member << " diverged\n";
        return kDiverged;
    }
    return kOk;
}

inline int cmd_energy_audit(const RunConfig& cfg, const Options& opt, std::ostream& log = std::cerr) {
    const Prepared p = prepare(cfg);
    const json header = header_json(cfg, p);
    const RunResult r = run(p.initial, p.bundle, cfg.nonlinearity, cfg.T, cfg.step);
    const NonlinearitySpec& nl = cfg.nonlinearity;
    std::filesystem::create_directories(opt.out_dir);

    std::vector<LyapunovViolation> viol;
    const bool lyapunov_mode = nl.pi_is_zero();
    if (lyapunov_mode) viol = lyapunov_check(r.trajectory, p.bundle, nl);

    std::string csv = csv_header_block(header);
    csv += "n,identity_residual,relative_residual,energy_plus_potential,pi_source_term\n";
    double worst_rel = 0.0, worst_source = 0.0;
    for (std::size_t k = 0; k + 1 < r.trajectory.size(); ++k) {
        const State& a = r.trajectory[k];
        const State& b = r.trajectory[k + 1];
        const double res = step_identity_residual(a, b, p.bundle, nl);
        const EnergyRecord e0 = energy(a, p.bundle, nl);
        const EnergyRecord e1 = energy(b, p.bundle, nl);
        const double rel = res / (1.0 + e0.total());
        double source = 0.0;
        for (std::size_t i = 0; i < p.grid.size(); ++i) source += nl.pi(b.phi[i]) * b.v[i];
        source *= p.grid.dx() * b.h;
        worst_rel = std::max(worst_rel, rel);
        worst_source = std::max(worst_source, std::abs(source));
        csv += std::to_string(k + 1) + "," + fmt(res) + "," + fmt(rel) + "," + fmt(e1.total() + e1.potential) + "," +
               fmt(source) + "\n";
    }
    write_file(opt.out_dir / "audit.csv", csv);

    json js = json::object();
    js["header"] = header;
    js["steps"] = r.reports.size();
    js["max_relative_identity_residual"] = worst_rel;
    if (lyapunov_mode) {
        js["lyapunov_mode"] = "check";
        json arr = json::array();
        for (const auto& v : viol) arr.push_back(json::object({{"index", v.index}, {"amount", fmt(v.amount)}}));
        js["lyapunov_violations"] = arr;
    } else {
        js["lyapunov_mode"] = "monitor_only";
        js["max_pi_source_term"] = worst_source;
    }
    if (r.failure_index) js["failure_index"] = *r.failure_index;
    write_file(opt.out_dir / "audit.json", js.dump(2) + "\n");
    if (r.failure_index) {
        log << "error: Newton diverged at step " << *r.failure_index << "\n";
        return kDiverged;
    }
    return kOk;
}

inline int cmd_oracle_check(const RunConfig& cfg, const Options& opt, std::ostream& log = std::cerr) {
    if (!cfg.nonlinearity.is_linear()) throw ConfigError({"nonlinearity: oracle-check requires beta = 0 and a zero or linear pi"});
    const Prepared p = prepare(cfg);
    const json header = header_json(cfg, p);
    const RunResult r = run(p.initial, p.bundle, cfg.nonlinearity, cfg.T, cfg.step);
    const LinearOracle oracle(p.initial, p.bundle, cfg.nonlinearity);
    std::filesystem::create_directories(opt.out_dir);

    std::string csv = csv_header_block(header);
    csv += "n,t,dev_theta,dev_phi,dev_v,dev_max\n";
    double worst = 0.0;
    for (std::size_t k = 0; k < r.trajectory.size(); ++k) {
        const State& s = r.trajectory[k];
        const State ex = oracle.at(s.time());
        const double dt = sup_norm(diff(s.theta, ex.theta));
        const double dp = sup_norm(diff(s.phi, ex.phi));
        const double dv = sup_norm(diff(s.v, ex.v));
        const double m = std::max({dt, dp, dv});
        worst = std::max(worst, m);
        csv += std::to_string(k) + "," + fmt(s.time()) + "," + fmt(dt) + "," + fmt(dp) + "," + fmt(dv) + "," + fmt(m) + "\n";
    }
    write_file(opt.out_dir / "oracle.csv", csv);
    json js = json::object();
    js["header"] = header;
    js["max_deviation"] = worst;
    if (r.failure_index) js["failure_index"] = *r.failure_index;
    write_file(opt.out_dir / "oracle.json", js.dump(2) + "\n");
    if (r.failure_index) {
        log << "error: Newton diverged at step " << *r.failure_index << "\n";
        return kDiverged;
    }
    return kOk;
}

/// Dispatches a subcommand by name; config errors map to exit 1.
inline int dispatch(const std::string& command, const std::filesystem::path& config_path, const Options& opt,
                    std::ostream& log = std::cerr) {
    try {
        const RunConfig cfg = load_config(config_path);
        if (command == "run") return cmd_run(cfg, opt, log);
        if (command == "sweep") return cmd_sweep(cfg, opt, log);
        if (command == "energy-audit") return cmd_energy_audit(cfg, opt, log);
        if (command == "oracle-check") return cmd_oracle_check(cfg, opt, log);
        log << "error: unknown command " << command << "\n";
        return kConfigError;
    } catch (const ConfigError& e) {
        for (const auto& m : e.messages) log << "config error: " << m << "\n";
        return kConfigError;
    } catch (const std::invalid_argument& e) {
        log << "config error: " << e.what() << "\n";
        return kConfigError;
    }
}

}  // namespace soundheat::cli
