#include "pendulum/cli_app.hpp"

#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "pendulum/dynamics.hpp"
#include "pendulum/errors.hpp"
#include "pendulum/orbit.hpp"
#include "pendulum/parallel.hpp"
#include "pendulum/segment.hpp"
#include "pendulum/shooting.hpp"

namespace pendulum::cli {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

constexpr double kHalfPi = std::numbers::pi / 2.0;

// ---- config ingestion ------------------------------------------------------

void reject_unknown_keys(const json& obj, const std::string& ctx,
                         std::initializer_list<const char*> allowed) {
    if (!obj.is_object()) throw ConfigError(ctx + ": expected an object");
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        bool known = false;
        for (const char* k : allowed)
            if (it.key() == k) {
                known = true;
                break;
            }
        if (!known) throw ConfigError(ctx + ": unknown key \"" + it.key() + "\"");
    }
}

double num_or(const json& obj, const char* key, double fallback) {
    if (!obj.contains(key)) return fallback;
    const json& v = obj.at(key);
    if (!v.is_number()) throw ConfigError(std::string(key) + ": expected a number");
    return v.get<double>();
}

int int_or(const json& obj, const char* key, int fallback) {
    if (!obj.contains(key)) return fallback;
    const json& v = obj.at(key);
    if (!v.is_number_integer()) throw ConfigError(std::string(key) + ": expected an integer");
    return v.get<int>();
}

bool bool_or(const json& obj, const char* key, bool fallback) {
    if (!obj.contains(key)) return fallback;
    const json& v = obj.at(key);
    if (!v.is_boolean()) throw ConfigError(std::string(key) + ": expected a boolean");
    return v.get<bool>();
}

PendulumParams parse_params(const json& root) {
    PendulumParams p;
    if (!root.contains("params")) return p;
    const json& j = root.at("params");
    reject_unknown_keys(j, "params", {"g", "l", "m"});
    p.g = num_or(j, "g", p.g);
    p.l = num_or(j, "l", p.l);
    p.m = num_or(j, "m", p.m);
    if (!(p.g > 0.0) || !(p.l > 0.0) || !(p.m > 0.0))
        throw ValidationError("params: g, l, m must be positive");
    return p;
}

PivotProfile parse_pivot(const json& root) {
    if (!root.contains("pivot")) return PivotProfile::zero();
    const json& j = root.at("pivot");
    if (!j.is_object() || !j.contains("kind"))
        throw ConfigError("pivot: expected an object with a \"kind\"");
    std::string kind = j.at("kind").get<std::string>();
    if (kind == "zero") {
        reject_unknown_keys(j, "pivot", {"kind"});
        return PivotProfile::zero();
    }
    if (kind == "polynomial") {
        reject_unknown_keys(j, "pivot", {"kind", "coefficients"});
        if (!j.contains("coefficients") || !j.at("coefficients").is_array())
            throw ConfigError("pivot.polynomial: \"coefficients\" array required");
        std::vector<double> c;
        for (const auto& v : j.at("coefficients")) {
            if (!v.is_number()) throw ConfigError("pivot.polynomial: coefficients must be numbers");
            c.push_back(v.get<double>());
        }
        return PivotProfile::polynomial(std::move(c));
    }
    if (kind == "harmonic_sum") {
        reject_unknown_keys(j, "pivot", {"kind", "terms"});
        if (!j.contains("terms") || !j.at("terms").is_array())
            throw ConfigError("pivot.harmonic_sum: \"terms\" array required");
        std::vector<HarmonicTerm> terms;
        for (const auto& tj : j.at("terms")) {
            reject_unknown_keys(tj, "pivot.harmonic_sum.term",
                                {"amplitude", "angular_frequency", "phase"});
            HarmonicTerm h;
            h.amplitude = num_or(tj, "amplitude", 0.0);
            h.angular_frequency = num_or(tj, "angular_frequency", 0.0);
            h.phase = num_or(tj, "phase", 0.0);
            terms.push_back(h);
        }
        return PivotProfile::harmonic_sum(std::move(terms));
    }
    if (kind == "constant_acceleration") {
        reject_unknown_keys(j, "pivot", {"kind", "a"});
        return PivotProfile::constant_acceleration(num_or(j, "a", 0.0));
    }
    throw ConfigError("pivot: unknown kind \"" + kind + "\"");
}

IntegratorConfig parse_integrator(const json& root) {
    IntegratorConfig c;
    if (!root.contains("integrator")) return c;
    const json& j = root.at("integrator");
    reject_unknown_keys(j, "integrator", {"rtol", "atol", "initial_step", "max_step", "event_tol"});
    c.rtol = num_or(j, "rtol", c.rtol);
    c.atol = num_or(j, "atol", c.atol);
    c.initial_step = num_or(j, "initial_step", c.initial_step);
    c.max_step = num_or(j, "max_step", c.max_step);
    c.event_tol = num_or(j, "event_tol", c.event_tol);
    if (!(c.rtol > 0.0) || !(c.atol > 0.0) || !(c.event_tol > 0.0))
        throw ValidationError("integrator: rtol, atol, event_tol must be positive");
    return c;
}

json pivot_to_json(const PivotProfile& pivot) {
    return pivot.visit([&](const auto& rep) -> json {
        using T = std::decay_t<decltype(rep)>;
        if constexpr (std::is_same_v<T, PivotProfile::Zero>) {
            return {{"kind", "zero"}};
        } else if constexpr (std::is_same_v<T, PivotProfile::Polynomial>) {
            return {{"kind", "polynomial"}, {"coefficients", rep.coefficients}};
        } else if constexpr (std::is_same_v<T, PivotProfile::HarmonicSum>) {
            json terms = json::array();
            for (const auto& h : rep.terms)
                terms.push_back({{"amplitude", h.amplitude},
                                 {"angular_frequency", h.angular_frequency},
                                 {"phase", h.phase}});
            return {{"kind", "harmonic_sum"}, {"terms", terms}};
        } else {
            return {{"kind", "constant_acceleration"}, {"a", rep.a}};
        }
    });
}

json integrator_to_json(const IntegratorConfig& c) {
    return {{"rtol", c.rtol},
            {"atol", c.atol},
            {"initial_step", c.initial_step},
            {"max_step", c.max_step},
            {"event_tol", c.event_tol}};
}

std::uint64_t fnv1a(const std::string& bytes) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

std::string hex64(std::uint64_t v) {
    char buf[17];
    static const char* digits = "0123456789abcdef";
    for (int i = 15; i >= 0; --i) {
        buf[i] = digits[v & 0xf];
        v >>= 4;
    }
    buf[16] = '\0';
    return buf;
}

// Shared inputs of every subcommand.
struct Context {
    json root;                // raw config
    PendulumParams params;
    PivotProfile pivot;
    IntegratorConfig integ;
    unsigned workers = 1;
    fs::path out_dir = "out";
    std::string digest;
    std::chrono::steady_clock::time_point start;
};

const json& block(const json& root, const char* name) {
    static const json empty = json::object();
    if (!root.contains(name)) return empty;
    const json& b = root.at(name);
    if (!b.is_object()) throw ConfigError(std::string(name) + ": expected an object");
    return b;
}

double pivot_period_or_throw(const PivotProfile& pivot, const char* what) {
    PeriodInfo info = pivot.period();
    if (info.kind == PeriodKind::Periodic) return info.period;
    throw ValidationError(std::string(what) +
                          ": T not given and the pivot motion has no fundamental period");
}

void write_result(const Context& ctx, const std::string& command, json resolved_config,
                  json outputs) {
    double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - ctx.start).count();
    json rec = {{"command", command},
                {"config", std::move(resolved_config)},
                {"outputs", std::move(outputs)},
                {"wall_clock_s", wall},
                {"tool_version", kToolVersion},
                {"input_digest", ctx.digest}};
    std::ofstream os(ctx.out_dir / "result.json");
    os << rec.dump(2) << '\n';
}

json base_config_echo(const Context& ctx) {
    return {{"params", {{"g", ctx.params.g}, {"l", ctx.params.l}, {"m", ctx.params.m}}},
            {"pivot", pivot_to_json(ctx.pivot)},
            {"integrator", integrator_to_json(ctx.integ)},
            {"workers", ctx.workers},
            {"out", ctx.out_dir.string()}};
}

const char* side_name(Side s) { return s == Side::Right ? "right" : "left"; }

// ---- subcommands ------------------------------------------------------------

int cmd_simulate(const Context& ctx) {
    const json& j = block(ctx.root, "simulate");
    reject_unknown_keys(j, "simulate", {"phi0", "p0", "t_end", "sample_dt", "watch_exit"});
    double phi0 = num_or(j, "phi0", 0.0);
    double p0 = num_or(j, "p0", 0.0);
    double t_end = num_or(j, "t_end", 10.0);
    double sample_dt = num_or(j, "sample_dt", 0.0);
    bool watch_exit = bool_or(j, "watch_exit", false);
    if (!(t_end > 0.0)) throw ValidationError("simulate: t_end must be > 0");

    auto outcome = integrate(ctx.params, ctx.pivot, {0.0, phi0, p0}, t_end, ctx.integ, watch_exit);

    std::vector<double> extra;
    if (sample_dt > 0.0)
        for (double t = 0.0; t <= outcome.trajectory.t_end() + 1e-15; t += sample_dt)
            extra.push_back(t);
    {
        std::ofstream csv(ctx.out_dir / "trajectory.csv");
        write_trajectory_csv(csv, outcome.trajectory, extra);
    }

    const PendulumState& fin = outcome.trajectory.final_state();
    json outputs = {{"final", {{"t", fin.t}, {"phi", fin.phi}, {"p", fin.p}}},
                    {"steps", outcome.trajectory.step_count()},
                    {"csv", "trajectory.csv"}};
    if (outcome.crossing) {
        const Crossing& c = *outcome.crossing;
        outputs["crossing"] = {{"t_star", c.t_star},
                               {"phi", c.state.phi},
                               {"p", c.state.p},
                               {"side", side_name(c.side)}};
    } else {
        outputs["crossing"] = nullptr;
    }

    json echo = base_config_echo(ctx);
    echo["simulate"] = {{"phi0", phi0},
                        {"p0", p0},
                        {"t_end", t_end},
                        {"sample_dt", sample_dt},
                        {"watch_exit", watch_exit}};
    write_result(ctx, "simulate", echo, outputs);
    return 0;
}

json certificate_to_json(const SurvivalCertificate& cert) {
    json profile = json::array();
    for (const auto& pr : cert.escape_profile) {
        json e = {{"phi0", pr.phi0}};
        e["side"] = pr.side ? json(side_name(*pr.side)) : json("survived");
        e["t_star"] = pr.t_star ? json(*pr.t_star) : json(nullptr);
        profile.push_back(e);
    }
    json rec = {{"phi_lo", cert.phi_lo},
                {"phi_hi", cert.phi_hi},
                {"witness_phi", cert.witness_phi},
                {"horizon", cert.horizon},
                {"witness_survived", cert.witness_survived},
                {"bisection_steps", cert.bisection_steps},
                {"escape_profile", profile}};
    rec["witness_escape_time"] =
        cert.witness_escape_time ? json(*cert.witness_escape_time) : json(nullptr);
    return rec;
}

int cmd_find_nonfalling(const Context& ctx) {
    const json& j = block(ctx.root, "nonfalling");
    reject_unknown_keys(j, "nonfalling", {"horizon", "tol_phi", "p0"});
    NonfallingConfig nf;
    nf.horizon = num_or(j, "horizon", 0.0);
    nf.tol_phi = num_or(j, "tol_phi", 1e-10);
    nf.p0 = num_or(j, "p0", 0.0);

    SurvivalCertificate cert = find_nonfalling(ctx.params, ctx.pivot, nf, ctx.integ);

    json echo = base_config_echo(ctx);
    echo["nonfalling"] = {{"horizon", cert.horizon}, {"tol_phi", nf.tol_phi}, {"p0", nf.p0}};
    write_result(ctx, "find-nonfalling", echo, certificate_to_json(cert));
    return 0;
}

json report_to_json(const SegmentReport& rep) {
    return {{"grid_n", rep.grid_n},
            {"p_prime", rep.p_prime},
            {"T", rep.T},
            {"min_exit_margin", rep.min_exit_margin},
            {"min_entry_margin", rep.min_entry_margin},
            {"tangency_margins",
             {{"p_plus", rep.tangency_margin_plus},
              {"p_minus", rep.tangency_margin_minus},
              {"corner", rep.corner_margin}}},
            {"valid", rep.valid}};
}

struct SegmentOptions {
    double T = 0.0;
    double safety = 1.1;
    double p_floor = 0.0;
    int grid_n = 512;
};

SegmentOptions parse_segment_block(const Context& ctx, const json& j, const char* ctx_name) {
    SegmentOptions s;
    s.T = num_or(j, "T", 0.0);
    s.safety = num_or(j, "safety", 1.1);
    s.p_floor = num_or(j, "p_floor", 0.0);
    s.grid_n = int_or(j, "grid_n", 512);
    if (s.T <= 0.0) s.T = pivot_period_or_throw(ctx.pivot, ctx_name);
    return s;
}

int cmd_validate_segment(const Context& ctx) {
    const json& j = block(ctx.root, "segment");
    reject_unknown_keys(j, "segment", {"T", "safety", "p_floor", "grid_n"});
    SegmentOptions s = parse_segment_block(ctx, j, "validate-segment");

    PeriodicSegment seg = build_segment(ctx.params, ctx.pivot, s.T, s.safety, s.p_floor);
    SegmentReport rep = validate_segment(seg, s.grid_n);

    json outputs = report_to_json(rep);
    outputs["euler_characteristic_index"] = euler_characteristic_index(seg);

    json echo = base_config_echo(ctx);
    echo["segment"] = {{"T", s.T},
                       {"safety", s.safety},
                       {"p_floor", s.p_floor > 0.0 ? s.p_floor : std::sqrt(ctx.params.g / ctx.params.l)},
                       {"grid_n", s.grid_n}};
    write_result(ctx, "validate-segment", echo, outputs);
    return 0;
}

json orbit_to_json(const PeriodicOrbit& orbit) {
    return {{"phi0", orbit.x0.phi},
            {"p0", orbit.x0.p},
            {"T", orbit.T},
            {"residual", orbit.residual},
            {"multipliers",
             {{orbit.multiplier_1.real(), orbit.multiplier_1.imag()},
              {orbit.multiplier_2.real(), orbit.multiplier_2.imag()}}},
            {"max_abs_phi", orbit.max_abs_phi},
            {"max_abs_p", orbit.max_abs_p},
            {"contained", orbit.contained},
            {"newton_iterations", orbit.newton_iterations}};
}

int cmd_find_periodic(const Context& ctx) {
    const json& j = block(ctx.root, "periodic");
    reject_unknown_keys(j, "periodic",
                        {"T", "safety", "p_floor", "grid_n", "newton_tol", "max_iterations",
                         "seed_grid", "containment_tol", "index_check", "index_box_halfwidth"});
    SegmentOptions s = parse_segment_block(ctx, j, "find-periodic");

    OrbitSearchConfig ocfg;
    ocfg.newton.tol = num_or(j, "newton_tol", 1e-11);
    ocfg.newton.max_iterations = int_or(j, "max_iterations", 50);
    ocfg.seed_grid = int_or(j, "seed_grid", 5);
    ocfg.containment_tol = num_or(j, "containment_tol", 1e-9);
    ocfg.workers = ctx.workers;
    bool index_check = bool_or(j, "index_check", false);
    double box_halfwidth = num_or(j, "index_box_halfwidth", 0.3);

    PeriodicSegment seg = build_segment(ctx.params, ctx.pivot, s.T, s.safety, s.p_floor);
    SegmentReport rep = validate_segment(seg, s.grid_n);
    if (!rep.valid)
        throw NumericalError("find-periodic: segment margins are not all positive");

    PeriodicOrbit orbit = find_periodic_orbit(ctx.params, ctx.pivot, s.T, seg, ocfg, ctx.integ);

    // One period of the orbit for the CSV export.
    auto outcome =
        integrate(ctx.params, ctx.pivot, {0.0, orbit.x0.phi, orbit.x0.p}, s.T, ctx.integ, false);
    std::vector<double> extra;
    for (int k = 0; k <= 256; ++k) extra.push_back(s.T * static_cast<double>(k) / 256.0);
    {
        std::ofstream csv(ctx.out_dir / "orbit.csv");
        write_trajectory_csv(csv, outcome.trajectory, extra);
    }

    json outputs = {{"orbit", orbit_to_json(orbit)},
                    {"segment_report", report_to_json(rep)},
                    {"euler_characteristic_index", euler_characteristic_index(seg)},
                    {"csv", "orbit.csv"}};
    if (index_check) {
        IndexConfig icfg;
        icfg.workers = ctx.workers;
        Rect box{orbit.x0.phi - box_halfwidth, orbit.x0.phi + box_halfwidth,
                 orbit.x0.p - box_halfwidth, orbit.x0.p + box_halfwidth};
        IndexResult ir = fixed_point_index(ctx.params, ctx.pivot, s.T, box, icfg, ctx.integ);
        outputs["index_check"] = {{"winding", ir.winding},
                                  {"boundary_samples", ir.boundary_samples},
                                  {"min_displacement", ir.min_displacement}};
    }

    json echo = base_config_echo(ctx);
    echo["periodic"] = {{"T", s.T},
                        {"safety", s.safety},
                        {"p_floor", s.p_floor},
                        {"grid_n", s.grid_n},
                        {"newton_tol", ocfg.newton.tol},
                        {"max_iterations", ocfg.newton.max_iterations},
                        {"seed_grid", ocfg.seed_grid},
                        {"containment_tol", ocfg.containment_tol},
                        {"index_check", index_check},
                        {"index_box_halfwidth", box_halfwidth}};
    write_result(ctx, "find-periodic", echo, outputs);
    return 0;
}

int cmd_index(const Context& ctx) {
    const json& j = block(ctx.root, "index");
    reject_unknown_keys(j, "index", {"region", "T", "samples_per_edge", "min_disp", "t0"});
    if (!j.contains("region")) throw ConfigError("index: \"region\" required");
    const json& rj = j.at("region");
    reject_unknown_keys(rj, "index.region", {"phi", "p"});
    if (!rj.contains("phi") || !rj.contains("p") || !rj.at("phi").is_array() ||
        !rj.at("p").is_array() || rj.at("phi").size() != 2 || rj.at("p").size() != 2)
        throw ConfigError("index.region: expected {\"phi\": [lo, hi], \"p\": [lo, hi]}");
    Rect region{rj.at("phi")[0].get<double>(), rj.at("phi")[1].get<double>(),
                rj.at("p")[0].get<double>(), rj.at("p")[1].get<double>()};

    double T = num_or(j, "T", 0.0);
    if (T <= 0.0) T = pivot_period_or_throw(ctx.pivot, "index");
    IndexConfig icfg;
    icfg.samples_per_edge = int_or(j, "samples_per_edge", 64);
    icfg.min_displacement = num_or(j, "min_disp", 1e-8);
    icfg.t0 = num_or(j, "t0", 0.0);
    icfg.workers = ctx.workers;

    IndexResult ir = fixed_point_index(ctx.params, ctx.pivot, T, region, icfg, ctx.integ);

    json echo = base_config_echo(ctx);
    echo["index"] = {{"region", {{"phi", {region.phi_lo, region.phi_hi}},
                                 {"p", {region.p_lo, region.p_hi}}}},
                     {"T", T},
                     {"samples_per_edge", icfg.samples_per_edge},
                     {"min_disp", icfg.min_displacement},
                     {"t0", icfg.t0}};
    write_result(ctx, "index", echo,
                 json{{"winding", ir.winding},
                      {"boundary_samples", ir.boundary_samples},
                      {"min_displacement", ir.min_displacement}});
    return 0;
}

// ---- sweep -------------------------------------------------------------------

std::string sanitize_cell(std::string s) {
    for (char& c : s)
        if (c == ',' || c == '\n') c = ';';
    return s;
}

PivotProfile pivot_with_axis(const PivotProfile& base, const std::string& axis, double value) {
    if (axis != "amplitude" && axis != "omega") return base;
    return base.visit([&](const auto& rep) -> PivotProfile {
        using T = std::decay_t<decltype(rep)>;
        if constexpr (std::is_same_v<T, PivotProfile::HarmonicSum>) {
            if (rep.terms.empty())
                throw ValidationError("sweep: harmonic_sum pivot needs at least one term");
            auto terms = rep.terms;
            if (axis == "amplitude")
                terms.front().amplitude = value;
            else
                terms.front().angular_frequency = value;
            return PivotProfile::harmonic_sum(std::move(terms));
        } else {
            throw ValidationError("sweep: axis \"" + axis + "\" needs a harmonic_sum pivot");
        }
    });
}

int cmd_sweep(const Context& ctx) {
    const json& j = block(ctx.root, "sweep");
    reject_unknown_keys(j, "sweep", {"command", "axis", "range", "count", "phi0", "p0", "horizon"});
    std::string command = j.contains("command") ? j.at("command").get<std::string>() : "escape";
    std::string axis = j.contains("axis") ? j.at("axis").get<std::string>() : "phi0";
    if (!j.contains("range") || !j.at("range").is_array() || j.at("range").size() != 2)
        throw ConfigError("sweep: \"range\": [lo, hi] required");
    double lo = j.at("range")[0].get<double>(), hi = j.at("range")[1].get<double>();
    int count = int_or(j, "count", 0);
    if (count < 0) throw ValidationError("sweep: count must be >= 0");
    double base_phi0 = num_or(j, "phi0", 0.0);
    double base_p0 = num_or(j, "p0", 0.0);
    double horizon = num_or(j, "horizon", 0.0);
    if (horizon <= 0.0) horizon = 10.0 * std::sqrt(ctx.params.l / ctx.params.g);

    if (command != "escape" && command != "find-nonfalling" && command != "find-periodic")
        throw ValidationError("sweep: unknown command \"" + command + "\"");
    if (axis != "phi0" && axis != "p0" && axis != "amplitude" && axis != "omega")
        throw ValidationError("sweep: unknown axis \"" + axis + "\"");
    if (command != "escape" && (axis == "phi0" || axis == "p0"))
        throw ValidationError("sweep: axis \"" + axis + "\" applies to the escape command only");

    std::vector<double> values(count);
    for (int i = 0; i < count; ++i)
        values[i] = count == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / (count - 1);

    std::string header;
    if (command == "escape")
        header = "value,status,side,t_star,phi_exit,p_exit";
    else if (command == "find-nonfalling")
        header = "value,status,witness_phi,phi_lo,phi_hi,witness_survived,bisection_steps";
    else
        header =
            "value,status,phi0,p0,residual,max_abs_phi,mu1_re,mu1_im,mu2_re,mu2_im,contained";

    std::vector<std::string> rows(values.size());
    auto run_point = [&](std::size_t i) {
        double v = values[i];
        std::ostringstream row;
        row << format_double(v) << ',';
        try {
            PivotProfile pivot = pivot_with_axis(ctx.pivot, axis, v);
            if (command == "escape") {
                double phi0 = axis == "phi0" ? v : base_phi0;
                double p0 = axis == "p0" ? v : base_p0;
                EscapeResult r = escape_map(ctx.params, pivot, phi0, p0, horizon, ctx.integ);
                if (r.exited)
                    row << "ok," << side_name(r.side) << ',' << format_double(r.t_star) << ','
                        << format_double(r.exit_state.phi) << ','
                        << format_double(r.exit_state.p);
                else
                    row << "ok,survived,,,";
            } else if (command == "find-nonfalling") {
                const json& nb = block(ctx.root, "nonfalling");
                reject_unknown_keys(nb, "nonfalling", {"horizon", "tol_phi", "p0"});
                NonfallingConfig nf;
                nf.horizon = num_or(nb, "horizon", 0.0);
                nf.tol_phi = num_or(nb, "tol_phi", 1e-10);
                nf.p0 = num_or(nb, "p0", 0.0);
                SurvivalCertificate cert = find_nonfalling(ctx.params, pivot, nf, ctx.integ);
                row << "ok," << format_double(cert.witness_phi) << ','
                    << format_double(cert.phi_lo) << ',' << format_double(cert.phi_hi) << ','
                    << (cert.witness_survived ? "true" : "false") << ','
                    << cert.bisection_steps;
            } else {
                const json& pb = block(ctx.root, "periodic");
                SegmentOptions s;
                s.T = num_or(pb, "T", 0.0);
                s.safety = num_or(pb, "safety", 1.1);
                s.p_floor = num_or(pb, "p_floor", 0.0);
                s.grid_n = int_or(pb, "grid_n", 512);
                if (s.T <= 0.0) s.T = pivot_period_or_throw(pivot, "sweep find-periodic");
                OrbitSearchConfig ocfg;
                ocfg.newton.tol = num_or(pb, "newton_tol", 1e-11);
                ocfg.seed_grid = int_or(pb, "seed_grid", 5);
                PeriodicSegment seg = build_segment(ctx.params, pivot, s.T, s.safety, s.p_floor);
                // coarse validation per point; the full grid_n would dominate the sweep
                if (!validate_segment(seg, 64).valid)
                    throw NumericalError("segment margins are not all positive");
                PeriodicOrbit orbit =
                    find_periodic_orbit(ctx.params, pivot, s.T, seg, ocfg, ctx.integ);
                row << "ok," << format_double(orbit.x0.phi) << ',' << format_double(orbit.x0.p)
                    << ',' << format_double(orbit.residual) << ','
                    << format_double(orbit.max_abs_phi) << ','
                    << format_double(orbit.multiplier_1.real()) << ','
                    << format_double(orbit.multiplier_1.imag()) << ','
                    << format_double(orbit.multiplier_2.real()) << ','
                    << format_double(orbit.multiplier_2.imag()) << ','
                    << (orbit.contained ? "true" : "false");
            }
        } catch (const std::exception& e) {
            row << "error:" << sanitize_cell(e.what());
        }
        rows[i] = row.str();
    };

    parallel_for(values.size(), ctx.workers, run_point);

    {
        std::ofstream csv(ctx.out_dir / "sweep.csv");
        csv << header << '\n';
        for (const auto& r : rows) csv << r << '\n';
    }

    json echo = base_config_echo(ctx);
    echo["sweep"] = {{"command", command}, {"axis", axis},   {"range", {lo, hi}},
                     {"count", count},     {"phi0", base_phi0}, {"p0", base_p0},
                     {"horizon", horizon}};
    write_result(ctx, "sweep", echo,
                 json{{"rows", values.size()}, {"csv", "sweep.csv"}});
    return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
    CLI::App app{"Inverted pendulum with a horizontally moving pivot: survival "
                 "certificates and periodic orbits"};
    app.fallthrough();

    std::string config_path, out_dir = "out";
    unsigned workers = 0;
    double rtol = -1.0, atol = -1.0;
    app.add_option("--config", config_path, "JSON experiment config");
    app.add_option("--out", out_dir, "output directory");
    app.add_option("--workers", workers, "worker threads (0 = hardware)");
    app.add_option("--rtol", rtol, "integrator relative tolerance override");
    app.add_option("--atol", atol, "integrator absolute tolerance override");

    const char* names[] = {"simulate", "find-nonfalling", "validate-segment",
                           "find-periodic", "index", "sweep"};
    for (const char* n : names) app.add_subcommand(n)->fallthrough();
    app.require_subcommand(0, 1);

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        std::cout << app.help() << std::flush;
        return 0;
    } catch (const CLI::ParseError& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return 4;
    }

    std::string command;
    for (const char* n : names)
        if (app.got_subcommand(n)) command = n;
    if (command.empty()) {
        std::cerr << "usage error: a subcommand is required (one of simulate, find-nonfalling, "
                     "validate-segment, find-periodic, index, sweep)\n";
        return 4;
    }

    try {
        Context ctx;
        ctx.start = std::chrono::steady_clock::now();
        std::string raw = "{}";
        if (!config_path.empty()) {
            std::ifstream is(config_path);
            if (!is) throw ConfigError("cannot read config file: " + config_path);
            std::ostringstream buf;
            buf << is.rdbuf();
            raw = buf.str();
        }
        try {
            ctx.root = json::parse(raw);
        } catch (const json::parse_error& e) {
            throw ConfigError(std::string("config JSON: ") + e.what());
        }
        reject_unknown_keys(ctx.root, "config",
                            {"params", "pivot", "integrator", "workers", "out", "simulate",
                             "nonfalling", "segment", "periodic", "index", "sweep"});
        ctx.digest = hex64(fnv1a(raw));
        ctx.params = parse_params(ctx.root);
        ctx.pivot = parse_pivot(ctx.root);
        ctx.integ = parse_integrator(ctx.root);
        if (rtol > 0.0) ctx.integ.rtol = rtol;
        if (atol > 0.0) ctx.integ.atol = atol;

        unsigned cfg_workers = static_cast<unsigned>(int_or(ctx.root, "workers", 0));
        ctx.workers = workers > 0 ? workers : cfg_workers;
        if (ctx.workers == 0)
            ctx.workers = std::max(1u, std::thread::hardware_concurrency());

        if (ctx.root.contains("out") && out_dir == "out")
            out_dir = ctx.root.at("out").get<std::string>();
        ctx.out_dir = out_dir;
        fs::create_directories(ctx.out_dir);

        if (command == "simulate") return cmd_simulate(ctx);
        if (command == "find-nonfalling") return cmd_find_nonfalling(ctx);
        if (command == "validate-segment") return cmd_validate_segment(ctx);
        if (command == "find-periodic") return cmd_find_periodic(ctx);
        if (command == "index") return cmd_index(ctx);
        return cmd_sweep(ctx);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 4;
    } catch (const ValidationError& e) {
        std::cerr << "validation error: " << e.what() << '\n';
        return 2;
    } catch (const NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    }
}

}  // namespace pendulum::cli
