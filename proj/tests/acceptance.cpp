// Acceptance suite: one pass/fail line per criterion, nonzero exit on any
// failure. Expected values come from closed-form oracles of the jerk-free
// system (energy integral, constant-coefficient monodromy, linear response).

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "pendulum/cli_app.hpp"
#include "pendulum/dynamics.hpp"
#include "pendulum/orbit.hpp"
#include "pendulum/segment.hpp"
#include "pendulum/shooting.hpp"

using namespace pendulum;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr double kPi = std::numbers::pi;
const PendulumParams kParams{9.8, 1.0, 1.0};

// closed-form oracle values, frozen
constexpr double kMuPlus = 22.885308821292654;    // exp(+sqrt(9.8))
constexpr double kMuMinus = 0.043696154935413976; // exp(-sqrt(9.8))
constexpr double kLinearAmp = 0.008011299778600555;  // 0.01 w^2/(w^2+g), w = 2 pi

struct Checker {
    bool ok = true;
    std::string detail;

    void require(bool cond, const std::string& what) {
        if (!cond && ok) {
            ok = false;
            detail = what;
        }
    }
};

PivotProfile forced(double amplitude) {
    return PivotProfile::harmonic_sum({{amplitude, 2.0 * kPi, 0.0}});
}

std::string slurp(const fs::path& p) {
    std::ifstream is(p);
    std::ostringstream buf;
    buf << is.rdbuf();
    return buf.str();
}

// 1. equilibrium retention over [0, 20]
void criterion_equilibrium(Checker& c) {
    auto out = integrate(kParams, PivotProfile::zero(), {0.0, 0.0, 0.0}, 20.0,
                         IntegratorConfig{}, false);
    double worst = 0.0;
    for (int k = 0; k <= 2000; ++k)
        worst = std::max(worst, std::abs(out.trajectory.at(0.01 * k).phi));
    c.require(worst <= 1e-8, "max |phi| = " + format_double(worst));
}

// 2. energy conservation for 20 random starts
void criterion_energy(Checker& c) {
    std::mt19937 rng(2024);
    std::uniform_real_distribution<double> phi_d(-kPi / 2 + 0.01, kPi / 2 - 0.01),
        p_d(-2.0, 2.0);
    for (int k = 0; k < 20; ++k) {
        double phi0 = phi_d(rng), p0 = p_d(rng);
        double h0 = 0.5 * p0 * p0 + 9.8 * std::cos(phi0);
        auto out =
            integrate(kParams, PivotProfile::zero(), {0.0, phi0, p0}, 20.0, IntegratorConfig{},
                      false);
        for (int i = 0; i <= 400; ++i) {
            auto s = out.trajectory.at(0.05 * i);
            double h = 0.5 * s.p * s.p + 9.8 * std::cos(s.phi);
            c.require(std::abs(h - h0) <= 1e-7 * (1.0 + std::abs(h0)),
                      "energy drift at start " + std::to_string(k));
        }
        if (!c.ok) return;
    }
}

// 3. event-detected exit speed against the energy oracle
void criterion_exit_speed(Checker& c) {
    for (double phi0 : {0.1, 0.2, 0.3}) {
        auto r = escape_map(kParams, PivotProfile::zero(), phi0, 0.0, 50.0, IntegratorConfig{});
        c.require(r.exited, "expected an exit");
        if (!r.exited) return;
        double oracle = std::sqrt(2.0 * 9.8 * std::cos(phi0));
        c.require(std::abs(r.exit_state.p - oracle) <= 1e-5 * oracle,
                  "exit speed off at phi0 = " + format_double(phi0) + ": " +
                      format_double(r.exit_state.p) + " vs " + format_double(oracle));
    }
}

// Seconds spent in fn; used for the per-part runtime bounds.
double timed(const std::function<void()>& fn) {
    auto t0 = std::chrono::steady_clock::now();
    fn();
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// 4. non-falling certificates for the three motion laws, each under 5 s
void criterion_certificates(Checker& c) {
    double dt = timed([&] {
        NonfallingConfig nf;
        nf.horizon = 10.0;
        nf.tol_phi = 1e-9;
        auto cert = find_nonfalling(kParams, PivotProfile::zero(), nf, IntegratorConfig{});
        c.require(cert.phi_lo <= 0.0 && 0.0 <= cert.phi_hi, "zero pivot: bracket misses 0");
        c.require(cert.phi_hi - cert.phi_lo <= 1e-9, "zero pivot: bracket too wide");
        c.require(cert.witness_survived, "zero pivot: witness did not survive");
        auto re = escape_map(kParams, PivotProfile::zero(), cert.witness_phi, 0.0, 10.0,
                             IntegratorConfig{});
        c.require(!re.exited, "zero pivot: witness escapes on re-integration");
    });
    c.require(dt < 5.0, "zero pivot certificate over 5 s");

    dt = timed([&] {
        NonfallingConfig nf;
        nf.tol_phi = 1e-9;
        auto cert = find_nonfalling(kParams, PivotProfile::constant_acceleration(9.8), nf,
                                    IntegratorConfig{});
        c.require(cert.phi_lo - 1e-8 <= kPi / 4 && kPi / 4 <= cert.phi_hi + 1e-8,
                  "accelerating pivot: bracket misses pi/4");
    });
    c.require(dt < 5.0, "accelerating pivot certificate over 5 s");

    dt = timed([&] {
        NonfallingConfig nf;
        nf.horizon = 5.0;
        nf.tol_phi = 1e-9;
        auto cert = find_nonfalling(kParams, forced(0.05), nf, IntegratorConfig{});
        IntegratorConfig tight;
        tight.rtol = 1e-12;
        tight.atol = 1e-14;
        auto re = escape_map(kParams, forced(0.05), cert.witness_phi, 0.0, 5.0, tight);
        c.require(!re.exited, "forced pivot: witness escapes at tighter tolerance");
    });
    c.require(dt < 5.0, "forced pivot certificate over 5 s");
}

// 5. boundary classification split
void criterion_classification(Checker& c) {
    auto pivot = forced(0.05);
    struct Row {
        Side side;
        double p;
        BoundaryClass expect;
        double acc;
    };
    const Row rows[] = {
        {Side::Right, 2.0, BoundaryClass::TransverseExit, 9.8},
        {Side::Right, -2.0, BoundaryClass::Entry, 9.8},
        {Side::Right, 0.0, BoundaryClass::TangentExit, 9.8},
        {Side::Left, -2.0, BoundaryClass::TransverseExit, -9.8},
        {Side::Left, 2.0, BoundaryClass::Entry, -9.8},
        {Side::Left, 0.0, BoundaryClass::TangentExit, -9.8},
        {Side::Right, 1e-10, BoundaryClass::TangentExit, 9.8},
        {Side::Left, -1e-10, BoundaryClass::TangentExit, -9.8},
        {Side::Right, -1e-12, BoundaryClass::TangentExit, 9.8},
    };
    int i = 0;
    for (const auto& r : rows) {
        auto b = classify_boundary(kParams, pivot, 0.3, r.side, r.p);
        c.require(b.cls == r.expect, "classification row " + std::to_string(i));
        c.require(std::abs(b.phi_ddot - r.acc) <= 1e-12, "tangency sign row " + std::to_string(i));
        ++i;
    }
}

// 6. segment validation margins and grid stability
void criterion_segment(Checker& c) {
    auto seg = build_segment(kParams, forced(0.05), 1.0, 1.1);
    auto r512 = validate_segment(seg, 512);
    auto r1024 = validate_segment(seg, 1024);
    c.require(r512.valid, "segment reported invalid");
    c.require(r512.min_exit_margin > 0.0 && r512.min_entry_margin > 0.0 &&
                  r512.tangency_margin_plus > 0.0 && r512.tangency_margin_minus > 0.0 &&
                  r512.corner_margin > 0.0,
              "a margin family is not positive");
    auto close = [](double a, double b) { return std::abs(a - b) <= 0.05 * std::abs(a); };
    c.require(close(r512.min_exit_margin, r1024.min_exit_margin), "exit margin unstable");
    c.require(close(r512.min_entry_margin, r1024.min_entry_margin), "entry margin unstable");
    c.require(close(r512.tangency_margin_plus, r1024.tangency_margin_plus),
              "tangency margin (+) unstable");
    c.require(close(r512.tangency_margin_minus, r1024.tangency_margin_minus),
              "tangency margin (-) unstable");
}

// 7. Euler-characteristic index and winding numbers, each computation < 10 s
void criterion_index(Checker& c) {
    auto seg = build_segment(kParams, forced(0.05), 1.0, 1.1);
    c.require(euler_characteristic_index(seg) == -1, "chi difference is not -1");

    IndexConfig icfg;
    icfg.workers = 4;
    double dt = timed([&] {
        auto saddle = fixed_point_index(kParams, PivotProfile::zero(), 1.0,
                                        {-0.5, 0.5, -0.5, 0.5}, icfg, IntegratorConfig{});
        c.require(saddle.winding == -1, "unforced saddle box winding != -1");
    });
    c.require(dt < 10.0, "saddle box winding over 10 s");

    dt = timed([&] {
        auto pivot = forced(0.01);
        auto fseg = build_segment(kParams, pivot, 1.0, 1.1);
        OrbitSearchConfig ocfg;
        ocfg.workers = 4;
        auto orbit = find_periodic_orbit(kParams, pivot, 1.0, fseg, ocfg, IntegratorConfig{});
        Rect box{orbit.x0.phi - 0.3, orbit.x0.phi + 0.3, orbit.x0.p - 0.3, orbit.x0.p + 0.3};
        auto around = fixed_point_index(kParams, pivot, 1.0, box, icfg, IntegratorConfig{});
        c.require(around.winding == -1, "forced orbit box winding != -1");
    });
    c.require(dt < 10.0, "forced orbit box winding over 10 s");

    dt = timed([&] {
        auto empty = fixed_point_index(kParams, PivotProfile::zero(), 1.0, {0.2, 0.4, 0.2, 0.4},
                                       icfg, IntegratorConfig{});
        c.require(empty.winding == 0, "fixed-point-free box winding != 0");
    });
    c.require(dt < 10.0, "fixed-point-free box winding over 10 s");
}

// 8. forced periodic orbit against the linear response and monodromy oracles
void criterion_orbit(Checker& c) {
    auto pivot = forced(0.01);
    auto seg = build_segment(kParams, pivot, 1.0, 1.1);
    OrbitSearchConfig ocfg;
    ocfg.workers = 4;
    auto orbit = find_periodic_orbit(kParams, pivot, 1.0, seg, ocfg, IntegratorConfig{});
    c.require(orbit.residual <= 1e-11,
              "residual " + format_double(orbit.residual) + " > 1e-11");
    c.require(std::abs(orbit.max_abs_phi - kLinearAmp) <= 0.05 * kLinearAmp,
              "max |phi| " + format_double(orbit.max_abs_phi) + " off the linear response");
    c.require(std::abs(orbit.multiplier_1.real() - kMuPlus) <= 0.01 * kMuPlus &&
                  std::abs(orbit.multiplier_1.imag()) <= 1e-6,
              "multiplier 1 off");
    c.require(std::abs(orbit.multiplier_2.real() - kMuMinus) <= 0.01 * kMuMinus,
              "multiplier 2 off");
    c.require(std::abs(orbit.multiplier_1 * orbit.multiplier_2 - 1.0) <= 1e-6,
              "multiplier product off");
    c.require(orbit.contained && orbit.max_abs_phi < kPi / 2, "orbit not contained");
}

// 9. tangent matrix: area preservation and finite-difference agreement
void criterion_tangent(Checker& c) {
    std::mt19937 rng(777);
    std::uniform_real_distribution<double> phi_d(-1.2, 1.2), p_d(-2.0, 2.0), T_d(0.2, 1.0),
        amp_d(0.0, 0.1);
    IntegratorConfig tight;
    tight.rtol = 1e-12;
    tight.atol = 1e-14;
    for (int k = 0; k < 100; ++k) {
        PivotProfile pivot = (k % 3 == 0) ? PivotProfile::zero()
                             : (k % 3 == 1)
                                 ? PivotProfile::harmonic_sum({{amp_d(rng), 2.0 * kPi, 0.0}})
                                 : PivotProfile::polynomial({0.0, 0.1, amp_d(rng), 0.01});
        PhasePoint x0{phi_d(rng), p_d(rng)};
        double T = T_d(rng);
        auto [x1, dp] = time_T_map(kParams, pivot, x0, 0.0, T, tight);
        c.require(std::abs(dp.det() - 1.0) <= 1e-8,
                  "det drift " + format_double(dp.det() - 1.0) + " at draw " + std::to_string(k));

        const double h = 1e-6;
        auto fd_col = [&](bool wphi) {
            PhasePoint xp = x0, xm = x0;
            (wphi ? xp.phi : xp.p) += h;
            (wphi ? xm.phi : xm.p) -= h;
            auto yp = flow_map(kParams, pivot, xp, 0.0, T, tight);
            auto ym = flow_map(kParams, pivot, xm, 0.0, T, tight);
            return std::array<double, 2>{(yp.phi - ym.phi) / (2 * h), (yp.p - ym.p) / (2 * h)};
        };
        auto c1 = fd_col(true), c2 = fd_col(false);
        double scale = std::max({1.0, std::abs(dp.a11), std::abs(dp.a12), std::abs(dp.a21),
                                 std::abs(dp.a22)});
        bool agree = std::abs(c1[0] - dp.a11) <= 1e-4 * scale &&
                     std::abs(c1[1] - dp.a21) <= 1e-4 * scale &&
                     std::abs(c2[0] - dp.a12) <= 1e-4 * scale &&
                     std::abs(c2[1] - dp.a22) <= 1e-4 * scale;
        c.require(agree, "finite differences disagree at draw " + std::to_string(k));
        if (!c.ok) return;
    }
}

// 10. determinism of emitted CSV bodies, including across worker counts
void criterion_determinism(Checker& c) {
    fs::path base = fs::temp_directory_path() / "pendulum_acceptance";
    fs::remove_all(base);
    fs::create_directories(base);
    json cfg = {{"pivot",
                 {{"kind", "harmonic_sum"},
                  {"terms", {{{"amplitude", 0.03}, {"angular_frequency", 2 * kPi}}}}}},
                {"sweep",
                 {{"command", "escape"},
                  {"axis", "phi0"},
                  {"range", {-0.6, 0.6}},
                  {"count", 32},
                  {"horizon", 2.5}}}};
    fs::path cfg_path = base / "config.json";
    std::ofstream(cfg_path) << cfg.dump();

    auto run_one = [&](const std::string& tag, const std::string& workers) {
        fs::path out = base / tag;
        int code = cli::run_cli({"sweep", "--config", cfg_path.string(), "--out", out.string(),
                                 "--workers", workers});
        return code == 0 ? slurp(out / "sweep.csv") : std::string("exit " + std::to_string(code));
    };
    std::string a = run_one("w1", "1");
    std::string b = run_one("w4", "4");
    std::string d = run_one("w4b", "4");
    c.require(!a.empty() && a == b && b == d, "sweep.csv differs across runs/workers");

    json sim = {{"pivot", {{"kind", "zero"}}}, {"simulate", {{"phi0", 0.2}, {"t_end", 3.0}}}};
    fs::path sim_path = base / "sim.json";
    std::ofstream(sim_path) << sim.dump();
    auto sim_one = [&](const std::string& tag) {
        fs::path out = base / tag;
        int code =
            cli::run_cli({"simulate", "--config", sim_path.string(), "--out", out.string()});
        return code == 0 ? slurp(out / "trajectory.csv") : std::string("exit");
    };
    c.require(sim_one("s1") == sim_one("s2"), "trajectory.csv differs between reruns");
    fs::remove_all(base);
}

struct Criterion {
    std::string name;
    double time_limit_s;
    std::function<void(Checker&)> body;
};

}  // namespace

int main() {
    const std::vector<Criterion> criteria = {
        {"equilibrium retention |phi| <= 1e-8 over [0,20]", 1.0, criterion_equilibrium},
        {"energy oracle, 20 random starts over [0,20]", 30.0, criterion_energy},
        {"exit-speed oracle at phi0 = 0.1, 0.2, 0.3", 5.0, criterion_exit_speed},
        {"non-falling certificates (zero / accelerating / forced)", 15.0,
         criterion_certificates},
        {"boundary classification split with tangency signs", 1.0, criterion_classification},
        {"segment validation margins, stable under grid doubling", 30.0, criterion_segment},
        {"index arithmetic: chi difference and winding numbers", 30.0, criterion_index},
        {"forced periodic orbit: residual, amplitude, multipliers", 10.0, criterion_orbit},
        {"tangent matrix: det = 1 and finite-difference agreement", 30.0, criterion_tangent},
        {"determinism of CSV bodies across runs and workers", 30.0, criterion_determinism},
    };

    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const auto& cr = criteria[i];
        Checker ck;
        auto t0 = std::chrono::steady_clock::now();
        try {
            cr.body(ck);
        } catch (const std::exception& e) {
            ck.ok = false;
            ck.detail = std::string("exception: ") + e.what();
        }
        double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (dt > cr.time_limit_s) {
            ck.ok = false;
            ck.detail = "runtime " + std::to_string(dt) + " s over the " +
                        std::to_string(cr.time_limit_s) + " s limit";
        }
        std::printf("[%2zu/10] %s  %s (%.2f s)%s%s\n", i + 1, ck.ok ? "PASS" : "FAIL",
                    cr.name.c_str(), dt, ck.ok ? "" : " -- ", ck.ok ? "" : ck.detail.c_str());
        if (!ck.ok) ++failures;
    }
    if (failures) std::printf("%d of 10 criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
