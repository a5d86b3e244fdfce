#include "pendulum/dynamics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numbers>
#include <string>

#include "pendulum/errors.hpp"

namespace pendulum {

namespace {

constexpr double kHalfPi = std::numbers::pi / 2.0;

void check_params(const PendulumParams& params) {
    if (!(params.g > 0.0) || !(params.l > 0.0) || !(params.m > 0.0))
        throw ValidationError("params: g, l, m must be positive");
}

// phi distance to the nearer horizontal position; positive inside the strip.
double boundary_gap(double phi) { return kHalfPi - std::abs(phi); }

}  // namespace

std::pair<std::complex<double>, std::complex<double>> TangentMatrix::eigenvalues() const {
    double tr = trace();
    double disc = tr * tr - 4.0 * det();
    std::complex<double> mu1, mu2;
    if (disc >= 0.0) {
        double root = std::sqrt(disc);
        mu1 = 0.5 * (tr + root);
        mu2 = 0.5 * (tr - root);
        if (std::abs(mu2) > std::abs(mu1)) std::swap(mu1, mu2);
    } else {
        double im = 0.5 * std::sqrt(-disc);
        mu1 = {0.5 * tr, im};
        mu2 = {0.5 * tr, -im};
    }
    return {mu1, mu2};
}

std::array<double, 2> rhs(const PendulumParams& params, const PivotProfile& pivot,
                          const PendulumState& s) {
    double d2f = pivot.eval(s.t).d2f;
    return {s.p, (params.g * std::sin(s.phi) - d2f * std::cos(s.phi)) / params.l};
}

TangentMatrix variational_matrix(const PendulumParams& params, const PivotProfile& pivot,
                                 double t, double phi) {
    double d2f = pivot.eval(t).d2f;
    TangentMatrix a;
    a.a11 = 0.0;
    a.a12 = 1.0;
    a.a21 = (params.g * std::cos(phi) + d2f * std::sin(phi)) / params.l;
    a.a22 = 0.0;
    return a;
}

std::pair<std::array<double, 2>, TangentMatrix> variational_rhs(const PendulumParams& params,
                                                                const PivotProfile& pivot,
                                                                const PendulumState& s,
                                                                const TangentMatrix& j) {
    auto ds = rhs(params, pivot, s);
    TangentMatrix a = variational_matrix(params, pivot, s.t, s.phi);
    TangentMatrix dj;
    dj.a11 = a.a12 * j.a21;  // a11 = 0, a22 = 0
    dj.a12 = a.a12 * j.a22;
    dj.a21 = a.a21 * j.a11;
    dj.a22 = a.a21 * j.a12;
    return {ds, dj};
}

IntegrationOutcome integrate(const PendulumParams& params, const PivotProfile& pivot,
                             const PendulumState& s0, double t_end, const IntegratorConfig& cfg,
                             bool watch_exit) {
    check_params(params);
    if (!(t_end > s0.t)) throw ValidationError("integrate: t_end must exceed s0.t");

    auto f = [&](double t, const std::array<double, 2>& y) -> std::array<double, 2> {
        return rhs(params, pivot, {t, y[0], y[1]});
    };

    DenseSolution<2> dense;
    std::optional<Crossing> crossing;

    // Event function: gap to the nearer boundary, negative outside the strip.
    // Each accepted step is scanned on a subgrid; grazing crossings (p ~ 0 at
    // the boundary) are caught by also probing the interior extremum of phi
    // where p changes sign. The bracketing interval is then bisected on the
    // dense output down to event_tol.
    StepSink<2> sink;
    sink.on_accept = [&](const DenseStep<2>& ds, const std::array<double, 2>& y1) -> double {
        dense.push(ds);
        if (!watch_exit) return std::numeric_limits<double>::quiet_NaN();

        auto bisect_and_stop = [&](double lo, double hi) -> double {
            while (hi - lo > cfg.event_tol) {
                double mid = 0.5 * (lo + hi);
                if (boundary_gap(ds.eval(mid)[0]) > 0.0)
                    lo = mid;
                else
                    hi = mid;
            }
            double t_star = hi;
            auto ys = ds.eval(t_star);
            crossing = Crossing{t_star, PendulumState{t_star, ys[0], ys[1]},
                                ys[0] > 0.0 ? Side::Right : Side::Left};
            return t_star;
        };

        constexpr int subdiv = 8;
        double ta = ds.t0;
        auto ya = ds.eval(ta);
        double ga = boundary_gap(ya[0]);
        for (int k = 1; k <= subdiv; ++k) {
            double tb = ds.t0 + ds.h * (static_cast<double>(k) / subdiv);
            auto yb = (k == subdiv) ? y1 : ds.eval(tb);
            if (k == subdiv) tb = ds.t0 + ds.h;
            double gb = boundary_gap(yb[0]);
            if (ga > 0.0 && gb <= 0.0) return bisect_and_stop(ta, tb);
            if (ga > 0.0 && gb > 0.0 && ya[1] * yb[1] < 0.0) {
                // phi has an extremum inside; probe whether it grazes out.
                double lo = ta, hi = tb;
                for (int it = 0; it < 60 && hi - lo > cfg.event_tol; ++it) {
                    double mid = 0.5 * (lo + hi);
                    if (ds.eval(mid)[1] * ya[1] > 0.0)
                        lo = mid;
                    else
                        hi = mid;
                }
                double t_ext = 0.5 * (lo + hi);
                if (boundary_gap(ds.eval(t_ext)[0]) <= 0.0) return bisect_and_stop(ta, t_ext);
            }
            ta = tb;
            ya = yb;
            ga = gb;
        }
        return std::numeric_limits<double>::quiet_NaN();
    };

    // Starting on (or outside) the boundary: unless the velocity points
    // strictly inward, the crossing is at t0 itself.
    if (watch_exit) {
        double gap0 = boundary_gap(s0.phi);
        if (gap0 < 0.0 || (gap0 == 0.0 && s0.phi * s0.p >= 0.0)) {
            Crossing c{s0.t, s0, s0.phi > 0.0 ? Side::Right : Side::Left};
            return {Trajectory({}, s0.t, s0.t, s0), c};
        }
    }

    double t_reached = t_end;
    std::array<double, 2> y_end =
        integrate_dopri5<2>(f, s0.t, {s0.phi, s0.p}, t_end, cfg, &sink, &t_reached);

    PendulumState final_state{t_reached, y_end[0], y_end[1]};
    return {Trajectory(std::move(dense), s0.t, t_reached, final_state), crossing};
}

std::pair<PhasePoint, TangentMatrix> time_T_map(const PendulumParams& params,
                                                const PivotProfile& pivot, const PhasePoint& x0,
                                                double t0, double T, const IntegratorConfig& cfg) {
    check_params(params);
    if (!(T > 0.0)) throw ValidationError("time_T_map: T must be > 0");

    auto f = [&](double t, const std::array<double, 6>& y) -> std::array<double, 6> {
        TangentMatrix j{y[2], y[3], y[4], y[5]};
        auto [ds, dj] = variational_rhs(params, pivot, {t, y[0], y[1]}, j);
        return {ds[0], ds[1], dj.a11, dj.a12, dj.a21, dj.a22};
    };

    std::array<double, 6> y0{x0.phi, x0.p, 1.0, 0.0, 0.0, 1.0};
    auto y1 = integrate_dopri5<6>(f, t0, y0, t0 + T, cfg, nullptr, nullptr);
    return {PhasePoint{y1[0], y1[1]}, TangentMatrix{y1[2], y1[3], y1[4], y1[5]}};
}

PhasePoint flow_map(const PendulumParams& params, const PivotProfile& pivot, const PhasePoint& x0,
                    double t0, double T, const IntegratorConfig& cfg) {
    check_params(params);
    if (!(T > 0.0)) throw ValidationError("flow_map: T must be > 0");
    auto f = [&](double t, const std::array<double, 2>& y) -> std::array<double, 2> {
        return rhs(params, pivot, {t, y[0], y[1]});
    };
    auto y1 = integrate_dopri5<2>(f, t0, {x0.phi, x0.p}, t0 + T, cfg, nullptr, nullptr);
    return {y1[0], y1[1]};
}

PendulumState Trajectory::at(double t) const {
    if (dense_.empty()) return final_;
    double lo = t0_, hi = t_covered();
    double slack = 1e-12 * std::max(1.0, std::max(std::abs(lo), std::abs(hi)));
    if (t < lo - slack || t > hi + slack)
        throw ValidationError("trajectory: time outside covered range");
    t = std::clamp(t, lo, hi);
    auto y = dense_.eval(t);
    return {t, y[0], y[1]};
}

std::vector<double> Trajectory::step_times() const {
    std::vector<double> ts;
    ts.reserve(dense_.size() + 1);
    for (std::size_t i = 0; i < dense_.size(); ++i) ts.push_back(dense_.step(i).t0);
    ts.push_back(t_end_);
    return ts;
}

std::string format_double(double x) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), x);
    return std::string(buf, res.ptr);
}

void write_trajectory_csv(std::ostream& os, const Trajectory& traj,
                          const std::vector<double>& extra_times) {
    std::vector<double> times = traj.step_times();
    for (double t : extra_times)
        if (t >= traj.t_begin() && t <= traj.t_end()) times.push_back(t);
    std::sort(times.begin(), times.end());
    times.erase(std::unique(times.begin(), times.end(),
                            [&](double a, double b) {
                                return std::abs(a - b) <=
                                       1e-15 * std::max(1.0, std::abs(traj.t_end()));
                            }),
                times.end());

    os << "t,phi,p\n";
    for (double t : times) {
        PendulumState s = (t == traj.t_end()) ? traj.final_state() : traj.at(t);
        os << format_double(t) << ',' << format_double(s.phi) << ',' << format_double(s.p)
           << '\n';
    }
}

}  // namespace pendulum
