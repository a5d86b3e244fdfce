#include "pendulum/orbit.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "pendulum/errors.hpp"
#include "pendulum/parallel.hpp"

namespace pendulum {

namespace {

constexpr double kHalfPi = std::numbers::pi / 2.0;

double residual_norm(const PhasePoint& x, const PhasePoint& px) {
    return std::max(std::abs(px.phi - x.phi), std::abs(px.p - x.p));
}

// Distance from a point to an axis-aligned segment in the (phi, p) plane.
double dist_to_arc(double phi, double p, const ExitArc& a) {
    double cphi = std::clamp(phi, std::min(a.phi_a, a.phi_b), std::max(a.phi_a, a.phi_b));
    double cp = std::clamp(p, std::min(a.p_a, a.p_b), std::max(a.p_a, a.p_b));
    return std::hypot(phi - cphi, p - cp);
}

struct SeedOutcome {
    bool converged = false;
    PhasePoint x0;
    double residual = 0.0;
    int iterations = 0;
};

SeedOutcome newton_from_seed(const PendulumParams& params, const PivotProfile& pivot, double T,
                             const PeriodicSegment& segment, const NewtonConfig& ncfg,
                             const IntegratorConfig& integ, PhasePoint x) {
    const double pp = segment.p_prime;
    SeedOutcome out;
    auto inside = [&](const PhasePoint& q) {
        return std::abs(q.phi) < kHalfPi && std::abs(q.p) < pp;
    };

    auto [px, dp] = time_T_map(params, pivot, x, 0.0, T, integ);
    double res = residual_norm(x, px);
    for (int it = 0; it < ncfg.max_iterations; ++it) {
        if (res <= ncfg.tol) {
            out.converged = true;
            out.x0 = x;
            out.residual = res;
            out.iterations = it;
            return out;
        }
        // Solve (DP - I) dx = -(P(x) - x).
        double j11 = dp.a11 - 1.0, j12 = dp.a12, j21 = dp.a21, j22 = dp.a22 - 1.0;
        double det = j11 * j22 - j12 * j21;
        if (std::abs(det) < 1e-300) break;
        double f1 = px.phi - x.phi, f2 = px.p - x.p;
        double dx1 = -(j22 * f1 - j12 * f2) / det;
        double dx2 = -(-j21 * f1 + j11 * f2) / det;

        double scale = 1.0;
        bool stepped = false;
        for (int damp = 0; damp <= ncfg.max_damping; ++damp) {
            PhasePoint cand{x.phi + scale * dx1, x.p + scale * dx2};
            if (inside(cand)) {
                auto [pc, dc] = time_T_map(params, pivot, cand, 0.0, T, integ);
                double rc = residual_norm(cand, pc);
                // Accept a damped step once it improves the residual.
                if (rc < res) {
                    x = cand;
                    px = pc;
                    dp = dc;
                    res = rc;
                    stepped = true;
                    break;
                }
            }
            scale *= 0.5;
        }
        if (!stepped) break;
    }
    if (res <= ncfg.tol) {
        out.converged = true;
        out.x0 = x;
        out.residual = res;
        out.iterations = ncfg.max_iterations;
    }
    return out;
}

}  // namespace

PeriodicOrbit find_periodic_orbit(const PendulumParams& params, const PivotProfile& pivot,
                                  double T, const PeriodicSegment& segment,
                                  const OrbitSearchConfig& cfg, const IntegratorConfig& integ) {
    if (std::abs(T - segment.T) > 1e-12 * std::max(1.0, T))
        throw ValidationError("find_periodic_orbit: T must equal the segment period");
    int n = std::max(1, cfg.seed_grid);
    const double pp = segment.p_prime;

    std::vector<PhasePoint> seeds;
    seeds.reserve(static_cast<std::size_t>(n) * n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            double u = (static_cast<double>(i) + 1.0) / (n + 1.0);
            double v = (static_cast<double>(j) + 1.0) / (n + 1.0);
            seeds.push_back({-kHalfPi + 2.0 * kHalfPi * u, -pp + 2.0 * pp * v});
        }

    std::vector<SeedOutcome> outcomes(seeds.size());
    parallel_for(seeds.size(), cfg.workers, [&](std::size_t i) {
        outcomes[i] =
            newton_from_seed(params, pivot, T, segment, cfg.newton, integ, seeds[i]);
    });

    // Deterministic aggregation: best residual, ties by smaller |phi0|, |p0|.
    const SeedOutcome* best = nullptr;
    for (const auto& oc : outcomes) {
        if (!oc.converged) continue;
        if (!best || oc.residual < best->residual ||
            (oc.residual == best->residual &&
             (std::abs(oc.x0.phi) < std::abs(best->x0.phi) ||
              (std::abs(oc.x0.phi) == std::abs(best->x0.phi) &&
               std::abs(oc.x0.p) < std::abs(best->x0.p)))))
            best = &oc;
    }
    if (!best) throw NoConvergence("find_periodic_orbit: no seed met the residual tolerance");

    PeriodicOrbit orbit;
    orbit.x0 = best->x0;
    orbit.T = T;
    orbit.residual = best->residual;
    orbit.newton_iterations = best->iterations;

    auto [px, dp] = time_T_map(params, pivot, best->x0, 0.0, T, integ);
    orbit.monodromy = dp;
    auto [mu1, mu2] = dp.eigenvalues();
    orbit.multiplier_1 = mu1;
    orbit.multiplier_2 = mu2;

    // Containment in U: one period must stay inside the open rectangle and
    // clear of the (closed) essential exit set by containment_tol.
    auto outcome = integrate(params, pivot, {0.0, best->x0.phi, best->x0.p}, T, integ, false);
    const Trajectory& traj = outcome.trajectory;
    std::size_t samples = std::max<std::size_t>(512, traj.step_count() * 8);
    bool ok = true;
    double max_phi = 0.0, max_p = 0.0;
    for (std::size_t k = 0; k <= samples; ++k) {
        double t = T * static_cast<double>(k) / static_cast<double>(samples);
        PendulumState s = (k == samples) ? traj.final_state() : traj.at(t);
        max_phi = std::max(max_phi, std::abs(s.phi));
        max_p = std::max(max_p, std::abs(s.p));
        if (std::abs(s.phi) >= kHalfPi || std::abs(s.p) >= pp) {
            ok = false;
            continue;
        }
        double phs = segment.phi_star(t);
        ExitArc right{kHalfPi, 0.0, kHalfPi, pp};
        ExitArc left{-kHalfPi, -pp, -kHalfPi, 0.0};
        ExitArc top{phs, pp, kHalfPi, pp};
        ExitArc bottom{-kHalfPi, -pp, phs, -pp};
        double d = std::min(std::min(dist_to_arc(s.phi, s.p, right), dist_to_arc(s.phi, s.p, left)),
                            std::min(dist_to_arc(s.phi, s.p, top), dist_to_arc(s.phi, s.p, bottom)));
        if (d < cfg.containment_tol) ok = false;
    }
    orbit.max_abs_phi = max_phi;
    orbit.max_abs_p = max_p;
    orbit.contained = ok;
    return orbit;
}

IndexResult fixed_point_index(const PendulumParams& params, const PivotProfile& pivot, double T,
                              const Rect& region, const IndexConfig& cfg,
                              const IntegratorConfig& integ) {
    if (!(region.phi_hi > region.phi_lo) || !(region.p_hi > region.p_lo))
        throw ValidationError("fixed_point_index: region must have positive extent");
    if (cfg.samples_per_edge < 4)
        throw ValidationError("fixed_point_index: need at least 4 samples per edge");

    // Boundary parameterization s in [0,4), counterclockwise.
    auto boundary_point = [&](double s) -> PhasePoint {
        double u = s - std::floor(s / 4.0) * 4.0;
        if (u < 1.0)
            return {region.phi_lo + (region.phi_hi - region.phi_lo) * u, region.p_lo};
        if (u < 2.0)
            return {region.phi_hi, region.p_lo + (region.p_hi - region.p_lo) * (u - 1.0)};
        if (u < 3.0)
            return {region.phi_hi - (region.phi_hi - region.phi_lo) * (u - 2.0), region.p_hi};
        return {region.phi_lo, region.p_hi - (region.p_hi - region.p_lo) * (u - 3.0)};
    };

    struct Node {
        double s = 0.0;
        double angle = 0.0;
        double norm = 0.0;
    };

    auto eval_node = [&](double s) -> Node {
        PhasePoint x = boundary_point(s);
        PhasePoint px = flow_map(params, pivot, x, cfg.t0, T, integ);
        double dx = x.phi - px.phi;
        double dy = x.p - px.p;
        return {s, std::atan2(dy, dx), std::hypot(dx, dy)};
    };

    std::vector<Node> nodes(static_cast<std::size_t>(4 * cfg.samples_per_edge) + 1);
    parallel_for(nodes.size(), cfg.workers, [&](std::size_t i) {
        double s = 4.0 * static_cast<double>(i) / static_cast<double>(nodes.size() - 1);
        nodes[i] = eval_node(std::min(s, 4.0));
    });
    nodes.back().s = 4.0;

    double min_disp = std::numeric_limits<double>::infinity();
    for (const auto& nd : nodes) min_disp = std::min(min_disp, nd.norm);
    // Fail fast: refining toward a boundary fixed point would otherwise burn
    // the whole sample budget around the singular direction field.
    if (min_disp < cfg.min_displacement)
        throw FixedPointOnBoundary("fixed_point_index: displacement vanishes on the boundary");

    auto wrapped_delta = [](double a, double b) {
        double d = b - a;
        while (d > std::numbers::pi) d -= 2.0 * std::numbers::pi;
        while (d < -std::numbers::pi) d += 2.0 * std::numbers::pi;
        return d;
    };

    // Refine until every angle increment is below pi/2.
    for (;;) {
        std::vector<std::size_t> split;
        for (std::size_t i = 0; i + 1 < nodes.size(); ++i)
            if (std::abs(wrapped_delta(nodes[i].angle, nodes[i + 1].angle)) >= kHalfPi)
                split.push_back(i);
        if (split.empty()) break;
        if (nodes.size() + split.size() > cfg.max_samples)
            throw NonConvergentRefinement("fixed_point_index: sample budget exhausted");

        std::vector<Node> fresh(split.size());
        parallel_for(split.size(), cfg.workers, [&](std::size_t k) {
            double s = 0.5 * (nodes[split[k]].s + nodes[split[k] + 1].s);
            fresh[k] = eval_node(s);
        });
        for (const auto& nd : fresh) min_disp = std::min(min_disp, nd.norm);
        if (min_disp < cfg.min_displacement)
            throw FixedPointOnBoundary(
                "fixed_point_index: displacement vanishes on the boundary");

        std::vector<Node> merged;
        merged.reserve(nodes.size() + fresh.size());
        std::size_t fi = 0;
        for (std::size_t i = 0; i < nodes.size(); ++i) {
            merged.push_back(nodes[i]);
            if (fi < split.size() && split[fi] == i) merged.push_back(fresh[fi++]);
        }
        nodes = std::move(merged);
    }

    double total = 0.0;
    for (std::size_t i = 0; i + 1 < nodes.size(); ++i)
        total += wrapped_delta(nodes[i].angle, nodes[i + 1].angle);
    double winding = total / (2.0 * std::numbers::pi);
    double rounded = std::round(winding);
    if (std::abs(winding - rounded) > 0.01)
        throw NonConvergentRefinement("fixed_point_index: winding did not close to an integer");

    IndexResult res;
    res.winding = static_cast<int>(rounded);
    res.boundary_samples = nodes.size() - 1;
    res.min_displacement = min_disp;
    return res;
}

}  // namespace pendulum
