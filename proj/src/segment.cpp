#include "pendulum/segment.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "pendulum/errors.hpp"

namespace pendulum {

namespace {

constexpr double kHalfPi = std::numbers::pi / 2.0;

// d/dt of p' along the flow at (t, phi, p):
//   p'' = [(g/l) cos phi + (f''/l) sin phi] p - (f'''/l) cos phi.
double p_ddot(const PendulumParams& params, const PivotSample& piv, double phi, double p) {
    double bracket = (params.g * std::cos(phi) + piv.d2f * std::sin(phi)) / params.l;
    return bracket * p - piv.d3f * std::cos(phi) / params.l;
}

double p_dot(const PendulumParams& params, const PivotSample& piv, double phi) {
    return (params.g * std::sin(phi) - piv.d2f * std::cos(phi)) / params.l;
}

}  // namespace

double equilibrium_angle(const PivotProfile& pivot, double t, double g) {
    if (!(g > 0.0)) throw ValidationError("equilibrium_angle: g must be > 0");
    return std::atan(pivot.eval(t).d2f / g);
}

PeriodicSegment build_segment(const PendulumParams& params, const PivotProfile& pivot, double T,
                              double safety, double p_floor) {
    if (!(T > 0.0)) throw ValidationError("build_segment: T must be > 0");
    if (!(safety > 1.0))
        throw ValidationError("build_segment: safety must exceed 1 (strict velocity bound)");

    PeriodInfo info = pivot.period();
    if (info.kind == PeriodKind::Aperiodic)
        throw AperiodicPivot("build_segment: pivot motion is not periodic");
    if (info.kind == PeriodKind::Periodic) {
        double k = std::round(T / info.period);
        if (k < 1.0 || std::abs(T - k * info.period) > 1e-9 * T)
            throw AperiodicPivot("build_segment: pivot period does not divide T");
    }

    if (p_floor <= 0.0) p_floor = std::sqrt(params.g / params.l);
    PeriodicSegment seg;
    seg.T = T;
    seg.p_prime = std::max(safety * pivot.sup_jerk(T) / params.g, p_floor);
    seg.params = params;
    seg.pivot = pivot;
    return seg;
}

SegmentReport validate_segment(const PeriodicSegment& segment, int grid_n) {
    if (grid_n < 64) throw ValidationError("validate_segment: grid_n must be >= 64");
    const PendulumParams& params = segment.params;
    const double pp = segment.p_prime;
    const double T = segment.T;
    const double gl = params.g / params.l;

    SegmentReport rep;
    rep.grid_n = grid_n;
    rep.p_prime = pp;
    rep.T = T;
    rep.corner_margin = gl;

    double min_exit = std::numeric_limits<double>::infinity();
    double min_entry = std::numeric_limits<double>::infinity();
    double min_tan_plus = std::numeric_limits<double>::infinity();
    double min_tan_minus = std::numeric_limits<double>::infinity();

    // Entry rates vanish at the split curve, where the exit side is certified
    // by the second-order margin instead; the entry sweep therefore stops one
    // collar (1/64 of the portion) short of the split.
    constexpr double kCollarFrac = 1.0 / 64.0;

    for (int i = 0; i <= grid_n; ++i) {
        double t = T * static_cast<double>(i) / grid_n;
        PivotSample piv = segment.pivot.eval(t);
        double phs = std::atan(piv.d2f / params.g);

        // phi = +pi/2 face: exit for p >= 0 (rate p, corner push g/l),
        // entry for p < 0. The phi = -pi/2 face mirrors to the same values.
        for (int j = 0; j <= grid_n; ++j) {
            double frac = static_cast<double>(j) / grid_n;
            double p_exit = pp * frac;  // [0, p_prime]
            min_exit = std::min(min_exit, std::max(p_exit, gl));
            double p_entry = -pp * (kCollarFrac + (1.0 - kCollarFrac) * frac);
            min_entry = std::min(min_entry, -p_entry);  // inward rate = -p
        }

        // p = +p_prime face: exit for phi in [phi'(t), pi/2] with outward
        // rate p' (first order) or p'' (on the split curve); entry for
        // phi in [-pi/2, phi'(t) - collar].
        {
            double lo = phs, hi = kHalfPi;
            for (int j = 0; j <= grid_n; ++j) {
                double phi = lo + (hi - lo) * static_cast<double>(j) / grid_n;
                double r1 = p_dot(params, piv, phi);
                double r2 = p_ddot(params, piv, phi, pp);
                min_exit = std::min(min_exit, std::max(r1, r2));
            }
            double span = phs + kHalfPi;
            double hi_e = phs - kCollarFrac * span;
            for (int j = 0; j <= grid_n; ++j) {
                double phi = -kHalfPi + (hi_e + kHalfPi) * static_cast<double>(j) / grid_n;
                min_entry = std::min(min_entry, -p_dot(params, piv, phi));
            }
        }

        // p = -p_prime face: exit for phi in [-pi/2, phi'(t)] (outward rate
        // -p', second order -p''); entry for phi in [phi'(t) + collar, pi/2].
        {
            double lo = -kHalfPi, hi = phs;
            for (int j = 0; j <= grid_n; ++j) {
                double phi = lo + (hi - lo) * static_cast<double>(j) / grid_n;
                double r1 = -p_dot(params, piv, phi);
                double r2 = -p_ddot(params, piv, phi, -pp);
                min_exit = std::min(min_exit, std::max(r1, r2));
            }
            double span = kHalfPi - phs;
            double lo_e = phs + kCollarFrac * span;
            for (int j = 0; j <= grid_n; ++j) {
                double phi = lo_e + (kHalfPi - lo_e) * static_cast<double>(j) / grid_n;
                min_entry = std::min(min_entry, p_dot(params, piv, phi));
            }
        }

        // Tangency curves: p'' must push outward.
        min_tan_plus = std::min(min_tan_plus, p_ddot(params, piv, phs, pp));
        min_tan_minus = std::min(min_tan_minus, -p_ddot(params, piv, phs, -pp));
    }

    rep.min_exit_margin = min_exit;
    rep.min_entry_margin = min_entry;
    rep.tangency_margin_plus = min_tan_plus;
    rep.tangency_margin_minus = min_tan_minus;
    rep.valid = min_exit > 0.0 && min_entry > 0.0 && min_tan_plus > 0.0 && min_tan_minus > 0.0 &&
                rep.corner_margin > 0.0;
    return rep;
}

int index_from_exit_arcs(const std::vector<ExitArc>& arcs) {
    // chi of a 1-complex: vertices - edges, with endpoints glued when equal.
    std::vector<std::pair<double, double>> verts;
    auto vertex_id = [&](double phi, double p) -> std::size_t {
        for (std::size_t k = 0; k < verts.size(); ++k)
            if (std::abs(verts[k].first - phi) < 1e-12 && std::abs(verts[k].second - p) < 1e-12)
                return k;
        verts.emplace_back(phi, p);
        return verts.size() - 1;
    };
    std::size_t edges = 0;
    for (const auto& a : arcs) {
        vertex_id(a.phi_a, a.p_a);
        vertex_id(a.phi_b, a.p_b);
        ++edges;
    }
    int chi_exit = static_cast<int>(verts.size()) - static_cast<int>(edges);
    return 1 - chi_exit;
}

int euler_characteristic_index(const PeriodicSegment& segment) {
    double phs0 = segment.phi_star(0.0);
    double pp = segment.p_prime;
    std::vector<ExitArc> arcs = {
        {kHalfPi, 0.0, kHalfPi, pp},        // right phi edge, outward half
        {phs0, pp, kHalfPi, pp},            // top edge, right of the split
        {-kHalfPi, -pp, -kHalfPi, 0.0},     // left phi edge, outward half
        {-kHalfPi, -pp, phs0, -pp},         // bottom edge, left of the split
    };
    return index_from_exit_arcs(arcs);
}

}  // namespace pendulum
