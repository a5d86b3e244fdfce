#ifndef PENDULUM_SEGMENT_HPP
#define PENDULUM_SEGMENT_HPP

#include <vector>

#include "pendulum/dynamics.hpp"

namespace pendulum {

// Angle phi'(t) in (-pi/2, pi/2) where p' = 0 on the strip:
//   g sin phi' - f''(t) cos phi' = 0, i.e. phi' = arctan(f''(t)/g).
double equilibrium_angle(const PivotProfile& pivot, double t, double g);

// Isolating block [0,T] x [-pi/2, pi/2] x [-p_prime, p_prime] whose essential
// exit set consists of the outward halves of the phi faces plus the p faces
// split along phi'(t).
struct PeriodicSegment {
    double T = 0.0;
    double p_prime = 0.0;
    PendulumParams params;
    PivotProfile pivot;

    double phi_star(double t) const { return equilibrium_angle(pivot, t, params.g); }
};

// p_prime = max(safety * sup|f'''| / g, p_floor); safety must exceed 1 (the
// velocity bound is a strict inequality). p_floor keeps the rectangle
// nondegenerate for jerk-free motions; 0 selects sqrt(g/l).
PeriodicSegment build_segment(const PendulumParams& params, const PivotProfile& pivot, double T,
                              double safety = 1.1, double p_floor = 0.0);

struct SegmentReport {
    int grid_n = 0;
    double p_prime = 0.0;
    double T = 0.0;
    // Outward rate over the sampled essential exit set: first-order boundary
    // velocity, or the second-order push where the velocity degenerates.
    double min_exit_margin = 0.0;
    // Inward rate over the sampled entry portions, away from the split collar.
    double min_entry_margin = 0.0;
    // Signed |p''| along the curves (phi'(t), +-p_prime); positive when the
    // sign matches the outward requirement.
    double tangency_margin_plus = 0.0;
    double tangency_margin_minus = 0.0;
    // |phi''| = g/l at the corner lines (+-pi/2, p = 0).
    double corner_margin = 0.0;
    bool valid = false;
};

// Samples the four faces of the block on grid_n x grid_n nodes per face (64
// minimum) and evaluates the margin families above. valid = all positive.
SegmentReport validate_segment(const PeriodicSegment& segment, int grid_n);

// Axis-aligned arc of the exit set in the t = 0 section, used for the Euler
// characteristic count.
struct ExitArc {
    double phi_a = 0.0, p_a = 0.0;
    double phi_b = 0.0, p_b = 0.0;
};

// chi(section) - chi(exit set of the section) for an arc complex: vertices
// minus edges after gluing shared endpoints.
int index_from_exit_arcs(const std::vector<ExitArc>& arcs);

// For this block: chi(rectangle) = 1, exit set glues into two disjoint arcs,
// so the result is 1 - 2 = -1.
int euler_characteristic_index(const PeriodicSegment& segment);

}  // namespace pendulum

#endif
