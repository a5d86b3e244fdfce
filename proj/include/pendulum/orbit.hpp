#ifndef PENDULUM_ORBIT_HPP
#define PENDULUM_ORBIT_HPP

#include <complex>
#include <optional>

#include "pendulum/segment.hpp"

namespace pendulum {

struct NewtonConfig {
    double tol = 1e-11;    // max-norm residual of P(x) - x
    int max_iterations = 50;
    int max_damping = 40;  // step halvings keeping iterates in the rectangle
};

struct OrbitSearchConfig {
    NewtonConfig newton;
    int seed_grid = 5;          // seeds per axis over the open rectangle
    unsigned workers = 1;       // concurrent seed evaluation
    double containment_tol = 1e-9;  // inward distance from the exit arcs
};

struct PeriodicOrbit {
    PhasePoint x0;
    double T = 0.0;
    double residual = 0.0;
    std::complex<double> multiplier_1;  // larger magnitude first
    std::complex<double> multiplier_2;
    double max_abs_phi = 0.0;   // over one period
    double max_abs_p = 0.0;
    bool contained = false;     // orbit stays in the block minus the exit set
    int newton_iterations = 0;
    TangentMatrix monodromy;
};

// Multi-start damped Newton for fixed points of the time-T map, seeded on a
// grid over the open rectangle of the segment section. The Jacobian comes
// from the variational equations. A converged point outside the admissible
// set U is returned with contained = false, not dropped.
PeriodicOrbit find_periodic_orbit(const PendulumParams& params, const PivotProfile& pivot,
                                  double T, const PeriodicSegment& segment,
                                  const OrbitSearchConfig& cfg, const IntegratorConfig& integ);

struct Rect {
    double phi_lo = 0.0, phi_hi = 0.0;
    double p_lo = 0.0, p_hi = 0.0;
};

struct IndexConfig {
    int samples_per_edge = 64;
    double min_displacement = 1e-8;
    std::size_t max_samples = std::size_t(1) << 20;
    unsigned workers = 1;
    double t0 = 0.0;
};

struct IndexResult {
    int winding = 0;
    std::size_t boundary_samples = 0;
    double min_displacement = 0.0;  // smallest |x - P(x)| met on the boundary
};

// Brouwer degree of the displacement field x - P(x) on the rectangle
// boundary, traversed counterclockwise: angle increments are accumulated and
// the polyline refined until every increment is below pi/2.
IndexResult fixed_point_index(const PendulumParams& params, const PivotProfile& pivot, double T,
                              const Rect& region, const IndexConfig& cfg,
                              const IntegratorConfig& integ);

}  // namespace pendulum

#endif
