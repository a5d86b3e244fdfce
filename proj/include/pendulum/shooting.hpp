#ifndef PENDULUM_SHOOTING_HPP
#define PENDULUM_SHOOTING_HPP

#include <optional>
#include <vector>

#include "pendulum/dynamics.hpp"

namespace pendulum {

// Behavior of a trajectory meeting phi = +-pi/2, decided by (side, p) and,
// for p = 0, by the boundary acceleration phi'' = +-g/l.
enum class BoundaryClass {
    TransverseExit,  // velocity points out of the strip
    Entry,           // velocity points into the strip
    TangentExit,     // p = 0; second-order push is outward on both sides
};

struct BoundaryClassification {
    BoundaryClass cls = BoundaryClass::TransverseExit;
    double phi_ddot = 0.0;  // +-g/l at the boundary, sign decides the tangent case
};

// |p| at or below this at a crossing counts as tangential; such points are
// treated as exits, which is the conservative direction for survival claims.
inline constexpr double kTangencyTol = 1e-9;

BoundaryClassification classify_boundary(const PendulumParams& params, const PivotProfile& pivot,
                                         double t, Side side, double p);

struct EscapeResult {
    bool exited = false;
    // exited:
    double t_star = 0.0;
    PendulumState exit_state;
    Side side = Side::Right;
    BoundaryClassification boundary;
    // survived:
    double horizon = 0.0;
    PendulumState final_state;
};

// First boundary hit of the trajectory from (t0, phi0, p0), or survival up to
// t0 + horizon.
EscapeResult escape_map(const PendulumParams& params, const PivotProfile& pivot, double phi0,
                        double p0, double horizon, const IntegratorConfig& cfg, double t0 = 0.0);

struct EscapeProbe {
    double phi0 = 0.0;
    std::optional<Side> side;      // empty when the probe survived
    std::optional<double> t_star;  // empty when the probe survived
};

struct SurvivalCertificate {
    double phi_lo = 0.0;
    double phi_hi = 0.0;
    double witness_phi = 0.0;
    double horizon = 0.0;
    int bisection_steps = 0;
    bool witness_survived = false;
    std::optional<double> witness_escape_time;  // achieved escape time otherwise
    std::vector<EscapeProbe> escape_profile;
};

struct NonfallingConfig {
    double horizon = 0.0;   // 0 = 10 sqrt(l/g)
    double tol_phi = 1e-10;  // bracket width target, rad
    double p0 = 0.0;         // certified statement uses p0 = 0
    double bracket_inset = 1e-6;  // initial endpoints pi/2 - inset
};

// Bisection over initial angles on the zero-velocity segment. Endpoints of
// the initial bracket must escape left/right respectively; the bracket then
// shrinks to tol_phi, keeping any surviving midpoint as the witness.
SurvivalCertificate find_nonfalling(const PendulumParams& params, const PivotProfile& pivot,
                                    const NonfallingConfig& nf, const IntegratorConfig& cfg);

}  // namespace pendulum

#endif
