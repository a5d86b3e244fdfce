#ifndef PENDULUM_DYNAMICS_HPP
#define PENDULUM_DYNAMICS_HPP

#include <array>
#include <complex>
#include <optional>
#include <ostream>
#include <utility>
#include <vector>

#include "pendulum/dopri5.hpp"
#include "pendulum/pivot_profile.hpp"

namespace pendulum {

struct PendulumParams {
    double g = 9.8;  // m/s^2
    double l = 1.0;  // m
    double m = 1.0;  // kg; cancels from the equations of motion, kept for record
};

// Point in extended phase space. phi is measured from the upright vertical
// (phi = +-pi/2 are the horizontal positions) and kept unwrapped.
struct PendulumState {
    double t = 0.0;    // s
    double phi = 0.0;  // rad
    double p = 0.0;    // rad/s
};

struct PhasePoint {
    double phi = 0.0;
    double p = 0.0;
};

// Derivative of the flow with respect to the initial condition.
struct TangentMatrix {
    // row-major [d phi/d phi0, d phi/d p0; d p/d phi0, d p/d p0]
    double a11 = 1.0, a12 = 0.0, a21 = 0.0, a22 = 1.0;

    double det() const { return a11 * a22 - a12 * a21; }
    double trace() const { return a11 + a22; }
    // Eigenvalues ordered by descending magnitude; conjugate pair has the
    // positive-imaginary one first.
    std::pair<std::complex<double>, std::complex<double>> eigenvalues() const;
};

enum class Side { Left, Right };

struct Crossing {
    double t_star = 0.0;
    PendulumState state;
    Side side = Side::Right;
};

// Dense-output trajectory of (phi, p). Interpolation is valid on
// [t_begin, t_covered]; t_end marks the reported end (first crossing when
// exit watching stopped the run early).
class Trajectory {
public:
    Trajectory() = default;
    Trajectory(DenseSolution<2> dense, double t0, double t_end, PendulumState final_state)
        : dense_(std::move(dense)), t0_(t0), t_end_(t_end), final_(final_state) {}

    double t_begin() const { return t0_; }
    double t_end() const { return t_end_; }
    double t_covered() const { return dense_.empty() ? t0_ : dense_.t_covered(); }
    const PendulumState& final_state() const { return final_; }
    std::size_t step_count() const { return dense_.size(); }

    PendulumState at(double t) const;

    // Times of accepted steps (step starts plus the end time).
    std::vector<double> step_times() const;

    const DenseSolution<2>& dense() const { return dense_; }

private:
    DenseSolution<2> dense_;
    double t0_ = 0.0, t_end_ = 0.0;
    PendulumState final_;
};

struct IntegrationOutcome {
    Trajectory trajectory;
    std::optional<Crossing> crossing;
};

// Right-hand side of the equations of motion:
//   phi' = p,  p' = (g/l) sin phi - (f''(t)/l) cos phi.
std::array<double, 2> rhs(const PendulumParams& params, const PivotProfile& pivot,
                          const PendulumState& s);

// Jacobian of the right-hand side with respect to (phi, p); trace-free.
TangentMatrix variational_matrix(const PendulumParams& params, const PivotProfile& pivot,
                                 double t, double phi);

// State derivative coupled with J' = A J for joint variational integration.
std::pair<std::array<double, 2>, TangentMatrix> variational_rhs(const PendulumParams& params,
                                                                const PivotProfile& pivot,
                                                                const PendulumState& s,
                                                                const TangentMatrix& j);

// Integrates from s0 to t_end. With watch_exit set, stops at the first time
// |phi| reaches pi/2, localized on the dense output to cfg.event_tol.
IntegrationOutcome integrate(const PendulumParams& params, const PivotProfile& pivot,
                             const PendulumState& s0, double t_end, const IntegratorConfig& cfg,
                             bool watch_exit);

// Advances (phi0, p0) at time t0 by T along the flow, together with the
// tangent matrix from joint variational integration.
std::pair<PhasePoint, TangentMatrix> time_T_map(const PendulumParams& params,
                                                const PivotProfile& pivot, const PhasePoint& x0,
                                                double t0, double T, const IntegratorConfig& cfg);

// Same advance without the tangent matrix.
PhasePoint flow_map(const PendulumParams& params, const PivotProfile& pivot, const PhasePoint& x0,
                    double t0, double T, const IntegratorConfig& cfg);

// CSV rows "t,phi,p" at accepted steps merged with extra sample times,
// shortest round-trip number format.
void write_trajectory_csv(std::ostream& os, const Trajectory& traj,
                          const std::vector<double>& extra_times = {});

// Shortest round-trip decimal form of x (std::to_chars).
std::string format_double(double x);

}  // namespace pendulum

#endif
