#ifndef PENDULUM_PIVOT_PROFILE_HPP
#define PENDULUM_PIVOT_PROFILE_HPP

#include <optional>
#include <variant>
#include <vector>

namespace pendulum {

// Pivot position f and its first three time derivatives, all from closed-form
// expressions. d2f drives the equations of motion, d3f enters the segment
// velocity bound and the tangency sign computations.
struct PivotSample {
    double f = 0.0;    // m
    double df = 0.0;   // m/s
    double d2f = 0.0;  // m/s^2
    double d3f = 0.0;  // m/s^3
};

enum class PeriodKind {
    AnyPeriod,  // f is constant in the dynamics sense: every T is a period
    Periodic,   // finite fundamental period
    Aperiodic,
};

struct PeriodInfo {
    PeriodKind kind = PeriodKind::Aperiodic;
    double period = 0.0;                  // fundamental period, Periodic only
    bool incommensurate_warning = false;  // frequency ratio had no rational fit
};

struct HarmonicTerm {
    double amplitude = 0.0;          // m
    double angular_frequency = 0.0;  // rad/s
    double phase = 0.0;              // rad
};

// Prescribed horizontal pivot motion. Only analytic families are supported so
// that third derivatives are exact; sampled data would be too noisy to certify
// the sign conditions the validators rely on.
class PivotProfile {
public:
    struct Zero {};
    struct Polynomial {
        std::vector<double> coefficients;  // c0 + c1 t + c2 t^2 + ...
    };
    struct HarmonicSum {
        std::vector<HarmonicTerm> terms;  // sum of A sin(w t + theta)
    };
    struct ConstantAcceleration {
        double a = 0.0;  // f = a t^2 / 2
    };

    PivotProfile() : rep_(Zero{}) {}

    static PivotProfile zero() { return PivotProfile(Zero{}); }
    static PivotProfile polynomial(std::vector<double> coefficients);
    static PivotProfile harmonic_sum(std::vector<HarmonicTerm> terms);
    static PivotProfile constant_acceleration(double a);

    // f, f', f'', f''' at time t, exact analytic formulas.
    PivotSample eval(double t) const;

    // Fundamental period of f, "any T" for constant-f profiles, aperiodic
    // otherwise. Harmonic sums use continued-fraction rational reconstruction
    // of frequency ratios (tolerance 1e-9, denominators capped at 1e6).
    PeriodInfo period() const;

    // Upper bound on sup over [0,T] of |f'''|, tight to 1e-6 relative.
    // Closed form where available, otherwise a grid of at least 4096 samples
    // refined with a Lipschitz bound on f''''.
    double sup_jerk(double t_end) const;

    // Profile for -f(t); mirror counterpart of this motion.
    PivotProfile negated() const;

    template <class Visitor>
    auto visit(Visitor&& v) const {
        return std::visit(std::forward<Visitor>(v), rep_);
    }

private:
    using Rep = std::variant<Zero, Polynomial, HarmonicSum, ConstantAcceleration>;
    explicit PivotProfile(Rep rep) : rep_(std::move(rep)) {}
    Rep rep_;
};

}  // namespace pendulum

#endif
