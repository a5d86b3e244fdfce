#ifndef PENDULUM_ERRORS_HPP
#define PENDULUM_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace pendulum {

// Bad user input (config values, preconditions). CLI maps this to exit 2.
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

// Numerical failure of an algorithm. CLI maps this to exit 3.
class NumericalError : public std::runtime_error {
public:
    explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

// Step size underflow or non-finite state during integration.
class IntegrationFailure : public NumericalError {
public:
    IntegrationFailure(const std::string& msg, double t, double phi, double p)
        : NumericalError(msg), last_t(t), last_phi(phi), last_p(p) {}
    double last_t, last_phi, last_p;  // last good state
};

// Bisection endpoints escape through the same side.
class BracketViolation : public NumericalError {
public:
    explicit BracketViolation(const std::string& msg) : NumericalError(msg) {}
};

// Pivot motion has no period compatible with the requested segment length.
class AperiodicPivot : public ValidationError {
public:
    explicit AperiodicPivot(const std::string& msg) : ValidationError(msg) {}
};

// All Newton seeds exhausted without meeting the residual tolerance.
class NoConvergence : public NumericalError {
public:
    explicit NoConvergence(const std::string& msg) : NumericalError(msg) {}
};

// Displacement field vanishes (to tolerance) on the index region boundary.
class FixedPointOnBoundary : public NumericalError {
public:
    explicit FixedPointOnBoundary(const std::string& msg) : NumericalError(msg) {}
};

// Winding accumulation did not resolve within the sample budget.
class NonConvergentRefinement : public NumericalError {
public:
    explicit NonConvergentRefinement(const std::string& msg) : NumericalError(msg) {}
};

// Malformed config (schema level). CLI maps this to exit 4.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace pendulum

#endif
