#include "pendulum/pivot_profile.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <numeric>

#include "pendulum/errors.hpp"

namespace pendulum {

namespace {

// Coefficients of the derivative of a polynomial given by coefficients.
std::vector<double> derive(const std::vector<double>& c) {
    std::vector<double> d;
    for (std::size_t k = 1; k < c.size(); ++k) d.push_back(c[k] * static_cast<double>(k));
    return d;
}

double horner(const std::vector<double>& c, double t) {
    double acc = 0.0;
    for (std::size_t i = c.size(); i-- > 0;) acc = acc * t + c[i];
    return acc;
}

std::size_t effective_degree(const std::vector<double>& c) {
    std::size_t deg = 0;
    for (std::size_t k = 0; k < c.size(); ++k)
        if (c[k] != 0.0) deg = k;
    return deg;
}

// Best rational p/q for x with q <= qmax, by continued fractions.
struct Rational {
    std::int64_t p = 0, q = 1;
    bool ok = false;
};

Rational rationalize(double x, double tol, std::int64_t qmax) {
    // A convergent is accepted only when it is sharp for its denominator
    // (error below tol/q); with an absolute gate every real would pass, since
    // rationals with q <= qmax are 1/q*qmax-dense.
    auto sharp = [&](std::int64_t p, std::int64_t q) {
        return std::abs(x - static_cast<double>(p) / static_cast<double>(q)) <=
               tol / static_cast<double>(q);
    };
    std::int64_t p0 = 1, q0 = 0, p1 = static_cast<std::int64_t>(std::floor(x)), q1 = 1;
    double frac = x - std::floor(x);
    for (int iter = 0; iter < 64; ++iter) {
        if (sharp(p1, q1)) return {p1, q1, true};
        if (frac == 0.0) break;
        double inv = 1.0 / frac;
        double a = std::floor(inv);
        frac = inv - a;
        std::int64_t ai = static_cast<std::int64_t>(a);
        std::int64_t p2 = ai * p1 + p0;
        std::int64_t q2 = ai * q1 + q0;
        if (q2 > qmax || p2 < 0) break;
        p0 = p1;
        q0 = q1;
        p1 = p2;
        q1 = q2;
    }
    if (sharp(p1, q1)) return {p1, q1, true};
    return {};
}

// Grid maximum of |value(t)| over [0, t_end] tightened with a Lipschitz bound
// on the derivative of value. Refines until the slack is below 1e-6 relative.
template <class F>
double grid_sup(F&& value, double lipschitz, double t_end) {
    std::size_t n = 4096;
    double bound = 0.0;
    for (int pass = 0; pass < 12; ++pass) {
        double m = 0.0;
        double h = t_end / static_cast<double>(n);
        for (std::size_t i = 0; i <= n; ++i)
            m = std::max(m, std::abs(value(h * static_cast<double>(i))));
        double slack = 0.5 * lipschitz * h;
        bound = m + slack;
        if (slack <= 1e-6 * std::max(m, 1e-300)) break;
        n *= 2;
    }
    return bound;
}

}  // namespace

PivotProfile PivotProfile::polynomial(std::vector<double> coefficients) {
    return PivotProfile(Polynomial{std::move(coefficients)});
}

PivotProfile PivotProfile::harmonic_sum(std::vector<HarmonicTerm> terms) {
    for (const auto& h : terms)
        if (h.angular_frequency <= 0.0)
            throw ValidationError("harmonic_sum: angular_frequency must be > 0");
    return PivotProfile(HarmonicSum{std::move(terms)});
}

PivotProfile PivotProfile::constant_acceleration(double a) {
    return PivotProfile(ConstantAcceleration{a});
}

PivotSample PivotProfile::eval(double t) const {
    return visit([&](const auto& rep) -> PivotSample {
        using T = std::decay_t<decltype(rep)>;
        if constexpr (std::is_same_v<T, Zero>) {
            return {};
        } else if constexpr (std::is_same_v<T, Polynomial>) {
            const auto& c = rep.coefficients;
            auto d1 = derive(c);
            auto d2 = derive(d1);
            auto d3 = derive(d2);
            return {horner(c, t), horner(d1, t), horner(d2, t), horner(d3, t)};
        } else if constexpr (std::is_same_v<T, HarmonicSum>) {
            PivotSample s;
            for (const auto& h : rep.terms) {
                double w = h.angular_frequency;
                double arg = w * t + h.phase;
                double sn = std::sin(arg), cs = std::cos(arg);
                s.f += h.amplitude * sn;
                s.df += h.amplitude * w * cs;
                s.d2f -= h.amplitude * w * w * sn;
                s.d3f -= h.amplitude * w * w * w * cs;
            }
            return s;
        } else {
            return {0.5 * rep.a * t * t, rep.a * t, rep.a, 0.0};
        }
    });
}

PeriodInfo PivotProfile::period() const {
    return visit([&](const auto& rep) -> PeriodInfo {
        using T = std::decay_t<decltype(rep)>;
        if constexpr (std::is_same_v<T, Zero>) {
            return {PeriodKind::AnyPeriod, 0.0, false};
        } else if constexpr (std::is_same_v<T, Polynomial>) {
            if (effective_degree(rep.coefficients) >= 1) return {PeriodKind::Aperiodic, 0.0, false};
            return {PeriodKind::AnyPeriod, 0.0, false};
        } else if constexpr (std::is_same_v<T, HarmonicSum>) {
            std::vector<double> omegas;
            for (const auto& h : rep.terms)
                if (h.amplitude != 0.0) omegas.push_back(h.angular_frequency);
            if (omegas.empty()) return {PeriodKind::AnyPeriod, 0.0, false};

            // Express every frequency as an integer multiple of w0/lcm(q_k).
            constexpr std::int64_t qmax = 1000000;
            std::int64_t lcm_q = 1;
            std::vector<Rational> ratios;
            for (double w : omegas) {
                double r = w / omegas.front();
                Rational pq = rationalize(r, 1e-9 * std::max(1.0, r), qmax);
                if (!pq.ok || pq.p <= 0) return {PeriodKind::Aperiodic, 0.0, true};
                ratios.push_back(pq);
                std::int64_t g = std::gcd(lcm_q, pq.q);
                if (lcm_q > qmax * qmax / (pq.q / g)) return {PeriodKind::Aperiodic, 0.0, true};
                lcm_q = lcm_q / g * pq.q;
            }
            std::int64_t common = 0;
            for (const auto& pq : ratios) common = std::gcd(common, pq.p * (lcm_q / pq.q));
            double base = omegas.front() / static_cast<double>(lcm_q) * static_cast<double>(common);
            return {PeriodKind::Periodic, 2.0 * std::numbers::pi / base, false};
        } else {
            if (rep.a == 0.0) return {PeriodKind::AnyPeriod, 0.0, false};
            return {PeriodKind::Aperiodic, 0.0, false};
        }
    });
}

double PivotProfile::sup_jerk(double t_end) const {
    if (!(t_end > 0.0)) throw ValidationError("sup_jerk: t_end must be > 0");
    return visit([&](const auto& rep) -> double {
        using T = std::decay_t<decltype(rep)>;
        if constexpr (std::is_same_v<T, Zero>) {
            return 0.0;
        } else if constexpr (std::is_same_v<T, Polynomial>) {
            auto d3 = derive(derive(derive(rep.coefficients)));
            if (d3.empty()) return 0.0;
            if (d3.size() == 1) return std::abs(d3[0]);
            auto d4 = derive(d3);
            double lip = 0.0;
            double tm = std::max(1.0, t_end);
            double pw = 1.0;
            for (double c : d4) {
                lip += std::abs(c) * pw;
                pw *= tm;
            }
            return grid_sup([&](double t) { return horner(d3, t); }, lip, t_end);
        } else if constexpr (std::is_same_v<T, HarmonicSum>) {
            if (rep.terms.empty()) return 0.0;
            if (rep.terms.size() == 1) {
                // Single term: sup |A w^3 cos(w t + theta)| in closed form.
                const auto& h = rep.terms.front();
                double w = h.angular_frequency;
                double amp = std::abs(h.amplitude) * w * w * w;
                if (w * t_end >= std::numbers::pi) return amp;
                double lo = h.phase, hi = h.phase + w * t_end;
                double best = std::max(std::abs(std::cos(lo)), std::abs(std::cos(hi)));
                // |cos| peaks at integer multiples of pi.
                double k0 = std::ceil(lo / std::numbers::pi);
                if (k0 * std::numbers::pi <= hi) best = 1.0;
                return amp * best;
            }
            double lip = 0.0;
            for (const auto& h : rep.terms) {
                double w = h.angular_frequency;
                lip += std::abs(h.amplitude) * w * w * w * w;
            }
            return grid_sup([&](double t) { return eval(t).d3f; }, lip, t_end);
        } else {
            return 0.0;
        }
    });
}

PivotProfile PivotProfile::negated() const {
    return visit([&](const auto& rep) -> PivotProfile {
        using T = std::decay_t<decltype(rep)>;
        if constexpr (std::is_same_v<T, Zero>) {
            return zero();
        } else if constexpr (std::is_same_v<T, Polynomial>) {
            auto c = rep.coefficients;
            for (double& x : c) x = -x;
            return polynomial(std::move(c));
        } else if constexpr (std::is_same_v<T, HarmonicSum>) {
            auto terms = rep.terms;
            for (auto& h : terms) h.amplitude = -h.amplitude;
            return harmonic_sum(std::move(terms));
        } else {
            return constant_acceleration(-rep.a);
        }
    });
}

}  // namespace pendulum
