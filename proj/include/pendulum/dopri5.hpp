#ifndef PENDULUM_DOPRI5_HPP
#define PENDULUM_DOPRI5_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <vector>

#include "pendulum/errors.hpp"

namespace pendulum {

struct IntegratorConfig {
    double rtol = 1e-10;
    double atol = 1e-12;
    double initial_step = 0.0;  // 0 = choose automatically
    double max_step = 0.0;      // 0 = span of integration
    double event_tol = 1e-10;   // event time localization, seconds
};

namespace dopri5 {

// Dormand-Prince 5(4) pair with the free 4th-order interpolant
// (Hairer, Norsett, Wanner, Solving ODEs I, DOPRI5).
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192, a75 = -2187.0 / 6784,
                 a76 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                 e6 = 22.0 / 525, e7 = -1.0 / 40;
constexpr double d1 = -12715105075.0 / 11282082432.0, d3 = 87487479700.0 / 32700410799.0,
                 d4 = -10690763975.0 / 1880347072.0, d5 = 701980252875.0 / 199316789632.0,
                 d6 = -1453857185.0 / 822651844.0, d7 = 69997945.0 / 29380423.0;

}  // namespace dopri5

// One accepted step with its interpolation coefficients. The quartic
// interpolant matches the solution to the order of the embedded pair.
template <std::size_t N>
struct DenseStep {
    double t0 = 0.0;
    double h = 0.0;
    std::array<std::array<double, N>, 5> rcont{};

    std::array<double, N> eval(double t) const {
        double theta = (t - t0) / h;
        double theta1 = 1.0 - theta;
        std::array<double, N> y;
        for (std::size_t i = 0; i < N; ++i)
            y[i] = rcont[0][i] +
                   theta * (rcont[1][i] +
                            theta1 * (rcont[2][i] +
                                      theta * (rcont[3][i] + theta1 * rcont[4][i])));
        return y;
    }
};

// Piecewise dense solution over [t_begin, t_end].
template <std::size_t N>
class DenseSolution {
public:
    void reserve(std::size_t n) { steps_.reserve(n); }
    void push(DenseStep<N> s) { steps_.push_back(std::move(s)); }
    bool empty() const { return steps_.empty(); }
    std::size_t size() const { return steps_.size(); }
    const DenseStep<N>& step(std::size_t i) const { return steps_[i]; }

    double t_begin() const { return steps_.front().t0; }
    // Last time covered by interpolation (may exceed a truncated end time).
    double t_covered() const { return steps_.back().t0 + steps_.back().h; }

    std::array<double, N> eval(double t) const {
        const DenseStep<N>* s = locate(t);
        return s->eval(t);
    }

private:
    const DenseStep<N>* locate(double t) const {
        auto it = std::upper_bound(steps_.begin(), steps_.end(), t,
                                   [](double tv, const DenseStep<N>& s) { return tv < s.t0; });
        if (it != steps_.begin()) --it;
        return &*it;
    }

    std::vector<DenseStep<N>> steps_;
};

// Callbacks of the adaptive loop. on_accept may request an early stop (event
// found inside the step); it receives the dense coefficients of the step.
template <std::size_t N>
struct StepSink {
    // return value: stop time if the caller wants to cut integration short
    // inside [t0, t0+h], NaN to continue.
    std::function<double(const DenseStep<N>&, const std::array<double, N>& y1)> on_accept;
};

// Integrates y' = rhs(t, y) from (t0, y0) to t_end. Each accepted step is
// handed to sink.on_accept (when set), which may truncate the step and stop.
// Returns the final state at the (possibly shortened) end time.
template <std::size_t N, class Rhs>
std::array<double, N> integrate_dopri5(Rhs&& rhs, double t0, std::array<double, N> y0,
                                       double t_end, const IntegratorConfig& cfg,
                                       const StepSink<N>* sink, double* t_reached_out) {
    using namespace dopri5;
    if (!(cfg.rtol > 0.0) || !(cfg.atol > 0.0) || !(cfg.event_tol > 0.0))
        throw ValidationError("integrate: rtol, atol, event_tol must be positive");
    const double span = t_end - t0;
    if (!(span > 0.0)) throw ValidationError("integrate: t_end must exceed start time");
    const double hmax = cfg.max_step > 0.0 ? cfg.max_step : span;
    const double hmin_floor = 1e-14 * span;

    auto scaled_norm = [&](const std::array<double, N>& err, const std::array<double, N>& ya,
                           const std::array<double, N>& yb) {
        double acc = 0.0;
        for (std::size_t i = 0; i < N; ++i) {
            double sk = cfg.atol + cfg.rtol * std::max(std::abs(ya[i]), std::abs(yb[i]));
            double q = err[i] / sk;
            acc += q * q;
        }
        return std::sqrt(acc / static_cast<double>(N));
    };

    double t = t0;
    std::array<double, N> y = y0;
    std::array<double, N> k1 = rhs(t, y);

    // Starting step: standard two-derivative heuristic.
    double h = cfg.initial_step;
    if (h <= 0.0) {
        double d0 = 0.0, d1n = 0.0;
        for (std::size_t i = 0; i < N; ++i) {
            double sk = cfg.atol + cfg.rtol * std::abs(y[i]);
            d0 += (y[i] / sk) * (y[i] / sk);
            d1n += (k1[i] / sk) * (k1[i] / sk);
        }
        d0 = std::sqrt(d0 / N);
        d1n = std::sqrt(d1n / N);
        double h0 = (d0 < 1e-5 || d1n < 1e-5) ? 1e-6 : 0.01 * d0 / d1n;
        h0 = std::min(h0, hmax);
        std::array<double, N> y1;
        for (std::size_t i = 0; i < N; ++i) y1[i] = y[i] + h0 * k1[i];
        std::array<double, N> f1 = rhs(t + h0, y1);
        double d2 = 0.0;
        for (std::size_t i = 0; i < N; ++i) {
            double sk = cfg.atol + cfg.rtol * std::abs(y[i]);
            double q = (f1[i] - k1[i]) / sk;
            d2 += q * q;
        }
        d2 = std::sqrt(d2 / N) / h0;
        double dm = std::max(d1n, d2);
        double h1 = dm > 1e-15 ? std::pow(0.01 / dm, 0.2) : std::max(1e-6, h0 * 1e-3);
        h = std::min({100.0 * h0, h1, hmax});
    }

    constexpr double safe = 0.9, facmin = 0.2, facmax = 10.0;
    double facmax_cur = facmax;

    while (t < t_end) {
        if (!(h > hmin_floor))
            throw IntegrationFailure("integrate: step size underflow", t, y[0],
                                     N > 1 ? y[1] : 0.0);
        bool last = false;
        if (t + h >= t_end) {
            h = t_end - t;
            last = true;
        }

        std::array<double, N> k2, k3, k4, k5, k6, k7, yt, y1;
        for (std::size_t i = 0; i < N; ++i) yt[i] = y[i] + h * a21 * k1[i];
        k2 = rhs(t + c2 * h, yt);
        for (std::size_t i = 0; i < N; ++i) yt[i] = y[i] + h * (a31 * k1[i] + a32 * k2[i]);
        k3 = rhs(t + c3 * h, yt);
        for (std::size_t i = 0; i < N; ++i)
            yt[i] = y[i] + h * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
        k4 = rhs(t + c4 * h, yt);
        for (std::size_t i = 0; i < N; ++i)
            yt[i] = y[i] + h * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
        k5 = rhs(t + c5 * h, yt);
        for (std::size_t i = 0; i < N; ++i)
            yt[i] = y[i] + h * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] +
                                a65 * k5[i]);
        k6 = rhs(t + h, yt);
        for (std::size_t i = 0; i < N; ++i)
            y1[i] = y[i] + h * (a71 * k1[i] + a73 * k3[i] + a74 * k4[i] + a75 * k5[i] +
                                a76 * k6[i]);
        k7 = rhs(t + h, y1);  // FSAL

        std::array<double, N> errv;
        for (std::size_t i = 0; i < N; ++i)
            errv[i] = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] +
                           e7 * k7[i]);
        double err = scaled_norm(errv, y, y1);
        if (!std::isfinite(err))
            throw IntegrationFailure("integrate: non-finite state", t, y[0],
                                     N > 1 ? y[1] : 0.0);

        if (err <= 1.0) {
            DenseStep<N> ds;
            ds.t0 = t;
            ds.h = h;
            for (std::size_t i = 0; i < N; ++i) {
                double ydiff = y1[i] - y[i];
                double bspl = h * k1[i] - ydiff;
                ds.rcont[0][i] = y[i];
                ds.rcont[1][i] = ydiff;
                ds.rcont[2][i] = bspl;
                ds.rcont[3][i] = ydiff - h * k7[i] - bspl;
                ds.rcont[4][i] = h * (d1 * k1[i] + d3 * k3[i] + d4 * k4[i] + d5 * k5[i] +
                                      d6 * k6[i] + d7 * k7[i]);
            }
            if (sink && sink->on_accept) {
                double t_cut = sink->on_accept(ds, y1);
                if (!std::isnan(t_cut)) {
                    if (t_reached_out) *t_reached_out = t_cut;
                    return ds.eval(t_cut);
                }
            }
            t += h;
            y = y1;
            k1 = k7;
            if (last) break;
            double fac = err > 0.0 ? safe * std::pow(err, -0.2)
                                   : facmax_cur;
            h = h * std::min(facmax_cur, std::max(facmin, fac));
            h = std::min(h, hmax);
            facmax_cur = facmax;
        } else {
            double fac = safe * std::pow(err, -0.2);
            h = h * std::max(facmin, fac);
            facmax_cur = 1.0;  // no growth right after a rejection
        }
    }

    if (t_reached_out) *t_reached_out = t_end;
    return y;
}

}  // namespace pendulum

#endif
