#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "nullgeo/errors.hpp"
#include "nullgeo/spacetime.hpp"

namespace nullgeo {

struct OdeSettings {
    double atol = 1e-10;
    double rtol = 1e-10;
    double initial_step = 0.0;  // 0 selects a step automatically
    double max_step = std::numeric_limits<double>::infinity();
    std::size_t max_steps = 2'000'000;
};

namespace detail {

// Dormand-Prince 5(4) tableau.
struct Dopri5 {
    static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
    static constexpr double a21 = 1.0 / 5;
    static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
    static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
    static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                            a65 = -5103.0 / 18656;
    static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84;
    static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                            e6 = 22.0 / 525, e7 = -1.0 / 40;
};

}  // namespace detail

/// Adaptive Dormand-Prince integration of y' = f(s, y) from s0 to s_end
/// (s_end > s0). Steps are clipped so that every value in `stops` is hit
/// exactly. `observe(s, y, is_stop)` is called at s0 and after each accepted
/// step. A DomainError thrown by `f` rejects the trial step and shrinks it;
/// it propagates once the step cannot shrink further.
template <class Rhs, class Observer>
void integrate_dopri5(Rhs&& f, Vec y, double s0, double s_end, std::span<const double> stops,
                      const OdeSettings& cfg, Observer&& observe) {
    using T = detail::Dopri5;
    if (!(s_end > s0)) throw UsageError("integration span must be increasing and nonempty");

    std::vector<double> targets;
    for (double s : stops)
        if (s > s0 && s < s_end) targets.push_back(s);
    targets.push_back(s_end);
    std::sort(targets.begin(), targets.end());
    targets.erase(std::unique(targets.begin(), targets.end()), targets.end());

    const bool start_is_stop = std::find(stops.begin(), stops.end(), s0) != stops.end();
    observe(s0, static_cast<const Vec&>(y), start_is_stop);

    auto err_norm = [&](const Vec& y0, const Vec& y1, const Vec& err) {
        double m = 0.0;
        for (Eigen::Index i = 0; i < y0.size(); ++i) {
            const double sc = cfg.atol + cfg.rtol * std::max(std::abs(y0[i]), std::abs(y1[i]));
            m = std::max(m, std::abs(err[i]) / sc);
        }
        return m;
    };

    double s = s0;
    Vec k1 = f(s, static_cast<const Vec&>(y));
    double h = cfg.initial_step;
    if (!(h > 0.0)) {
        Vec sc(y.size());
        for (Eigen::Index i = 0; i < y.size(); ++i) sc[i] = cfg.atol + cfg.rtol * std::abs(y[i]);
        const double d0 = (y.array() / sc.array()).abs().maxCoeff();
        const double d1 = (k1.array() / sc.array()).abs().maxCoeff();
        h = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
        h = std::min(h, 0.1 * (s_end - s0));
    }
    h = std::min(h, cfg.max_step);

    std::size_t steps = 0;
    Vec k2, k3, k4, k5, k6, k7, ytmp, ynew, err;
    for (double target : targets) {
        while (s < target) {
            if (++steps > cfg.max_steps) throw StepFailure("maximum number of integration steps exceeded");
            const double remaining = target - s;
            bool lands = false;
            double step = h;
            if (step >= remaining * (1.0 - 1e-12)) {
                step = remaining;
                lands = true;
            }
            const double hmin = 1e-14 * std::max(1.0, std::abs(s));
            if (step < hmin) throw StepFailure("step size underflow at s = " + std::to_string(s));

            double enorm = std::numeric_limits<double>::infinity();
            bool domain_fail = false;
            try {
                ytmp = y + step * T::a21 * k1;
                k2 = f(s + T::c2 * step, static_cast<const Vec&>(ytmp));
                ytmp = y + step * (T::a31 * k1 + T::a32 * k2);
                k3 = f(s + T::c3 * step, static_cast<const Vec&>(ytmp));
                ytmp = y + step * (T::a41 * k1 + T::a42 * k2 + T::a43 * k3);
                k4 = f(s + T::c4 * step, static_cast<const Vec&>(ytmp));
                ytmp = y + step * (T::a51 * k1 + T::a52 * k2 + T::a53 * k3 + T::a54 * k4);
                k5 = f(s + T::c5 * step, static_cast<const Vec&>(ytmp));
                ytmp = y + step * (T::a61 * k1 + T::a62 * k2 + T::a63 * k3 + T::a64 * k4 + T::a65 * k5);
                k6 = f(s + step, static_cast<const Vec&>(ytmp));
                ynew = y + step * (T::b1 * k1 + T::b3 * k3 + T::b4 * k4 + T::b5 * k5 + T::b6 * k6);
                k7 = f(s + step, static_cast<const Vec&>(ynew));
                err = step * (T::e1 * k1 + T::e3 * k3 + T::e4 * k4 + T::e5 * k5 + T::e6 * k6 + T::e7 * k7);
                enorm = err_norm(y, ynew, err);
                if (!std::isfinite(enorm)) enorm = std::numeric_limits<double>::infinity();
            } catch (const DomainError&) {
                domain_fail = true;
                if (step <= 16.0 * hmin) throw;
            }

            if (domain_fail) {
                h = 0.25 * step;
                continue;
            }
            if (enorm <= 1.0) {
                s = lands ? target : s + step;
                y.swap(ynew);
                k1.swap(k7);
                observe(s, static_cast<const Vec&>(y), lands);
                const double fac = enorm == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(enorm, -0.2), 0.2, 5.0);
                // a step clipped to land on a stop keeps the untested proposal
                if (lands)
                    h = std::min(cfg.max_step, fac < 1.0 ? std::min(h, step * fac) : std::max(h, step));
                else
                    h = std::min(cfg.max_step, step * fac);
            } else {
                const double fac = std::isfinite(enorm) ? std::clamp(0.9 * std::pow(enorm, -0.2), 0.1, 0.9) : 0.1;
                h = step * fac;
            }
        }
    }
}

}  // namespace nullgeo
