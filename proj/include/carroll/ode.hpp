#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <string>

#include "carroll/core.hpp"

namespace carroll::ode {

using Rhs = std::function<Vec(double, const Vec&)>;

enum class Method { RK45, RK4 };

inline const char* to_string(Method m) { return m == Method::RK4 ? "rk4" : "rk45"; }

struct Config {
    Method method = Method::RK45;
    double tol = 1e-10;      // abs and rel tolerance of the embedded pair
    double h0 = 1e-3;        // initial step (RK45)
    double h_max = 0.1;
    double h_fixed = 1e-2;   // RK4 step
    double h_min = 1e-13;
    std::size_t max_steps = 2'000'000;
};

enum class Stop { Completed, Observer, StepUnderflow, NonFinite, MaxSteps };

inline const char* to_string(Stop s) {
    switch (s) {
        case Stop::Completed: return "completed";
        case Stop::Observer: return "observer";
        case Stop::StepUnderflow: return "step_underflow";
        case Stop::NonFinite: return "non_finite";
        case Stop::MaxSteps: return "max_steps";
    }
    return "completed";
}

struct Outcome {
    Stop stop = Stop::Completed;
    double lambda = 0.0;
    std::size_t accepted = 0;
    std::size_t rejected = 0;
    std::string detail;
};

// Observer verdict after each accepted step. `Modified` means the observer
// rewrote the state in place (for example a chart change).
enum class Verdict { Continue, Modified, Stop };

inline Vec rk4_step(const Rhs& f, double x, const Vec& y, double h) {
    const Vec k1 = f(x, y);
    const Vec k2 = f(x + 0.5 * h, y + 0.5 * h * k1);
    const Vec k3 = f(x + 0.5 * h, y + 0.5 * h * k2);
    const Vec k4 = f(x + h, y + h * k3);
    return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

struct DPStep {
    Vec y;    // fifth-order solution
    Vec err;  // y5 - y4
    Vec k7;   // f(x + h, y), reusable as the next k1
};

/// One Dormand-Prince 5(4) step given k1 = f(x, y).
inline DPStep dp45_step(const Rhs& f, double x, const Vec& y, double h, const Vec& k1) {
    static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
    static constexpr double a21 = 1.0 / 5;
    static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
    static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                            a54 = -212.0 / 729;
    static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                            a64 = 49.0 / 176, a65 = -5103.0 / 18656;
    static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                            b5 = -2187.0 / 6784, b6 = 11.0 / 84;
    static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                            e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

    const Vec k2 = f(x + c2 * h, y + h * (a21 * k1));
    const Vec k3 = f(x + c3 * h, y + h * (a31 * k1 + a32 * k2));
    const Vec k4 = f(x + c4 * h, y + h * (a41 * k1 + a42 * k2 + a43 * k3));
    const Vec k5 = f(x + c5 * h, y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
    const Vec k6 = f(x + h, y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
    DPStep s;
    s.y = y + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
    s.k7 = f(x + h, s.y);
    s.err = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * s.k7);
    return s;
}

/// Integrates y' = f(x, y) from x0 to x1 (> x0).
///
/// `atol_weight(y)` gives per-component multipliers of the absolute tolerance,
/// so components with a natural scale (the fiber coordinate) can be measured
/// relative to it. `observe(x, y)` sees the initial state and every accepted step.
/// Exceptions derived from carroll::Error thrown by f during a trial step shrink
/// the step instead of propagating.
template <class Weight, class Observer>
Outcome solve(const Rhs& f, Vec y, double x0, double x1, const Config& cfg, Weight&& atol_weight,
              Observer&& observe) {
    Outcome out;
    double x = x0;
    out.lambda = x;
    if (!(x1 > x0)) throw ContractViolation("integration interval must have positive length");
    if (observe(x, y) == Verdict::Stop) {
        out.stop = Stop::Observer;
        return out;
    }

    if (cfg.method == Method::RK4) {
        if (!(cfg.h_fixed > 0.0)) throw ContractViolation("RK4 step must be positive");
        const auto steps = static_cast<std::size_t>(std::ceil((x1 - x0) / cfg.h_fixed - 1e-9));
        for (std::size_t i = 0; i < steps; ++i) {
            const double xn = (i + 1 == steps) ? x1 : x0 + static_cast<double>(i + 1) * cfg.h_fixed;
            Vec yn;
            try {
                yn = rk4_step(f, x, y, xn - x);
            } catch (const Error& e) {
                out.stop = Stop::NonFinite;
                out.detail = e.what();
                return out;
            }
            if (!yn.allFinite()) {
                out.stop = Stop::NonFinite;
                return out;
            }
            x = xn;
            y = std::move(yn);
            out.lambda = x;
            ++out.accepted;
            if (observe(x, y) == Verdict::Stop) {
                out.stop = Stop::Observer;
                return out;
            }
        }
        return out;
    }

    double h = std::min({cfg.h0, cfg.h_max, x1 - x0});
    Vec k1 = f(x, y);
    while (x < x1) {
        if (out.accepted + out.rejected >= cfg.max_steps) {
            out.stop = Stop::MaxSteps;
            return out;
        }
        const bool last = x + h >= x1;
        const double hs = last ? x1 - x : h;
        DPStep s;
        bool ok = true;
        try {
            s = dp45_step(f, x, y, hs, k1);
            ok = s.y.allFinite() && s.err.allFinite() && s.k7.allFinite();
        } catch (const Error& e) {
            ok = false;
            out.detail = e.what();
        }
        double ratio = 0.0;
        if (ok) {
            const Vec w = atol_weight(y);
            for (Eigen::Index i = 0; i < y.size(); ++i) {
                const double sc = cfg.tol * w(i) + cfg.tol * std::max(std::abs(y(i)), std::abs(s.y(i)));
                ratio = std::max(ratio, std::abs(s.err(i)) / sc);
            }
        }
        if (!ok || ratio > 1.0) {
            ++out.rejected;
            h = ok ? hs * std::max(0.2, 0.9 * std::pow(ratio, -0.2)) : 0.25 * hs;
            if (h < cfg.h_min) {
                out.stop = ok ? Stop::StepUnderflow : Stop::NonFinite;
                return out;
            }
            continue;
        }
        x = last ? x1 : x + hs;
        y = std::move(s.y);
        k1 = std::move(s.k7);
        out.lambda = x;
        ++out.accepted;
        const Verdict v = observe(x, y);
        if (v == Verdict::Stop) {
            out.stop = Stop::Observer;
            return out;
        }
        if (v == Verdict::Modified) k1 = f(x, y);
        const double grow = ratio > 0.0 ? std::min(5.0, 0.9 * std::pow(ratio, -0.2)) : 5.0;
        h = std::min(cfg.h_max, hs * grow);
    }
    return out;
}

}  // namespace carroll::ode
