#pragma once

#include <algorithm>
#include <cmath>
#include <type_traits>

#include "carroll/core.hpp"

namespace carroll {

// Central finite differences used everywhere a derivative is needed.
//
// Base coordinates use h = rel_step * max(1, |x|). The fiber coordinate uses
// h = rel_step * |t|: the flow and all bundle objects commute with t -> s t,
// so a relative step keeps the accuracy uniform down to the t-guard and never
// crosses the zero section.
struct DiffConfig {
    double rel_step = 1e-5;
    bool richardson = true;
};

inline double base_step(double x, const DiffConfig& cfg) {
    return cfg.rel_step * std::max(1.0, std::abs(x));
}

inline double fiber_step(double t, const DiffConfig& cfg) {
    if (std::abs(t) < kFiberCutoff) {
        throw DomainError("finite-difference stencil in t would cross the zero section");
    }
    return cfg.rel_step * std::abs(t);
}

/// Step for raw coordinate k of r = (x^1..x^n, t); index n is the fiber.
inline double raw_step(const Vec& r, int k, const DiffConfig& cfg) {
    const int n = static_cast<int>(r.size()) - 1;
    return k == n ? fiber_step(r(n), cfg) : base_step(r(k), cfg);
}

template <class F>
auto central_difference(F&& f, double x0, double h, bool richardson) {
    using R = std::decay_t<decltype(f(x0))>;
    R d1 = (f(x0 + h) - f(x0 - h)) / (2.0 * h);
    if (!richardson) return d1;
    R d2 = (f(x0 + 0.5 * h) - f(x0 - 0.5 * h)) / h;
    R out = (4.0 * d2 - d1) / 3.0;
    return out;
}

/// d f / d r_k at r, f taking a coordinate vector.
template <class F>
auto partial(F&& f, const Vec& r, int k, double h, bool richardson = true) {
    auto shifted = [&](double v) {
        Vec rr = r;
        rr(k) = v;
        return f(rr);
    };
    return central_difference(shifted, r(k), h, richardson);
}

/// Gradient of a scalar function of a coordinate vector, base-style steps.
template <class F>
Vec gradient(F&& f, const Vec& x, const DiffConfig& cfg = {}) {
    Vec g(x.size());
    for (int k = 0; k < x.size(); ++k) {
        g(k) = partial(f, x, k, base_step(x(k), cfg), cfg.richardson);
    }
    return g;
}

/// Jacobian J(i,k) = d f_i / d x_k of a vector map.
template <class F>
Mat jacobian(F&& f, const Vec& x, const DiffConfig& cfg = {}) {
    const Vec f0 = f(x);
    Mat j(f0.size(), x.size());
    for (int k = 0; k < x.size(); ++k) {
        j.col(k) = partial(f, x, k, base_step(x(k), cfg), cfg.richardson);
    }
    return j;
}

}  // namespace carroll
