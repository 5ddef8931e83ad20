#pragma once

#include <cmath>
#include <algorithm>
#include <cstddef>
#include <exception>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace carroll {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Error taxonomy shared by all modules.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Point or step outside the bundle (t = 0, chart exit, sampling domain).
class DomainError : public Error {
public:
    using Error::Error;
};

// Caller broke a precondition (dimension mismatch, non-unit direction, ...).
class ContractViolation : public Error {
public:
    using Error::Error;
};

// Ill-conditioned or non-finite numerics.
class NumericError : public Error {
public:
    using Error::Error;
};

// Inconsistent input data for a construction (partition, section, atlas).
class ConstructionError : public Error {
public:
    using Error::Error;
};

class ParseError : public Error {
public:
    using Error::Error;
};

// Points with |t| below this are not in P (the zero section is removed).
inline constexpr double kFiberCutoff = 1e-9;

/// A point of P in adapted coordinates (x^a, t) of chart `chart`.
struct Point {
    Vec x;
    double t = 1.0;
    int chart = 0;

    Point() = default;
    Point(Vec x_, double t_, int chart_ = 0) : x(std::move(x_)), t(t_), chart(chart_) {}

    int dim() const { return static_cast<int>(x.size()); }

    /// Raw coordinate vector (x^1..x^n, t).
    Vec raw() const {
        Vec r(x.size() + 1);
        r.head(x.size()) = x;
        r(x.size()) = t;
        return r;
    }

    static Point from_raw(const Vec& r, int chart = 0) {
        const auto n = r.size() - 1;
        return Point(r.head(n), r(n), chart);
    }
};

inline void require_in_bundle(const Point& p) {
    if (!std::isfinite(p.t) || std::abs(p.t) < kFiberCutoff) {
        throw DomainError("point lies on (or too close to) the zero section: t = " +
                          std::to_string(p.t));
    }
    if (p.dim() < 1) throw ContractViolation("base dimension must be >= 1");
}

inline bool same_point(const Point& a, const Point& b) {
    return a.chart == b.chart && a.t == b.t && a.x.size() == b.x.size() && a.x == b.x;
}

/// Tangent vector in the adapted frame (d/dx^a, Euler field).
///
/// `vtb` is the Euler-frame component, i.e. the adapted velocity tdot/t.
struct TangentVector {
    Point base;
    Vec vx;
    double vtb = 0.0;

    TangentVector() = default;
    TangentVector(Point p, Vec v, double vt_bold)
        : base(std::move(p)), vx(std::move(v)), vtb(vt_bold) {}

    int dim() const { return static_cast<int>(vx.size()); }

    /// Components (vx, vtb) stacked as an (n+1)-vector in the adapted frame.
    Vec adapted() const {
        Vec r(vx.size() + 1);
        r.head(vx.size()) = vx;
        r(vx.size()) = vtb;
        return r;
    }

    /// Components on (d/dx^a, d/dt): the last entry is tdot = t * vtb.
    Vec raw() const {
        Vec r = adapted();
        r(vx.size()) *= base.t;
        return r;
    }

    static TangentVector from_raw(const Point& p, const Vec& raw) {
        const auto n = raw.size() - 1;
        return TangentVector(p, raw.head(n), raw(n) / p.t);
    }

    static TangentVector from_adapted(const Point& p, const Vec& a) {
        const auto n = a.size() - 1;
        return TangentVector(p, a.head(n), a(n));
    }

    static TangentVector euler(const Point& p) {
        return TangentVector(p, Vec::Zero(p.dim()), 1.0);
    }

    static TangentVector zero(const Point& p) {
        return TangentVector(p, Vec::Zero(p.dim()), 0.0);
    }

    TangentVector operator+(const TangentVector& o) const {
        return TangentVector(base, vx + o.vx, vtb + o.vtb);
    }
    TangentVector operator-(const TangentVector& o) const {
        return TangentVector(base, vx - o.vx, vtb - o.vtb);
    }
    TangentVector operator*(double s) const { return TangentVector(base, vx * s, vtb * s); }
};

/// Frame change matrix E with v_adapted = E * v_raw, E = diag(1, ..., 1, 1/t).
inline Mat adapted_from_raw(int n, double t) {
    Mat e = Mat::Identity(n + 1, n + 1);
    e(n, n) = 1.0 / t;
    return e;
}

/// Adapted-frame bilinear form -> raw-coordinate components.
inline Mat to_raw_form(const Mat& adapted, double t) {
    const int n = static_cast<int>(adapted.rows()) - 1;
    const Mat e = adapted_from_raw(n, t);
    return e * adapted * e;
}

inline Mat to_adapted_form(const Mat& raw, double t) {
    const int n = static_cast<int>(raw.rows()) - 1;
    Mat e = Mat::Identity(n + 1, n + 1);
    e(n, n) = t;
    return e * raw * e;
}

inline double max_asymmetry(const Mat& m) {
    return (m - m.transpose()).cwiseAbs().maxCoeff();
}

inline Mat symmetrized(const Mat& m) { return 0.5 * (m + m.transpose()); }

inline bool all_finite(const Vec& v) { return v.allFinite(); }

/// Runs fn(i) for i in [0, count) on up to `workers` threads (0 = hardware).
/// The first exception thrown by any task is rethrown after all threads join.
template <class Fn>
void parallel_for(std::size_t count, unsigned workers, Fn&& fn) {
    if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
    workers = static_cast<unsigned>(std::min<std::size_t>(workers, std::max<std::size_t>(count, 1)));
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(workers);
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            try {
                for (std::size_t i = w; i < count; i += workers) fn(i);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

}  // namespace carroll
