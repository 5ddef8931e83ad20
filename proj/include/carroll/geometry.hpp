#pragma once

#include <algorithm>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "carroll/core.hpp"
#include "carroll/diff.hpp"

namespace carroll {

// ---------------------------------------------------------------------------
// Degenerate metric g = xdot^a xdot^b g_ab(x, t).

using BaseMetricFn = std::function<Mat(const Point&)>;

/// Raw-coordinate symmetric (n+1)x(n+1) tensor field.
using MetricField = std::function<Mat(const Point&)>;

struct DegenerateMetric {
    BaseMetricFn gM;
    bool time_dependent = false;
    std::optional<double> weight_hint;

    /// Base block g_ab at p, after domain and shape checks.
    Mat base(const Point& p) const {
        require_in_bundle(p);
        Mat g = gM(p);
        if (g.rows() != p.dim() || g.cols() != p.dim()) {
            throw ContractViolation("metric block is " + std::to_string(g.rows()) + "x" +
                                    std::to_string(g.cols()) + " but the base dimension is " +
                                    std::to_string(p.dim()));
        }
        return g;
    }

    /// Full form [[g_M, 0], [0, 0]]. Identical in the adapted and raw frames.
    Mat full(const Point& p) const {
        const int n = p.dim();
        Mat f = Mat::Zero(n + 1, n + 1);
        f.topLeftCorner(n, n) = base(p);
        return f;
    }

    MetricField raw_field() const {
        return [self = *this](const Point& p) { return self.full(p); };
    }
};

inline void require_same_base(const Point& p, const TangentVector& v) {
    if (v.dim() != p.dim()) {
        throw ContractViolation("tangent vector dimension " + std::to_string(v.dim()) +
                                " does not match base dimension " + std::to_string(p.dim()));
    }
    if (!same_point(v.base, p)) throw ContractViolation("tangent vector is not based at p");
}

/// g(v, w) = v^T [[g_M, 0], [0, 0]] w.
inline double metric_eval(const DegenerateMetric& g, const Point& p, const TangentVector& v,
                          const TangentVector& w) {
    require_in_bundle(p);
    require_same_base(p, v);
    require_same_base(p, w);
    return v.vx.dot(g.base(p) * w.vx);
}

// ---------------------------------------------------------------------------
// Vector fields, X = X^a d_a + X^t Delta.

struct VectorField {
    std::function<TangentVector(const Point&)> components;
    std::optional<double> weight;

    TangentVector operator()(const Point& p) const { return components(p); }

    /// Raw components (X^a, t X^t).
    Vec raw(const Point& p) const { return components(p).raw(); }

    static VectorField euler() {
        return {[](const Point& p) { return TangentVector::euler(p); }, 0.0};
    }

    /// f * Delta for a scalar function f on P.
    static VectorField scaled_euler(std::function<double(const Point&)> f) {
        return {[f = std::move(f)](const Point& p) {
                    return TangentVector(p, Vec::Zero(p.dim()), f(p));
                },
                std::nullopt};
    }

    /// Field given by raw components (X^a, X^t_raw) on (d_a, d_t).
    static VectorField from_raw(std::function<Vec(const Point&)> f) {
        return {[f = std::move(f)](const Point& p) { return TangentVector::from_raw(p, f(p)); },
                std::nullopt};
    }

    /// Lift of a base field X^a(x) d_a with zero Euler component.
    static VectorField base_field(std::function<Vec(const Vec&)> f) {
        return {[f = std::move(f)](const Point& p) { return TangentVector(p, f(p.x), 0.0); },
                0.0};
    }
};

/// Max |X^a| over samples; zero for vertical fields.
inline double verticality_defect(const VectorField& X, const std::vector<Point>& samples) {
    double worst = 0.0;
    for (const auto& p : samples) worst = std::max(worst, X(p).vx.cwiseAbs().maxCoeff());
    return worst;
}

// ---------------------------------------------------------------------------
// Lie derivatives.

/// Raw derivative tensor D(A, C) = d_C X^A.
inline Mat raw_field_jacobian(const VectorField& X, const Point& p, const DiffConfig& cfg) {
    const Vec r = p.raw();
    const int m = static_cast<int>(r.size());
    Mat d(m, m);
    auto f = [&](const Vec& rr) { return X.raw(Point::from_raw(rr, p.chart)); };
    for (int c = 0; c < m; ++c) d.col(c) = partial(f, r, c, raw_step(r, c, cfg), cfg.richardson);
    return d;
}

/// (L_X G)_AB = X^C d_C G_AB + (d_A X^C) G_CB + (d_B X^C) G_AC in raw (x, t).
inline Mat lie_derivative_metric(const VectorField& X, const MetricField& G, const Point& p,
                                 const DiffConfig& cfg = {}) {
    require_in_bundle(p);
    const Vec r = p.raw();
    const int m = static_cast<int>(r.size());
    const Mat g0 = G(p);
    const Vec xr = X.raw(p);
    Mat out = Mat::Zero(m, m);
    auto gf = [&](const Vec& rr) { return G(Point::from_raw(rr, p.chart)); };
    for (int c = 0; c < m; ++c) {
        if (xr(c) == 0.0) continue;
        const Mat dg = partial(gf, r, c, raw_step(r, c, cfg), cfg.richardson);
        out += xr(c) * dg;
    }
    const Mat d = raw_field_jacobian(X, p, cfg);
    out += d.transpose() * g0 + g0 * d;
    return out;
}

/// [X, Y]^A = X^B d_B Y^A - Y^B d_B X^A, raw components.
inline Vec lie_bracket_raw(const VectorField& X, const VectorField& Y, const Point& p,
                           const DiffConfig& cfg = {}) {
    return raw_field_jacobian(Y, p, cfg) * X.raw(p) - raw_field_jacobian(X, p, cfg) * Y.raw(p);
}

struct KillingReport {
    double residual = 0.0;      // max Frobenius norm of L_X g over samples
    double bracket_norm = 0.0;  // max |[Delta, X]| over samples
    bool projectable = false;   // [Delta, X] = 0 within tolerance
};

inline KillingReport killing_residual(const VectorField& X, const MetricField& G,
                                      const std::vector<Point>& samples,
                                      const DiffConfig& cfg = {}, double bracket_tol = 1e-8) {
    if (samples.empty()) throw ContractViolation("killing_residual needs at least one sample");
    KillingReport rep;
    const auto delta = VectorField::euler();
    for (const auto& p : samples) {
        rep.residual = std::max(rep.residual, lie_derivative_metric(X, G, p, cfg).norm());
        const Vec br = lie_bracket_raw(delta, X, p, cfg);
        rep.bracket_norm = std::max(rep.bracket_norm, br.cwiseAbs().maxCoeff());
    }
    rep.projectable = rep.bracket_norm <= bracket_tol;
    return rep;
}

// ---------------------------------------------------------------------------
// Symmetric tensors as quadratic functions on TP, and the two lifts acting on them.
//
// A quadratic form q(v) = v^T M v in adapted velocities (xdot, tdot/t). The
// vertical lift is the fibre derivative along X; contracting two lifts is
// normalized by 1/2 so that i_X i_Y g reproduces g(X, Y).

struct QuadraticForm {
    Mat coeffs;
    double operator()(const Vec& v) const { return v.dot(coeffs * v); }
};

struct LinearForm {
    Vec coeffs;
    double operator()(const Vec& v) const { return coeffs.dot(v); }
};

class VerticalLift {
public:
    explicit VerticalLift(Vec components) : c_(std::move(components)) {}

    /// Directional fibre derivative of a quadratic form: v -> 2 c^T M v.
    LinearForm operator()(const QuadraticForm& q) const {
        return LinearForm{2.0 * q.coeffs.transpose() * c_};
    }
    double operator()(const LinearForm& l) const { return l.coeffs.dot(c_); }

    const Vec& components() const { return c_; }

private:
    Vec c_;
};

/// Components (X^a on d/dxdot^a, X^t on d/dtb).
inline VerticalLift vertical_lift(const TangentVector& X) { return VerticalLift(X.adapted()); }

/// g(X, Y) through the lifts: (1/2) i_X i_Y q.
inline double lift_contract(const VerticalLift& ix, const VerticalLift& iy,
                            const QuadraticForm& q) {
    return 0.5 * ix(iy(q));
}

/// Adapted-frame field of quadratic forms (Point -> (n+1)x(n+1) matrix).
using AdaptedFormField = std::function<Mat(const Point&)>;

/// Tangent lift of X acting on an adapted quadratic-form field.
///
/// L_X = X^a d_a + X^t t d_t + (xdot^b d_b X^a + tb t d_t X^a) d/dxdot^a
///       + (xdot^b d_b X^t + tb (X^t + t d_t X^t)) d/dtb,
/// which on q = v^T M v gives X.dM + M K + K^T M with the velocity rate matrix K.
inline Mat tangent_lift(const VectorField& X, const AdaptedFormField& M, const Point& p,
                        const DiffConfig& cfg = {}) {
    require_in_bundle(p);
    const int n = p.dim();
    const Vec r = p.raw();
    const TangentVector x0 = X(p);
    const Mat m0 = M(p);

    auto mf = [&](const Vec& rr) { return M(Point::from_raw(rr, p.chart)); };
    Mat transport = Mat::Zero(n + 1, n + 1);
    for (int a = 0; a < n; ++a) {
        if (x0.vx(a) == 0.0) continue;
        transport += x0.vx(a) * partial(mf, r, a, raw_step(r, a, cfg), cfg.richardson);
    }
    if (x0.vtb != 0.0) {
        transport +=
            x0.vtb * p.t * partial(mf, r, n, raw_step(r, n, cfg), cfg.richardson);
    }

    // d_C of adapted components (X^a, X^t).
    auto af = [&](const Vec& rr) { return X(Point::from_raw(rr, p.chart)).adapted(); };
    Mat d(n + 1, n + 1);
    for (int c = 0; c <= n; ++c) d.col(c) = partial(af, r, c, raw_step(r, c, cfg), cfg.richardson);

    Mat k(n + 1, n + 1);
    k.topLeftCorner(n, n) = d.topLeftCorner(n, n);
    k.block(0, n, n, 1) = p.t * d.block(0, n, n, 1);
    k.block(n, 0, 1, n) = d.block(n, 0, 1, n);
    k(n, n) = x0.vtb + p.t * d(n, n);

    return transport + m0 * k + k.transpose() * m0;
}

// ---------------------------------------------------------------------------
// Homogeneity of g under the Euler field.

struct EulerWeight {
    bool proportional = false;  // L_Delta g = k g at p within tolerance
    double factor = 0.0;        // least-squares k
    double residual = 0.0;      // max |L - k g| / max |g|
    Mat lie_derivative;         // t d_t g_M
    Mat residual_matrix;        // L - k g
};

/// (L_Delta g)(p) = t d_t g_M by central difference, and its ratio to g.
inline EulerWeight euler_weight(const DegenerateMetric& g, const Point& p,
                                const DiffConfig& cfg = {}, double rel_tol = 1e-6) {
    require_in_bundle(p);
    const Mat g0 = g.base(p);
    const double h = fiber_step(p.t, cfg);
    auto gt = [&](double t) { return g.base(Point(p.x, t, p.chart)); };
    const Mat dgdt = central_difference(gt, p.t, h, cfg.richardson);

    EulerWeight w;
    w.lie_derivative = p.t * dgdt;
    const double gg = g0.squaredNorm();
    w.factor = gg > 0.0 ? (w.lie_derivative.cwiseProduct(g0)).sum() / gg : 0.0;
    w.residual_matrix = w.lie_derivative - w.factor * g0;
    const double scale = std::max(g0.cwiseAbs().maxCoeff(), 1e-300);
    w.residual = w.residual_matrix.cwiseAbs().maxCoeff() / scale;
    w.proportional = w.residual <= rel_tol;
    return w;
}

enum class EulerKind { Killing, Homogeneous, Conformal, General };

inline const char* to_string(EulerKind k) {
    switch (k) {
        case EulerKind::Killing: return "killing";
        case EulerKind::Homogeneous: return "homogeneous";
        case EulerKind::Conformal: return "conformal";
        case EulerKind::General: return "general";
    }
    return "general";
}

struct EulerClassification {
    EulerKind kind = EulerKind::General;
    double weight = 0.0;           // valid for Killing / Homogeneous
    double max_residual = 0.0;     // worst proportionality residual
    std::vector<double> factors;   // per-sample k
};

inline EulerClassification classify_euler(const DegenerateMetric& g,
                                          const std::vector<Point>& samples,
                                          const DiffConfig& cfg = {}, double rel_tol = 1e-6) {
    if (samples.empty()) throw ContractViolation("classify_euler needs samples");
    EulerClassification c;
    bool all_prop = true;
    double kmin = 1e300, kmax = -1e300;
    for (const auto& p : samples) {
        const auto w = euler_weight(g, p, cfg, rel_tol);
        c.factors.push_back(w.factor);
        c.max_residual = std::max(c.max_residual, w.residual);
        all_prop = all_prop && w.proportional;
        kmin = std::min(kmin, w.factor);
        kmax = std::max(kmax, w.factor);
    }
    if (!all_prop) {
        c.kind = EulerKind::General;
        return c;
    }
    const double spread = kmax - kmin;
    const double mid = 0.5 * (kmax + kmin);
    if (spread <= rel_tol * std::max(1.0, std::abs(mid))) {
        c.weight = mid;
        c.kind = std::abs(mid) <= rel_tol ? EulerKind::Killing : EulerKind::Homogeneous;
    } else {
        c.kind = EulerKind::Conformal;
    }
    return c;
}

}  // namespace carroll
