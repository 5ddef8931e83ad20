#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "carroll/connection.hpp"
#include "carroll/core.hpp"
#include "carroll/diff.hpp"
#include "carroll/geometry.hpp"

namespace carroll {

// ---------------------------------------------------------------------------
// Christoffel symbols Gamma^A_{BC}, indices 0..n-1 base and n the fiber.

class Christoffel {
public:
    enum class Provenance { ClosedForm, Numeric };

    Christoffel() = default;
    Christoffel(int size, Provenance prov)
        : m_(size), prov_(prov), data_(static_cast<std::size_t>(size * size * size), 0.0) {}

    int size() const { return m_; }
    Provenance provenance() const { return prov_; }

    double operator()(int a, int b, int c) const { return data_[index(a, b, c)]; }
    double& at(int a, int b, int c) { return data_[index(a, b, c)]; }

    /// Sets Gamma^a_{bc} and Gamma^a_{cb}.
    void set_sym(int a, int b, int c, double v) {
        at(a, b, c) = v;
        at(a, c, b) = v;
    }

    void symmetrize() {
        for (int a = 0; a < m_; ++a)
            for (int b = 0; b < m_; ++b)
                for (int c = b + 1; c < m_; ++c) {
                    const double v = 0.5 * (at(a, b, c) + at(a, c, b));
                    at(a, b, c) = v;
                    at(a, c, b) = v;
                }
    }

    double max_lower_asymmetry() const {
        double worst = 0.0;
        for (int a = 0; a < m_; ++a)
            for (int b = 0; b < m_; ++b)
                for (int c = 0; c < m_; ++c)
                    worst = std::max(worst, std::abs((*this)(a, b, c) - (*this)(a, c, b)));
        return worst;
    }

    /// Gamma^A_{BC} v^B w^C.
    Vec contract(const Vec& v, const Vec& w) const {
        Vec out = Vec::Zero(m_);
        for (int a = 0; a < m_; ++a) {
            double s = 0.0;
            for (int b = 0; b < m_; ++b) {
                if (v(b) == 0.0) continue;
                for (int c = 0; c < m_; ++c) s += (*this)(a, b, c) * v(b) * w(c);
            }
            out(a) = s;
        }
        return out;
    }
    Vec contract(const Vec& v) const { return contract(v, v); }

    double max_abs_difference(const Christoffel& o) const {
        if (o.m_ != m_) throw ContractViolation("Christoffel size mismatch");
        double worst = 0.0;
        for (std::size_t k = 0; k < data_.size(); ++k) {
            worst = std::max(worst, std::abs(data_[k] - o.data_[k]));
        }
        return worst;
    }

private:
    std::size_t index(int a, int b, int c) const {
        return static_cast<std::size_t>((a * m_ + b) * m_ + c);
    }

    int m_ = 0;
    Provenance prov_ = Provenance::Numeric;
    std::vector<double> data_;
};

// ---------------------------------------------------------------------------
// The non-degenerate metrics g + sigma omega^2.

// Adapted components: G_xx = g_M + sigma A A^T, G_xt = sigma A, G_tt = sigma.
// Raw components follow from the frame factor: G_xt = sigma A / t, G_tt = sigma / t^2.
class KKMetric {
public:
    // Adapted-frame condition numbers above this are treated as degenerate.
    static constexpr double kMaxCondition = 1e12;

    KKMetric(DegenerateMetric g, GaugeField a, int sigma)
        : g_(std::move(g)), a_(std::move(a)), sigma_(sigma) {
        if (sigma != 1 && sigma != -1) throw ContractViolation("KK sign must be +1 or -1");
    }

    int sigma() const { return sigma_; }
    const DegenerateMetric& base_metric() const { return g_; }
    const GaugeField& gauge() const { return a_; }

    Mat adapted(const Point& p) const {
        require_in_bundle(p);
        const int n = p.dim();
        const Mat gm = g_.base(p);
        const Vec a = a_(p);
        if (a.size() != n) throw ContractViolation("gauge field dimension mismatch");
        const double s = sigma_;
        Mat out(n + 1, n + 1);
        out.topLeftCorner(n, n) = gm + s * a * a.transpose();
        out.block(0, n, n, 1) = s * a;
        out.block(n, 0, 1, n) = s * a.transpose();
        out(n, n) = s;
        return symmetrized(out);
    }

    Mat raw(const Point& p) const { return to_raw_form(adapted(p), p.t); }

    MetricField raw_field() const {
        return [self = *this](const Point& p) { return self.raw(p); };
    }

    double condition(const Point& p) const {
        const Eigen::SelfAdjointEigenSolver<Mat> es(adapted(p), Eigen::EigenvaluesOnly);
        const Vec ev = es.eigenvalues().cwiseAbs();
        return ev.maxCoeff() / std::max(ev.minCoeff(), 1e-300);
    }

    /// Inverse of the raw matrix, computed through the adapted frame.
    Mat raw_inverse(const Point& p) const {
        const Mat ad = adapted(p);
        const Eigen::SelfAdjointEigenSolver<Mat> es(ad, Eigen::EigenvaluesOnly);
        const Vec ev = es.eigenvalues().cwiseAbs();
        if (ev.maxCoeff() / std::max(ev.minCoeff(), 1e-300) > kMaxCondition) {
            throw NumericError("KK metric is ill-conditioned at the requested point");
        }
        const int n = p.dim();
        Mat e = Mat::Identity(n + 1, n + 1);
        e(n, n) = p.t;
        return e * ad.inverse() * e;
    }

    /// G(v, w) in the adapted frame.
    double eval(const TangentVector& v, const TangentVector& w) const {
        return v.adapted().dot(adapted(v.base) * w.adapted());
    }

private:
    DegenerateMetric g_;
    GaugeField a_;
    int sigma_;
};

inline KKMetric build_kk(const DegenerateMetric& g, const ConnectionOneForm& omega, int sigma) {
    return KKMetric(g, omega.gauge, sigma);
}

// ---------------------------------------------------------------------------
// Levi-Civita symbols: finite-difference oracle.

/// Raw partials dG[C] = d_C G_raw, C = 0..n.
inline std::vector<Mat> raw_metric_partials(const MetricField& G, const Point& p,
                                            const DiffConfig& cfg) {
    const Vec r = p.raw();
    const int m = static_cast<int>(r.size());
    auto gf = [&](const Vec& rr) { return G(Point::from_raw(rr, p.chart)); };
    std::vector<Mat> d;
    d.reserve(static_cast<std::size_t>(m));
    for (int c = 0; c < m; ++c) d.push_back(partial(gf, r, c, raw_step(r, c, cfg), cfg.richardson));
    return d;
}

inline Christoffel levi_civita(const Mat& ginv, const std::vector<Mat>& dg,
                               Christoffel::Provenance prov) {
    const int m = static_cast<int>(ginv.rows());
    Christoffel gam(m, prov);
    for (int b = 0; b < m; ++b) {
        for (int c = b; c < m; ++c) {
            // lowered Gamma_{D,BC}
            Vec low(m);
            for (int d = 0; d < m; ++d) low(d) = 0.5 * (dg[b](d, c) + dg[c](d, b) - dg[d](b, c));
            const Vec up = ginv * low;
            for (int a = 0; a < m; ++a) gam.set_sym(a, b, c, up(a));
        }
    }
    return gam;
}

/// Gamma^A_{BC} = 1/2 G^{AD}(d_B G_DC + d_C G_DB - d_D G_BC) in raw (x, t).
inline Christoffel christoffel_numeric(const KKMetric& G, const Point& p,
                                       const DiffConfig& cfg = {}) {
    require_in_bundle(p);
    const Mat ginv = G.raw_inverse(p);
    return levi_civita(ginv, raw_metric_partials(G.raw_field(), p, cfg),
                       Christoffel::Provenance::Numeric);
}

/// Levi-Civita symbols of g_M at fixed t (base derivatives only).
inline Christoffel base_christoffel_numeric(const DegenerateMetric& g, const Point& p,
                                            const DiffConfig& cfg = {}) {
    const int n = p.dim();
    const Mat ginv = g.base(p).inverse();
    auto gf = [&](const Vec& x) { return g.base(Point(x, p.t, p.chart)); };
    std::vector<Mat> dg;
    for (int c = 0; c < n; ++c) dg.push_back(partial(gf, p.x, c, base_step(p.x(c), cfg), cfg.richardson));
    return levi_civita(ginv, dg, Christoffel::Provenance::Numeric);
}

/// Optional closed-form Gamma~ of g_M supplied by a scenario.
using BaseChristoffelFn = std::function<Christoffel(const Point&)>;

/// d_t g_M at p (relative fiber step).
inline Mat time_derivative(const DegenerateMetric& g, const Point& p, const DiffConfig& cfg = {}) {
    auto gt = [&](double t) { return g.base(Point(p.x, t, p.chart)); };
    return central_difference(gt, p.t, fiber_step(p.t, cfg), cfg.richardson);
}

// ---------------------------------------------------------------------------
// Closed-form list for g + omega^2. The F terms in G^c_at and G^t_at carry F_ad and
// F_ac; the reversed order gives the wrong sign against the oracle.
//
//  G^c_ab = G~^c_ab + 1/2 g^cd (A_b F_ad + A_a F_bd) + 1/2 g^cd A_d t d_t g_ab
//  G^c_at = 1/2 g^cd (d_t g_ad + F_ad / t)
//  G^t_ab = -t A_c G~^c_ab - t/2 g^cd A_d (A_b F_ac + A_a F_bc) + t/2 (d_a A_b + d_b A_a)
//           - t^2/2 (1 + g^cd A_c A_d) d_t g_ab
//  G^t_at = -1/2 g^cd A_d F_ac - t/2 g^cd A_d d_t g_cd      (summed over c, d)
//  G^t_tt = -1/t
//
// With A = 0 this is exact for either sign once the t^2 term carries sigma. For
// A != 0 only sigma = +1 is defined; agreement with the oracle is reported by
// callers, not assumed.
inline Christoffel christoffel_closed_form(const KKMetric& G, const Point& p,
                                           const BaseChristoffelFn& base = nullptr,
                                           const DiffConfig& cfg = {}) {
    require_in_bundle(p);
    const int n = p.dim();
    const double t = p.t;
    const DegenerateMetric& g = G.base_metric();
    const Mat gm = g.base(p);
    const Mat ginv = gm.inverse();
    const Mat dt_g = g.time_dependent ? time_derivative(g, p, cfg) : Mat::Zero(n, n);
    const Vec a = G.gauge()(p);
    const bool zero_gauge = G.gauge().trivial || a.cwiseAbs().maxCoeff() == 0.0;
    if (G.sigma() == -1 && !zero_gauge) {
        throw ContractViolation("closed-form Christoffel list for sigma = -1 requires A = 0");
    }
    const Mat f = zero_gauge && G.gauge().trivial ? Mat::Zero(n, n) : curvature(G.gauge(), p.x, p.chart, cfg);
    const Mat da = zero_gauge && G.gauge().trivial
                       ? Mat::Zero(n, n)
                       : jacobian([&](const Vec& x) { return G.gauge().at(x, p.chart); }, p.x, cfg);
    // da(b, a) = d_a A_b
    const Christoffel tb = base ? base(p) : base_christoffel_numeric(g, p, cfg);
    const Vec ginv_a = ginv * a;  // g^{cd} A_d
    const double a2 = a.dot(ginv_a);

    Christoffel out(n + 1, Christoffel::Provenance::ClosedForm);
    for (int c = 0; c < n; ++c) {
        for (int i = 0; i < n; ++i) {
            for (int j = i; j < n; ++j) {
                double v = tb(c, i, j);
                for (int d = 0; d < n; ++d) {
                    v += 0.5 * ginv(c, d) * (a(j) * f(i, d) + a(i) * f(j, d));
                }
                v += 0.5 * ginv_a(c) * t * dt_g(i, j);
                out.set_sym(c, i, j, v);
            }
        }
        for (int i = 0; i < n; ++i) {
            double v = 0.0;
            for (int d = 0; d < n; ++d) v += 0.5 * ginv(c, d) * (dt_g(i, d) + f(i, d) / t);
            out.set_sym(c, i, n, v);
        }
        out.set_sym(c, n, n, 0.0);
    }
    for (int i = 0; i < n; ++i) {
        for (int j = i; j < n; ++j) {
            double v = 0.0;
            for (int c = 0; c < n; ++c) v -= t * a(c) * tb(c, i, j);
            for (int c = 0; c < n; ++c) {
                v -= 0.5 * t * ginv_a(c) * (a(j) * f(i, c) + a(i) * f(j, c));
            }
            v += 0.5 * t * (da(j, i) + da(i, j));
            v -= G.sigma() * 0.5 * t * t * (1.0 + a2) * dt_g(i, j);
            out.set_sym(n, i, j, v);
        }
    }
    for (int i = 0; i < n; ++i) {
        double v = 0.0;
        for (int c = 0; c < n; ++c) v -= 0.5 * ginv_a(c) * f(i, c);
        double lit = 0.0;
        for (int c = 0; c < n; ++c)
            for (int d = 0; d < n; ++d) lit += ginv(c, d) * a(d) * dt_g(c, d);
        v -= 0.5 * t * lit;
        out.set_sym(n, i, n, v);
    }
    out.set_sym(n, n, n, -1.0 / t);
    return out;
}

/// Evaluates the numeric oracle at many points, split across worker threads.
inline std::vector<Christoffel> christoffel_batch(const KKMetric& G, const std::vector<Point>& pts,
                                                  const DiffConfig& cfg = {},
                                                  unsigned workers = 0) {
    std::vector<Christoffel> out(pts.size());
    parallel_for(pts.size(), workers, [&](std::size_t i) { out[i] = christoffel_numeric(G, pts[i], cfg); });
    return out;
}

// ---------------------------------------------------------------------------
// Metricity, volume, divergence.

/// nabla_C T_AB = d_C T_AB - Gamma^D_CA T_DB - Gamma^D_CB T_AD for a raw field T.
inline std::vector<Mat> covariant_derivative_metric(const Christoffel& gam, const MetricField& T,
                                                    const Point& p, const DiffConfig& cfg = {}) {
    const auto dt = raw_metric_partials(T, p, cfg);
    const Mat t0 = T(p);
    const int m = gam.size();
    std::vector<Mat> out;
    for (int c = 0; c < m; ++c) {
        Mat v = dt[static_cast<std::size_t>(c)];
        for (int a = 0; a < m; ++a)
            for (int b = 0; b < m; ++b) {
                double s = 0.0;
                for (int d = 0; d < m; ++d) s += gam(d, c, a) * t0(d, b) + gam(d, c, b) * t0(a, d);
                v(a, b) -= s;
            }
        out.push_back(std::move(v));
    }
    return out;
}

/// nabla g for the zero-padded degenerate metric.
inline std::vector<Mat> metric_compatibility_residual(const Christoffel& gam,
                                                      const DegenerateMetric& g, const Point& p,
                                                      const DiffConfig& cfg = {}) {
    return covariant_derivative_metric(gam, g.raw_field(), p, cfg);
}

inline double max_abs(const std::vector<Mat>& ms) {
    double worst = 0.0;
    for (const auto& m : ms) worst = std::max(worst, m.cwiseAbs().maxCoeff());
    return worst;
}

/// rho = sqrt|det g_M| / |t|.
inline double volume_density(const DegenerateMetric& g, const Point& p) {
    require_in_bundle(p);
    return std::sqrt(std::abs(g.base(p).determinant())) / std::abs(p.t);
}

/// Div X = rho^{-1} d_A (rho X^A) in raw coordinates.
inline double divergence(const VectorField& X, const DegenerateMetric& g, const Point& p,
                         const DiffConfig& cfg = {}) {
    require_in_bundle(p);
    const Vec r = p.raw();
    const int m = static_cast<int>(r.size());
    double s = 0.0;
    for (int a = 0; a < m; ++a) {
        auto f = [&](const Vec& rr) {
            const Point q = Point::from_raw(rr, p.chart);
            return volume_density(g, q) * X.raw(q)(a);
        };
        s += partial(f, r, a, raw_step(r, a, cfg), cfg.richardson);
    }
    return s / volume_density(g, p);
}

/// Div X from L_X Vol = Div(X) Vol, using Vol of the KK metric: 1/2 tr(G^{-1} L_X G).
inline double divergence_lie(const VectorField& X, const KKMetric& G, const Point& p,
                             const DiffConfig& cfg = {}) {
    const Mat l = lie_derivative_metric(X, G.raw_field(), p, cfg);
    return 0.5 * (G.raw_inverse(p) * l).trace();
}

// ---------------------------------------------------------------------------
// Behaviour of nabla_X Y as t -> 0.

struct RegularityReport {
    std::vector<double> ts;
    std::vector<Vec> values;  // (nabla_X Y)^A at each t, raw components
    Vec growth;               // per component: max over the last three decades / value at their start
    bool bounded = true;
};

inline std::vector<double> default_t_sequence() { return {1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6}; }

/// (nabla_X Y)^A = X^B d_B Y^A + Gamma^A_BC X^B Y^C along t in `ts` at fixed base point x.
///
/// A component is unbounded when its magnitude grows by a factor >= 10 over the
/// last three decades of t (floor 1e-8 on the reference magnitude).
inline RegularityReport regularity_probe(const KKMetric& G, const VectorField& X,
                                         const VectorField& Y, const Vec& x, int chart = 0,
                                         std::vector<double> ts = default_t_sequence(),
                                         const DiffConfig& cfg = {}) {
    if (ts.size() < 4) throw ContractViolation("regularity probe needs at least four t values");
    RegularityReport rep;
    rep.ts = ts;
    for (double t : ts) {
        const Point p(x, t, chart);
        const Christoffel gam = christoffel_numeric(G, p, cfg);
        const Vec xr = X.raw(p);
        const Vec yr = Y.raw(p);
        const Vec dy = raw_field_jacobian(Y, p, cfg) * xr;
        rep.values.push_back(dy + gam.contract(xr, yr));
    }
    const std::size_t m = rep.values.front().size();
    const std::size_t start = ts.size() - 4;
    rep.growth = Vec::Zero(static_cast<Eigen::Index>(m));
    for (std::size_t a = 0; a < m; ++a) {
        const double ref = std::max(std::abs(rep.values[start](static_cast<Eigen::Index>(a))), 1e-8);
        double mx = 0.0;
        for (std::size_t k = start; k < ts.size(); ++k) {
            mx = std::max(mx, std::abs(rep.values[k](static_cast<Eigen::Index>(a))));
        }
        rep.growth(static_cast<Eigen::Index>(a)) = mx / ref;
        if (mx / ref >= 10.0) rep.bounded = false;
    }
    return rep;
}

/// det of the raw KK matrix; equals sigma t^-2 det g_M.
inline double kk_raw_determinant(const KKMetric& G, const Point& p) {
    return G.raw(p).determinant();
}

/// (positive, negative) eigenvalue counts of the raw KK matrix.
inline std::pair<int, int> signature(const KKMetric& G, const Point& p) {
    const Eigen::SelfAdjointEigenSolver<Mat> es(G.raw(p), Eigen::EigenvaluesOnly);
    int pos = 0, neg = 0;
    for (int i = 0; i < es.eigenvalues().size(); ++i) {
        if (es.eigenvalues()(i) > 0) ++pos;
        else if (es.eigenvalues()(i) < 0) ++neg;
    }
    return {pos, neg};
}

}  // namespace carroll
