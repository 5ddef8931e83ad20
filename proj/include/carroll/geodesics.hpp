#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "carroll/atlas.hpp"
#include "carroll/connection.hpp"
#include "carroll/core.hpp"
#include "carroll/kk_metric.hpp"
#include "carroll/ode.hpp"

namespace carroll {

// State of a geodesic of the sigma = -1 KK metric in raw coordinates.
struct GeodesicState {
    Vec x;
    double t = 1.0;
    Vec vx;
    double vt = 0.0;  // dt/dlambda
    double lambda = 0.0;
    int chart = 0;

    int dim() const { return static_cast<int>(x.size()); }
    Point point() const { return Point(x, t, chart); }

    /// (x, t, vx, vt) stacked.
    Vec packed() const {
        const int n = dim();
        Vec y(2 * n + 2);
        y.head(n) = x;
        y(n) = t;
        y.segment(n + 1, n) = vx;
        y(2 * n + 1) = vt;
        return y;
    }

    static GeodesicState unpack(const Vec& y, double lambda, int chart) {
        const auto n = (y.size() - 2) / 2;
        GeodesicState s;
        s.x = y.head(n);
        s.t = y(n);
        s.vx = y.segment(n + 1, n);
        s.vt = y(2 * n + 1);
        s.lambda = lambda;
        s.chart = chart;
        return s;
    }
};

/// Q = -(vt/t + vx . A(x)).
inline double carroll_charge(const GeodesicState& s, const GaugeField& A) {
    if (s.t == 0.0) throw DomainError("carroll_charge at t = 0");
    return -(s.vt / s.t + s.vx.dot(A.at(s.x, s.chart)));
}

/// <vx, vx>_{g_M}.
inline double base_speed2(const GeodesicState& s, const DegenerateMetric& g) {
    return s.vx.dot(g.base(s.point()) * s.vx);
}

/// <vx, vx>_{g_M} - (vt/t + vx . A)^2; zero on null states.
inline double null_residual(const GeodesicState& s, const DegenerateMetric& g, const GaugeField& A) {
    const double q = carroll_charge(s, A);
    return base_speed2(s, g) - q * q;
}

struct NullShootSpec {
    Vec x0;
    Vec u;             // unit base direction in g_M(x0, t0); unused when Q = 0
    double Q = 0.0;
    double t0 = 1.0;
    int eps = 1;       // direction along u
    int delta = 0;     // growth (+1) or decay (-1) of |t|; 0 = take it from Q
    int chart = 0;
};

/// Null initial state with charge Q: vx = eps |Q| u, vt = -t0 (Q + vx . A(x0)).
///
/// Along such a state dt/dlambda / t = -(Q + vx . A), so the fiber grows like
/// exp(delta |Q| lambda) with delta = -sgn(Q); a conflicting delta is rejected.
inline GeodesicState shoot_null(const NullShootSpec& spec, const DegenerateMetric& g,
                                const GaugeField& A) {
    const Point p(spec.x0, spec.t0, spec.chart);
    require_in_bundle(p);
    if (spec.u.size() != p.dim()) throw ContractViolation("direction has the wrong dimension");
    if (spec.eps != 1 && spec.eps != -1) throw ContractViolation("eps must be +1 or -1");
    if (spec.delta < -1 || spec.delta > 1) throw ContractViolation("delta must be -1, 0 or +1");
    const double norm2 = spec.u.dot(g.base(p) * spec.u);
    if (spec.Q != 0.0 && std::abs(std::sqrt(std::max(norm2, 0.0)) - 1.0) > 1e-10) {
        throw ContractViolation("direction is not unit in g_M: |u| = " +
                                std::to_string(std::sqrt(std::max(norm2, 0.0))));
    }
    if (spec.Q != 0.0 && spec.delta != 0 && spec.delta != (spec.Q > 0 ? -1 : 1)) {
        throw ContractViolation("delta = " + std::to_string(spec.delta) +
                                " is inconsistent with the sign of Q (delta = -sgn Q)");
    }
    GeodesicState s;
    s.x = spec.x0;
    s.t = spec.t0;
    s.chart = spec.chart;
    s.vx = spec.eps * std::abs(spec.Q) * spec.u;
    s.vt = -spec.t0 * (spec.Q + s.vx.dot(A.at(spec.x0, spec.chart)));
    return s;
}

enum class ChristoffelSource { Numeric, ClosedForm };

enum class GeodesicEvent { None, TGuard, NonFinite, StepUnderflow, ChartExit, MaxSteps };

inline const char* to_string(GeodesicEvent e) {
    switch (e) {
        case GeodesicEvent::None: return "none";
        case GeodesicEvent::TGuard: return "t_guard";
        case GeodesicEvent::NonFinite: return "non_finite";
        case GeodesicEvent::StepUnderflow: return "step_underflow";
        case GeodesicEvent::ChartExit: return "chart_exit";
        case GeodesicEvent::MaxSteps: return "max_steps";
    }
    return "none";
}

struct IntegratorConfig {
    ode::Config ode;
    double lambda_max = 10.0;
    double t_guard_rel = 1e-6;  // stop once |t| < t_guard_rel |t0|
    double chart_margin = 0.2;  // switch charts when the chart depth falls below this
    ChristoffelSource source = ChristoffelSource::Numeric;
    DiffConfig diff;
};

struct Trajectory {
    std::vector<GeodesicState> samples;
    std::vector<double> charge;
    std::vector<double> null_residual;
    std::vector<double> base_speed2;
    GeodesicEvent event = GeodesicEvent::None;
    std::string event_detail;
    std::string scenario;
    IntegratorConfig config;
    std::size_t accepted = 0;
    std::size_t rejected = 0;

    std::size_t size() const { return samples.size(); }
    const GeodesicState& back() const { return samples.back(); }

    double max_charge_drift() const {
        double worst = 0.0;
        for (double q : charge) worst = std::max(worst, std::abs(q - charge.front()));
        return worst / std::max(1.0, std::abs(charge.front()));
    }

    double max_null_drift() const {
        double worst = 0.0;
        for (double r : null_residual) worst = std::max(worst, std::abs(r - null_residual.front()));
        return worst;
    }
};

// Geodesic flow of g - omega^2.
class GeodesicFlow {
public:
    explicit GeodesicFlow(KKMetric G, std::shared_ptr<const Atlas> atlas = nullptr,
                          BaseChristoffelFn base = nullptr)
        : G_(std::move(G)), atlas_(std::move(atlas)), base_(std::move(base)) {
        if (G_.sigma() != -1) throw ContractViolation("geodesic flow uses the sigma = -1 metric");
    }

    const KKMetric& metric() const { return G_; }
    const DegenerateMetric& base_metric() const { return G_.base_metric(); }
    const GaugeField& gauge() const { return G_.gauge(); }

    Christoffel christoffel(const Point& p, ChristoffelSource src, const DiffConfig& cfg = {}) const {
        return src == ChristoffelSource::ClosedForm ? christoffel_closed_form(G_, p, base_, cfg)
                                                    : christoffel_numeric(G_, p, cfg);
    }

    /// (xddot, tddot) = -Gamma(v, v).
    Vec acceleration(const GeodesicState& s, ChristoffelSource src = ChristoffelSource::Numeric,
                     const DiffConfig& cfg = {}) const {
        const Point p = s.point();
        Vec v(s.dim() + 1);
        v.head(s.dim()) = s.vx;
        v(s.dim()) = s.vt;
        return -christoffel(p, src, cfg).contract(v);
    }

    /// The spatial and temporal equations as printed, evaluated term by term:
    ///   xddot = -G~(v, v) - (tdot/t + v.A) g^-1 F v
    ///           - 1/2 g^-1 (A F_cd + A_c F_.d + A_d F_.c) v^d v^c
    ///   tddot = -t (1/2 (d_a A_b + d_b A_a) v^a v^b + xddot . A) + tdot^2 / t
    Vec transcribed_acceleration(const GeodesicState& s, const DiffConfig& cfg = {}) const {
        const int n = s.dim();
        const Point p = s.point();
        const Mat ginv = base_metric().base(p).inverse();
        const Christoffel tb = base_ ? base_(p) : base_christoffel_numeric(base_metric(), p, cfg);
        const Vec a = gauge()(p);
        const Mat f = curvature(gauge(), s.x, s.chart, cfg);
        const Mat da = jacobian([&](const Vec& y) { return gauge().at(y, s.chart); }, s.x, cfg);
        const Vec& v = s.vx;
        const double w = s.vt / s.t + v.dot(a);

        Vec xdd = -tb.contract(v) - w * (ginv * (f * v));
        for (int i = 0; i < n; ++i) {
            double sum = 0.0;
            for (int c = 0; c < n; ++c)
                for (int d = 0; d < n; ++d) {
                    double term = 0.0;
                    for (int b = 0; b < n; ++b) {
                        term += ginv(i, b) * a(b) * f(c, d) + a(c) * ginv(i, b) * f(b, d) +
                                a(d) * ginv(i, b) * f(b, c);
                    }
                    sum += term * v(d) * v(c);
                }
            xdd(i) -= 0.5 * sum;
        }
        const double sym = v.dot(0.5 * (da + da.transpose()) * v);
        Vec out(n + 1);
        out.head(n) = xdd;
        out(n) = -s.t * (sym + xdd.dot(a)) + s.vt * s.vt / s.t;
        return out;
    }

    /// |tddot - RHS| where RHS is the temporal equation fed with the generic xddot.
    double temporal_consistency(const GeodesicState& s, const DiffConfig& cfg = {}) const {
        const int n = s.dim();
        const Vec acc = acceleration(s, ChristoffelSource::Numeric, cfg);
        const Vec a = gauge()(s.point());
        const Mat da = jacobian([&](const Vec& y) { return gauge().at(y, s.chart); }, s.x, cfg);
        const double sym = s.vx.dot(0.5 * (da + da.transpose()) * s.vx);
        const double rhs = -s.t * (sym + acc.head(n).dot(a)) + s.vt * s.vt / s.t;
        return std::abs(acc(n) - rhs);
    }

    Trajectory integrate(const GeodesicState& s0, const IntegratorConfig& cfg) const {
        require_in_bundle(s0.point());
        if (!(cfg.lambda_max > 0.0)) throw ContractViolation("lambda_max must be positive");
        if (s0.vx.size() != s0.x.size()) throw ContractViolation("velocity dimension mismatch");
        const int n = s0.dim();
        Trajectory traj;
        traj.config = cfg;
        int chart = s0.chart;
        const double t_guard = cfg.t_guard_rel * std::abs(s0.t);

        const ode::Rhs rhs = [&](double lam, const Vec& y) {
            const GeodesicState s = GeodesicState::unpack(y, lam, chart);
            if (std::abs(s.t) < t_guard) throw DomainError("trial state crossed the t-guard");
            Vec dy(2 * n + 2);
            dy.head(n + 1) = y.tail(n + 1);
            dy.tail(n + 1) = acceleration(s, cfg.source, cfg.diff);
            return dy;
        };
        auto weight = [n](const Vec& y) {
            Vec w = Vec::Ones(y.size());
            w(n) = std::abs(y(n));
            w(2 * n + 1) = std::abs(y(n));
            return w;
        };
        auto record = [&](const GeodesicState& s) {
            traj.samples.push_back(s);
            traj.charge.push_back(carroll_charge(s, gauge()));
            traj.base_speed2.push_back(base_speed2(s, base_metric()));
            const double q = traj.charge.back();
            traj.null_residual.push_back(traj.base_speed2.back() - q * q);
        };
        auto observe = [&](double lam, Vec& y) {
            GeodesicState s = GeodesicState::unpack(y, lam, chart);
            if (!y.allFinite()) {
                traj.event = GeodesicEvent::NonFinite;
                return ode::Verdict::Stop;
            }
            ode::Verdict verdict = ode::Verdict::Continue;
            if (atlas_) {
                const double d = chart_depth(chart, s.x);
                if (d < cfg.chart_margin) {
                    const auto moved = change_chart(s, d);
                    if (moved) {
                        s = *moved;
                        chart = s.chart;
                        y = s.packed();
                        verdict = ode::Verdict::Modified;
                    } else if (d <= 0.0) {
                        traj.event = GeodesicEvent::ChartExit;
                        traj.event_detail = "left chart " + std::to_string(chart);
                        return ode::Verdict::Stop;
                    }
                }
            }
            record(s);
            if (std::abs(s.t) < t_guard) {
                traj.event = GeodesicEvent::TGuard;
                traj.event_detail = "|t| fell below " + std::to_string(t_guard);
                return ode::Verdict::Stop;
            }
            return verdict;
        };

        const ode::Outcome out =
            ode::solve(rhs, s0.packed(), s0.lambda, s0.lambda + cfg.lambda_max, cfg.ode, weight, observe);
        traj.accepted = out.accepted;
        traj.rejected = out.rejected;
        switch (out.stop) {
            case ode::Stop::Completed:
            case ode::Stop::Observer: break;
            case ode::Stop::StepUnderflow:
                traj.event = GeodesicEvent::StepUnderflow;
                traj.event_detail = out.detail;
                break;
            case ode::Stop::NonFinite:
                // A trial step that keeps hitting the t-guard is reported as such.
                traj.event = out.detail.find("t-guard") != std::string::npos ? GeodesicEvent::TGuard
                                                                              : GeodesicEvent::NonFinite;
                traj.event_detail = out.detail;
                break;
            case ode::Stop::MaxSteps: traj.event = GeodesicEvent::MaxSteps; break;
        }
        return traj;
    }

private:
    double chart_depth(int chart, const Vec& x) const {
        const auto& c = atlas_->chart(chart);
        if (!c.contains(x)) return -std::numeric_limits<double>::infinity();
        return c.depth ? c.depth(x) : std::numeric_limits<double>::infinity();
    }

    /// The overlapping chart in which s lies deepest, if deeper than `current`.
    std::optional<GeodesicState> change_chart(const GeodesicState& s, double current) const {
        std::optional<GeodesicState> best;
        double best_depth = current;
        for (const auto& c : atlas_->charts()) {
            if (c.id == s.chart || !atlas_->has_transition(s.chart, c.id)) continue;
            const Point p = s.point();
            try {
                if (!atlas_->in_overlap(p, c.id)) continue;
                auto moved = transfer_state(s, c.id);
                const double d = chart_depth(c.id, moved.x);
                if (d > best_depth) {
                    best_depth = d;
                    best = std::move(moved);
                }
            } catch (const Error&) {
                // transition undefined here; try the next chart
            }
        }
        return best;
    }

    GeodesicState transfer_state(const GeodesicState& s, int to) const {
        const Point p = s.point();
        Vec r(s.dim() + 1);
        r.head(s.dim()) = s.vx;
        r(s.dim()) = s.vt;
        const TangentVector w = atlas_->transform(TangentVector::from_raw(p, r), to);
        const Vec wr = w.raw();
        GeodesicState out;
        out.x = w.base.x;
        out.t = w.base.t;
        out.vx = wr.head(s.dim());
        out.vt = wr(s.dim());
        out.lambda = s.lambda;
        out.chart = to;
        return out;
    }

    KKMetric G_;
    std::shared_ptr<const Atlas> atlas_;
    BaseChristoffelFn base_;
};

/// Independent integrations over a list of initial states.
inline std::vector<Trajectory> integrate_batch(const GeodesicFlow& flow,
                                               const std::vector<GeodesicState>& starts,
                                               const IntegratorConfig& cfg, unsigned workers = 0) {
    std::vector<Trajectory> out(starts.size());
    parallel_for(starts.size(), workers, [&](std::size_t i) { out[i] = flow.integrate(starts[i], cfg); });
    return out;
}

// ---------------------------------------------------------------------------
// Logarithmic time u = ln|t|.

struct LogTimeSeries {
    std::vector<double> lambda;
    std::vector<double> u;
    std::vector<Vec> x;
};

inline LogTimeSeries log_time(const Trajectory& traj) {
    LogTimeSeries out;
    int dir = 0;
    for (const auto& s : traj.samples) {
        if (s.t == 0.0) throw DomainError("trajectory reaches t = 0");
        const double u = std::log(std::abs(s.t));
        if (!out.u.empty()) {
            const double du = u - out.u.back();
            const int d = du > 0 ? 1 : (du < 0 ? -1 : 0);
            if (d == 0 || (dir != 0 && d != dir)) {
                throw ContractViolation("u = ln|t| is not strictly monotone along the trajectory");
            }
            dir = d;
        }
        out.lambda.push_back(s.lambda);
        out.u.push_back(u);
        out.x.push_back(s.x);
    }
    return out;
}

// ---------------------------------------------------------------------------
// t(lambda) = t0 exp(delta |Q| lambda) exp(-int v.A dlambda).

/// Quadrature of f over samples (lambda_k, f_k) with derivatives fp_k.
///
/// Each interval uses the cubic Hermite rule h/2 (f0 + f1) + h^2/12 (f0' - f1'),
/// i.e. the trapezoid plus its end correction. Returns cumulative integrals.
inline std::vector<double> hermite_cumulative(const std::vector<double>& lambda,
                                              const std::vector<double>& f,
                                              const std::vector<double>& fp) {
    std::vector<double> out(lambda.size(), 0.0);
    for (std::size_t k = 1; k < lambda.size(); ++k) {
        const double h = lambda[k] - lambda[k - 1];
        out[k] = out[k - 1] + 0.5 * h * (f[k - 1] + f[k]) + h * h / 12.0 * (fp[k - 1] - fp[k]);
    }
    return out;
}

inline std::vector<double> formal_temporal_solution(const std::vector<double>& lambda,
                                                    const std::vector<double>& v_dot_a,
                                                    const std::vector<double>& v_dot_a_rate,
                                                    double Q, double t0, int delta) {
    if (lambda.empty()) return {};
    const auto integral = hermite_cumulative(lambda, v_dot_a, v_dot_a_rate);
    std::vector<double> t(lambda.size());
    for (std::size_t k = 0; k < lambda.size(); ++k) {
        const double l = lambda[k] - lambda.front();
        t[k] = t0 * std::exp(delta * std::abs(Q) * l) * std::exp(-integral[k]);
    }
    return t;
}

/// Same, taking the base path from an integrated trajectory of `flow`.
inline std::vector<double> formal_temporal_solution(const GeodesicFlow& flow, const Trajectory& traj,
                                                    double Q, double t0, int delta,
                                                    const DiffConfig& cfg = {}) {
    std::vector<double> lam, f, fp;
    for (const auto& s : traj.samples) {
        const Vec a = flow.gauge().at(s.x, s.chart);
        const Mat da = jacobian([&](const Vec& y) { return flow.gauge().at(y, s.chart); }, s.x, cfg);
        const Vec acc = flow.acceleration(s, traj.config.source, cfg);
        lam.push_back(s.lambda);
        f.push_back(s.vx.dot(a));
        // d/dlambda (v . A) = xddot . A + v^T (dA) v
        fp.push_back(acc.head(s.dim()).dot(a) + s.vx.dot(da * s.vx));
    }
    return formal_temporal_solution(lam, f, fp, Q, t0, delta);
}

// ---------------------------------------------------------------------------
// Small-A reduction: x'' + G~(x', x') = sign g^-1 F x' in u = ln|t|.

struct BaseTrajectory {
    std::vector<double> u;
    std::vector<Vec> x;
    std::vector<Vec> v;
    GeodesicEvent event = GeodesicEvent::None;
};

struct SmallAProblem {
    DegenerateMetric g;
    GaugeField A;                  // only its curvature enters
    BaseChristoffelFn base;        // optional closed-form G~
    double t_ref = 1.0;            // fiber value at which g_M is read
    int chart = 0;
};

inline BaseTrajectory integrate_small_A(const SmallAProblem& prob, const Vec& x0, const Vec& v0,
                                        int sign_Q, double u_max, const ode::Config& ocfg = {},
                                        const DiffConfig& cfg = {}) {
    if (sign_Q != 1 && sign_Q != -1) throw ContractViolation("sign_Q must be +1 or -1");
    if (x0.size() != v0.size()) throw ContractViolation("velocity dimension mismatch");
    const auto n = x0.size();
    const ode::Rhs rhs = [&](double, const Vec& y) {
        const Point p(y.head(n), prob.t_ref, prob.chart);
        const Vec v = y.tail(n);
        const Christoffel tb = prob.base ? prob.base(p) : base_christoffel_numeric(prob.g, p, cfg);
        const Mat ginv = prob.g.base(p).inverse();
        const Mat f = curvature(prob.A, p.x, prob.chart, cfg);
        Vec dy(2 * n);
        dy.head(n) = v;
        dy.tail(n) = -tb.contract(v) + sign_Q * (ginv * (f * v));
        return dy;
    };
    BaseTrajectory out;
    Vec y0(2 * n);
    y0.head(n) = x0;
    y0.tail(n) = v0;
    auto observe = [&](double u, Vec& y) {
        out.u.push_back(u);
        out.x.push_back(y.head(n));
        out.v.push_back(y.tail(n));
        return ode::Verdict::Continue;
    };
    const auto res = ode::solve(rhs, y0, 0.0, u_max, ocfg, [](const Vec& y) { return Vec::Ones(y.size()); },
                                observe);
    if (res.stop == ode::Stop::StepUnderflow) out.event = GeodesicEvent::StepUnderflow;
    if (res.stop == ode::Stop::NonFinite) out.event = GeodesicEvent::NonFinite;
    if (res.stop == ode::Stop::MaxSteps) out.event = GeodesicEvent::MaxSteps;
    return out;
}

}  // namespace carroll
