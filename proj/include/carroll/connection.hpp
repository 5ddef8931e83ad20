#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <random>
#include <utility>
#include <vector>

#include "carroll/atlas.hpp"
#include "carroll/core.hpp"
#include "carroll/diff.hpp"
#include "carroll/geometry.hpp"

namespace carroll {

/// Per-chart gauge field A_a(x) of an R^x-connection.
struct GaugeField {
    std::function<Vec(const Vec& x, int chart)> A;
    // Registered closed-form F_ab; the finite-difference version is the fallback.
    std::function<Mat(const Vec& x, int chart)> closed_curvature;
    bool trivial = false;

    Vec operator()(const Point& p) const { return A(p.x, p.chart); }
    Vec at(const Vec& x, int chart = 0) const { return A(x, chart); }

    static GaugeField zero() {
        GaugeField g;
        g.A = [](const Vec& x, int) { return Vec::Zero(x.size()); };
        g.closed_curvature = [](const Vec& x, int) { return Mat::Zero(x.size(), x.size()); };
        g.trivial = true;
        return g;
    }

    static GaugeField constant(Vec a) {
        GaugeField g;
        const auto n = a.size();
        g.A = [a = std::move(a)](const Vec&, int) { return a; };
        g.closed_curvature = [n](const Vec&, int) { return Mat::Zero(n, n); };
        return g;
    }

    static GaugeField from_function(std::function<Vec(const Vec&)> f) {
        GaugeField g;
        g.A = [f = std::move(f)](const Vec& x, int) { return f(x); };
        return g;
    }
};

/// omega = tb + xdot^a A_a(x).
struct ConnectionOneForm {
    GaugeField gauge;

    double operator()(const TangentVector& v) const {
        return v.vtb + v.vx.dot(gauge(v.base));
    }
};

struct Split {
    TangentVector horizontal;
    TangentVector vertical;
};

/// Phi(X) = omega(X) Delta.
inline TangentVector vertical_projector(const ConnectionOneForm& omega, const TangentVector& X) {
    return TangentVector::euler(X.base) * omega(X);
}

inline Split split(const ConnectionOneForm& omega, const TangentVector& X) {
    require_in_bundle(X.base);
    TangentVector v = vertical_projector(omega, X);
    TangentVector h = X - v;
    return {std::move(h), std::move(v)};
}

/// Random adapted tangent vectors at p with standard-normal components.
inline std::vector<TangentVector> random_vectors(const Point& p, int count, std::mt19937_64& rng) {
    std::normal_distribution<double> nd(0.0, 1.0);
    std::vector<TangentVector> out;
    out.reserve(static_cast<std::size_t>(count));
    for (int k = 0; k < count; ++k) {
        Vec v(p.dim());
        for (int i = 0; i < p.dim(); ++i) v(i) = nd(rng);
        out.emplace_back(p, v, nd(rng));
    }
    return out;
}

struct ProjectorReport {
    double idempotence = 0.0;  // max |Phi(Phi X) - Phi X|
    double image = 0.0;        // max |horizontal part of Phi X|  (image must be vertical)
    double kernel = 0.0;       // max |omega(X - Phi X)|          (kernel = horizontal)
    double rank_defect = 0.0;  // min singular value deficit of [H | V] spanning T_pP
    double max() const { return std::max({idempotence, image, kernel}); }
};

inline ProjectorReport projector_idempotence_check(const ConnectionOneForm& omega,
                                                   const std::vector<Point>& samples,
                                                   std::uint64_t seed = 7,
                                                   int vectors_per_point = 8) {
    if (samples.empty()) throw ContractViolation("projector check needs samples");
    std::mt19937_64 rng(seed);
    ProjectorReport rep;
    for (const auto& p : samples) {
        const int n = p.dim();
        for (const auto& X : random_vectors(p, vectors_per_point, rng)) {
            const TangentVector px = vertical_projector(omega, X);
            const TangentVector ppx = vertical_projector(omega, px);
            rep.idempotence = std::max(rep.idempotence, (ppx - px).adapted().cwiseAbs().maxCoeff());
            rep.image = std::max(rep.image, px.vx.cwiseAbs().maxCoeff());
            rep.kernel = std::max(rep.kernel, std::abs(omega(X - px)));
        }
        // Horizontal frame D_a = d_a - A_a Delta plus Delta spans T_pP.
        Mat frame(n + 1, n + 1);
        for (int a = 0; a < n; ++a) {
            Vec e = Vec::Zero(n);
            e(a) = 1.0;
            frame.col(a) = split(omega, TangentVector(p, e, 0.0)).horizontal.adapted();
        }
        frame.col(n) = TangentVector::euler(p).adapted();
        const Eigen::JacobiSVD<Mat> svd(frame);
        const double smin = svd.singularValues()(n);
        rep.rank_defect = std::max(rep.rank_defect, smin > 1e-12 ? 0.0 : 1.0);
    }
    return rep;
}

struct OrthogonalityReport {
    double horizontal_vertical = 0.0;    // max |g(X_H, Y_V)|, contract: 0
    double horizontal_horizontal = 0.0;  // max |g(X_H, Y_H)|, generally nonzero
};

inline OrthogonalityReport orthogonality_check(const DegenerateMetric& g,
                                               const ConnectionOneForm& omega,
                                               const std::vector<Point>& samples,
                                               std::uint64_t seed = 11, int pairs_per_point = 8) {
    if (samples.empty()) throw ContractViolation("orthogonality check needs samples");
    std::mt19937_64 rng(seed);
    OrthogonalityReport rep;
    for (const auto& p : samples) {
        const auto xs = random_vectors(p, pairs_per_point, rng);
        const auto ys = random_vectors(p, pairs_per_point, rng);
        for (std::size_t k = 0; k < xs.size(); ++k) {
            const auto sx = split(omega, xs[k]);
            const auto sy = split(omega, ys[k]);
            rep.horizontal_vertical = std::max(
                rep.horizontal_vertical, std::abs(metric_eval(g, p, sx.horizontal, sy.vertical)));
            rep.horizontal_horizontal =
                std::max(rep.horizontal_horizontal,
                         std::abs(metric_eval(g, p, sx.horizontal, sy.horizontal)));
        }
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Curvature F_ab = d_a A_b - d_b A_a.

inline Mat curvature_numeric(const GaugeField& A, const Vec& x, int chart = 0,
                             const DiffConfig& cfg = {}) {
    const Mat j = jacobian([&](const Vec& y) { return A.at(y, chart); }, x, cfg);  // j(b, a) = d_a A_b
    const Mat f = j.transpose() - j;
    return 0.5 * (f - f.transpose());
}

inline Mat curvature(const GaugeField& A, const Vec& x, int chart = 0, const DiffConfig& cfg = {}) {
    if (A.closed_curvature) {
        const Mat f = A.closed_curvature(x, chart);
        return 0.5 * (f - f.transpose());
    }
    return curvature_numeric(A, x, chart, cfg);
}

// ---------------------------------------------------------------------------
// Partitions of unity and the glued connection omega = sum_i phi_i tb_i.

struct PartitionOfUnity {
    std::vector<int> cover;  // chart id of each bump
    // Unnormalized bump i evaluated at base coordinates x of chart `chart`.
    std::vector<std::function<double(const Vec& x, int chart)>> bumps;

    double raw_sum(const Vec& x, int chart) const {
        double s = 0.0;
        for (const auto& b : bumps) s += b(x, chart);
        return s;
    }

    /// Normalized phi_i(x) = psi_i / sum_j psi_j.
    double weight(std::size_t i, const Vec& x, int chart) const {
        const double s = raw_sum(x, chart);
        if (s <= 0.0) {
            throw ConstructionError("partition of unity vanishes at a base point of chart " +
                                    std::to_string(chart));
        }
        return bumps[i](x, chart) / s;
    }

    double sum(const Vec& x, int chart) const {
        double s = 0.0;
        for (std::size_t i = 0; i < bumps.size(); ++i) s += weight(i, x, chart);
        return s;
    }
};

/// Reduces an angle to [c - pi, c + pi).
inline double wrap_near(double theta, double c) {
    const double two_pi = 2.0 * std::numbers::pi;
    return theta - two_pi * std::floor((theta - c + std::numbers::pi) / two_pi);
}

/// Cosine bumps cos^2(pi s / 2) on circle arcs [lo_i, hi_i] (angles, hi > lo).
///
/// Chart coordinates are angles; each bump wraps the argument to its own arc.
inline PartitionOfUnity cosine_bumps_circle(std::vector<std::pair<double, double>> arcs,
                                            std::vector<int> cover) {
    PartitionOfUnity pu;
    pu.cover = std::move(cover);
    for (const auto& [lo, hi] : arcs) {
        const double c = 0.5 * (lo + hi);
        const double w = 0.5 * (hi - lo);
        pu.bumps.emplace_back([c, w](const Vec& x, int) {
            const double s = std::abs(wrap_near(x(0), c) - c) / w;
            if (s >= 1.0) return 0.0;
            const double v = std::cos(0.5 * std::numbers::pi * s);
            return v * v;
        });
    }
    return pu;
}

/// Glues the trivial forms tb_i of each chart with the partition.
///
/// In chart c: omega = tb_c + xdot . sum_i phi_i grad ln|f_{c->i}|, where t_i = f_{c->i}(x) t_c.
inline GaugeField connection_from_partition(const Atlas& atlas, const PartitionOfUnity& pu,
                                            const std::vector<Point>& validation = {},
                                            const DiffConfig& cfg = {}) {
    if (pu.bumps.size() != pu.cover.size() || pu.bumps.empty()) {
        throw ConstructionError("partition of unity must have one bump per cover chart");
    }
    for (const auto& p : validation) {
        const double s = pu.sum(p.x, p.chart);
        if (std::abs(s - 1.0) > 1e-12) {
            throw ConstructionError("partition of unity sums to " + std::to_string(s));
        }
    }
    GaugeField g;
    g.A = [atlas, pu, cfg](const Vec& x, int chart) {
        Vec a = Vec::Zero(x.size());
        for (std::size_t i = 0; i < pu.bumps.size(); ++i) {
            const double w = pu.weight(i, x, chart);
            if (w == 0.0) continue;
            const int target = pu.cover[i];
            if (!atlas.has_transition(chart, target)) {
                throw ConstructionError("partition bump " + std::to_string(i) +
                                        " is supported where no transition to chart " +
                                        std::to_string(chart) + " exists");
            }
            a += w * atlas.fiber_log_gradient(chart, target, x, cfg);
        }
        return a;
    };
    return g;
}

/// Re-expresses p in the chart whose bump is largest there.
inline Point best_chart(const Atlas& atlas, const PartitionOfUnity& pu, const Point& p) {
    int best = p.chart;
    double best_w = -1.0;
    for (std::size_t i = 0; i < pu.bumps.size(); ++i) {
        const double w = pu.bumps[i](p.x, p.chart);
        if (w > best_w && atlas.in_overlap(p, pu.cover[i])) {
            best_w = w;
            best = pu.cover[i];
        }
    }
    return atlas.transform(p, best);
}

/// max |A_to(x') - J^{-T}(A_from(x) - grad ln|phi|)| over overlap samples.
inline double gauge_overlap_defect(const Atlas& atlas, const GaugeField& A,
                                   const std::vector<Point>& samples, int to,
                                   const DiffConfig& cfg = {}) {
    double worst = 0.0;
    for (const auto& p : samples) {
        if (!atlas.in_overlap(p, to)) continue;
        const Point q = atlas.transform(p, to);
        const Vec predicted = atlas.transform_gauge(A(p), p.chart, to, p.x, cfg);
        worst = std::max(worst, (A(q) - predicted).cwiseAbs().maxCoeff());
    }
    return worst;
}

}  // namespace carroll
