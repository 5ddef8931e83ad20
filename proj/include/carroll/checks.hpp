#pragma once

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "carroll/connection.hpp"
#include "carroll/geometry.hpp"
#include "carroll/kk_metric.hpp"
#include "carroll/scenario.hpp"

#include <json.hpp>

namespace carroll {

struct CheckConfig {
    int samples = 24;
    std::uint64_t seed = 1;
    double exact_tol = 1e-12;     // block-structure identities
    double identity_tol = 1e-8;   // determinant identity, Killing residuals
    double oracle_tol = 1e-6;     // closed form vs finite differences, metricity
    DiffConfig diff;
};

struct CheckReport {
    std::string scenario;
    std::vector<CheckResult> checks;
    std::vector<std::string> warnings;
    std::string euler_kind;
    std::vector<double> euler_factors;

    bool passed() const {
        for (const auto& c : checks)
            if (c.failed()) return false;
        return true;
    }

    int failures() const {
        int n = 0;
        for (const auto& c : checks) n += c.failed() ? 1 : 0;
        return n;
    }
};

namespace detail {

inline std::vector<std::function<double(const Point&)>> smooth_scalars(int dim, std::mt19937_64& rng, int count) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<std::function<double(const Point&)>> out;
    for (int k = 0; k < count; ++k) {
        Vec w(dim);
        for (int a = 0; a < dim; ++a) w(a) = u(rng);
        const double c0 = u(rng), c1 = u(rng), c2 = u(rng);
        out.emplace_back([w, c0, c1, c2](const Point& p) {
            return c0 + std::sin(w.dot(p.x) + c1) + c2 * std::log(std::abs(p.t)) * std::cos(p.x(0));
        });
    }
    return out;
}

}  // namespace detail

/// Invariant suite for one scenario. Every entry is recomputed from the fields; nothing
/// declared by the scenario is trusted.
inline CheckReport run_checks(const Scenario& s, const CheckConfig& cfg = {}) {
    CheckReport rep;
    rep.scenario = s.name;
    rep.warnings = s.warnings;
    const auto pts = s.sample_points(cfg.samples, cfg.seed);
    std::mt19937_64 rng(cfg.seed ^ 0x9e3779b97f4a7c15ull);
    auto& out = rep.checks;

    // Base block.
    double asym = 0.0, min_det = 1e300, max_cond = 0.0;
    for (const auto& p : pts) {
        const Mat m = s.g.base(p);
        asym = std::max(asym, max_asymmetry(m));
        min_det = std::min(min_det, std::abs(m.determinant()));
        const Eigen::JacobiSVD<Mat> svd(m);
        const Vec sv = svd.singularValues();
        max_cond = std::max(max_cond, sv(0) / std::max(sv(sv.size() - 1), 1e-300));
    }
    out.push_back(check_below("base_block_symmetry", asym, cfg.exact_tol));
    {
        CheckResult r{"base_block_invertible", CheckResult::Status::Pass, min_det, 1e-12,
                      "min |det g_M|; max condition number " + std::to_string(max_cond)};
        if (!(min_det > 1e-12)) r.status = CheckResult::Status::Fail;
        out.push_back(r);
    }
    if (asym > cfg.exact_tol) return rep;  // everything downstream assumes a symmetric metric

    // Kernel: g(Delta, v) = 0 and det of the full degenerate form = 0.
    double kernel = 0.0, full_det = 0.0;
    for (const auto& p : pts) {
        for (const auto& v : random_vectors(p, 4, rng)) {
            kernel = std::max(kernel, std::abs(metric_eval(s.g, p, TangentVector::euler(p), v)));
        }
        full_det = std::max(full_det, std::abs(s.g.full(p).determinant()));
    }
    out.push_back(check_below("kernel_euler", kernel, 0.0, "max |g(Delta, v)|"));
    out.push_back(check_below("kernel_determinant", full_det, 0.0, "max |det| of the degenerate form"));

    // KK determinant identity and signature.
    const KKMetric gp = s.kk(+1), gm = s.kk(-1);
    double det_err = 0.0;
    int bad_sig = 0;
    for (const auto& p : pts) {
        const double dm = s.g.base(p).determinant();
        det_err = std::max(det_err, std::abs(kk_raw_determinant(gp, p) * p.t * p.t - dm) / std::max(1.0, std::abs(dm)));
        const auto [pos, neg] = signature(gm, p);
        if (pos != s.dim || neg != 1) ++bad_sig;
    }
    out.push_back(check_below("kk_determinant_identity", det_err, cfg.identity_tol,
                              "max |det(G+) t^2 - det g_M| / max(1, |det g_M|)"));
    out.push_back(check_below("lorentzian_signature", bad_sig, 0.0,
                              "points where sigma = -1 is not (n, 1)"));

    // Euler field.
    const auto cls = classify_euler(s.g, pts, cfg.diff);
    rep.euler_kind = to_string(cls.kind);
    rep.euler_factors = cls.factors;
    for (const auto& c : s.load_checks) {
        if (c.name.rfind("euler_", 0) == 0) out.push_back(c);
    }
    const auto killing = killing_residual(VectorField::euler(), s.g.raw_field(), pts, cfg.diff);
    if (cls.kind == EulerKind::Killing) {
        out.push_back(check_below("euler_killing_residual", killing.residual, cfg.identity_tol));
        double worst = 0.0;
        for (const auto& f : detail::smooth_scalars(s.dim, rng, 5)) {
            worst = std::max(worst, killing_residual(VectorField::scaled_euler(f), s.g.raw_field(), pts, cfg.diff).residual);
        }
        out.push_back(check_below("vertical_fields_killing", worst, cfg.identity_tol,
                                  "max residual of L_{f Delta} g over 5 smooth f"));
    } else {
        out.push_back(info("euler_killing_residual", killing.residual, "Euler field classified " + rep.euler_kind));
        if (cls.kind != EulerKind::General) {
            out.push_back(check_below("euler_proportionality", cls.max_residual, cfg.oracle_tol,
                                      "L_Delta g = c g with numerically determined c"));
        }
    }

    // Connection.
    const ConnectionOneForm omega = s.omega();
    const auto proj = projector_idempotence_check(omega, pts, cfg.seed);
    out.push_back(check_below("projector_idempotence", proj.max(), cfg.exact_tol * 10));
    out.push_back(check_below("horizontal_vertical_rank", proj.rank_defect, 0.0));
    const auto orth = orthogonality_check(s.g, omega, pts, cfg.seed);
    out.push_back(check_below("horizontal_vertical_orthogonal", orth.horizontal_vertical, cfg.exact_tol));

    // Levi-Civita connection of both KK metrics.
    bool gauge_free = true;
    for (const auto& p : pts) gauge_free = gauge_free && s.A(p).cwiseAbs().maxCoeff() == 0.0;
    double sym = 0.0, metricity = 0.0, closed = 0.0, closed_m = 0.0;
    const auto gams = christoffel_batch(gp, pts, cfg.diff);
    for (std::size_t k = 0; k < pts.size(); ++k) {
        const auto& p = pts[k];
        sym = std::max(sym, gams[k].max_lower_asymmetry());
        metricity = std::max(metricity, max_abs(covariant_derivative_metric(gams[k], gp.raw_field(), p, cfg.diff)));
        closed = std::max(closed, gams[k].max_abs_difference(christoffel_closed_form(gp, p, s.base_christoffel, cfg.diff)));
        if (gauge_free) {
            const auto num = christoffel_numeric(gm, p, cfg.diff);
            closed_m = std::max(closed_m, num.max_abs_difference(christoffel_closed_form(gm, p, s.base_christoffel, cfg.diff)));
        }
    }
    out.push_back(check_below("christoffel_symmetry", sym, cfg.exact_tol));
    out.push_back(check_below("kk_metric_compatibility", metricity, cfg.oracle_tol, "max |nabla G+|"));
    if (gauge_free) {
        out.push_back(check_below("christoffel_closed_form", std::max(closed, closed_m), cfg.oracle_tol,
                                  "closed form vs finite-difference Levi-Civita, both signs"));
    } else {
        out.push_back(info("christoffel_closed_form", closed,
                           "gauge field present; the closed-form list is compared for reference only"));
    }

    // Divergence: density route vs 1/2 tr(G^-1 L_X G).
    double div = 0.0;
    const std::vector<VectorField> fields = {
        VectorField::euler(),
        VectorField::from_raw([n = s.dim](const Point& p) {
            Vec r(n + 1);
            for (int a = 0; a < n; ++a) r(a) = std::sin(p.x(a) + a);
            r(n) = p.t * std::cos(p.x(0));
            return r;
        })};
    for (const auto& X : fields)
        for (const auto& p : pts) div = std::max(div, std::abs(divergence(X, s.g, p, cfg.diff) - divergence_lie(X, gp, p, cfg.diff)));
    out.push_back(check_below("divergence_routes", div, cfg.oracle_tol));

    // Overlaps: metric and gauge in every chart reachable from chart 0.
    if (s.atlas && s.atlas->size() > 1) {
        double metric_defect = 0.0, gauge_defect = 0.0;
        int overlaps = 0;
        for (int to = 1; to < static_cast<int>(s.atlas->size()); ++to) {
            for (const auto& p : pts) {
                if (!s.atlas->in_overlap(p, to)) continue;
                ++overlaps;
                const Point q = s.atlas->transform(p, to);
                const Mat predicted = s.atlas->transform_base_metric(s.g.base(p), 0, to, p.x, cfg.diff);
                const Mat there = s.g.base(q);
                metric_defect = std::max(metric_defect, (there - predicted).cwiseAbs().maxCoeff() /
                                                            std::max(1.0, there.cwiseAbs().maxCoeff()));
            }
            gauge_defect = std::max(gauge_defect, gauge_overlap_defect(*s.atlas, s.A, pts, to, cfg.diff));
        }
        out.push_back(check_below("overlap_metric", metric_defect, cfg.oracle_tol,
                                  std::to_string(overlaps) + " overlap samples"));
        out.push_back(check_below("overlap_gauge", gauge_defect, cfg.oracle_tol));
    }
    if (s.fiber_atlas) {
        const auto lc = linearize(shift_transitions(*s.fiber_atlas));
        out.push_back(check_below("cocycle_residual", lc.cocycle_residual, cfg.identity_tol));
    }
    return rep;
}

inline nlohmann::json to_json(const CheckResult& c) {
    nlohmann::json j;
    j["name"] = c.name;
    j["status"] = to_string(c.status);
    j["value"] = c.value;
    j["tolerance"] = c.tolerance;
    if (!c.detail.empty()) j["detail"] = c.detail;
    return j;
}

inline nlohmann::json to_json(const CheckReport& r) {
    nlohmann::json j;
    j["scenario"] = r.scenario;
    j["passed"] = r.passed();
    j["failures"] = r.failures();
    j["euler"] = {{"kind", r.euler_kind}, {"factors", r.euler_factors}};
    j["checks"] = nlohmann::json::array();
    for (const auto& c : r.checks) j["checks"].push_back(to_json(c));
    j["warnings"] = r.warnings;
    return j;
}

}  // namespace carroll
