#pragma once

#include <cmath>
#include <filesystem>
#include <limits>
#include <map>
#include <memory>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "carroll/atlas.hpp"
#include "carroll/connection.hpp"
#include "carroll/core.hpp"
#include "carroll/expr.hpp"
#include "carroll/geodesics.hpp"
#include "carroll/geometry.hpp"
#include "carroll/grid.hpp"
#include "carroll/ini.hpp"
#include "carroll/kk_metric.hpp"
#include "carroll/linearize.hpp"

namespace carroll {

using ParamMap = std::map<std::string, std::string>;

inline double param_number(const ParamMap& p, const std::string& key, double fallback) {
    auto it = p.find(key);
    if (it == p.end()) return fallback;
    try {
        return evaluate_constant(it->second);
    } catch (const ParseError& e) {
        throw ParseError("parameter " + key + ": " + e.what());
    }
}

inline std::string param_string(const ParamMap& p, const std::string& key, std::string fallback) {
    auto it = p.find(key);
    return it == p.end() ? fallback : it->second;
}

struct CheckResult {
    enum class Status { Pass, Fail, Info };
    std::string name;
    Status status = Status::Pass;
    double value = 0.0;
    double tolerance = 0.0;
    std::string detail;

    bool failed() const { return status == Status::Fail; }
};

inline const char* to_string(CheckResult::Status s) {
    switch (s) {
        case CheckResult::Status::Pass: return "pass";
        case CheckResult::Status::Fail: return "fail";
        case CheckResult::Status::Info: return "info";
    }
    return "info";
}

/// value <= tol passes.
inline CheckResult check_below(std::string name, double value, double tol, std::string detail = {}) {
    CheckResult r{std::move(name), CheckResult::Status::Pass, value, tol, std::move(detail)};
    if (!(value <= tol)) r.status = CheckResult::Status::Fail;
    return r;
}

inline CheckResult info(std::string name, double value, std::string detail = {}) {
    return {std::move(name), CheckResult::Status::Info, value, 0.0, std::move(detail)};
}

struct Expectations {
    std::optional<bool> euler_killing;
    std::optional<double> weight;
    bool conformal = false;
};

struct Scenario {
    std::string name;
    int dim = 1;
    std::vector<std::string> coords;
    std::shared_ptr<const Atlas> atlas;
    DegenerateMetric g;
    GaugeField A = GaugeField::zero();
    std::string gauge_name = "trivial";
    BaseChristoffelFn base_christoffel;  // closed-form G~ when known
    ParamMap params;
    Expectations expects;
    std::optional<TransitionAtlas> fiber_atlas;  // nonlinear transition data, when the scenario has one

    // Sampling box in chart 0 and the default base point for examples.
    std::vector<Interval> sample_box;
    Vec default_x;

    std::vector<CheckResult> load_checks;
    std::vector<std::string> warnings;

    KKMetric kk(int sigma) const { return KKMetric(g, A, sigma); }
    GeodesicFlow flow() const { return GeodesicFlow(kk(-1), atlas, base_christoffel); }
    ConnectionOneForm omega() const { return {A}; }

    /// Random points of chart 0: base uniform in the sampling box, |t| in [0.5, 2], either sign.
    std::vector<Point> sample_points(int count, std::uint64_t seed) const {
        std::mt19937_64 rng(seed);
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        std::vector<Point> out;
        for (int k = 0; k < count; ++k) {
            Vec x(dim);
            for (int a = 0; a < dim; ++a) {
                const auto& iv = sample_box[static_cast<std::size_t>(a)];
                x(a) = iv.lo + unit(rng) * iv.width();
            }
            double t = 0.5 + 1.5 * unit(rng);
            if (unit(rng) < 0.5) t = -t;
            out.emplace_back(x, t, 0);
        }
        return out;
    }

    std::string coordinate_label(int k) const {
        return k < dim ? coords[static_cast<std::size_t>(k)] : std::string("t");
    }
};

// ---------------------------------------------------------------------------
// Round-sphere charts: 0 angular (th, ph), 1 projection from the north pole,
// 2 projection from the south pole. The fiber factor of every transition is 1.

namespace sphere {

inline constexpr double kGuard = 0.1;     // angular chart keeps th in (kGuard, pi - kGuard)
inline constexpr double kStereoMax = 3.0; // stereographic charts keep |y| < kStereoMax

inline Vec to_north(const Vec& x) {
    Vec y(2);
    const double c = 1.0 / std::tan(0.5 * x(0));
    y << c * std::cos(x(1)), c * std::sin(x(1));
    return y;
}

inline Vec to_south(const Vec& x) {
    Vec y(2);
    const double c = std::tan(0.5 * x(0));
    y << c * std::cos(x(1)), c * std::sin(x(1));
    return y;
}

inline Vec from_north(const Vec& y) {
    Vec x(2);
    x << 2.0 * std::atan2(1.0, y.norm()), std::atan2(y(1), y(0));
    return x;
}

inline Vec from_south(const Vec& y) {
    Vec x(2);
    x << 2.0 * std::atan(y.norm()), std::atan2(y(1), y(0));
    return x;
}

inline Vec invert(const Vec& y) { return y / y.squaredNorm(); }

// Jacobians of the maps above, rows indexed by the output coordinate.
inline Mat stereo_jacobian(const Vec& x, bool north) {
    const double h = 0.5 * x(0);
    const double c = north ? 1.0 / std::tan(h) : std::tan(h);
    const double dc = north ? -0.5 / (std::sin(h) * std::sin(h)) : 0.5 / (std::cos(h) * std::cos(h));
    Mat j(2, 2);
    j << dc * std::cos(x(1)), -c * std::sin(x(1)), dc * std::sin(x(1)), c * std::cos(x(1));
    return j;
}

inline Mat angular_jacobian(const Vec& y, bool north) {
    const double r2 = y.squaredNorm(), r = std::sqrt(r2);
    const double dth = (north ? -2.0 : 2.0) / (1.0 + r2) / r;
    Mat j(2, 2);
    j << dth * y(0), dth * y(1), -y(1) / r2, y(0) / r2;
    return j;
}

inline Mat invert_jacobian(const Vec& y) {
    const double r2 = y.squaredNorm();
    return (Mat::Identity(2, 2) * r2 - 2.0 * y * y.transpose()) / (r2 * r2);
}

inline std::shared_ptr<const Atlas> atlas() {
    auto a = std::make_shared<Atlas>();
    const double pi = std::numbers::pi;
    a->add_chart({0, "angular", 2, [pi](const Vec& x) { return x(0) > kGuard && x(0) < pi - kGuard; },
                  [pi](const Vec& x) { return std::min(x(0) - kGuard, pi - kGuard - x(0)); }});
    for (const char* name : {"north", "south"}) {
        a->add_chart({0, name, 2, [](const Vec& y) { return y.norm() < kStereoMax; },
                      [](const Vec& y) { return kStereoMax - y.norm(); }});
    }
    const auto one = [](const Vec&) { return 1.0; };
    a->add_transition({0, 1, to_north, one, [](const Vec& x) { return stereo_jacobian(x, true); }});
    a->add_transition({1, 0, from_north, one, [](const Vec& y) { return angular_jacobian(y, true); }});
    a->add_transition({0, 2, to_south, one, [](const Vec& x) { return stereo_jacobian(x, false); }});
    a->add_transition({2, 0, from_south, one, [](const Vec& y) { return angular_jacobian(y, false); }});
    a->add_transition({1, 2, invert, one, invert_jacobian});
    a->add_transition({2, 1, invert, one, invert_jacobian});
    return a;
}

/// Round metric of radius 1 in chart `chart`.
inline Mat round_metric(const Vec& x, int chart) {
    Mat m = Mat::Zero(2, 2);
    if (chart == 0) {
        const double s = std::sin(x(0));
        m(0, 0) = 1.0;
        m(1, 1) = s * s;
    } else {
        const double c = 2.0 / (1.0 + x.squaredNorm());
        m(0, 0) = m(1, 1) = c * c;
    }
    return m;
}

/// Levi-Civita symbols of the round metric (any constant rescaling).
inline Christoffel christoffel(const Vec& x, int chart) {
    Christoffel g(2, Christoffel::Provenance::ClosedForm);
    if (chart == 0) {
        g.set_sym(0, 1, 1, -std::sin(x(0)) * std::cos(x(0)));
        g.set_sym(1, 0, 1, std::cos(x(0)) / std::sin(x(0)));
        return g;
    }
    // g = e^{2s} delta with s = ln(2 / (1 + |y|^2)):
    // G^c_ab = delta^c_a d_b s + delta^c_b d_a s - delta_ab d_c s.
    const double q = 1.0 + x.squaredNorm();
    const Vec ds = -2.0 * x / q;
    for (int c = 0; c < 2; ++c)
        for (int a = 0; a < 2; ++a)
            for (int b = a; b < 2; ++b) {
                double v = 0.0;
                if (c == a) v += ds(b);
                if (c == b) v += ds(a);
                if (a == b) v -= ds(c);
                g.set_sym(c, a, b, v);
            }
    return g;
}

/// Pulls a chart-0 gauge field back to the stereographic charts.
/// Monopole gauge A = b (1 - cos th) dph, written out in every chart. With
/// rho = |y|: the projection from the south pole has A = 2b / (1 + rho^2) (-y2, y1),
/// the one from the north pole A = 2b / ((1 + rho^2) rho^2) (-y2, y1), which is
/// singular at rho = 0 (the south pole).
inline GaugeField monopole(double b) {
    GaugeField g;
    g.A = [b](const Vec& x, int chart) -> Vec {
        Vec a(2);
        if (chart == 0) {
            a << 0.0, b * (1.0 - std::cos(x(0)));
            return a;
        }
        const double r2 = x.squaredNorm();
        const double k = chart == 2 ? 2.0 * b / (1.0 + r2) : 2.0 * b / ((1.0 + r2) * r2);
        a << -k * x(1), k * x(0);
        return a;
    };
    g.closed_curvature = [b](const Vec& x, int chart) -> Mat {
        double f = 0.0;
        if (chart == 0) {
            f = b * std::sin(x(0));
        } else {
            const double q = 1.0 + x.squaredNorm();
            f = (chart == 2 ? 4.0 : -4.0) * b / (q * q);
        }
        Mat m(2, 2);
        m << 0.0, f, -f, 0.0;
        return m;
    };
    return g;
}

}  // namespace sphere

// ---------------------------------------------------------------------------
// Load-time verification.

/// Symmetry, invertibility and declared Euler behaviour on `count` sample points.
inline std::vector<CheckResult> verify_scenario(const Scenario& s, int count = 16, std::uint64_t seed = 1) {
    std::vector<CheckResult> out;
    const auto pts = s.sample_points(count, seed);
    double asym = 0.0, min_det = 1e300, max_cond = 0.0;
    for (const auto& p : pts) {
        const Mat m = s.g.base(p);
        asym = std::max(asym, max_asymmetry(m));
        min_det = std::min(min_det, std::abs(m.determinant()));
        const Eigen::JacobiSVD<Mat> svd(m);
        const Vec sv = svd.singularValues();
        max_cond = std::max(max_cond, sv(0) / std::max(sv(sv.size() - 1), 1e-300));
    }
    out.push_back(check_below("base_block_symmetry", asym, 1e-12));
    CheckResult inv{"base_block_invertible", CheckResult::Status::Pass, min_det, 1e-12,
                    "max condition number " + std::to_string(max_cond)};
    if (!(min_det > 1e-12)) inv.status = CheckResult::Status::Fail;
    out.push_back(inv);
    if (asym > 1e-12) return out;  // Euler checks assume a valid metric

    const auto cls = classify_euler(s.g, pts);
    const std::string kind = to_string(cls.kind);
    if (s.expects.euler_killing) {
        const bool is = cls.kind == EulerKind::Killing;
        CheckResult r{"euler_killing", is == *s.expects.euler_killing ? CheckResult::Status::Pass
                                                                     : CheckResult::Status::Fail,
                      cls.max_residual, 1e-6, "classified " + kind};
        out.push_back(r);
    }
    if (s.expects.weight) {
        const double err = std::abs(cls.weight - *s.expects.weight);
        const bool ok = (cls.kind == EulerKind::Homogeneous || cls.kind == EulerKind::Killing) && err <= 1e-6;
        out.push_back({"euler_weight", ok ? CheckResult::Status::Pass : CheckResult::Status::Fail, cls.weight,
                       1e-6, "declared " + std::to_string(*s.expects.weight) + ", classified " + kind});
    }
    if (s.expects.conformal) {
        const bool ok = cls.kind != EulerKind::General;
        out.push_back({"euler_conformal", ok ? CheckResult::Status::Pass : CheckResult::Status::Fail,
                       cls.max_residual, 1e-6, "classified " + kind});
    }
    return out;
}

inline void finish(Scenario& s) {
    s.load_checks = verify_scenario(s);
    for (const auto& c : s.load_checks) {
        if (c.failed()) s.warnings.push_back("load-time check " + c.name + " failed (" + c.detail + ")");
    }
}

// ---------------------------------------------------------------------------
// Catalog.

inline std::vector<std::string> catalog_names() {
    return {"flat", "lightcone", "sphere_pullback", "moebius", "schwarzschild", "thakurta"};
}

inline std::string catalog_summary(const std::string& name) {
    if (name == "flat") return "R^n x R^x with g_M = delta (params: n, gauge = trivial|constant|quadratic|shear|magnetic|pure, a, B)";
    if (name == "lightcone") return "punctured light cone, g = t^2 g_S2 (weight 2)";
    if (name == "sphere_pullback") return "pullback of a round sphere of radius R (params: R, n = 1 or 2)";
    if (name == "moebius") return "Moebius R^x-bundle over the circle, glued connection";
    if (name == "schwarzschild") return "Schwarzschild horizon, g = (2GM)^2 g_S2 (params: GM, gauge, b)";
    if (name == "thakurta") return "Thakurta horizon, g = (2GM)^2 e^{-U(t)} g_S2 (params: GM, U)";
    return {};
}

namespace detail {

inline GaugeField flat_gauge(int n, const std::string& kind, const ParamMap& p) {
    if (kind == "trivial") return GaugeField::zero();
    if (kind == "constant") {
        const auto v = evaluate_list(param_string(p, "a", "1"));
        if (static_cast<int>(v.size()) != n) throw ContractViolation("constant gauge needs n values in 'a'");
        return GaugeField::constant(Eigen::Map<const Vec>(v.data(), n));
    }
    if (kind == "quadratic") {
        GaugeField g = GaugeField::from_function([n](const Vec& x) {
            Vec a = Vec::Zero(n);
            a(0) = x(0) * x(0);
            return a;
        });
        g.closed_curvature = [n](const Vec&, int) { return Mat::Zero(n, n); };
        return g;
    }
    if (kind == "shear") {
        // A = (x2, 0): F_12 = -1.
        if (n < 2) throw ContractViolation("shear gauge needs n >= 2");
        GaugeField g = GaugeField::from_function([n](const Vec& x) {
            Vec a = Vec::Zero(n);
            a(0) = x(1);
            return a;
        });
        g.closed_curvature = [n](const Vec&, int) {
            Mat f = Mat::Zero(n, n);
            f(0, 1) = -1.0;
            f(1, 0) = 1.0;
            return f;
        };
        return g;
    }
    if (kind == "magnetic") {
        if (n != 2) throw ContractViolation("magnetic gauge needs n = 2");
        const double b = param_number(p, "B", 1.0);
        GaugeField g = GaugeField::from_function([b](const Vec& x) {
            Vec a(2);
            a << -0.5 * b * x(1), 0.5 * b * x(0);
            return a;
        });
        g.closed_curvature = [b](const Vec&, int) {
            Mat f(2, 2);
            f << 0.0, b, -b, 0.0;
            return f;
        };
        return g;
    }
    if (kind == "pure") {
        // A = grad f with f = sin(x1) + x1 x2 (+ ...).
        GaugeField g = GaugeField::from_function([n](const Vec& x) {
            Vec a = Vec::Zero(n);
            a(0) = std::cos(x(0));
            if (n > 1) {
                a(0) += x(1);
                a(1) = x(0);
            }
            return a;
        });
        g.closed_curvature = [n](const Vec&, int) { return Mat::Zero(n, n); };
        return g;
    }
    throw ContractViolation("unknown gauge '" + kind + "' (trivial, constant, quadratic, shear, magnetic, pure)");
}

inline Scenario sphere_like(const std::string& name, const ParamMap& p, double scale2,
                            std::function<double(double)> fiber_factor, bool time_dependent) {
    const double pi = std::numbers::pi;
    Scenario s;
    s.name = name;
    s.dim = 2;
    s.coords = {"th", "ph"};
    s.atlas = sphere::atlas();
    s.params = p;
    s.g.time_dependent = time_dependent;
    s.g.gM = [scale2, fiber_factor](const Point& q) -> Mat {
        return scale2 * fiber_factor(q.t) * sphere::round_metric(q.x, q.chart);
    };
    s.base_christoffel = [](const Point& q) { return sphere::christoffel(q.x, q.chart); };
    s.sample_box = {{0.3, pi - 0.3}, {-pi, pi}};
    s.default_x = Vec(2);
    s.default_x << pi / 2, 0.0;

    const std::string gauge = param_string(p, "gauge", "trivial");
    s.gauge_name = gauge;
    if (gauge == "monopole") {
        const double b = param_number(p, "b", 1.0);
        s.A = sphere::monopole(b);
    } else if (gauge != "trivial") {
        throw ContractViolation("unknown sphere gauge '" + gauge + "' (trivial, monopole)");
    }
    return s;
}

}  // namespace detail

inline Scenario make_flat(const ParamMap& p) {
    Scenario s;
    const int n = static_cast<int>(param_number(p, "n", 2));
    if (n < 1) throw ContractViolation("flat scenario needs n >= 1");
    s.name = "flat";
    s.dim = n;
    for (int a = 0; a < n; ++a) s.coords.push_back("x" + std::to_string(a + 1));
    s.atlas = std::make_shared<Atlas>(single_chart_atlas(n));
    s.g.gM = [n](const Point&) { return Mat(Mat::Identity(n, n)); };
    s.base_christoffel = [n](const Point&) { return Christoffel(n, Christoffel::Provenance::ClosedForm); };
    s.params = p;
    s.gauge_name = param_string(p, "gauge", "trivial");
    s.A = detail::flat_gauge(n, s.gauge_name, p);
    s.expects.euler_killing = true;
    s.expects.weight = 0.0;
    s.sample_box.assign(static_cast<std::size_t>(n), {-1.0, 1.0});
    s.default_x = Vec::Zero(n);
    finish(s);
    return s;
}

inline Scenario make_lightcone(const ParamMap& p) {
    Scenario s = detail::sphere_like("lightcone", p, 1.0, [](double t) { return t * t; }, true);
    s.g.weight_hint = 2.0;
    s.expects.weight = 2.0;
    finish(s);
    return s;
}

inline Scenario make_sphere_pullback(const ParamMap& p) {
    const double r = param_number(p, "R", 1.0);
    const int n = static_cast<int>(param_number(p, "n", 2));
    if (n == 2) {
        Scenario s = detail::sphere_like("sphere_pullback", p, r * r, [](double) { return 1.0; }, false);
        s.expects.euler_killing = true;
        finish(s);
        return s;
    }
    if (n != 1) throw ContractViolation("sphere_pullback supports n = 1 (circle) or n = 2");
    const double pi = std::numbers::pi;
    Scenario s;
    s.name = "sphere_pullback";
    s.dim = 1;
    s.coords = {"th"};
    s.atlas = std::make_shared<Atlas>(single_chart_atlas(1, "angle"));
    s.g.gM = [r](const Point&) { return Mat(Mat::Constant(1, 1, r * r)); };
    s.base_christoffel = [](const Point&) { return Christoffel(1, Christoffel::Provenance::ClosedForm); };
    s.params = p;
    s.expects.euler_killing = true;
    s.sample_box = {{-pi, pi}};
    s.default_x = Vec::Zero(1);
    finish(s);
    return s;
}

inline Scenario make_moebius(const ParamMap& p) {
    const double pi = std::numbers::pi;
    const double r = param_number(p, "R", 1.0);
    Scenario s;
    s.name = "moebius";
    s.dim = 1;
    s.coords = {"th"};
    s.params = p;
    s.fiber_atlas = builtin_atlas("moebius");
    const auto lc = linearize(shift_transitions(*s.fiber_atlas));
    auto atlas = std::make_shared<Atlas>(bundle_atlas(lc));
    s.atlas = atlas;
    s.g.gM = [r](const Point&) { return Mat(Mat::Constant(1, 1, r * r)); };
    s.base_christoffel = [](const Point&) { return Christoffel(1, Christoffel::Provenance::ClosedForm); };
    std::vector<std::pair<double, double>> arcs;
    std::vector<int> cover;
    for (int i = 0; i < s.fiber_atlas->size(); ++i) {
        arcs.emplace_back(s.fiber_atlas->chart(i).domain.lo, s.fiber_atlas->chart(i).domain.hi);
        cover.push_back(i);
    }
    const PartitionOfUnity pu = cosine_bumps_circle(arcs, cover);
    s.A = connection_from_partition(*atlas, pu);
    s.gauge_name = "partition";
    s.expects.euler_killing = true;
    s.sample_box = {{0.0, pi}};
    s.default_x = Vec::Constant(1, pi / 2);
    finish(s);
    return s;
}

inline Scenario make_schwarzschild(const ParamMap& p) {
    const double gm = param_number(p, "GM", 0.5);
    Scenario s = detail::sphere_like("schwarzschild", p, 4.0 * gm * gm, [](double) { return 1.0; }, false);
    s.expects.euler_killing = true;
    s.expects.weight = 0.0;
    finish(s);
    return s;
}

inline Scenario make_thakurta(const ParamMap& p) {
    const double gm = param_number(p, "GM", 0.5);
    const Expression u = Expression::parse(param_string(p, "U", "t"), {"t"});
    Scenario s = detail::sphere_like(
        "thakurta", p, 4.0 * gm * gm, [u](double t) { return std::exp(-u({t})); }, true);
    s.params["U"] = u.source();
    s.expects.conformal = true;
    s.expects.euler_killing = false;
    finish(s);
    return s;
}

// ---------------------------------------------------------------------------
// Scenario files.
//
//   [meta]    name, dim, vars (comma list), params (k=v comma list, usable in expressions)
//   [charts]  one "var = lo, hi" per coordinate (sampling box and chart domain)
//   [metric]  gIJ = expression in vars, t and params (I, J from 1); or grid = file.csv
//   [gauge]   AI = expression; or grid = file.csv (omitted: trivial)
//   [expects] euler_killing = true|false, weight = k, conformal = true|false
//
// Grid files list coordinates first (the base variables, optionally followed by
// t), then the n^2 metric entries in row-major order, or the n gauge components.

inline Scenario parse_scenario(const ini::Document& doc, const std::filesystem::path& base_dir = {},
                               const ParamMap& overrides = {}) {
    Scenario s;
    const auto& meta = doc.require("meta");
    s.name = meta.get_or("name", "custom");
    s.dim = static_cast<int>(evaluate_constant(meta.get("dim")));
    if (s.dim < 1) throw ParseError(doc.origin + ": dim must be >= 1");
    s.coords = ini::split(meta.get("vars"), ',');
    if (static_cast<int>(s.coords.size()) != s.dim) {
        throw ParseError(doc.origin + ": vars lists " + std::to_string(s.coords.size()) +
                         " names for dim = " + std::to_string(s.dim));
    }
    ParamMap params;
    if (meta.has("params") && !meta.get("params").empty()) {
        for (const auto& kv : ini::split(meta.get("params"), ',')) {
            const auto eq = kv.find('=');
            if (eq == std::string::npos) throw ParseError(doc.origin + ": params entries must be k=v");
            params[ini::trim(kv.substr(0, eq))] = ini::trim(kv.substr(eq + 1));
        }
    }
    for (const auto& [k, v] : overrides) params[k] = v;
    s.params = params;

    std::vector<std::string> names = s.coords;
    names.push_back("t");
    std::vector<double> pvals;
    for (const auto& [k, v] : params) {
        names.push_back(k);
        pvals.push_back(evaluate_constant(v));
    }
    const int n = s.dim;
    auto args = [n, pvals](const Vec& x, double t) {
        std::vector<double> a(x.data(), x.data() + n);
        a.push_back(t);
        a.insert(a.end(), pvals.begin(), pvals.end());
        return a;
    };

    s.sample_box.assign(static_cast<std::size_t>(n), {-1.0, 1.0});
    std::vector<std::optional<Interval>> domain(static_cast<std::size_t>(n));
    if (const auto* ch = doc.find("charts")) {
        for (int a = 0; a < n; ++a) {
            const auto& v = s.coords[static_cast<std::size_t>(a)];
            if (ch->has(v)) {
                domain[static_cast<std::size_t>(a)] = parse_interval(ch->get(v));
                s.sample_box[static_cast<std::size_t>(a)] = *domain[static_cast<std::size_t>(a)];
            }
        }
    }
    auto atlas = std::make_shared<Atlas>();
    Chart c;
    c.name = s.name;
    c.dim = n;
    c.contains = [domain](const Vec& x) {
        for (std::size_t a = 0; a < domain.size(); ++a)
            if (domain[a] && !(x(static_cast<Eigen::Index>(a)) > domain[a]->lo &&
                               x(static_cast<Eigen::Index>(a)) < domain[a]->hi))
                return false;
        return true;
    };
    c.depth = [domain](const Vec& x) {
        double d = std::numeric_limits<double>::infinity();
        for (std::size_t a = 0; a < domain.size(); ++a) {
            if (!domain[a]) continue;
            const double v = x(static_cast<Eigen::Index>(a));
            d = std::min({d, v - domain[a]->lo, domain[a]->hi - v});
        }
        return d;
    };
    atlas->add_chart(c);
    s.atlas = atlas;
    s.default_x = Vec(n);
    for (int a = 0; a < n; ++a) {
        const auto& iv = s.sample_box[static_cast<std::size_t>(a)];
        s.default_x(a) = 0.5 * (iv.lo + iv.hi);
    }

    auto grid_for = [&](const std::string& file, int values) {
        const std::filesystem::path path = base_dir.empty() ? std::filesystem::path(file) : base_dir / file;
        // Peek at the header to see whether t is a coordinate column.
        const std::string text = ini::read_file(path.string());
        const auto first = text.substr(0, text.find('\n'));
        const auto header = ini::split(first, ',');
        const bool with_t = static_cast<int>(header.size()) == n + 1 + values;
        if (!with_t && static_cast<int>(header.size()) != n + values) {
            throw ParseError(path.string() + ": expected " + std::to_string(n + values) + " or " +
                             std::to_string(n + 1 + values) + " columns");
        }
        auto table = std::make_shared<GridTable>(GridTable::parse(text, with_t ? n + 1 : n, path.string()));
        return std::pair{table, with_t};
    };

    const auto& metric = doc.require("metric");
    if (metric.has("grid")) {
        auto [table, with_t] = grid_for(metric.get("grid"), n * n);
        s.g.time_dependent = with_t;
        s.g.gM = [table = table, with_t = with_t, n](const Point& q) {
            Vec key(with_t ? n + 1 : n);
            key.head(n) = q.x;
            if (with_t) key(n) = q.t;
            const Vec v = (*table)(key);
            return Mat(Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
                v.data(), n, n));
        };
    } else {
        std::vector<Expression> entries(static_cast<std::size_t>(n * n));
        bool uses_t = false;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                const std::string key = "g" + std::to_string(i + 1) + std::to_string(j + 1);
                const std::string mirror = "g" + std::to_string(j + 1) + std::to_string(i + 1);
                std::string src;
                if (metric.has(key)) src = metric.get(key);
                else if (i != j && metric.has(mirror)) src = metric.get(mirror);
                else if (i != j) src = "0";
                else throw ParseError(doc.origin + ": [metric] is missing " + key);
                auto e = Expression::parse(src, names);
                uses_t = uses_t || !e.independent_of("t");
                entries[static_cast<std::size_t>(i * n + j)] = std::move(e);
            }
        s.g.time_dependent = uses_t;
        s.g.gM = [entries, args, n](const Point& q) {
            const auto a = args(q.x, q.t);
            Mat m(n, n);
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j) m(i, j) = entries[static_cast<std::size_t>(i * n + j)](a);
            return m;
        };
    }

    if (const auto* gauge = doc.find("gauge")) {
        if (gauge->has("grid")) {
            auto [table, with_t] = grid_for(gauge->get("grid"), n);
            if (with_t) throw ParseError(doc.origin + ": gauge grids cannot depend on t");
            s.A = GaugeField::from_function([table = table](const Vec& x) { return (*table)(x); });
            s.gauge_name = "grid";
        } else {
            std::vector<Expression> comps;
            for (int a = 0; a < n; ++a) {
                auto e = Expression::parse(gauge->get_or("A" + std::to_string(a + 1), "0"), names);
                if (!e.independent_of("t")) throw ParseError(doc.origin + ": gauge components cannot depend on t");
                comps.push_back(std::move(e));
            }
            s.A = GaugeField::from_function([comps, args, n](const Vec& x) {
                const auto a = args(x, 1.0);
                Vec v(n);
                for (int k = 0; k < n; ++k) v(k) = comps[static_cast<std::size_t>(k)](a);
                return v;
            });
            s.gauge_name = "expression";
        }
    }

    if (const auto* ex = doc.find("expects")) {
        auto truthy = [](const std::string& v) { return v == "true" || v == "yes" || v == "1"; };
        if (ex->has("euler_killing")) s.expects.euler_killing = truthy(ex->get("euler_killing"));
        if (ex->has("weight")) s.expects.weight = evaluate_constant(ex->get("weight"));
        if (ex->has("conformal")) s.expects.conformal = truthy(ex->get("conformal"));
    }
    finish(s);
    return s;
}

inline Scenario load_scenario_file(const std::string& path, const ParamMap& overrides = {}) {
    return parse_scenario(ini::load(path), std::filesystem::path(path).parent_path(), overrides);
}

/// Catalog name, or a path to a scenario file.
inline Scenario load_scenario(const std::string& name, const ParamMap& params = {}) {
    if (name == "flat") return make_flat(params);
    if (name == "lightcone") return make_lightcone(params);
    if (name == "sphere_pullback" || name == "sphere") return make_sphere_pullback(params);
    if (name == "moebius") return make_moebius(params);
    if (name == "schwarzschild") return make_schwarzschild(params);
    if (name == "thakurta") return make_thakurta(params);
    if (std::filesystem::exists(name)) return load_scenario_file(name, params);
    throw ContractViolation("unknown scenario '" + name + "'");
}

}  // namespace carroll
