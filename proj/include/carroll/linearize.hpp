#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "carroll/atlas.hpp"
#include "carroll/core.hpp"
#include "carroll/expr.hpp"
#include "carroll/ini.hpp"

namespace carroll {

// Line-bundle atlases over a one-dimensional base (a line, or a circle when
// `period` > 0), with fiber transitions r_i = psi_ij(m, r_j) that need not be
// linear. The procedure here shifts them by a global section, reads off the
// first-order cocycle c_ij(m) and checks it.

class DegeneracyError : public ConstructionError {
public:
    using ConstructionError::ConstructionError;
};

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
    double width() const { return hi - lo; }
};

/// Finite union of intervals in canonical base coordinates.
struct ArcSet {
    std::vector<Interval> pieces;
    bool empty() const { return pieces.empty(); }
};

inline double canonical_base(double m, double period) {
    if (period <= 0.0) return m;
    double c = std::fmod(m, period);
    if (c < 0.0) c += period;
    return c;
}

inline ArcSet arc_set(Interval iv, double period) {
    ArcSet s;
    if (!(iv.hi > iv.lo)) return s;
    if (period <= 0.0) {
        s.pieces.push_back(iv);
        return s;
    }
    if (iv.width() >= period) {
        s.pieces.push_back({0.0, period});
        return s;
    }
    const double lo = canonical_base(iv.lo, period);
    const double hi = lo + iv.width();
    if (hi <= period) {
        s.pieces.push_back({lo, hi});
    } else {
        s.pieces.push_back({lo, period});
        s.pieces.push_back({0.0, hi - period});
    }
    return s;
}

inline ArcSet intersect(const ArcSet& a, const ArcSet& b) {
    ArcSet out;
    for (const auto& p : a.pieces)
        for (const auto& q : b.pieces) {
            const double lo = std::max(p.lo, q.lo);
            const double hi = std::min(p.hi, q.hi);
            if (hi > lo) out.pieces.push_back({lo, hi});
        }
    return out;
}

inline bool contains(const ArcSet& s, double m) {
    for (const auto& p : s.pieces)
        if (m > p.lo && m < p.hi) return true;
    return false;
}

/// `per_piece` interior points of every piece.
inline std::vector<double> sample(const ArcSet& s, int per_piece) {
    std::vector<double> out;
    for (const auto& p : s.pieces)
        for (int k = 0; k < per_piece; ++k) out.push_back(p.lo + (k + 0.5) * p.width() / per_piece);
    return out;
}

using FiberMap = std::function<double(double m, double r)>;
using BaseFunction = std::function<double(double m)>;

struct TransitionAtlas {
    struct ChartSpec {
        std::string name;
        Interval domain;
        BaseFunction section = [](double) { return 0.0; };
    };

    // One connected piece of an overlap with r_to = psi(m, r_from) on it.
    struct Transition {
        int to = 0;
        int from = 0;
        std::optional<Interval> interval;  // restricts the overlap, default: whole intersection
        FiberMap psi;
        FiberMap inverse;                  // r_from = inverse(m, r_to), optional
        BaseFunction derivative;           // registered d_r psi at the section, optional
    };

    std::string name;
    double period = 0.0;
    int samples_per_overlap = 32;
    std::vector<ChartSpec> charts;
    std::vector<Transition> transitions;

    int size() const { return static_cast<int>(charts.size()); }

    const ChartSpec& chart(int i) const {
        if (i < 0 || i >= size()) throw ContractViolation("unknown chart " + std::to_string(i));
        return charts[static_cast<std::size_t>(i)];
    }

    ArcSet domain(int i) const { return arc_set(chart(i).domain, period); }

    /// Region on which transition `tr` applies.
    ArcSet region(const Transition& tr) const {
        ArcSet s = intersect(domain(tr.to), domain(tr.from));
        if (tr.interval) s = intersect(s, arc_set(*tr.interval, period));
        return s;
    }

    /// Pieces of the (i, j) overlap, each with its transition (either direction).
    std::vector<std::pair<const Transition*, ArcSet>> overlap(int i, int j) const {
        std::vector<std::pair<const Transition*, ArcSet>> out;
        for (const auto& tr : transitions) {
            if ((tr.to == i && tr.from == j) || (tr.to == j && tr.from == i)) {
                ArcSet r = region(tr);
                if (!r.empty()) out.emplace_back(&tr, std::move(r));
            }
        }
        return out;
    }

    const Transition* find(int i, int j, double m) const {
        const double c = canonical_base(m, period);
        for (const auto& [tr, set] : overlap(i, j))
            if (contains(set, c)) return tr;
        return nullptr;
    }

    double section(int i, double m) const { return chart(i).section(canonical_base(m, period)); }

    /// r_i = psi_ij(m, r_j); the reverse direction is inverted numerically if needed.
    double psi(int i, int j, double m, double r) const {
        if (i == j) return r;
        const double c = canonical_base(m, period);
        const Transition* tr = find(i, j, c);
        if (!tr) {
            throw DomainError("base point " + std::to_string(m) + " is not in the overlap of charts " +
                              std::to_string(i) + " and " + std::to_string(j));
        }
        if (tr->to == i) return tr->psi(c, r);
        if (tr->inverse) return tr->inverse(c, r);
        return invert(tr->psi, c, r);
    }

    /// Representative of base point m inside chart i's domain.
    double representative(int i, double m) const {
        const auto& d = chart(i).domain;
        if (period <= 0.0) return m;
        double x = d.lo + canonical_base(m - d.lo, period);
        if (!(x > d.lo && x < d.hi)) {
            throw DomainError("base point " + std::to_string(m) + " is not in chart " + std::to_string(i));
        }
        return x;
    }

    /// Solves f(m, y) = r for y by Newton iteration with a difference derivative.
    static double invert(const FiberMap& f, double m, double r) {
        auto df = [&](double y) {
            const double h = 1e-7 * std::max(1.0, std::abs(y));
            return (f(m, y + h) - f(m, y - h)) / (2.0 * h);
        };
        const double d0 = df(0.0);
        double y = std::abs(d0) > 1e-12 ? (r - f(m, 0.0)) / d0 : r;
        for (int it = 0; it < 100; ++it) {
            const double d = df(y);
            if (d == 0.0 || !std::isfinite(d)) break;
            const double step = (f(m, y) - r) / d;
            y -= step;
            if (std::abs(step) <= 1e-16 * std::max(1.0, std::abs(y))) return y;
        }
        if (std::abs(f(m, y) - r) > 1e-12 * std::max(1.0, std::abs(r))) {
            throw NumericError("could not invert a fiber transition at m = " + std::to_string(m));
        }
        return y;
    }
};

// ---------------------------------------------------------------------------
// Shift by a global section.

struct SectionDefect {
    double worst = 0.0;
    int i = 0, j = 0;
    double m = 0.0;
};

/// max |s_i(m) - psi_ij(m, s_j(m))| over overlap samples.
inline SectionDefect section_consistency(const TransitionAtlas& atlas) {
    SectionDefect d;
    for (const auto& tr : atlas.transitions) {
        for (double m : sample(atlas.region(tr), atlas.samples_per_overlap)) {
            for (const auto& [i, j] : {std::pair{tr.to, tr.from}, std::pair{tr.from, tr.to}}) {
                const double e = std::abs(atlas.section(i, m) - atlas.psi(i, j, m, atlas.section(j, m)));
                if (e > d.worst) d = {e, i, j, m};
            }
        }
    }
    return d;
}

/// psi~_ij(m, r) = psi_ij(m, r + s_j(m)) - s_i(m); the result has the zero section.
inline TransitionAtlas shift_transitions(const TransitionAtlas& atlas, double tol = 1e-10) {
    const SectionDefect d = section_consistency(atlas);
    if (d.worst > tol) {
        throw ConstructionError("section is not global: |s_" + std::to_string(d.i) + " - psi_" +
                                std::to_string(d.i) + std::to_string(d.j) + "(s_" + std::to_string(d.j) +
                                ")| = " + std::to_string(d.worst) + " at m = " + std::to_string(d.m));
    }
    auto base = std::make_shared<const TransitionAtlas>(atlas);
    TransitionAtlas out = atlas;
    out.name = atlas.name + " (shifted)";
    for (auto& c : out.charts) c.section = [](double) { return 0.0; };
    for (auto& tr : out.transitions) {
        const int i = tr.to, j = tr.from;
        tr.psi = [base, i, j](double m, double r) {
            return base->psi(i, j, m, r + base->section(j, m)) - base->section(i, m);
        };
        tr.inverse = [base, i, j](double m, double r) {
            return base->psi(j, i, m, r + base->section(i, m)) - base->section(j, m);
        };
    }
    return out;
}

/// max |psi~_ij(m, 0)| on the shifted atlas.
inline double origin_defect(const TransitionAtlas& shifted) {
    double worst = 0.0;
    for (const auto& tr : shifted.transitions)
        for (double m : sample(shifted.region(tr), shifted.samples_per_overlap)) {
            worst = std::max(worst, std::abs(shifted.psi(tr.to, tr.from, m, 0.0)));
            worst = std::max(worst, std::abs(shifted.psi(tr.from, tr.to, m, 0.0)));
        }
    return worst;
}

// ---------------------------------------------------------------------------
// First-order cocycle.

struct CocycleSample {
    int i = 0, j = 0;
    double m = 0.0;
    double c = 0.0;
};

struct LinearizedCocycle {
    std::shared_ptr<const TransitionAtlas> shifted;
    double step = 1e-6;
    bool use_registered = false;
    std::vector<CocycleSample> table;
    double cocycle_residual = 0.0;  // max |c_ij c_jk - c_ik| on triple overlaps
    double inverse_residual = 0.0;  // max |c_ij c_ji - 1|
    double identity_residual = 0.0; // max |c_ii - 1|
    double linearity_defect = 0.0;  // max |c_ij r - psi~_ij(m, r)| for r in [-1, 1]

    /// c_ij(m) = d_r psi~_ij(m, 0).
    double c(int i, int j, double m) const {
        const TransitionAtlas& a = *shifted;
        double v = 0.0;
        const auto* tr = i == j ? nullptr : a.find(i, j, m);
        if (use_registered && tr && tr->to == i && tr->derivative) {
            v = tr->derivative(canonical_base(m, a.period));
        } else {
            auto f = [&](double r) { return a.psi(i, j, m, r); };
            const double d1 = (f(step) - f(-step)) / (2.0 * step);
            const double d2 = (f(0.5 * step) - f(-0.5 * step)) / step;
            v = (4.0 * d2 - d1) / 3.0;
        }
        if (!std::isfinite(v) || std::abs(v) < 1e-10) {
            throw DegeneracyError("transition " + std::to_string(i) + "<-" + std::to_string(j) +
                                  " has vanishing derivative at the section (m = " +
                                  std::to_string(m) + ")");
        }
        return v;
    }
};

/// Differentiates every shifted transition at r = 0 and checks the cocycle identities.
inline LinearizedCocycle linearize(const TransitionAtlas& shifted, double step = 1e-6,
                                   bool use_registered = false) {
    LinearizedCocycle lc;
    lc.shifted = std::make_shared<const TransitionAtlas>(shifted);
    lc.step = step;
    lc.use_registered = use_registered;
    const TransitionAtlas& a = *lc.shifted;
    const int n = a.size();

    for (int i = 0; i < n; ++i) {
        for (double m : sample(a.domain(i), 4)) {
            lc.identity_residual = std::max(lc.identity_residual, std::abs(lc.c(i, i, m) - 1.0));
        }
    }
    for (const auto& tr : a.transitions) {
        for (double m : sample(a.region(tr), a.samples_per_overlap)) {
            const double cij = lc.c(tr.to, tr.from, m);
            const double cji = lc.c(tr.from, tr.to, m);
            lc.table.push_back({tr.to, tr.from, m, cij});
            lc.table.push_back({tr.from, tr.to, m, cji});
            lc.inverse_residual = std::max(lc.inverse_residual, std::abs(cij * cji - 1.0));
            for (double r : {-1.0, -0.5, 0.25, 1.0}) {
                lc.linearity_defect =
                    std::max(lc.linearity_defect, std::abs(cij * r - a.psi(tr.to, tr.from, m, r)));
            }
        }
    }
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k) {
                if (i == j || j == k || i == k) continue;
                for (const auto& [t1, s1] : a.overlap(i, j))
                    for (const auto& [t2, s2] : a.overlap(j, k))
                        for (const auto& [t3, s3] : a.overlap(i, k)) {
                            const ArcSet triple = intersect(intersect(s1, s2), s3);
                            for (double m : sample(triple, a.samples_per_overlap)) {
                                const double e = std::abs(lc.c(i, j, m) * lc.c(j, k, m) - lc.c(i, k, m));
                                lc.cocycle_residual = std::max(lc.cocycle_residual, e);
                            }
                        }
            }
    lc.cocycle_residual = std::max(lc.cocycle_residual, lc.inverse_residual);
    return lc;
}

// ---------------------------------------------------------------------------
// Fiber-preserving shift between the linearized bundle and the original one.

struct FiberPoint {
    int chart = 0;
    double m = 0.0;
    double r = 0.0;
};

/// (m, r_i) -> (m, r_i + s_i(m)).
inline FiberPoint embed_section_diffeo(const TransitionAtlas& original, const FiberPoint& p) {
    return {p.chart, p.m, p.r + original.section(p.chart, p.m)};
}

struct Unembedded {
    FiberPoint point;
    bool in_bundle = true;  // false when the point lands on the zero section
};

/// Inverse shift; points landing on r = 0 are flagged as outside P.
inline Unembedded unembed_section_diffeo(const TransitionAtlas& original, const FiberPoint& p) {
    Unembedded u;
    u.point = {p.chart, p.m, p.r - original.section(p.chart, p.m)};
    u.in_bundle = std::abs(u.point.r) >= kFiberCutoff;
    return u;
}

/// Same fiber point seen in chart `to` of the linearized bundle: r' = c_{to,from}(m) r.
inline FiberPoint transfer(const LinearizedCocycle& lc, const FiberPoint& p, int to) {
    if (p.chart == to) return p;
    const TransitionAtlas& a = *lc.shifted;
    return {to, a.representative(to, p.m), lc.c(to, p.chart, p.m) * p.r};
}

/// Atlas of the linearized bundle for the geometry modules: t_to = c_{to,from}(m) t_from.
inline Atlas bundle_atlas(const LinearizedCocycle& lc) {
    const auto a = lc.shifted;
    Atlas out;
    for (int i = 0; i < a->size(); ++i) {
        Chart c;
        c.name = a->chart(i).name;
        c.dim = 1;
        const Interval d = a->chart(i).domain;
        c.contains = [d](const Vec& x) { return x(0) > d.lo && x(0) < d.hi; };
        c.depth = [d](const Vec& x) { return std::min(x(0) - d.lo, d.hi - x(0)); };
        out.add_chart(std::move(c));
    }
    for (int i = 0; i < a->size(); ++i)
        for (int j = 0; j < a->size(); ++j) {
            if (i == j || a->overlap(i, j).empty()) continue;
            ChartTransition tr;
            tr.from = j;
            tr.to = i;
            tr.base = [a, i](const Vec& x) {
                Vec y(1);
                const double c = canonical_base(x(0), a->period);
                // Off the overlap keep the raw value so finite-difference stencils stay defined.
                try {
                    y(0) = a->representative(i, c);
                } catch (const DomainError&) {
                    y(0) = x(0);
                }
                return y;
            };
            tr.fiber = [lc, i, j](const Vec& x) { return lc.c(i, j, x(0)); };
            out.add_transition(std::move(tr));
        }
    return out;
}

// ---------------------------------------------------------------------------
// Atlas files and built-in atlases.

inline Interval parse_interval(const std::string& s) {
    const auto v = evaluate_list(s);
    if (v.size() != 2 || !(v[1] > v[0])) throw ParseError("interval must be 'lo, hi' with lo < hi: " + s);
    return {v[0], v[1]};
}

inline FiberMap fiber_expression(const std::string& src) {
    const Expression e = Expression::parse(src, {"m", "r"});
    return [e](double m, double r) { return e({m, r}); };
}

inline BaseFunction base_expression(const std::string& src) {
    const Expression e = Expression::parse(src, {"m"});
    return [e](double m) { return e({m}); };
}

/// Parses the sectioned atlas format ([atlas], repeated [chart] and [transition]).
inline TransitionAtlas parse_atlas(const ini::Document& doc) {
    TransitionAtlas a;
    const auto& head = doc.require("atlas");
    a.name = head.get_or("name", "atlas");
    a.period = evaluate_constant(head.get_or("period", "0"));
    a.samples_per_overlap = static_cast<int>(evaluate_constant(head.get_or("samples", "32")));
    if (a.samples_per_overlap < 1) throw ParseError("samples must be positive");
    for (const auto* s : doc.all("chart")) {
        TransitionAtlas::ChartSpec c;
        c.name = s->get_or("name", "chart" + std::to_string(a.charts.size()));
        c.domain = parse_interval(s->get("domain"));
        c.section = base_expression(s->get_or("section", "0"));
        a.charts.push_back(std::move(c));
    }
    if (a.charts.empty()) throw ParseError(doc.origin + ": atlas has no charts");
    for (const auto* s : doc.all("transition")) {
        TransitionAtlas::Transition tr;
        tr.to = static_cast<int>(evaluate_constant(s->get("to")));
        tr.from = static_cast<int>(evaluate_constant(s->get("from")));
        if (tr.to < 0 || tr.to >= a.size() || tr.from < 0 || tr.from >= a.size() || tr.to == tr.from) {
            throw ParseError(doc.origin + ":" + std::to_string(s->line) + ": bad chart indices");
        }
        if (s->has("interval")) tr.interval = parse_interval(s->get("interval"));
        tr.psi = fiber_expression(s->get("psi"));
        if (s->has("inverse")) tr.inverse = fiber_expression(s->get("inverse"));
        if (s->has("derivative")) tr.derivative = base_expression(s->get("derivative"));
        a.transitions.push_back(std::move(tr));
    }
    return a;
}

inline TransitionAtlas load_atlas_file(const std::string& path) { return parse_atlas(ini::load(path)); }

inline std::vector<std::string> builtin_atlas_names() { return {"moebius", "circle3", "expcubic", "quadratic"}; }

/// Built-in atlases.
///
///   moebius   two arcs of the circle, psi = r near pi and psi = -r near 0.
///   circle3   three arcs with nonlinear transitions r_i = h_i(R) of a global
///             fiber coordinate R (h0 = R, h1 = sinh R, h2 = e^{cos m} R) and
///             the section R = 0.5 sin m.
///   expcubic  two arcs, psi = e^m r + r^3 on both overlap pieces.
///   quadratic two arcs, psi = r + m r^2.
inline TransitionAtlas builtin_atlas(const std::string& name) {
    const double pi = std::numbers::pi;
    TransitionAtlas a;
    a.name = name;
    a.period = 2.0 * pi;
    auto two_arcs = [&] {
        a.charts.push_back({"east", {-0.5, pi + 0.5}, [](double) { return 0.0; }});
        a.charts.push_back({"west", {pi - 0.5, 2.0 * pi + 0.5}, [](double) { return 0.0; }});
    };
    if (name == "moebius") {
        two_arcs();
        TransitionAtlas::Transition keep{1, 0, Interval{pi - 0.5, pi + 0.5},
                                         [](double, double r) { return r; },
                                         [](double, double r) { return r; },
                                         [](double) { return 1.0; }};
        TransitionAtlas::Transition flip{1, 0, Interval{-0.5, 0.5},
                                         [](double, double r) { return -r; },
                                         [](double, double r) { return -r; },
                                         [](double) { return -1.0; }};
        a.transitions = {keep, flip};
        return a;
    }
    if (name == "expcubic") {
        two_arcs();
        TransitionAtlas::Transition tr;
        tr.to = 1;
        tr.from = 0;
        tr.psi = [](double m, double r) { return std::exp(m) * r + r * r * r; };
        tr.derivative = [](double m) { return std::exp(m); };
        a.transitions = {tr};
        return a;
    }
    if (name == "quadratic") {
        two_arcs();
        TransitionAtlas::Transition tr;
        tr.to = 1;
        tr.from = 0;
        tr.psi = [](double m, double r) { return r + m * r * r; };
        tr.derivative = [](double) { return 1.0; };
        a.transitions = {tr};
        return a;
    }
    if (name == "circle3") {
        auto S = [](double m) { return 0.5 * std::sin(m); };
        auto h2 = [](double m) { return std::exp(std::cos(m)); };
        a.charts.push_back({"u0", {0.0, 4.5}, S});
        a.charts.push_back({"u1", {2.1, 6.6}, [S](double m) { return std::sinh(S(m)); }});
        a.charts.push_back({"u2", {4.2, 8.7}, [S, h2](double m) { return h2(m) * S(m); }});
        TransitionAtlas::Transition t10;
        t10.to = 1;
        t10.from = 0;
        t10.psi = [](double, double r) { return std::sinh(r); };
        t10.inverse = [](double, double r) { return std::asinh(r); };
        TransitionAtlas::Transition t20;
        t20.to = 2;
        t20.from = 0;
        t20.psi = [h2](double m, double r) { return h2(m) * r; };
        t20.inverse = [h2](double m, double r) { return r / h2(m); };
        TransitionAtlas::Transition t21;
        t21.to = 2;
        t21.from = 1;
        t21.psi = [h2](double m, double r) { return h2(m) * std::asinh(r); };
        t21.inverse = [h2](double m, double r) { return std::sinh(r / h2(m)); };
        a.transitions = {t10, t20, t21};
        return a;
    }
    throw ContractViolation("unknown built-in atlas '" + name + "'");
}

}  // namespace carroll
