#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "carroll/geodesics.hpp"
#include "carroll/kk_metric.hpp"
#include "carroll/linearize.hpp"

#include <json.hpp>

namespace carroll {

// Numbers are written with %.17g so a CSV round-trips bit-exactly and two runs
// with the same inputs produce identical bytes.
inline std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline void write_text(const std::string& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error("cannot write " + path);
    f << text;
    if (!f) throw Error("write failed for " + path);
}

// ---------------------------------------------------------------------------
// Trajectories.

inline std::string trajectory_csv(const Trajectory& tr, const std::vector<std::string>& coords = {}) {
    std::ostringstream os;
    const int n = tr.samples.empty() ? 0 : tr.samples.front().dim();
    auto name = [&](int a) {
        return a < static_cast<int>(coords.size()) ? coords[static_cast<std::size_t>(a)] : "x" + std::to_string(a + 1);
    };
    os << "lambda,chart";
    for (int a = 0; a < n; ++a) os << ',' << name(a);
    os << ",t";
    for (int a = 0; a < n; ++a) os << ",v_" << name(a);
    os << ",vt,Q,null_residual,base_speed2\n";
    for (std::size_t k = 0; k < tr.samples.size(); ++k) {
        const auto& s = tr.samples[k];
        os << fmt(s.lambda) << ',' << s.chart;
        for (int a = 0; a < n; ++a) os << ',' << fmt(s.x(a));
        os << ',' << fmt(s.t);
        for (int a = 0; a < n; ++a) os << ',' << fmt(s.vx(a));
        os << ',' << fmt(s.vt) << ',' << fmt(tr.charge[k]) << ',' << fmt(tr.null_residual[k]) << ','
           << fmt(tr.base_speed2[k]) << '\n';
    }
    return os.str();
}

inline nlohmann::json trajectory_json(const Trajectory& tr) {
    nlohmann::json j;
    j["scenario"] = tr.scenario;
    j["event"] = to_string(tr.event);
    if (!tr.event_detail.empty()) j["event_detail"] = tr.event_detail;
    j["accepted_steps"] = tr.accepted;
    j["rejected_steps"] = tr.rejected;
    j["max_charge_drift"] = tr.samples.empty() ? 0.0 : tr.max_charge_drift();
    j["max_null_drift"] = tr.samples.empty() ? 0.0 : tr.max_null_drift();
    j["samples"] = nlohmann::json::array();
    for (std::size_t k = 0; k < tr.samples.size(); ++k) {
        const auto& s = tr.samples[k];
        j["samples"].push_back({{"lambda", s.lambda},
                                {"chart", s.chart},
                                {"x", std::vector<double>(s.x.data(), s.x.data() + s.x.size())},
                                {"t", s.t},
                                {"vx", std::vector<double>(s.vx.data(), s.vx.data() + s.vx.size())},
                                {"vt", s.vt},
                                {"Q", tr.charge[k]},
                                {"null_residual", tr.null_residual[k]}});
    }
    return j;
}

/// Static SVG polyline of two columns (default: first two base coordinates, or x1 against ln|t|).
inline std::string polyline_svg(const std::vector<double>& xs, const std::vector<double>& ys,
                                const std::string& xlabel, const std::string& ylabel,
                                const std::string& title) {
    const double w = 480, h = 480, pad = 40;
    double x0 = 0, x1 = 1, y0 = 0, y1 = 1;
    if (!xs.empty()) {
        x0 = *std::min_element(xs.begin(), xs.end());
        x1 = *std::max_element(xs.begin(), xs.end());
        y0 = *std::min_element(ys.begin(), ys.end());
        y1 = *std::max_element(ys.begin(), ys.end());
    }
    // Equal scaling on both axes so circles stay circles.
    const double span = std::max({x1 - x0, y1 - y0, 1e-12});
    const double cx = 0.5 * (x0 + x1), cy = 0.5 * (y0 + y1);
    const double scale = (w - 2 * pad) / span;
    auto px = [&](double x) { return 0.5 * w + (x - cx) * scale; };
    auto py = [&](double y) { return 0.5 * h - (y - cy) * scale; };
    std::ostringstream os;
    char buf[64];
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h << "\" viewBox=\"0 0 "
       << w << ' ' << h << "\">\n";
    os << "<title>" << title << "</title>\n";
    os << "<rect x=\"0\" y=\"0\" width=\"" << w << "\" height=\"" << h << "\" fill=\"white\"/>\n";
    os << "<polyline fill=\"none\" stroke=\"#1f4e79\" stroke-width=\"1.5\" points=\"";
    for (std::size_t k = 0; k < xs.size(); ++k) {
        std::snprintf(buf, sizeof buf, "%.3f,%.3f ", px(xs[k]), py(ys[k]));
        os << buf;
    }
    os << "\"/>\n";
    os << "<text x=\"" << w / 2 << "\" y=\"" << h - 8 << "\" text-anchor=\"middle\" font-size=\"12\">" << xlabel
       << "</text>\n";
    os << "<text x=\"12\" y=\"" << h / 2 << "\" font-size=\"12\" transform=\"rotate(-90 12 " << h / 2 << ")\">"
       << ylabel << "</text>\n";
    os << "</svg>\n";
    return os.str();
}

inline std::string trajectory_svg(const Trajectory& tr, const std::vector<std::string>& coords = {}) {
    std::vector<double> xs, ys;
    const int n = tr.samples.empty() ? 0 : tr.samples.front().dim();
    const std::string c0 = coords.empty() ? "x1" : coords[0];
    for (const auto& s : tr.samples) {
        xs.push_back(s.x(0));
        ys.push_back(n > 1 ? s.x(1) : std::log(std::abs(s.t)));
    }
    const std::string c1 = n > 1 ? (coords.size() > 1 ? coords[1] : "x2") : "ln|t|";
    return polyline_svg(xs, ys, c0, c1, tr.scenario);
}

inline std::string base_trajectory_csv(const BaseTrajectory& bt, const std::vector<std::string>& coords = {}) {
    std::ostringstream os;
    const int n = bt.x.empty() ? 0 : static_cast<int>(bt.x.front().size());
    auto name = [&](int a) {
        return a < static_cast<int>(coords.size()) ? coords[static_cast<std::size_t>(a)] : "x" + std::to_string(a + 1);
    };
    os << "u";
    for (int a = 0; a < n; ++a) os << ',' << name(a);
    for (int a = 0; a < n; ++a) os << ",v_" << name(a);
    os << '\n';
    for (std::size_t k = 0; k < bt.u.size(); ++k) {
        os << fmt(bt.u[k]);
        for (int a = 0; a < n; ++a) os << ',' << fmt(bt.x[k](a));
        for (int a = 0; a < n; ++a) os << ',' << fmt(bt.v[k](a));
        os << '\n';
    }
    return os.str();
}

inline std::string base_trajectory_svg(const BaseTrajectory& bt, const std::vector<std::string>& coords,
                                       const std::string& title) {
    std::vector<double> xs, ys;
    const bool one = !bt.x.empty() && bt.x.front().size() == 1;
    for (std::size_t k = 0; k < bt.u.size(); ++k) {
        xs.push_back(one ? bt.u[k] : bt.x[k](0));
        ys.push_back(one ? bt.x[k](0) : bt.x[k](1));
    }
    const std::string a = coords.empty() ? "x1" : coords[0];
    const std::string b = coords.size() > 1 ? coords[1] : "x2";
    return polyline_svg(xs, ys, one ? "u" : a, one ? a : b, title);
}

// ---------------------------------------------------------------------------
// Christoffel tables.

struct ChristoffelRow {
    Point p;
    Vec A;
    int a = 0, b = 0, c = 0;  // Gamma^a_bc
    double closed = 0.0;
    double numeric = 0.0;
};

/// Every independent component (b <= c) at every point.
inline std::vector<ChristoffelRow> christoffel_rows(const KKMetric& G, const std::vector<Point>& pts,
                                                    const BaseChristoffelFn& base, const DiffConfig& cfg = {}) {
    std::vector<ChristoffelRow> rows;
    const auto numeric = christoffel_batch(G, pts, cfg);
    for (std::size_t k = 0; k < pts.size(); ++k) {
        const auto closed = christoffel_closed_form(G, pts[k], base, cfg);
        const int m = closed.size();
        for (int a = 0; a < m; ++a)
            for (int b = 0; b < m; ++b)
                for (int c = b; c < m; ++c)
                    rows.push_back({pts[k], G.gauge()(pts[k]), a, b, c, closed(a, b, c), numeric[k](a, b, c)});
    }
    return rows;
}

inline std::string christoffel_csv(const std::vector<ChristoffelRow>& rows, const std::vector<std::string>& coords) {
    std::ostringstream os;
    const int n = rows.empty() ? static_cast<int>(coords.size()) : rows.front().p.dim();
    auto label = [&](int k) { return k < n ? coords[static_cast<std::size_t>(k)] : std::string("t"); };
    for (int a = 0; a < n; ++a) os << coords[static_cast<std::size_t>(a)] << ',';
    os << 't';
    for (int a = 0; a < n; ++a) os << ",A_" << coords[static_cast<std::size_t>(a)];
    os << ",upper,lower1,lower2,closed,numeric,deviation\n";
    for (const auto& r : rows) {
        for (int a = 0; a < n; ++a) os << fmt(r.p.x(a)) << ',';
        os << fmt(r.p.t);
        for (int a = 0; a < n; ++a) os << ',' << fmt(r.A(a));
        os << ',' << label(r.a) << ',' << label(r.b) << ',' << label(r.c) << ',' << fmt(r.closed) << ','
           << fmt(r.numeric) << ',' << fmt(std::abs(r.closed - r.numeric)) << '\n';
    }
    return os.str();
}

inline nlohmann::json christoffel_json(const std::vector<ChristoffelRow>& rows, const std::vector<std::string>& coords) {
    nlohmann::json j = nlohmann::json::array();
    const int n = rows.empty() ? 0 : rows.front().p.dim();
    auto label = [&](int k) { return k < n ? coords[static_cast<std::size_t>(k)] : std::string("t"); };
    for (const auto& r : rows) {
        j.push_back({{"x", std::vector<double>(r.p.x.data(), r.p.x.data() + n)},
                     {"t", r.p.t},
                     {"component", {label(r.a), label(r.b), label(r.c)}},
                     {"closed", r.closed},
                     {"numeric", r.numeric},
                     {"deviation", std::abs(r.closed - r.numeric)}});
    }
    return j;
}

// ---------------------------------------------------------------------------
// Linearization.

inline std::string cocycle_csv(const LinearizedCocycle& lc) {
    std::ostringstream os;
    os << "to,from,m,c\n";
    const auto& a = *lc.shifted;
    for (const auto& s : lc.table) {
        os << a.chart(s.i).name << ',' << a.chart(s.j).name << ',' << fmt(s.m) << ',' << fmt(s.c) << '\n';
    }
    return os.str();
}

inline nlohmann::json cocycle_json(const LinearizedCocycle& lc) {
    nlohmann::json j;
    const auto& a = *lc.shifted;
    j["atlas"] = a.name;
    j["cocycle_residual"] = lc.cocycle_residual;
    j["inverse_residual"] = lc.inverse_residual;
    j["identity_residual"] = lc.identity_residual;
    j["linearity_defect"] = lc.linearity_defect;
    j["origin_defect"] = origin_defect(a);
    j["table"] = nlohmann::json::array();
    for (const auto& s : lc.table) {
        j["table"].push_back({{"to", a.chart(s.i).name}, {"from", a.chart(s.j).name}, {"m", s.m}, {"c", s.c}});
    }
    return j;
}

}  // namespace carroll
