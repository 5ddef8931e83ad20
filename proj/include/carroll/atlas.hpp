#pragma once

#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "carroll/core.hpp"
#include "carroll/diff.hpp"

namespace carroll {

struct Chart {
    int id = 0;
    std::string name;
    int dim = 1;
    std::function<bool(const Vec&)> contains = [](const Vec&) { return true; };
    // Optional margin to the chart boundary (positive inside). Integrators move to a
    // deeper chart once the margin drops below their threshold.
    std::function<double(const Vec&)> depth;
};

// Admissible coordinate change between charts on the overlap:
//   x_to = base(x_from),   t_to = fiber(x_from) * t_from.
struct ChartTransition {
    int from = 0;
    int to = 0;
    std::function<Vec(const Vec&)> base;
    std::function<double(const Vec&)> fiber = [](const Vec&) { return 1.0; };
    std::function<Mat(const Vec&)> jacobian;  // d base / dx; finite differences when empty
};

class Atlas {
public:
    Atlas() = default;

    int add_chart(Chart c) {
        c.id = static_cast<int>(charts_.size());
        charts_.push_back(std::move(c));
        return charts_.back().id;
    }

    void add_transition(ChartTransition tr) {
        transitions_[{tr.from, tr.to}] = std::move(tr);
    }

    std::size_t size() const { return charts_.size(); }
    const std::vector<Chart>& charts() const { return charts_; }

    const Chart& chart(int id) const {
        if (id < 0 || id >= static_cast<int>(charts_.size())) {
            throw ContractViolation("unknown chart id " + std::to_string(id));
        }
        return charts_[static_cast<std::size_t>(id)];
    }

    bool has_transition(int from, int to) const {
        return from == to || transitions_.count({from, to}) > 0;
    }

    const ChartTransition& transition(int from, int to) const {
        auto it = transitions_.find({from, to});
        if (it == transitions_.end()) {
            throw ContractViolation("no transition from chart " + std::to_string(from) + " to " +
                                    std::to_string(to));
        }
        return it->second;
    }

    std::vector<std::pair<int, int>> transition_pairs() const {
        std::vector<std::pair<int, int>> out;
        for (const auto& [k, _] : transitions_) out.push_back(k);
        return out;
    }

    /// True if `p` (in its own chart) also lies in chart `to`.
    bool in_overlap(const Point& p, int to) const {
        if (p.chart == to) return true;
        if (!has_transition(p.chart, to)) return false;
        return chart(to).contains(transition(p.chart, to).base(p.x));
    }

    Point transform(const Point& p, int to) const {
        if (p.chart == to) return p;
        const auto& tr = transition(p.chart, to);
        return Point(tr.base(p.x), tr.fiber(p.x) * p.t, to);
    }

    Mat base_jacobian(int from, int to, const Vec& x, const DiffConfig& cfg = {}) const {
        if (from == to) return Mat::Identity(x.size(), x.size());
        const auto& tr = transition(from, to);
        if (tr.jacobian) return tr.jacobian(x);
        return jacobian(tr.base, x, cfg);
    }

    /// Gradient of ln|phi| for the fiber factor of the transition.
    Vec fiber_log_gradient(int from, int to, const Vec& x, const DiffConfig& cfg = {}) const {
        if (from == to) return Vec::Zero(x.size());
        const auto& tr = transition(from, to);
        return gradient([&](const Vec& y) { return std::log(std::abs(tr.fiber(y))); }, x, cfg);
    }

    /// Adapted components transform as xdot' = J xdot, tb' = tb + xdot . grad ln|phi|.
    TangentVector transform(const TangentVector& v, int to, const DiffConfig& cfg = {}) const {
        if (v.base.chart == to) return v;
        const int from = v.base.chart;
        const Mat j = base_jacobian(from, to, v.base.x, cfg);
        const Vec dl = fiber_log_gradient(from, to, v.base.x, cfg);
        return TangentVector(transform(v.base, to), j * v.vx, v.vtb + v.vx.dot(dl));
    }

    /// Gauge components in chart `to`: A' = J^{-T} (A - grad ln|phi|).
    Vec transform_gauge(const Vec& a_from, int from, int to, const Vec& x_from,
                        const DiffConfig& cfg = {}) const {
        if (from == to) return a_from;
        const Mat j = base_jacobian(from, to, x_from, cfg);
        const Vec dl = fiber_log_gradient(from, to, x_from, cfg);
        return j.transpose().fullPivLu().solve(a_from - dl);
    }

    /// Base-block metric components in chart `to`: g' = J^{-T} g J^{-1}.
    Mat transform_base_metric(const Mat& g_from, int from, int to, const Vec& x_from,
                              const DiffConfig& cfg = {}) const {
        if (from == to) return g_from;
        const Mat jinv = base_jacobian(from, to, x_from, cfg).inverse();
        return jinv.transpose() * g_from * jinv;
    }

private:
    std::vector<Chart> charts_;
    std::map<std::pair<int, int>, ChartTransition> transitions_;
};

/// One-chart atlas covering all of R^n.
inline Atlas single_chart_atlas(int n, std::string name = "global") {
    Atlas a;
    Chart c;
    c.name = std::move(name);
    c.dim = n;
    a.add_chart(std::move(c));
    return a;
}

}  // namespace carroll
