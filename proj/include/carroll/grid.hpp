#pragma once

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <sstream>
#include <string>
#include <vector>

#include "carroll/core.hpp"
#include "carroll/ini.hpp"

namespace carroll {

// Tabulated field on a regular tensor grid, read from CSV:
//
//   header: coordinate names, then value columns
//   rows:   one per grid node, any order
//
// Values are interpolated multilinearly; queries outside the grid box raise
// DomainError (no extrapolation).
class GridTable {
public:
    GridTable() = default;

    static GridTable parse(const std::string& text, int coord_columns, const std::string& origin = "<grid>") {
        GridTable g;
        std::istringstream in(text);
        std::string line;
        int lineno = 0;
        std::vector<std::vector<double>> rows;
        while (std::getline(in, line)) {
            ++lineno;
            const std::string s = ini::trim(line);
            if (s.empty() || s.front() == '#') continue;
            auto cells = ini::split(s, ',');
            if (g.names_.empty()) {
                g.names_ = cells;
                continue;
            }
            if (cells.size() != g.names_.size()) {
                throw ParseError(origin + ":" + std::to_string(lineno) + ": expected " +
                                 std::to_string(g.names_.size()) + " columns");
            }
            std::vector<double> row;
            for (const auto& c : cells) {
                char* end = nullptr;
                const double v = std::strtod(c.c_str(), &end);
                if (end == c.c_str() || *end != '\0') {
                    throw ParseError(origin + ":" + std::to_string(lineno) + ": bad number '" + c + "'");
                }
                row.push_back(v);
            }
            rows.push_back(std::move(row));
        }
        if (coord_columns < 1 || coord_columns >= static_cast<int>(g.names_.size())) {
            throw ParseError(origin + ": grid needs at least one coordinate and one value column");
        }
        g.k_ = coord_columns;
        g.m_ = static_cast<int>(g.names_.size()) - coord_columns;
        // Axes: sorted unique coordinate values.
        g.axes_.resize(static_cast<std::size_t>(g.k_));
        for (const auto& r : rows)
            for (int d = 0; d < g.k_; ++d) g.axes_[static_cast<std::size_t>(d)].push_back(r[static_cast<std::size_t>(d)]);
        std::size_t total = 1;
        for (auto& ax : g.axes_) {
            std::sort(ax.begin(), ax.end());
            ax.erase(std::unique(ax.begin(), ax.end()), ax.end());
            if (ax.size() < 2) throw ParseError(origin + ": every grid axis needs at least two nodes");
            total *= ax.size();
        }
        if (total != rows.size()) {
            throw ParseError(origin + ": rows do not form a complete tensor grid (" +
                             std::to_string(rows.size()) + " rows, " + std::to_string(total) + " nodes)");
        }
        g.values_.assign(total * static_cast<std::size_t>(g.m_), std::nan(""));
        for (const auto& r : rows) {
            std::size_t flat = 0;
            for (int d = 0; d < g.k_; ++d) {
                const auto& ax = g.axes_[static_cast<std::size_t>(d)];
                const auto it = std::lower_bound(ax.begin(), ax.end(), r[static_cast<std::size_t>(d)]);
                flat = flat * ax.size() + static_cast<std::size_t>(it - ax.begin());
            }
            for (int j = 0; j < g.m_; ++j) {
                g.values_[flat * static_cast<std::size_t>(g.m_) + static_cast<std::size_t>(j)] =
                    r[static_cast<std::size_t>(g.k_ + j)];
            }
        }
        for (double v : g.values_)
            if (std::isnan(v)) throw ParseError(origin + ": duplicate grid nodes");
        return g;
    }

    static GridTable load(const std::string& path, int coord_columns) {
        return parse(ini::read_file(path), coord_columns, path);
    }

    int coordinates() const { return k_; }
    int values() const { return m_; }
    const std::vector<std::string>& names() const { return names_; }

    Vec operator()(const Vec& q) const {
        if (q.size() != k_) throw ContractViolation("grid query has the wrong dimension");
        std::vector<std::size_t> lo(static_cast<std::size_t>(k_));
        std::vector<double> frac(static_cast<std::size_t>(k_));
        for (int d = 0; d < k_; ++d) {
            const auto& ax = axes_[static_cast<std::size_t>(d)];
            const double v = q(d);
            if (!(v >= ax.front() && v <= ax.back())) {
                throw DomainError("grid query " + std::to_string(v) + " outside [" +
                                  std::to_string(ax.front()) + ", " + std::to_string(ax.back()) +
                                  "] on axis " + names_[static_cast<std::size_t>(d)]);
            }
            auto it = std::upper_bound(ax.begin(), ax.end(), v);
            std::size_t i = static_cast<std::size_t>(it - ax.begin());
            i = std::clamp<std::size_t>(i, 1, ax.size() - 1) - 1;
            lo[static_cast<std::size_t>(d)] = i;
            frac[static_cast<std::size_t>(d)] = (v - ax[i]) / (ax[i + 1] - ax[i]);
        }
        Vec out = Vec::Zero(m_);
        for (unsigned corner = 0; corner < (1u << k_); ++corner) {
            double w = 1.0;
            std::size_t flat = 0;
            for (int d = 0; d < k_; ++d) {
                const bool up = (corner >> d) & 1u;
                const auto dd = static_cast<std::size_t>(d);
                w *= up ? frac[dd] : 1.0 - frac[dd];
                flat = flat * axes_[dd].size() + lo[dd] + (up ? 1 : 0);
            }
            if (w == 0.0) continue;
            for (int j = 0; j < m_; ++j) {
                out(j) += w * values_[flat * static_cast<std::size_t>(m_) + static_cast<std::size_t>(j)];
            }
        }
        return out;
    }

private:
    int k_ = 0;
    int m_ = 0;
    std::vector<std::string> names_;
    std::vector<std::vector<double>> axes_;
    std::vector<double> values_;
};

}  // namespace carroll
