#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <ostream>
#include <string>
#include <vector>

#include "farel/core/objective.hpp"
#include "farel/pareto/pareto.hpp"

namespace farel::experiment {

/// Fixed-point with `decimals` places (ties to even on the exact binary
/// value), trailing zeros trimmed, negative zero printed as "0".
inline std::string format_number(double v, int decimals) {
    if (std::isnan(v)) {
        return "nan";
    }
    if (std::isinf(v)) {
        return v > 0 ? "inf" : "-inf";
    }
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
    std::string s = buf;
    if (s.find('.') != std::string::npos) {
        while (s.back() == '0') {
            s.pop_back();
        }
        if (s.back() == '.') {
            s.pop_back();
        }
    }
    if (s == "-0") {
        s = "0";
    }
    return s;
}

inline constexpr int policy_decimals = 5;
inline constexpr int summary_decimals = 6;

inline std::string objective_header() {
    std::string h;
    for (auto o : all_objectives) {
        h += ",";
        h += objective_name(o);
    }
    return h;
}

/// Header `objectives,seed,R,SP,EO,OAE,PP,PE,IF,CSC`, one row per policy.
inline void write_policy_table(std::ostream& os, const std::string& objectives,
                               const std::vector<pareto::PolicyPoint>& points) {
    os << "objectives,seed" << objective_header() << "\n";
    for (const auto& p : points) {
        os << objectives << "," << p.seed;
        for (double v : p.returns) {
            os << "," << format_number(v, policy_decimals);
        }
        os << "\n";
    }
}

/// Per-seed mean/std rows and the pooled "All" rows; `std_undefined` is 1 when
/// fewer than two policies back a std row.
inline void write_summary_table(std::ostream& os, const std::vector<pareto::SummaryRow>& rows) {
    os << "seed,statistic" << objective_header() << ",std_undefined\n";
    for (const auto& r : rows) {
        os << r.seed << "," << r.statistic;
        for (double v : r.values) {
            os << "," << format_number(v, summary_decimals);
        }
        os << "," << (r.std_undefined ? 1 : 0) << "\n";
    }
}

struct WindowTraceRow {
    std::size_t step = 0;
    double mean = 0.0;
    double std = 0.0;
};

/// Running per-step history sizes across training episodes.
class WindowTrace {
public:
    void add_episode(const std::vector<std::size_t>& sizes) {
        if (sizes.size() > sum_.size()) {
            sum_.resize(sizes.size(), 0.0);
            sq_.resize(sizes.size(), 0.0);
            n_.resize(sizes.size(), 0);
        }
        for (std::size_t i = 0; i < sizes.size(); ++i) {
            const auto v = static_cast<double>(sizes[i]);
            sum_[i] += v;
            sq_[i] += v * v;
            ++n_[i];
        }
    }

    /// Rows at steps every, 2*every, ...; std is the population std.
    std::vector<WindowTraceRow> rows(std::size_t every) const {
        std::vector<WindowTraceRow> out;
        for (std::size_t step = every; step <= sum_.size(); step += every) {
            const std::size_t i = step - 1;
            const auto n = static_cast<double>(n_[i]);
            const double mean = sum_[i] / n;
            const double var = std::max(sq_[i] / n - mean * mean, 0.0);
            out.push_back({step, mean, std::sqrt(var)});
        }
        return out;
    }

private:
    std::vector<double> sum_;
    std::vector<double> sq_;
    std::vector<std::size_t> n_;
};

inline void write_window_trace(std::ostream& os, const std::vector<WindowTraceRow>& rows) {
    os << "step,mean_window,std_window\n";
    for (const auto& r : rows) {
        os << r.step << "," << format_number(r.mean, policy_decimals) << "," << format_number(r.std, policy_decimals)
           << "\n";
    }
}

struct RadarGeometry {
    double size = 480.0;
    double radius = 170.0;

    double cx() const { return size / 2.0; }
    double cy() const { return size / 2.0; }

    /// Position of normalized value `v` on axis `k` of `n`; 0 lies on the rim,
    /// -1 at the centre. Values are clamped to [-1, 0].
    std::pair<double, double> vertex(std::size_t k, std::size_t n, double v) const {
        const double r = radius * (1.0 + std::clamp(v, -1.0, 0.0));
        const double a = -std::numbers::pi / 2.0 + 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n);
        return {cx() + r * std::cos(a), cy() + r * std::sin(a)};
    }
};

/// Static radar chart: one polygon per (already normalized) policy over the
/// eight objective axes.
inline void write_radar(std::ostream& os, const std::vector<pareto::Point>& normalized, const std::string& title,
                        const RadarGeometry& g = {}) {
    static const char* palette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                                    "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};
    const std::size_t n = objective_count;
    auto pt = [](double v) { return format_number(v, 3); };
    os << R"(<svg xmlns="http://www.w3.org/2000/svg" width=")" << g.size << R"(" height=")" << g.size
       << R"(" viewBox="0 0 )" << g.size << " " << g.size << R"(">)" << "\n";
    os << "<title>" << title << "</title>\n";
    os << R"(<rect width="100%" height="100%" fill="white"/>)" << "\n";
    for (double ring : {-0.75, -0.5, -0.25, 0.0}) {
        os << R"(<polygon class="ring" fill="none" stroke="#cccccc" points=")";
        for (std::size_t k = 0; k < n; ++k) {
            const auto [x, y] = g.vertex(k, n, ring);
            os << (k ? " " : "") << pt(x) << "," << pt(y);
        }
        os << R"("/>)" << "\n";
    }
    for (std::size_t k = 0; k < n; ++k) {
        const auto [x, y] = g.vertex(k, n, 0.0);
        os << R"(<line class="axis" x1=")" << pt(g.cx()) << R"(" y1=")" << pt(g.cy()) << R"(" x2=")" << pt(x)
           << R"(" y2=")" << pt(y) << R"(" stroke="#888888"/>)" << "\n";
        const double lx = g.cx() + (x - g.cx()) * 1.12;
        const double ly = g.cy() + (y - g.cy()) * 1.12;
        os << R"(<text x=")" << pt(lx) << R"(" y=")" << pt(ly)
           << R"(" font-family="sans-serif" font-size="13" text-anchor="middle" dominant-baseline="middle">)"
           << objective_name(all_objectives[k]) << "</text>\n";
    }
    for (std::size_t i = 0; i < normalized.size(); ++i) {
        const char* colour = palette[i % std::size(palette)];
        os << R"(<polygon class="policy" fill=")" << colour << R"(" fill-opacity="0.12" stroke=")" << colour
           << R"(" stroke-width="1.5" points=")";
        for (std::size_t k = 0; k < n; ++k) {
            const auto [x, y] = g.vertex(k, n, normalized[i][k]);
            os << (k ? " " : "") << pt(x) << "," << pt(y);
        }
        os << R"("/>)" << "\n";
    }
    os << "</svg>\n";
}

} // namespace farel::experiment
