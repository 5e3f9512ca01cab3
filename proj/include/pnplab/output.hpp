#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "pnplab/experiments.hpp"

namespace pnplab {

/// Shortest decimal that parses back to the same double.
inline std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

struct CsvOptions {
    /// false: runtime_ms is written as 0 so the file depends only on the spec and seed.
    bool include_timing = false;
};

inline constexpr const char* kCsvHeader = "experiment,key,metric,value,runtime_ms,seed";

/// One row per (record, metric), records in the given order, metrics by name. LF endings.
inline void write_csv(std::ostream& out, const std::vector<ExperimentRecord>& records, std::uint64_t seed,
                      CsvOptions opts = {}) {
    out << kCsvHeader << '\n';
    for (const auto& rec : records) {
        for (const auto& [metric, value] : rec.metrics) {
            out << rec.experiment << ',' << format_double(rec.key) << ',' << metric << ',' << format_double(value) << ','
                << format_double(opts.include_timing ? rec.runtime_ms : 0.0) << ',' << seed << '\n';
        }
    }
}

inline std::string to_csv(const std::vector<ExperimentRecord>& records, std::uint64_t seed, CsvOptions opts = {}) {
    std::ostringstream os;
    write_csv(os, records, seed, opts);
    return os.str();
}

struct Series {
    std::vector<double> x;
    std::vector<double> y;
};

/// (key, value) pairs of one metric, in record order.
inline Series metric_series(const std::vector<ExperimentRecord>& records, const std::string& metric) {
    Series s;
    for (const auto& rec : records) {
        auto it = rec.metrics.find(metric);
        if (it == rec.metrics.end()) continue;
        s.x.push_back(rec.key);
        s.y.push_back(it->second);
    }
    return s;
}

inline std::vector<std::string> metric_names(const std::vector<ExperimentRecord>& records) {
    std::set<std::string> names;
    for (const auto& rec : records) {
        for (const auto& [m, _] : rec.metrics) names.insert(m);
    }
    return {names.begin(), names.end()};
}

namespace detail {

inline bool wants_log(const std::vector<double>& v, double min_ratio) {
    if (v.empty()) return false;
    const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
    return *lo > 0.0 && *hi / *lo >= min_ratio;
}

inline std::string svg_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '&': out += "&amp;"; break;
            default: out += c;
        }
    }
    return out;
}

inline std::string fixed(double v, int digits = 2) {
    std::ostringstream os;
    os.setf(std::ios::fixed);
    os.precision(digits);
    os << v;
    return os.str();
}

inline std::string tick_label(double v) {
    std::ostringstream os;
    os.precision(3);
    os << v;
    return os.str();
}

}  // namespace detail

/// Self-contained SVG line plot. Axes switch to log scale when every value is
/// positive and spans at least a decade (x) or two decades (y).
inline std::string render_svg(const Series& s, const std::string& title, const std::string& x_label,
                              const std::string& y_label) {
    constexpr double width = 640, height = 420, left = 80, right = 20, top = 40, bottom = 60;
    const double pw = width - left - right, ph = height - top - bottom;
    const bool log_x = detail::wants_log(s.x, 10.0);
    const bool log_y = detail::wants_log(s.y, 100.0);
    auto tx = [&](double v) { return log_x ? std::log10(v) : v; };
    auto ty = [&](double v) { return log_y ? std::log10(v) : v; };

    double x0 = 0, x1 = 1, y0 = 0, y1 = 1;
    if (!s.x.empty()) {
        x0 = x1 = tx(s.x.front());
        y0 = y1 = ty(s.y.front());
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            x0 = std::min(x0, tx(s.x[i]));
            x1 = std::max(x1, tx(s.x[i]));
            y0 = std::min(y0, ty(s.y[i]));
            y1 = std::max(y1, ty(s.y[i]));
        }
    }
    if (x1 == x0) { x0 -= 0.5; x1 += 0.5; }
    if (y1 == y0) { y0 -= 0.5; y1 += 0.5; }
    auto px = [&](double v) { return left + (tx(v) - x0) / (x1 - x0) * pw; };
    auto py = [&](double v) { return top + ph - (ty(v) - y0) / (y1 - y0) * ph; };

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
        << "\" viewBox=\"0 0 " << width << ' ' << height << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    svg << "<text x=\"" << width / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">" << detail::svg_escape(title)
        << "</text>\n";
    svg << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << pw << "\" height=\"" << ph
        << "\" fill=\"none\" stroke=\"black\"/>\n";
    for (int i = 0; i <= 4; ++i) {
        const double fx = x0 + (x1 - x0) * i / 4.0, fy = y0 + (y1 - y0) * i / 4.0;
        const double vx = log_x ? std::pow(10.0, fx) : fx, vy = log_y ? std::pow(10.0, fy) : fy;
        const double sx = left + pw * i / 4.0, sy = top + ph - ph * i / 4.0;
        svg << "<line x1=\"" << detail::fixed(sx) << "\" y1=\"" << top + ph << "\" x2=\"" << detail::fixed(sx) << "\" y2=\""
            << top + ph + 5 << "\" stroke=\"black\"/>\n";
        svg << "<text x=\"" << detail::fixed(sx) << "\" y=\"" << top + ph + 18 << "\" text-anchor=\"middle\">"
            << detail::tick_label(vx) << "</text>\n";
        svg << "<line x1=\"" << left - 5 << "\" y1=\"" << detail::fixed(sy) << "\" x2=\"" << left << "\" y2=\""
            << detail::fixed(sy) << "\" stroke=\"black\"/>\n";
        svg << "<text x=\"" << left - 8 << "\" y=\"" << detail::fixed(sy + 4) << "\" text-anchor=\"end\">"
            << detail::tick_label(vy) << "</text>\n";
    }
    svg << "<text x=\"" << left + pw / 2 << "\" y=\"" << height - 15 << "\" text-anchor=\"middle\">"
        << detail::svg_escape(x_label) << (log_x ? " (log)" : "") << "</text>\n";
    svg << "<text x=\"18\" y=\"" << top + ph / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 18 "
        << top + ph / 2 << ")\">" << detail::svg_escape(y_label) << (log_y ? " (log)" : "") << "</text>\n";
    if (!s.x.empty()) {
        svg << "<polyline fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"2\" points=\"";
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            svg << (i ? " " : "") << detail::fixed(px(s.x[i])) << ',' << detail::fixed(py(s.y[i]));
        }
        svg << "\"/>\n";
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            svg << "<circle cx=\"" << detail::fixed(px(s.x[i])) << "\" cy=\"" << detail::fixed(py(s.y[i]))
                << "\" r=\"3\" fill=\"#1f77b4\"/>\n";
        }
    }
    svg << "</svg>\n";
    return svg.str();
}

inline const char* key_label(ExperimentKind kind) {
    switch (kind) {
        case ExperimentKind::Stability: return "k";
        case ExperimentKind::Lipschitz: return "sigma";
        default: return "delta";
    }
}

}  // namespace pnplab
