#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "funnel/sim.hpp"

namespace funnel::cli {

struct Series {
    std::string label;
    std::vector<double> t, y;
    std::string color = "#1f77b4";
    bool dashed = false;
};

namespace detail {

inline std::string num(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4g", x);
    return buf;
}

inline std::string esc(const std::string& s) {
    std::string o;
    for (char c : s) {
        if (c == '<') o += "&lt;";
        else if (c == '>') o += "&gt;";
        else if (c == '&') o += "&amp;";
        else o += c;
    }
    return o;
}

/// Evenly spaced tick values covering [lo, hi].
inline std::vector<double> ticks(double lo, double hi) {
    const double span = hi - lo;
    const double raw = span / 5.0;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    double step = mag;
    for (double f : {1.0, 2.0, 5.0, 10.0})
        if (f * mag >= raw) {
            step = f * mag;
            break;
        }
    std::vector<double> out;
    for (double v = std::ceil(lo / step) * step; v <= hi + 1e-9 * span; v += step) out.push_back(std::abs(v) < 1e-12 * span ? 0.0 : v);
    return out;
}

}  // namespace detail

/// Line chart as a standalone SVG document. Series are thinned to at most `max_points` vertices.
inline std::string svg_chart(const std::string& title, const std::string& ylabel, const std::vector<Series>& series,
                             std::size_t max_points = 2000) {
    const double W = 720, H = 360, L = 70, R = 20, T = 40, B = 50;
    double t0 = std::numeric_limits<double>::infinity(), t1 = -t0, y0 = t0, y1 = -t0;
    for (const auto& s : series)
        for (std::size_t i = 0; i < s.t.size(); ++i) {
            if (!std::isfinite(s.y[i])) continue;
            t0 = std::min(t0, s.t[i]);
            t1 = std::max(t1, s.t[i]);
            y0 = std::min(y0, s.y[i]);
            y1 = std::max(y1, s.y[i]);
        }
    if (!std::isfinite(t0)) t0 = 0, t1 = 1, y0 = 0, y1 = 1;
    if (t1 <= t0) t1 = t0 + 1;
    if (y1 <= y0) y0 -= 1, y1 += 1;
    const double pad = 0.05 * (y1 - y0);
    y0 -= pad;
    y1 += pad;
    auto X = [&](double t) { return L + (t - t0) / (t1 - t0) * (W - L - R); };
    auto Y = [&](double y) { return T + (y1 - y) / (y1 - y0) * (H - T - B); };

    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    os << "<text x=\"" << W / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" << detail::esc(title) << "</text>\n";
    for (double v : detail::ticks(t0, t1)) {
        os << "<line x1=\"" << X(v) << "\" y1=\"" << T << "\" x2=\"" << X(v) << "\" y2=\"" << H - B << "\" stroke=\"#ddd\"/>\n";
        os << "<text x=\"" << X(v) << "\" y=\"" << H - B + 16 << "\" text-anchor=\"middle\">" << detail::num(v) << "</text>\n";
    }
    for (double v : detail::ticks(y0, y1)) {
        os << "<line x1=\"" << L << "\" y1=\"" << Y(v) << "\" x2=\"" << W - R << "\" y2=\"" << Y(v) << "\" stroke=\"#ddd\"/>\n";
        os << "<text x=\"" << L - 6 << "\" y=\"" << Y(v) + 4 << "\" text-anchor=\"end\">" << detail::num(v) << "</text>\n";
    }
    os << "<rect x=\"" << L << "\" y=\"" << T << "\" width=\"" << W - L - R << "\" height=\"" << H - T - B
       << "\" fill=\"none\" stroke=\"black\"/>\n";
    os << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 12 << "\" text-anchor=\"middle\">t</text>\n";
    os << "<text x=\"16\" y=\"" << (T + H - B) / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 " << (T + H - B) / 2
       << ")\">" << detail::esc(ylabel) << "</text>\n";
    double ly = T + 14;
    for (const auto& s : series) {
        const std::size_t n = s.t.size();
        const std::size_t step = std::max<std::size_t>(1, n / max_points);
        os << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.5\"" << (s.dashed ? " stroke-dasharray=\"6 4\"" : "")
           << " points=\"";
        for (std::size_t i = 0; i < n; i += step)
            if (std::isfinite(s.y[i])) os << detail::num(X(s.t[i])) << "," << detail::num(Y(s.y[i])) << " ";
        if (n && (n - 1) % step && std::isfinite(s.y[n - 1])) os << detail::num(X(s.t[n - 1])) << "," << detail::num(Y(s.y[n - 1]));
        os << "\"/>\n";
        os << "<line x1=\"" << W - R - 150 << "\" y1=\"" << ly - 4 << "\" x2=\"" << W - R - 125 << "\" y2=\"" << ly - 4 << "\" stroke=\""
           << s.color << "\" stroke-width=\"2\"" << (s.dashed ? " stroke-dasharray=\"6 4\"" : "") << "/>\n";
        os << "<text x=\"" << W - R - 120 << "\" y=\"" << ly << "\">" << detail::esc(s.label) << "</text>\n";
        ly += 16;
    }
    os << "</svg>\n";
    return os.str();
}

inline Series trace_series(const SimTrace& tr, const std::string& label, const std::string& color, bool dashed,
                           double (*pick)(const TraceRow&)) {
    Series s{label, {}, {}, color, dashed};
    for (const auto& row : tr.rows) {
        s.t.push_back(row.t);
        s.y.push_back(pick(row));
    }
    return s;
}

/// Error and funnel overlay: |e_1| against psi_1 for the new controller and 1/phi for the baseline.
inline std::string error_figure(const std::string& title, const SimTrace& main, const SimTrace* baseline) {
    std::vector<Series> s;
    s.push_back(trace_series(main, "psi_1", "#d62728", false, [](const TraceRow& r) { return r.psi.size() ? r.psi(0) : NAN; }));
    s.push_back(trace_series(main, "|e_1|", "#1f77b4", false, [](const TraceRow& r) { return r.e_norms.size() ? r.e_norms(0) : NAN; }));
    if (baseline) {
        s.push_back(trace_series(*baseline, "1/phi", "#ff7f0e", true, [](const TraceRow& r) { return r.psi.size() ? r.psi(0) : NAN; }));
        s.push_back(trace_series(*baseline, "|e| baseline", "#2ca02c", true,
                                 [](const TraceRow& r) { return r.e_norms.size() ? r.e_norms(0) : NAN; }));
    }
    return svg_chart(title, "error and funnel", s);
}

/// Input against the saturation bounds.
inline std::string input_figure(const std::string& title, const SimTrace& main, const SimTrace* baseline, double level) {
    std::vector<Series> s;
    s.push_back(trace_series(main, "u", "#1f77b4", false, [](const TraceRow& r) { return r.u.size() ? r.u(0) : NAN; }));
    if (baseline) s.push_back(trace_series(*baseline, "u baseline", "#2ca02c", true, [](const TraceRow& r) { return r.u.size() ? r.u(0) : NAN; }));
    if (std::isfinite(level) && !main.rows.empty()) {
        const double a = main.rows.front().t, b = main.rows.back().t;
        s.push_back({"+M", {a, b}, {level, level}, "#7f7f7f", true});
        s.push_back({"-M", {a, b}, {-level, -level}, "#7f7f7f", true});
    }
    return svg_chart(title, "input", s);
}

}  // namespace funnel::cli
