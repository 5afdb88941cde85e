#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "funnel/sim.hpp"
#include "funnel/verify.hpp"

namespace funnel::cli {

class TraceFormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// %.17g, the shortest printf form that round-trips every double.
inline std::string fmt(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

/// Column names in their fixed order: t, y, yref, e_norm, psi, k, v, u, kappa, sat_active.
inline std::vector<std::string> trace_columns(std::size_t r, std::size_t m) {
    std::vector<std::string> cols{"t"};
    auto block = [&](const char* name, std::size_t n) {
        for (std::size_t i = 1; i <= n; ++i) cols.push_back(std::string(name) + "_" + std::to_string(i));
    };
    block("y", m);
    block("yref", m);
    block("e_norm", r);
    block("psi", r);
    block("k", r);
    block("v", m);
    block("u", m);
    cols.push_back("kappa");
    cols.push_back("sat_active");
    return cols;
}

inline void write_trace_csv(std::ostream& os, const SimTrace& tr) {
    const auto cols = trace_columns(tr.r, tr.m);
    for (std::size_t i = 0; i < cols.size(); ++i) os << (i ? "," : "") << cols[i];
    os << "\n";
    auto put = [&os](const Eigen::VectorXd& v, std::size_t n) {
        for (std::size_t i = 0; i < n; ++i) os << "," << fmt(i < static_cast<std::size_t>(v.size()) ? v(static_cast<Eigen::Index>(i)) : NAN);
    };
    for (const auto& row : tr.rows) {
        os << fmt(row.t);
        put(row.y, tr.m);
        put(row.yref, tr.m);
        put(row.e_norms, tr.r);
        put(row.psi, tr.r);
        put(row.k, tr.r);
        put(row.v, tr.m);
        put(row.u, tr.m);
        os << "," << fmt(row.kappa) << "," << (row.sat_active ? 1 : 0) << "\n";
    }
}

inline void write_trace_csv(const std::string& path, const SimTrace& tr) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot write " + path);
    write_trace_csv(os, tr);
}

namespace detail {

inline std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) out.push_back(cell);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

inline std::size_t count_prefix(const std::vector<std::string>& cols, const std::string& prefix) {
    std::size_t n = 0;
    while (std::find(cols.begin(), cols.end(), prefix + "_" + std::to_string(n + 1)) != cols.end()) ++n;
    return n;
}

}  // namespace detail

/// Rows only; events, termination and step counts are not part of the CSV.
inline SimTrace read_trace_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line)) throw TraceFormatError("trace: empty file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto cols = detail::split_csv(line);
    SimTrace tr;
    tr.m = detail::count_prefix(cols, "y");
    tr.r = detail::count_prefix(cols, "e_norm");
    if (cols != trace_columns(tr.r, tr.m)) throw TraceFormatError("trace: header does not match the trace schema");
    const auto r = static_cast<Eigen::Index>(tr.r);
    const auto m = static_cast<Eigen::Index>(tr.m);
    std::size_t lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto cells = detail::split_csv(line);
        if (cells.size() != cols.size()) throw TraceFormatError("trace: line " + std::to_string(lineno) + " has the wrong number of fields");
        std::vector<double> x(cells.size());
        for (std::size_t i = 0; i < cells.size(); ++i) {
            try {
                std::size_t used = 0;
                x[i] = std::stod(cells[i], &used);
                if (used != cells[i].size()) throw std::invalid_argument(cells[i]);
            } catch (const std::exception&) {
                throw TraceFormatError("trace: line " + std::to_string(lineno) + ": bad number '" + cells[i] + "'");
            }
        }
        TraceRow row;
        std::size_t at = 0;
        auto take = [&](Eigen::Index n) {
            Eigen::VectorXd v = Eigen::Map<const Eigen::VectorXd>(x.data() + at, n);
            at += static_cast<std::size_t>(n);
            return v;
        };
        row.t = x[at++];
        row.y = take(m);
        row.yref = take(m);
        row.e_norms = take(r);
        row.psi = take(r);
        row.k = take(r);
        row.v = take(m);
        row.u = take(m);
        row.kappa = x[at++];
        row.sat_active = x[at++] != 0.0;
        tr.rows.push_back(std::move(row));
    }
    return tr;
}

inline SimTrace read_trace_csv(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw TraceFormatError("trace: cannot read " + path);
    return read_trace_csv(is);
}

inline void write_events_csv(const std::string& path, const SimTrace& tr) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot write " + path);
    os << "t,kind,payload\n";
    for (const auto& e : tr.events) {
        std::string p = e.payload;
        std::replace(p.begin(), p.end(), ',', ';');
        std::replace(p.begin(), p.end(), '\n', ' ');
        os << fmt(e.t) << "," << to_string(e.kind) << "," << p << "\n";
    }
}

/// One block per check.
inline std::string verdict_blocks(const std::vector<VerdictReport>& vs) {
    std::ostringstream os;
    for (const auto& v : vs) {
        os << "[check]\n";
        os << "name: " << v.check_name << "\n";
        os << "pass: " << (v.pass ? "true" : "false") << "\n";
        os << "worst_margin: " << fmt(v.worst_margin) << "\n";
        os << "t_worst: " << fmt(v.t_worst) << "\n";
        os << "tol: " << fmt(v.tol) << "\n";
        os << "details: " << v.details << "\n\n";
    }
    return os.str();
}

inline nlohmann::json verdict_json(const VerdictReport& v) {
    auto num = [](double x) { return std::isfinite(x) ? nlohmann::json(x) : nlohmann::json(nullptr); };
    return {{"name", v.check_name}, {"pass", v.pass},   {"worst_margin", num(v.worst_margin)},
            {"t_worst", v.t_worst}, {"tol", v.tol},     {"details", v.details}};
}

inline bool all_pass(const std::vector<VerdictReport>& vs) {
    return std::all_of(vs.begin(), vs.end(), [](const VerdictReport& v) { return v.pass; });
}

/// Scalars a sweep row or a summary reports about one run.
struct TraceMetrics {
    double max_ratio = 0.0;   ///< max over rows and levels of ||e_i||/psi_i
    double max_abs_v = 0.0;   ///< max ||v||_inf
    double max_abs_u = 0.0;
    double duty = 0.0;        ///< fraction of simulated time with saturation active
};

inline TraceMetrics trace_metrics(const SimTrace& tr) {
    TraceMetrics mt;
    double active = 0.0;
    for (std::size_t j = 0; j < tr.rows.size(); ++j) {
        const auto& row = tr.rows[j];
        for (Eigen::Index i = 0; i < row.psi.size(); ++i) mt.max_ratio = std::max(mt.max_ratio, row.e_norms(i) / row.psi(i));
        if (row.v.size()) mt.max_abs_v = std::max(mt.max_abs_v, row.v.cwiseAbs().maxCoeff());
        if (row.u.size()) mt.max_abs_u = std::max(mt.max_abs_u, row.u.cwiseAbs().maxCoeff());
        if (j + 1 < tr.rows.size() && row.sat_active) active += tr.rows[j + 1].t - row.t;
    }
    const double span = tr.rows.empty() ? 0.0 : tr.rows.back().t - tr.rows.front().t;
    mt.duty = span > 0.0 ? active / span : 0.0;
    return mt;
}

inline nlohmann::json metrics_json(const TraceMetrics& mt) {
    return {{"max_error_ratio", mt.max_ratio}, {"max_abs_v", mt.max_abs_v}, {"max_abs_u", mt.max_abs_u}, {"saturation_duty", mt.duty}};
}

inline void write_text(const std::string& path, const std::string& text) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot write " + path);
    os << text;
}

}  // namespace funnel::cli
