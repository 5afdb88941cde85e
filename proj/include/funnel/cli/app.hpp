#pragma once

#include <filesystem>
#include <iostream>
#include <numbers>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>
#include <yaml-cpp/yaml.h>

#include "funnel/cli/config.hpp"
#include "funnel/cli/io.hpp"
#include "funnel/cli/plot.hpp"
#include "funnel/parallel.hpp"
#include "funnel/verify.hpp"

namespace funnel::cli {

enum ExitCode : int { exit_ok = 0, exit_check_failed = 2, exit_fault = 3, exit_config = 4 };

// Built-in scenarios.

inline RunConfig case1_config() {
    RunConfig c;
    c.plant = MassOnCar{4.0, 1.0, 2.0, 1.0, std::numbers::pi / 4.0};
    FunnelParams fp;
    fp.m = 1;
    fp.alpha = {1.5, 0.9 * 1.5};
    fp.beta = {0.15, 0.5 * 0.9 * 1.5};
    fp.p = {1.1};
    fp.psi0 = {4.1, 2.0};
    fp.surjection = Surjection::neg_s2_cos();
    c.law = FunnelLaw{fp};
    c.sat = Saturation::box(10.0);
    c.ref = ReferenceSignal::cosine(1.0, 1.0);
    c.sim.t_end = 15.0;
    c.sim.rel_tol = 1e-8;
    c.sim.abs_tol = 1e-10;
    return c;
}

inline RunConfig case2_config() {
    RunConfig c = case1_config();
    c.plant = MassOnCar{4.0, 1.0, 2.0, 1.0, 0.0};
    FunnelParams fp;
    fp.m = 1;
    const double a1 = 1.5, a2 = 0.9 * a1, a3 = 0.9 * a2;
    fp.alpha = {a1, a2, a3};
    fp.beta = {0.1, 0.5 * a2, 0.5 * a3};
    fp.p = {1.1, 1.1};
    fp.psi0 = {3.1, 1.6, 1.6};
    fp.surjection = Surjection::neg_s2_cos();
    c.law = FunnelLaw{fp};
    c.sat = Saturation::box(8.0);
    return c;
}

/// Prescribed-funnel comparison run: same plant, reference and integrator, no saturation.
inline RunConfig baseline_of(const RunConfig& c, PhiShape phi) {
    RunConfig b = c;
    b.law = BaselineLaw{phi, Surjection::neg_s2_cos()};
    b.sat = Saturation::identity();
    return b;
}

inline PhiShape case1_phi() { return {4.0, 1.5, 0.1}; }
inline PhiShape case2_phi() { return {3.0, 1.0, 0.1}; }

// Checks.

/// max ||u|| in the saturation's own norm stays within the level.
inline VerdictReport check_input_bound(const SimTrace& tr, const Saturation& sat) {
    VerdictReport v;
    v.check_name = "input_bound";
    v.tol = 1e-12 * sat.level;
    for (const auto& row : tr.rows) {
        const double n = sat.kind == Saturation::Kind::ball ? row.u.norm() : row.u.cwiseAbs().maxCoeff();
        funnel::detail::track(v, sat.level - n, row.t);
    }
    v.pass = v.worst_margin >= -v.tol;
    v.details = "level " + fmt(sat.level) + " (" + sat.name() + ")";
    return v;
}

inline std::vector<VerdictReport> run_checks(const SimTrace& tr, const RunConfig& c) {
    std::vector<VerdictReport> out;
    if (const FunnelParams* fp = c.funnel_params()) {
        if (c.checks.membership) out.push_back(check_funnel_membership(tr, *fp));
        if (c.checks.recovery) out.push_back(check_recovery(tr, *fp, {c.checks.recovery_tol_abs, c.sim.rel_tol, c.checks.recovery_from}));
        if (c.checks.bounds) out.push_back(check_lower_and_ratio_bounds(tr, *fp, c.sim.rel_tol));
    }
    if (c.checks.input_bound && c.sat.kind != Saturation::Kind::identity) out.push_back(check_input_bound(tr, c.sat));
    return out;
}

struct RunOutcome {
    SimTrace trace;
    std::vector<VerdictReport> verdicts;
    int exit_code = exit_ok;
};

inline int exit_code_for(const SimTrace& tr, const std::vector<VerdictReport>& vs) {
    if (tr.termination != Termination::completed) return exit_fault;
    return all_pass(vs) ? exit_ok : exit_check_failed;
}

/// Simulate and check; config problems propagate as exceptions.
inline RunOutcome execute(const RunConfig& c) {
    RunOutcome o;
    o.trace = integrate(c.loop(), c.plant_init(), c.sim_config());
    o.verdicts = run_checks(o.trace, c);
    o.exit_code = exit_code_for(o.trace, o.verdicts);
    return o;
}

namespace detail {

namespace fs = std::filesystem;

inline nlohmann::json trace_json(const SimTrace& tr) {
    return {{"termination", to_string(tr.termination)},
            {"reason", tr.reason},
            {"t_final", tr.t_final()},
            {"rows", tr.rows.size()},
            {"events", tr.events.size()},
            {"accepted_steps", tr.accepted_steps},
            {"rejected_steps", tr.rejected_steps},
            {"metrics", metrics_json(trace_metrics(tr))}};
}

inline nlohmann::json verdicts_json(const std::vector<VerdictReport>& vs) {
    auto arr = nlohmann::json::array();
    for (const auto& v : vs) arr.push_back(verdict_json(v));
    return arr;
}

inline void write_outputs(const fs::path& dir, const OutputSpec& o, const SimTrace& tr, const std::vector<VerdictReport>& vs) {
    write_trace_csv((dir / o.trace).string(), tr);
    write_events_csv((dir / o.events).string(), tr);
    write_text((dir / o.verdicts).string(), verdict_blocks(vs));
}

/// Config-class failures, reported with exit code 4.
template <class F>
int guard_config(std::ostream& err, F&& body) {
    try {
        return body();
    } catch (const InitialConditionViolation& e) {
        err << "config error: initial condition must satisfy ||e_i(0)|| < psi_i^0 at every level: " << e.what() << "\n";
    } catch (const InvalidParams& e) {
        err << "config error: " << e.what() << "\n";
    } catch (const std::invalid_argument& e) {
        err << "config error: " << e.what() << "\n";
    } catch (const YAML::Exception& e) {
        err << "config error: " << e.what() << "\n";
    } catch (const TraceFormatError& e) {
        err << "input error: " << e.what() << "\n";
    }
    return exit_config;
}

}  // namespace detail

/// `funnelctl run`: simulate one config, write trace, events, verdicts, summary and plots to out_dir.
inline int cmd_run(const std::string& config_path, const std::string& out_dir, std::ostream& log = std::cout,
                   std::ostream& err = std::cerr) {
    return detail::guard_config(err, [&] {
        const RunConfig c = parse_config(load_config_file(config_path));
        const auto o = execute(c);
        const detail::fs::path dir(out_dir);
        detail::fs::create_directories(dir);
        detail::write_outputs(dir, c.output, o.trace, o.verdicts);
        if (c.output.plots) {
            write_text((dir / "errors.svg").string(), error_figure("tracking error and funnel", o.trace, nullptr));
            write_text((dir / "input.svg").string(), input_figure("input", o.trace, nullptr, c.sat.level));
        }
        nlohmann::json s{{"command", "run"},
                         {"config", config_path},
                         {"exit_code", o.exit_code},
                         {"pass", o.exit_code == exit_ok},
                         {"trace", detail::trace_json(o.trace)},
                         {"checks", detail::verdicts_json(o.verdicts)}};
        write_text((dir / c.output.summary).string(), s.dump(2) + "\n");
        log << verdict_blocks(o.verdicts);
        log << "termination: " << to_string(o.trace.termination) << (o.trace.reason.empty() ? "" : " (" + o.trace.reason + ")") << "\n";
        log << "exit: " << o.exit_code << "\n";
        return o.exit_code;
    });
}

struct ReplicateResult {
    SimTrace trace, baseline;
    std::vector<VerdictReport> verdicts;
    std::vector<BlowupCase> blowup;
    int exit_code = exit_ok;
};

/// Run a named scenario with the new controller and its baseline, or the blow-up battery.
inline ReplicateResult replicate(const std::string& which) {
    ReplicateResult res;
    if (which == "blowup") {
        res.blowup = blowup_cases({0.25, 0.81, 1.0, 1.5});
        res.verdicts.push_back(blowup_oracle({0.25, 0.81, 1.0, 1.5}));
        res.exit_code = all_pass(res.verdicts) ? exit_ok : exit_check_failed;
        return res;
    }
    RunConfig c;
    PhiShape phi;
    if (which == "case1") {
        c = case1_config();
        phi = case1_phi();
    } else if (which == "case2") {
        c = case2_config();
        phi = case2_phi();
    } else {
        throw ConfigInvalid("replicate: unknown case '" + which + "' (case1, case2, blowup)");
    }
    auto o = execute(c);
    res.trace = std::move(o.trace);
    res.verdicts = std::move(o.verdicts);
    const RunConfig b = baseline_of(c, phi);
    try {
        res.baseline = integrate(b.loop(), b.plant_init(), b.sim_config());
    } catch (const InitialConditionViolation& e) {
        res.baseline.termination = Termination::funnel_fault;
        res.baseline.reason = e.what();
        res.baseline.events.push_back({0.0, EventKind::FunnelFault, e.what()});
    }
    if (which == "case2") {
        VerdictReport v;
        v.check_name = "baseline_input_exceeds_level";
        const double peak = trace_metrics(res.baseline).max_abs_u;
        v.worst_margin = peak - c.sat.level;
        v.pass = v.worst_margin > 0.0;
        v.details = "baseline max |u| " + fmt(peak) + " against level " + fmt(c.sat.level);
        res.verdicts.push_back(v);
    }
    res.exit_code = exit_code_for(res.trace, res.verdicts);
    return res;
}

/// `funnelctl replicate`: writes the traces, events, verdicts, summary and figures to out_dir.
inline int cmd_replicate(const std::string& which, const std::string& out_dir, std::ostream& log = std::cout,
                         std::ostream& err = std::cerr) {
    return detail::guard_config(err, [&] {
        const auto res = replicate(which);
        const detail::fs::path dir(out_dir);
        detail::fs::create_directories(dir);
        nlohmann::json s{{"command", "replicate"}, {"case", which}, {"exit_code", res.exit_code}, {"pass", res.exit_code == exit_ok}};
        s["checks"] = detail::verdicts_json(res.verdicts);
        if (which == "blowup") {
            std::ostringstream csv;
            csv << "level,omega,blew_up,detected,rel_error\n";
            auto arr = nlohmann::json::array();
            for (const auto& b : res.blowup) {
                csv << fmt(b.level) << "," << fmt(b.omega) << "," << (b.blew_up ? 1 : 0) << "," << fmt(b.detected) << "," << fmt(b.rel_error) << "\n";
                arr.push_back({{"level", b.level},
                               {"omega", std::isfinite(b.omega) ? nlohmann::json(b.omega) : nlohmann::json(nullptr)},
                               {"blew_up", b.blew_up},
                               {"detected", b.detected},
                               {"rel_error", b.rel_error}});
            }
            write_text((dir / "blowup.csv").string(), csv.str());
            write_text((dir / "verdicts.txt").string(), verdict_blocks(res.verdicts));
            s["blowup"] = arr;
        } else {
            const OutputSpec o;
            detail::write_outputs(dir, o, res.trace, res.verdicts);
            write_trace_csv((dir / "baseline_trace.csv").string(), res.baseline);
            write_events_csv((dir / "baseline_events.csv").string(), res.baseline);
            const double level = which == "case1" ? 10.0 : 8.0;
            write_text((dir / "errors.svg").string(), error_figure(which + ": tracking error and funnel", res.trace, &res.baseline));
            write_text((dir / "input.svg").string(), input_figure(which + ": input", res.trace, &res.baseline, level));
            s["trace"] = detail::trace_json(res.trace);
            s["baseline"] = detail::trace_json(res.baseline);
            s["saturation_intervals"] = saturation_intervals(res.trace);
        }
        write_text((dir / "summary.json").string(), s.dump(2) + "\n");
        log << verdict_blocks(res.verdicts);
        log << "exit: " << res.exit_code << "\n";
        return res.exit_code;
    });
}

// Sweeps.

struct GridAxis {
    std::string key;
    std::vector<std::string> values;
};

/// "key=v1,v2;key2=v3,v4". An empty spec has no axes and no points.
inline std::vector<GridAxis> parse_grid(const std::string& spec) {
    std::vector<GridAxis> axes;
    std::stringstream ss(spec);
    for (std::string item; std::getline(ss, item, ';');) {
        if (item.find_first_not_of(" \t") == std::string::npos) continue;
        const auto eq = item.find('=');
        if (eq == std::string::npos) throw ConfigInvalid("grid: '" + item + "' needs key=v1,v2,...");
        GridAxis ax;
        ax.key = item.substr(0, eq);
        ax.key.erase(0, ax.key.find_first_not_of(" \t"));
        ax.key.erase(ax.key.find_last_not_of(" \t") + 1);
        if (ax.key.empty()) throw ConfigInvalid("grid: empty key in '" + item + "'");
        std::stringstream vs(item.substr(eq + 1));
        for (std::string v; std::getline(vs, v, ',');) {
            v.erase(0, v.find_first_not_of(" \t"));
            v.erase(v.find_last_not_of(" \t") + 1);
            if (!v.empty()) ax.values.push_back(v);
        }
        axes.push_back(std::move(ax));
    }
    return axes;
}

/// Cartesian product in row-major order, the last axis varying fastest.
inline std::vector<std::vector<std::string>> grid_points(const std::vector<GridAxis>& axes) {
    if (axes.empty()) return {};
    std::vector<std::vector<std::string>> pts{{}};
    for (const auto& ax : axes) {
        std::vector<std::vector<std::string>> next;
        for (const auto& p : pts)
            for (const auto& v : ax.values) {
                auto q = p;
                q.push_back(v);
                next.push_back(std::move(q));
            }
        pts = std::move(next);
    }
    return pts;
}

struct SweepRow {
    std::vector<std::string> values;
    int exit_code = exit_ok;
    std::string termination;
    TraceMetrics metrics;
    std::string failed;
    std::string message;
};

inline std::vector<SweepRow> sweep(const YAML::Node& base, const std::vector<GridAxis>& axes, std::size_t jobs = parallel_jobs()) {
    const auto pts = grid_points(axes);
    return parallel_map<SweepRow>(
        pts.size(),
        [&](std::size_t i) {
            SweepRow row;
            row.values = pts[i];
            std::ostringstream err;
            row.exit_code = detail::guard_config(err, [&] {
                YAML::Node node = YAML::Clone(base);
                for (std::size_t a = 0; a < axes.size(); ++a) set_path(node, axes[a].key, pts[i][a]);
                const RunConfig c = parse_config(node);
                const auto o = execute(c);
                row.termination = to_string(o.trace.termination);
                row.metrics = trace_metrics(o.trace);
                for (const auto& v : o.verdicts)
                    if (!v.pass) row.failed += (row.failed.empty() ? "" : " ") + v.check_name;
                row.message = o.trace.reason;
                return o.exit_code;
            });
            if (row.exit_code == exit_config) {
                row.termination = "not_run";
                row.message = err.str();
                while (!row.message.empty() && row.message.back() == '\n') row.message.pop_back();
            }
            return row;
        },
        jobs);
}

inline std::string sweep_csv(const std::vector<GridAxis>& axes, const std::vector<SweepRow>& rows) {
    std::ostringstream os;
    os << "index";
    for (const auto& ax : axes) os << "," << ax.key;
    os << ",exit_code,termination,max_error_ratio,max_abs_v,max_abs_u,saturation_duty,failed_checks,message\n";
    auto clean = [](std::string s) {
        for (char& ch : s)
            if (ch == ',' || ch == '\n' || ch == '\r') ch = ';';
        return s;
    };
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& r = rows[i];
        os << i;
        for (const auto& v : r.values) os << "," << clean(v);
        os << "," << r.exit_code << "," << r.termination << "," << fmt(r.metrics.max_ratio) << "," << fmt(r.metrics.max_abs_v) << ","
           << fmt(r.metrics.max_abs_u) << "," << fmt(r.metrics.duty) << "," << clean(r.failed) << "," << clean(r.message) << "\n";
    }
    return os.str();
}

/// `funnelctl sweep`: one row per grid point in sweep.csv. Exit 0 iff every point exits 0.
inline int cmd_sweep(const std::string& config_path, const std::string& grid, const std::string& out_dir,
                     std::ostream& log = std::cout, std::ostream& err = std::cerr) {
    return detail::guard_config(err, [&] {
        const YAML::Node base = load_config_file(config_path);
        const auto axes = parse_grid(grid);
        const auto rows = sweep(base, axes);
        const detail::fs::path dir(out_dir);
        detail::fs::create_directories(dir);
        write_text((dir / "sweep.csv").string(), sweep_csv(axes, rows));
        int code = exit_ok;
        for (const auto& r : rows)
            if (r.exit_code != exit_ok) code = exit_check_failed;
        log << rows.size() << " grid points, exit " << code << "\n";
        return code;
    });
}

/// `funnelctl verify`: re-run the trace checks on a stored CSV against a config's funnel parameters.
inline int cmd_verify(const std::string& trace_path, const std::string& config_path, std::ostream& log = std::cout,
                      std::ostream& err = std::cerr) {
    return detail::guard_config(err, [&] {
        const RunConfig c = parse_config(load_config_file(config_path));
        if (!c.funnel_params()) throw ConfigInvalid("verify: config must use controller.kind funnel");
        const SimTrace tr = read_trace_csv(trace_path);
        if (tr.r != c.funnel_params()->r() || tr.m != c.funnel_params()->m)
            throw ConfigInvalid("verify: trace levels/outputs do not match the config");
        const auto vs = run_checks(tr, c);
        log << verdict_blocks(vs);
        const int code = all_pass(vs) ? exit_ok : exit_check_failed;
        log << "exit: " << code << "\n";
        return code;
    });
}

}  // namespace funnel::cli
