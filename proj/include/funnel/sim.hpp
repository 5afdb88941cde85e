#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "funnel/controller.hpp"
#include "funnel/dopri.hpp"
#include "funnel/params.hpp"
#include "funnel/plants.hpp"

namespace funnel {

class ConfigInvalid : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

struct SimConfig {
    double t_end = 15.0;
    double rel_tol = 1e-10;
    double abs_tol = 1e-8;
    double h_init = 1e-3;
    double h_min = 1e-12;
    double h_max = 0.05;
    /// Per-step cap on the approach to a funnel boundary: a step may take ||e_i||/psi_i from w to at
    /// most 1 - barrier_margin (1 - w).
    double barrier_margin = 0.5;
    double blowup_norm = 1e6;
    double record_stride = 0.0;  ///< 0 records every accepted step

    void check() const {
        if (!(t_end >= 0.0)) throw ConfigInvalid("sim: t_end must be >= 0");
        if (!(rel_tol > 0.0 && abs_tol > 0.0)) throw ConfigInvalid("sim: tolerances must be positive");
        if (!(h_min > 0.0 && h_min < h_init && h_init <= h_max)) throw ConfigInvalid("sim: need 0 < h_min < h_init <= h_max");
        if (!(barrier_margin > 0.0 && barrier_margin < 1.0)) throw ConfigInvalid("sim: barrier_margin must lie in (0,1)");
        if (!(blowup_norm > 0.0)) throw ConfigInvalid("sim: blowup_norm must be positive");
        if (record_stride < 0.0) throw ConfigInvalid("sim: record_stride must be >= 0");
    }
};

// Control laws the loop can close with.

struct FunnelLaw {
    FunnelParams params;
};

/// Open loop with a fixed demand v; the saturation still applies.
struct ConstantDemand {
    Eigen::VectorXd v;
};

/// Prescribed-funnel baseline, order taken from the plant (2 or 3), single output.
struct BaselineLaw {
    PhiShape phi;
    Surjection n = Surjection::neg_s2_cos();
};

using ControlLaw = std::variant<FunnelLaw, ConstantDemand, BaselineLaw>;

struct ClosedLoop {
    Plant plant;
    ControlLaw law;
    Saturation sat;
    ReferenceSignal ref;
};

/// Number of cascade levels reported per trace row.
inline std::size_t loop_levels(const ClosedLoop& l) {
    if (const auto* f = std::get_if<FunnelLaw>(&l.law)) return f->params.r();
    if (std::holds_alternative<BaselineLaw>(l.law)) return relative_degree(l.plant);
    return 0;
}

inline std::size_t controller_states(const ClosedLoop& l) {
    if (const auto* f = std::get_if<FunnelLaw>(&l.law)) return f->params.r();
    return 0;
}

struct TraceRow {
    double t = 0.0;
    Eigen::VectorXd y, yref;
    Eigen::VectorXd e_norms, psi, k;  ///< one entry per level
    Eigen::VectorXd v, u;
    double kappa = 0.0;
    bool sat_active = false;
};

enum class EventKind { SatOn, SatOff, Blowup, FunnelFault };

inline const char* to_string(EventKind k) {
    switch (k) {
    case EventKind::SatOn: return "SatOn";
    case EventKind::SatOff: return "SatOff";
    case EventKind::Blowup: return "Blowup";
    case EventKind::FunnelFault: return "FunnelFault";
    }
    return "?";
}

struct SimEvent {
    double t = 0.0;
    EventKind kind = EventKind::SatOn;
    std::string payload;
};

enum class Termination { completed, blowup, funnel_fault };

inline const char* to_string(Termination t) {
    switch (t) {
    case Termination::completed: return "completed";
    case Termination::blowup: return "blowup";
    case Termination::funnel_fault: return "funnel_fault";
    }
    return "?";
}

struct SimTrace {
    std::size_t r = 0;
    std::size_t m = 1;
    std::vector<TraceRow> rows;
    std::vector<SimEvent> events;
    Termination termination = Termination::completed;
    std::string reason;
    std::size_t accepted_steps = 0;
    std::size_t rejected_steps = 0;

    double t_final() const { return rows.empty() ? 0.0 : rows.back().t; }
};

/// Derivative of the augmented state (plant, psi) plus the row that describes it.
struct LoopEval {
    Eigen::VectorXd dx;
    TraceRow row;
};

/// Evaluate the closed loop at (t, aug). Throws ControllerFault outside the law's domain.
inline LoopEval evaluate_loop(const ClosedLoop& l, double t, const Eigen::VectorXd& aug) {
    const auto n = static_cast<Eigen::Index>(state_dim(l.plant));
    const std::size_t m = output_dim(l.plant);
    const Eigen::VectorXd x = aug.head(n);
    LoopEval out;
    TraceRow& row = out.row;
    row.t = t;

    if (const auto* f = std::get_if<FunnelLaw>(&l.law)) {
        const std::size_t r = f->params.r();
        const Eigen::VectorXd psi = aug.tail(static_cast<Eigen::Index>(r));
        const Eigen::MatrixXd ys = output_stack(l.plant, x, r);
        const Eigen::MatrixXd refs = l.ref.stack(t, r, m);
        const ControllerEval ev = evaluate_funnel_law(ys - refs, psi, f->params, l.sat);
        out.dx.resize(aug.size());
        out.dx.head(n) = plant_rhs(l.plant, x, ev.u);
        out.dx.tail(static_cast<Eigen::Index>(r)) = ev.psi_dot;
        row.y = ys.row(0).transpose();
        row.yref = refs.row(0).transpose();
        row.e_norms = ev.e_cascade.rowwise().norm();
        row.psi = psi;
        row.k = ev.k;
        row.v = ev.v;
        row.u = ev.u;
        row.kappa = ev.kappa;
        row.sat_active = ev.sat_active;
        return out;
    }

    if (const auto* b = std::get_if<BaselineLaw>(&l.law)) {
        const std::size_t r = relative_degree(l.plant);
        if (m != 1 || (r != 2 && r != 3)) throw std::invalid_argument("baseline controllers need m = 1 and r in {2, 3}");
        const Eigen::MatrixXd ys = output_stack(l.plant, x, r);
        const Eigen::MatrixXd refs = l.ref.stack(t, r, m);
        const Eigen::MatrixXd e = ys - refs;
        const double phi = b->phi(t);
        const BaselineEval be = r == 2 ? baseline_r2(e(0, 0), e(1, 0), phi, b->n)
                                       : baseline_r3(e(0, 0), e(1, 0), e(2, 0), phi, b->n);
        row.v = Eigen::VectorXd::Constant(1, be.u);
        auto s = saturate(l.sat, row.v);
        row.u = s.u;
        row.kappa = s.kappa;
        row.sat_active = s.kappa > 0.0;
        out.dx = plant_rhs(l.plant, x, row.u);
        row.y = ys.row(0).transpose();
        row.yref = refs.row(0).transpose();
        // level 1 in error units against 1/phi, deeper levels as normalized barrier arguments
        row.e_norms = Eigen::Map<const Eigen::VectorXd>(be.levels.data(), static_cast<Eigen::Index>(be.levels.size()));
        row.e_norms(0) = std::abs(e(0, 0));
        row.psi = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(r));
        row.psi(0) = 1.0 / phi;
        row.k = Eigen::Map<const Eigen::VectorXd>(be.gains.data(), static_cast<Eigen::Index>(be.gains.size()));
        return out;
    }

    const auto& c = std::get<ConstantDemand>(l.law);
    row.v = c.v;
    auto s = saturate(l.sat, row.v);
    row.u = s.u;
    row.kappa = s.kappa;
    row.sat_active = s.kappa > 0.0;
    out.dx = plant_rhs(l.plant, x, row.u);
    row.y = output_stack(l.plant, x, 1).row(0).transpose();
    row.yref = l.ref.eval(t, 0, m);
    row.e_norms.resize(0);
    row.psi.resize(0);
    row.k.resize(0);
    return out;
}

/// Funnel-law closed loop at (t, aug): augmented derivative plus the full controller evaluation.
inline std::pair<Eigen::VectorXd, ControllerEval> closed_loop_rhs(const Plant& plant, const FunnelParams& fp,
                                                                  const Saturation& sat, const ReferenceSignal& ref,
                                                                  const Eigen::VectorXd& aug, double t) {
    const auto n = static_cast<Eigen::Index>(state_dim(plant));
    const std::size_t r = fp.r();
    const Eigen::VectorXd x = aug.head(n);
    const Eigen::VectorXd psi = aug.tail(static_cast<Eigen::Index>(r));
    const Eigen::MatrixXd stack = output_stack(plant, x, r) - ref.stack(t, r, output_dim(plant));
    ControllerEval ev = evaluate_funnel_law(stack, psi, fp, sat);
    Eigen::VectorXd dx(aug.size());
    dx.head(n) = plant_rhs(plant, x, ev.u);
    dx.tail(static_cast<Eigen::Index>(r)) = ev.psi_dot;
    return {std::move(dx), std::move(ev)};
}

namespace detail {

inline double max_ratio_step_violation(const TraceRow& before, const TraceRow& after, double margin) {
    // > 0 means the step approached some boundary faster than allowed
    double worst = -1.0;
    for (Eigen::Index i = 0; i < after.e_norms.size(); ++i) {
        const double w0 = before.e_norms(i) / before.psi(i);
        const double w1 = after.e_norms(i) / after.psi(i);
        const double cap = 1.0 - margin * (1.0 - std::clamp(w0, 0.0, 1.0));
        worst = std::max(worst, w1 - cap);
        if (!(w1 < 1.0)) worst = std::max(worst, 1.0);
    }
    return worst;
}

inline bool finite_state(const Eigen::VectorXd& x) { return x.allFinite(); }

}  // namespace detail

/// Adaptive Dormand-Prince integration of the closed loop with barrier-aware step rejection and
/// saturation switch localization.
inline SimTrace integrate(const ClosedLoop& l, const Eigen::VectorXd& plant_init, const SimConfig& cfg) {
    cfg.check();
    if (const auto* f = std::get_if<FunnelLaw>(&l.law)) {
        require_valid(f->params);
        if (f->params.m != output_dim(l.plant)) throw ConfigInvalid("controller m does not match plant outputs");
        if (f->params.r() != relative_degree(l.plant)) throw ConfigInvalid("controller r does not match plant relative degree");
    }
    if (plant_init.size() != static_cast<Eigen::Index>(state_dim(l.plant)))
        throw ConfigInvalid("initial plant state has wrong dimension");

    const std::size_t nc = controller_states(l);
    Eigen::VectorXd aug(plant_init.size() + static_cast<Eigen::Index>(nc));
    aug.head(plant_init.size()) = plant_init;
    if (const auto* f = std::get_if<FunnelLaw>(&l.law))
        for (std::size_t i = 0; i < nc; ++i) aug(plant_init.size() + static_cast<Eigen::Index>(i)) = f->params.psi0[i];

    auto rhs = [&l](double t, const Eigen::VectorXd& x) { return evaluate_loop(l, t, x); };

    SimTrace trace;
    trace.r = loop_levels(l);
    trace.m = output_dim(l.plant);

    LoopEval cur;
    try {
        cur = rhs(0.0, aug);
    } catch (const ControllerFault& e) {
        throw InitialConditionViolation(std::string("initial errors outside their funnels: ") + e.what());
    }
    trace.rows.push_back(cur.row);

    double t = 0.0;
    double h = std::min(cfg.h_init, cfg.h_max);
    double last_rec = 0.0;
    const double t_eps = 1e-13 * std::max(1.0, cfg.t_end);
    constexpr double locate_tol = 1e-9;

    auto fail = [&](Termination term, EventKind kind, std::string why) {
        trace.termination = term;
        trace.reason = why;
        trace.events.push_back({t, kind, std::move(why)});
        if (trace.rows.back().t != t) trace.rows.push_back(cur.row);
    };

    using Trial = DopriTrial<LoopEval>;
    auto attempt = [&](double hh) -> std::optional<Trial> {
        try {
            return dopri_trial(rhs, t, aug, cur.dx, hh, cfg.rel_tol, cfg.abs_tol);
        } catch (const ControllerFault&) {
            return std::nullopt;
        }
    };

    while (cfg.t_end - t > t_eps) {
        h = std::min({h, cfg.h_max, cfg.t_end - t});
        std::optional<Trial> trial = attempt(h);
        if (!trial) {
            ++trace.rejected_steps;
            h *= 0.5;
            if (h < cfg.h_min) {
                fail(Termination::funnel_fault, EventKind::FunnelFault, "controller fault persists below h_min");
                break;
            }
            continue;
        }
        if (!(trial->err <= 1.0)) {
            ++trace.rejected_steps;
            h = dopri_next_step(h, trial->err);
            if (h < cfg.h_min) {
                fail(Termination::blowup, EventKind::Blowup, "error test fails below h_min");
                break;
            }
            continue;
        }
        if (detail::max_ratio_step_violation(cur.row, trial->end.row, cfg.barrier_margin) > 0.0) {
            ++trace.rejected_steps;
            h *= 0.5;
            if (h < cfg.h_min) {
                fail(Termination::funnel_fault, EventKind::FunnelFault, "funnel approach too fast below h_min");
                break;
            }
            continue;
        }

        double taken = h;
        std::optional<SimEvent> ev;
        if (trial->end.row.sat_active != cur.row.sat_active) {
            // bisect the step length for the switching instant; commit just past it
            double lo = 0.0, hi = h;
            while (hi - lo > locate_tol) {
                const double mid = 0.5 * (lo + hi);
                auto probe = attempt(mid);
                const bool usable = probe && probe->err <= 1.0;
                if (usable && probe->end.row.sat_active == cur.row.sat_active) {
                    lo = mid;
                } else {
                    hi = mid;
                    if (usable) trial = std::move(probe);
                }
            }
            taken = trial->end.row.t - t;
            const bool on = trial->end.row.sat_active;
            ev = SimEvent{t + taken, on ? EventKind::SatOn : EventKind::SatOff, on ? "saturation engaged" : "saturation released"};
        }

        const bool last = cfg.t_end - (t + taken) <= t_eps;
        t = last && !ev ? cfg.t_end : t + taken;
        aug = std::move(trial->x);
        cur = std::move(trial->end);
        cur.row.t = t;
        ++trace.accepted_steps;

        if (ev) trace.events.push_back(*ev);
        if (ev || last || cfg.record_stride <= 0.0 || t - last_rec >= cfg.record_stride) {
            trace.rows.push_back(cur.row);
            last_rec = t;
        }
        if (!detail::finite_state(aug) || aug.norm() > cfg.blowup_norm) {
            fail(Termination::blowup, EventKind::Blowup, "state norm exceeds blowup_norm");
            break;
        }
        if (!ev) h = std::max(dopri_next_step(taken, trial->err), 0.0);
    }
    if (trace.termination == Termination::completed && trace.rows.back().t != t) trace.rows.push_back(cur.row);
    return trace;
}

inline SimTrace integrate(const Plant& plant, const FunnelParams& fp, const Saturation& sat, const ReferenceSignal& ref,
                          const Eigen::VectorXd& plant_init, const SimConfig& cfg) {
    return integrate(ClosedLoop{plant, FunnelLaw{fp}, sat, ref}, plant_init, cfg);
}

/// Maximal runs of saturation-active rows as (t_on, t_off); an open final run ends at the last row.
inline std::vector<std::pair<double, double>> saturation_intervals(const SimTrace& tr) {
    std::vector<std::pair<double, double>> out;
    std::optional<double> on;
    for (const auto& row : tr.rows) {
        if (row.sat_active && !on) on = row.t;
        if (!row.sat_active && on) {
            out.emplace_back(*on, row.t);
            on.reset();
        }
    }
    if (on) out.emplace_back(*on, tr.t_final());
    return out;
}

}  // namespace funnel
