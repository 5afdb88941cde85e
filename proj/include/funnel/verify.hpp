#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include "funnel/controller.hpp"
#include "funnel/parallel.hpp"
#include "funnel/params.hpp"
#include "funnel/plants.hpp"
#include "funnel/sim.hpp"

namespace funnel {

/// Outcome of one check. pass <=> worst_margin >= -tol, except that strict checks use tol = 0
/// and require worst_margin > 0.
struct VerdictReport {
    std::string check_name;
    bool pass = true;
    double worst_margin = std::numeric_limits<double>::infinity();
    double t_worst = 0.0;
    double tol = 0.0;
    std::string details;
};

namespace detail {

inline void track(VerdictReport& v, double margin, double t) {
    if (margin < v.worst_margin) {
        v.worst_margin = margin;
        v.t_worst = t;
    }
}

inline double psi_scale(const SimTrace& tr) {
    double s = 1.0;
    for (const auto& row : tr.rows)
        if (row.psi.size() > 0) s = std::max(s, row.psi.cwiseAbs().maxCoeff());
    return s;
}

}  // namespace detail

/// Every recorded row keeps ||e_i|| strictly below psi_i. Margin is relative: (psi - ||e||)/psi.
inline VerdictReport check_funnel_membership(const SimTrace& tr, const FunnelParams& fp) {
    VerdictReport v;
    v.check_name = "funnel_membership";
    for (const auto& row : tr.rows) {
        if (static_cast<std::size_t>(row.psi.size()) != fp.r()) throw std::invalid_argument("trace levels do not match params");
        for (Eigen::Index i = 0; i < row.psi.size(); ++i) detail::track(v, (row.psi(i) - row.e_norms(i)) / row.psi(i), row.t);
    }
    v.pass = v.worst_margin > 0.0;
    v.details = "min over rows and levels of (psi_i - ||e_i||)/psi_i";
    return v;
}

struct RecoveryOptions {
    double tol_abs = 1e-6;
    double rel_tol = 1e-8;   ///< integrator tolerance the trace was produced with
    double from_time = 0.0;  ///< only inactive intervals starting at or after this time
};

/// On every maximal saturation-inactive run [t0, t1), psi_i(t) <= recovery_bound(psi(t0), t - t0).
inline VerdictReport check_recovery(const SimTrace& tr, const FunnelParams& fp, const RecoveryOptions& opt = {}) {
    VerdictReport v;
    v.check_name = "recovery";
    v.tol = opt.tol_abs + 10.0 * opt.rel_tol * detail::psi_scale(tr);
    std::size_t intervals = 0;
    std::size_t i = 0;
    while (i < tr.rows.size()) {
        if (tr.rows[i].sat_active) {
            ++i;
            continue;
        }
        const TraceRow& start = tr.rows[i];
        const std::vector<double> psi0(start.psi.data(), start.psi.data() + start.psi.size());
        const bool checked = start.t >= opt.from_time;
        if (checked) ++intervals;
        for (; i < tr.rows.size() && !tr.rows[i].sat_active; ++i) {
            if (!checked) continue;
            const auto& row = tr.rows[i];
            const auto b = recovery_bound(fp, psi0, row.t - start.t);
            for (Eigen::Index l = 0; l < row.psi.size(); ++l) detail::track(v, b[static_cast<std::size_t>(l)] - row.psi(l), row.t);
        }
    }
    v.pass = v.worst_margin >= -v.tol;
    v.details = "saturation-inactive intervals checked: " + std::to_string(intervals);
    return v;
}

/// psi_i >= L_i(t), and psi_i/psi_{i+1}, psi_i/psi_r stay below their ratio constants.
inline VerdictReport check_lower_and_ratio_bounds(const SimTrace& tr, const FunnelParams& fp, double rel_tol = 1e-8) {
    VerdictReport v;
    v.check_name = "lower_and_ratio_bounds";
    v.tol = 1e-6 + 10.0 * rel_tol * detail::psi_scale(tr);
    const auto rb = ratio_bound_constants(fp);
    const std::size_t r = fp.r();
    for (const auto& row : tr.rows) {
        const auto low = lower_bound(fp, row.t);
        for (std::size_t i = 0; i < r; ++i) detail::track(v, row.psi(static_cast<Eigen::Index>(i)) - low[i], row.t);
        for (std::size_t i = 0; i + 1 < r; ++i) {
            const auto ii = static_cast<Eigen::Index>(i);
            detail::track(v, rb.step5[i] - row.psi(ii) / row.psi(ii + 1), row.t);
            detail::track(v, rb.step4[i] - row.psi(ii) / row.psi(static_cast<Eigen::Index>(r - 1)), row.t);
        }
    }
    v.pass = v.worst_margin >= -v.tol;
    v.details = "floor and ratio bounds";
    return v;
}

struct BlowupCase {
    double level = 0.0;
    double omega = 0.0;          ///< closed form, +inf for level >= 1
    bool blew_up = false;
    double detected = 0.0;       ///< termination time of the run
    double rel_error = 0.0;      ///< |detected - omega|/omega when both finite
};

/// Drive y' = y^2 + sat(v) from y(0) = 1 with the saturation pinned at -level and record escape.
inline std::vector<BlowupCase> blowup_cases(const std::vector<double>& levels, double rel_tol = 1e-10, double horizon = 10.0) {
    std::vector<BlowupCase> out;
    for (double lvl : levels) {
        if (!(lvl > 0.0)) throw std::invalid_argument("blowup_oracle: levels must be positive");
        SimConfig cfg;
        cfg.t_end = horizon;
        cfg.rel_tol = rel_tol;
        cfg.abs_tol = 1e-10;
        cfg.h_max = 0.05;
        Eigen::VectorXd v = Eigen::VectorXd::Constant(1, -10.0 * std::max(1.0, lvl));
        Eigen::VectorXd x0 = Eigen::VectorXd::Constant(1, 1.0);
        const auto tr = integrate(ClosedLoop{ScalarPrototype{1.0}, ConstantDemand{v}, Saturation::box(lvl), ReferenceSignal::zero()},
                                  x0, cfg);
        BlowupCase c;
        c.level = lvl;
        c.omega = blowup_closed_form(lvl).omega;
        c.blew_up = tr.termination == Termination::blowup;
        c.detected = tr.t_final();
        c.rel_error = std::isfinite(c.omega) && c.blew_up ? std::abs(c.detected - c.omega) / c.omega : 0.0;
        out.push_back(c);
    }
    return out;
}

/// Escape time within 1% of the closed form for levels < 1; no escape up to t = 10 otherwise.
inline VerdictReport blowup_oracle(const std::vector<double>& levels, double rel_tol = 1e-10) {
    VerdictReport v;
    v.check_name = "blowup_oracle";
    std::ostringstream os;
    for (const auto& c : blowup_cases(levels, rel_tol)) {
        double margin;
        if (std::isfinite(c.omega)) {
            margin = c.blew_up ? 0.01 - c.rel_error : -1.0;
            os << "M=" << c.level << " omega=" << c.omega << " detected=" << c.detected << " rel_err=" << c.rel_error << "; ";
        } else {
            margin = c.blew_up ? -1.0 : 0.01;
            os << "M=" << c.level << (c.blew_up ? " unexpected blow-up at " + std::to_string(c.detected) : " no blow-up") << "; ";
        }
        detail::track(v, margin, c.detected);
    }
    v.pass = v.worst_margin >= 0.0;
    v.details = os.str();
    return v;
}

/// Grid evaluation of the high-gain function for f(d, z, u) = z + Gamma u with m = 1.
struct HighGainQuery {
    LinearBIF plant;
    double r_q = 0.0;       ///< radius of the compact set for z
    double nu_star = 0.5;
    std::size_t w_grid = 64;  ///< points per w segment
    std::size_t z_grid = 64;
};

/// min over the grid of w (z - s Gamma w), z in [-R_q, R_q], nu* <= |w| <= 1. Nested grids
/// (n -> 2n - 1) can only lower the value.
inline double chi_grid(const HighGainQuery& q, double s) {
    if (q.plant.m() != 1) throw std::invalid_argument("chi_grid: unsupported, only m = 1");
    if (q.w_grid < 16 || q.z_grid < 16) throw std::invalid_argument("chi_grid: grid resolutions must be >= 16");
    const double gamma = q.plant.Gamma(0, 0);
    double best = std::numeric_limits<double>::infinity();
    auto lin = [](double a, double b, std::size_t j, std::size_t n) {
        return a + (b - a) * static_cast<double>(j) / static_cast<double>(n - 1);
    };
    for (std::size_t a = 0; a < q.w_grid; ++a) {
        const double mag = lin(q.nu_star, 1.0, a, q.w_grid);
        for (double w : {mag, -mag}) {
            for (std::size_t b = 0; b < q.z_grid; ++b) {
                const double z = q.z_grid == 1 ? 0.0 : lin(-q.r_q, q.r_q, b, q.z_grid);
                best = std::min(best, w * (z - s * gamma * w));
            }
        }
    }
    return best;
}

struct SaturationOptions {
    double delta = 1.0;
    std::size_t grid = 64;
    int max_doublings = 52;  ///< eps_r candidates 1 - 2^-j, j = 1..max_doublings
    /// Bound on |y^(i)(0)|; negative means derive it from the admissible initial errors.
    double y0_bound = -1.0;
};

/// Every intermediate of the constructive saturation level.
struct SaturationCertificate {
    bool ok = false;
    double level = 0.0;  ///< the saturation level M
    std::vector<double> c;
    std::vector<double> eps;  ///< eps_1..eps_r, the last from the search
    std::vector<double> psi_max;
    std::vector<double> ratio;
    double k_hat = 0.0;
    std::vector<double> band;     ///< zeta band bounds B_i
    double r_q = 0.0;             ///< over-bound used for the z-set radius
    double r_q_sampled = 0.0;     ///< largest ||T(zeta)|| found on constant corner signals
    double c_q = 1.0;             ///< sup_t ||e^{Qt}|| estimate
    double chi_star = 0.0;
    double eps_r = 0.0;
    double k_r = 0.0;
    double chi_at_eps_r = 0.0;
    double sup_n = 0.0;
    double delta = 0.0;
    double level_refined = 0.0;   ///< same construction on the refined grid
    std::vector<std::string> issues;
};

namespace detail {

inline double spectral_abscissa(const Eigen::MatrixXd& q) {
    Eigen::EigenSolver<Eigen::MatrixXd> es(q);
    return es.eigenvalues().real().maxCoeff();
}

inline double op_norm(const Eigen::MatrixXd& a) {
    if (a.size() == 0) return 0.0;
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(a);
    return svd.singularValues()(0);
}

struct ZBound {
    double bound = 0.0;
    double sampled = 0.0;
    double c_q = 1.0;
};

/// Over-bound on ||T(zeta)||_inf for zeta in the band, T the linear internal-dynamics operator.
inline ZBound internal_bound(const LinearBIF& p, const std::vector<double>& band) {
    ZBound zb;
    for (std::size_t i = 0; i < p.r(); ++i) zb.bound += op_norm(p.R[i]) * band[i];
    const auto q = static_cast<Eigen::Index>(p.q());
    Eigen::MatrixXd dc_gain = Eigen::MatrixXd::Zero(p.m(), p.m());
    if (q > 0) {
        const double abscissa = spectral_abscissa(p.Q);
        if (!(abscissa < 0.0)) throw std::invalid_argument("saturation_level: Q must be Hurwitz (minimum phase)");
        const double horizon = 20.0 / -abscissa;
        for (int j = 0; j <= 2000; ++j) {
            const double t = horizon * j / 2000.0;
            zb.c_q = std::max(zb.c_q, op_norm((p.Q * t).exp()));
        }
        zb.bound += op_norm(p.S) * (zb.c_q * p.eta0.norm() + zb.c_q * op_norm(p.P) * band[0] / -abscissa);
        dc_gain = -p.S * p.Q.inverse() * p.P;
    }
    // constant corner signals zeta_i = +-B_i, evaluated at steady state and at t = 0
    const std::size_t r = p.r();
    for (std::uint64_t mask = 0; mask < (1ull << r); ++mask) {
        Eigen::VectorXd steady = Eigen::VectorXd::Zero(p.m());
        for (std::size_t i = 0; i < r; ++i) {
            const double sgn = (mask >> i) & 1u ? 1.0 : -1.0;
            const Eigen::VectorXd zi = Eigen::VectorXd::Constant(p.m(), sgn * band[i]);
            steady += p.R[i] * zi;
            if (i == 0 && q > 0) steady += dc_gain * zi;
        }
        Eigen::VectorXd start = steady;
        if (q > 0) start = steady - dc_gain * Eigen::VectorXd::Constant(p.m(), ((mask & 1u) ? 1.0 : -1.0) * band[0]) + p.S * p.eta0;
        zb.sampled = std::max({zb.sampled, steady.norm(), start.norm()});
    }
    return zb;
}

inline SaturationCertificate build_certificate(const LinearBIF& plant, const FunnelParams& fp, double eps, double ref_bound,
                                               const SaturationOptions& opt, std::size_t grid) {
    SaturationCertificate cert;
    const std::size_t r = fp.r();
    const auto sc = saturation_constants(fp, eps);
    cert.c = sc.c;
    cert.eps = sc.eps;
    cert.psi_max = sc.psi_max;
    cert.ratio = sc.ratio;
    cert.issues = sc.issues;
    cert.delta = opt.delta;

    double y0b = opt.y0_bound;
    if (y0b < 0.0) {
        // |e^(i)(0)| <= psi_{i+1}^0 + k_i psi_i^0 on the admissible initial set
        y0b = fp.psi0[0];
        for (std::size_t i = 1; i < r; ++i) {
            const double ki = 1.0 / (1.0 - sc.eps[i - 1] * sc.eps[i - 1]);
            y0b = std::max(y0b, fp.psi0[i] + ki * fp.psi0[i - 1]);
        }
        y0b += ref_bound;
    }
    cert.k_hat = ref_bound + y0b;
    cert.band.resize(r);
    cert.band[0] = cert.psi_max[0] + cert.k_hat;
    for (std::size_t i = 1; i < r; ++i)
        cert.band[i] = cert.psi_max[i] + cert.psi_max[i - 1] / (1.0 - sc.eps[i - 1] * sc.eps[i - 1]) + cert.k_hat;
    const auto zb = internal_bound(plant, cert.band);
    cert.r_q = zb.bound;
    cert.r_q_sampled = zb.sampled;
    cert.c_q = zb.c_q;

    const double pr = cert.psi_max[r - 1];
    cert.chi_star = (ref_bound + cert.c[r - 1] * pr + fp.alpha[r - 1] * pr) * pr;

    HighGainQuery q{plant, cert.r_q, 0.5, grid, grid};
    double best_chi = -std::numeric_limits<double>::infinity();
    for (int j = 1; j <= opt.max_doublings; ++j) {
        const double er = 1.0 - std::ldexp(1.0, -j);
        if (er < eps) continue;
        const double kr = 1.0 / (1.0 - er * er);
        const double chi = chi_grid(q, fp.surjection(kr));
        best_chi = std::max(best_chi, chi);
        if (chi >= 2.0 * cert.chi_star) {
            cert.ok = true;
            cert.eps_r = er;
            cert.k_r = kr;
            cert.chi_at_eps_r = chi;
            break;
        }
    }
    if (!cert.ok) {
        cert.chi_at_eps_r = best_chi;
        cert.issues.push_back("eps_r search exhausted: best chi " + std::to_string(best_chi) + " < 2 chi* = " +
                              std::to_string(2.0 * cert.chi_star));
        return cert;
    }
    cert.eps.push_back(cert.eps_r);
    cert.sup_n = fp.surjection.abs_sup(cert.k_r);
    cert.level = cert.sup_n * fp.psi0[r - 1] + opt.delta;
    return cert;
}

}  // namespace detail

/// Constructive saturation level below which the funnel controller never saturates, for linear
/// single-output plants with sign-definite Gamma. `ref_bound` bounds the reference and its
/// derivatives.
inline SaturationCertificate saturation_level(const LinearBIF& plant, const FunnelParams& fp, double eps, double ref_bound,
                                              const SaturationOptions& opt = {}) {
    plant.check();
    require_valid(fp);
    if (plant.m() != 1) throw std::invalid_argument("saturation_level: unsupported, only m = 1");
    if (plant.r() != fp.r()) throw std::invalid_argument("saturation_level: plant and controller disagree on r");
    if (plant.Gamma(0, 0) == 0.0) throw std::invalid_argument("saturation_level: Gamma must be sign-definite");
    if (!(eps > 0.0 && eps < 1.0)) throw std::invalid_argument("saturation_level: eps must lie in (0,1)");
    if (ref_bound < 0.0) throw std::invalid_argument("saturation_level: ref_bound must be >= 0");

    auto cert = detail::build_certificate(plant, fp, eps, ref_bound, opt, opt.grid);
    if (!cert.ok) return cert;
    const auto refined = detail::build_certificate(plant, fp, eps, ref_bound, opt, 2 * opt.grid - 1);
    cert.level_refined = refined.ok ? refined.level : std::numeric_limits<double>::infinity();
    if (!(std::abs(cert.level_refined - cert.level) <= 0.01 * cert.level)) {
        cert.ok = false;
        cert.issues.push_back("grid refinement changes M by more than 1%");
    }
    return cert;
}

struct InvariantSweepOptions {
    std::uint64_t seed = 1;
    ReferenceSignal ref = ReferenceSignal::zero();
    SimConfig sim = [] {
        SimConfig c;
        c.t_end = 10.0;
        c.rel_tol = 1e-8;
        return c;
    }();
    double tol = 1e-6;
};

/// Initial plant states with ||e_i(0)|| <= eps_i psi_i^0, drawn uniformly in the cascade coordinates.
inline std::vector<Eigen::VectorXd> sample_invariant_initial_states(const LinearBIF& plant, const FunnelParams& fp,
                                                                    const std::vector<double>& eps_vec, const ReferenceSignal& ref,
                                                                    std::size_t n, std::uint64_t seed) {
    const std::size_t r = fp.r();
    const auto m = static_cast<Eigen::Index>(plant.m());
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    std::vector<Eigen::VectorXd> out;
    const Eigen::MatrixXd refs = ref.stack(0.0, r, plant.m());
    for (std::size_t s = 0; s < n; ++s) {
        Cascade c{Eigen::MatrixXd(static_cast<Eigen::Index>(r), m), Eigen::VectorXd(static_cast<Eigen::Index>(r))};
        for (std::size_t i = 0; i < r; ++i) {
            const auto ii = static_cast<Eigen::Index>(i);
            Eigen::VectorXd dir(m);
            for (Eigen::Index j = 0; j < m; ++j) dir(j) = unit(rng);
            if (dir.norm() > 1.0) dir /= dir.norm();
            c.e.row(ii) = (eps_vec[i] * fp.psi0[i] * dir).transpose();
            const double w = c.e.row(ii).norm() / fp.psi0[i];
            c.k(ii) = 1.0 / (1.0 - w * w);
        }
        const Eigen::MatrixXd ys = stack_from_cascade(c) + refs;
        Eigen::VectorXd x = default_initial_state(plant);
        for (std::size_t i = 0; i < r; ++i) x.segment(static_cast<Eigen::Index>(i) * m, m) = ys.row(static_cast<Eigen::Index>(i)).transpose();
        out.push_back(std::move(x));
    }
    return out;
}

/// Simulate sampled initial conditions from the invariant set and require ||e_i|| <= eps_i psi_i and
/// ||v|| <= level on every recorded row.
inline VerdictReport invariant_set_sweep(const LinearBIF& plant, const FunnelParams& fp, double level,
                                         const std::vector<double>& eps_vec, double ref_bound, std::size_t n_samples,
                                         const InvariantSweepOptions& opt = {}) {
    if (eps_vec.size() != fp.r()) throw std::invalid_argument("invariant_set_sweep: eps_vec needs r entries");
    for (double e : eps_vec)
        if (!(e > 0.0 && e < 1.0)) throw std::invalid_argument("invariant_set_sweep: eps_i must lie in (0,1)");
    VerdictReport v;
    v.check_name = "invariant_set_sweep";
    v.tol = opt.tol;
    const auto inits = sample_invariant_initial_states(plant, fp, eps_vec, opt.ref, n_samples, opt.seed);
    const ClosedLoop loop{plant, FunnelLaw{fp}, Saturation::box(level), opt.ref};

    struct RunMargin {
        double margin = std::numeric_limits<double>::infinity();
        double t = 0.0;
        bool completed = true;
    };
    const auto runs = parallel_map<RunMargin>(inits.size(), [&](std::size_t s) {
        RunMargin rm;
        const auto tr = integrate(loop, inits[s], opt.sim);
        rm.completed = tr.termination == Termination::completed;
        for (const auto& row : tr.rows) {
            for (Eigen::Index i = 0; i < row.psi.size(); ++i) {
                const double mg = eps_vec[static_cast<std::size_t>(i)] * row.psi(i) - row.e_norms(i);
                if (mg < rm.margin) rm = {mg, row.t, rm.completed};
            }
            const double mv = level - row.v.norm();
            if (mv < rm.margin) rm = {mv, row.t, rm.completed};
        }
        return rm;
    });
    std::size_t failures = 0;
    for (const auto& rm : runs) {
        detail::track(v, rm.completed ? rm.margin : -std::numeric_limits<double>::infinity(), rm.t);
        if (!rm.completed || rm.margin < -v.tol) ++failures;
    }
    (void)ref_bound;
    v.pass = v.worst_margin >= -v.tol;
    v.details = std::to_string(n_samples) + " samples, " + std::to_string(failures) + " violating";
    return v;
}

}  // namespace funnel
