#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "funnel/params.hpp"

namespace funnel {

/// Any evaluation of a control law that left its domain of definition. The integrator treats
/// these as step rejections, never as results.
class ControllerFault : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class FunnelViolation : public ControllerFault {
public:
    FunnelViolation(std::size_t level, double norm, double psi)
        : ControllerFault("funnel violation at level " + std::to_string(level + 1) + ": ||e|| = " + std::to_string(norm) +
                          " >= psi = " + std::to_string(psi)),
          level(level), norm(norm), psi(psi) {}
    std::size_t level;
    double norm;
    double psi;
};

class SingularKappa : public ControllerFault {
public:
    using ControllerFault::ControllerFault;
};

class BarrierViolation : public ControllerFault {
public:
    using ControllerFault::ControllerFault;
};

/// Rows are e, e', ..., e^(r-1); columns are output channels.
using ErrorStack = Eigen::MatrixXd;

struct Cascade {
    Eigen::MatrixXd e;  ///< row i is e_{i+1}
    Eigen::VectorXd k;
};

/// Forms e_1..e_r and k_1..k_r level by level, so a violation names the lowest offending level.
inline Cascade error_cascade(const ErrorStack& stack, const Eigen::VectorXd& psi) {
    const Eigen::Index r = stack.rows();
    if (psi.size() != r) throw std::invalid_argument("error_cascade: psi size must equal stack rows");
    Cascade c{Eigen::MatrixXd(r, stack.cols()), Eigen::VectorXd(r)};
    c.e.row(0) = stack.row(0);
    for (Eigen::Index i = 0; i < r; ++i) {
        if (i > 0) c.e.row(i) = stack.row(i) + c.k(i - 1) * c.e.row(i - 1);
        const double n = c.e.row(i).norm();
        if (!(n < psi(i))) throw FunnelViolation(static_cast<std::size_t>(i), n, psi(i));
        const double w = n / psi(i);
        c.k(i) = 1.0 / (1.0 - w * w);
    }
    return c;
}

/// Inverse of error_cascade: e^(i) = e_{i+1} - k_i e_i.
inline ErrorStack stack_from_cascade(const Cascade& c) {
    ErrorStack s(c.e.rows(), c.e.cols());
    s.row(0) = c.e.row(0);
    for (Eigen::Index i = 1; i < c.e.rows(); ++i) s.row(i) = c.e.row(i) - c.k(i - 1) * c.e.row(i - 1);
    return s;
}

inline Eigen::VectorXd control_signal(const Cascade& c, const FunnelParams& fp) {
    const Eigen::Index last = c.e.rows() - 1;
    const double kr = c.k(last);
    if (!std::isfinite(kr)) throw std::invalid_argument("control_signal: k_r must be finite");
    return fp.surjection(kr) * c.e.row(last).transpose();
}

struct Saturation {
    enum class Kind { box, ball, identity };
    Kind kind = Kind::identity;
    double level = std::numeric_limits<double>::infinity();

    static Saturation box(double m) { return {Kind::box, m}; }
    static Saturation ball(double m) { return {Kind::ball, m}; }
    static Saturation identity() { return {}; }

    /// Radius theta below which sat is the identity.
    double theta() const { return kind == Kind::identity ? std::numeric_limits<double>::infinity() : level; }

    std::string name() const {
        switch (kind) {
        case Kind::box: return "box";
        case Kind::ball: return "ball";
        case Kind::identity: return "identity";
        }
        return "unknown";
    }
};

struct Saturated {
    Eigen::VectorXd u;
    double kappa = 0.0;  ///< ||v - sat(v)||
};

inline Saturated saturate(const Saturation& s, const Eigen::VectorXd& v) {
    Saturated out{v, 0.0};
    switch (s.kind) {
    case Saturation::Kind::identity: return out;
    case Saturation::Kind::box: out.u = v.cwiseMax(-s.level).cwiseMin(s.level); break;
    case Saturation::Kind::ball: {
        const double n = v.norm();
        if (n > s.level) out.u = v * (s.level / n);
        break;
    }
    }
    out.kappa = (v - out.u).norm();
    return out;
}

/// Right-hand side of the funnel-boundary dynamics. The widening term psi_r kappa/||e_r|| is only
/// formed when kappa > 0; below eta_guard that combination is inconsistent and reported.
inline Eigen::VectorXd funnel_rhs(const Eigen::VectorXd& psi, const FunnelParams& fp, double e_r_norm, double kappa,
                                  double eta_guard = 0.0) {
    const std::size_t r = fp.r();
    Eigen::VectorXd d(static_cast<Eigen::Index>(r));
    for (std::size_t i = 0; i + 1 < r; ++i) {
        const auto ii = static_cast<Eigen::Index>(i);
        d(ii) = fp.p[i] * psi(ii + 1) - fp.alpha[i] * psi(ii) + fp.beta[i] - fp.p[i] * fp.beta[i + 1] / fp.alpha[i + 1];
    }
    const auto last = static_cast<Eigen::Index>(r - 1);
    d(last) = -fp.alpha[r - 1] * psi(last) + fp.beta[r - 1];
    if (kappa > 0.0) {
        if (!(e_r_norm > eta_guard))
            throw SingularKappa("funnel_rhs: kappa = " + std::to_string(kappa) + " > 0 with ||e_r|| = " +
                                std::to_string(e_r_norm) + " <= guard " + std::to_string(eta_guard));
        d(last) += psi(last) * kappa / e_r_norm;
    }
    return d;
}

/// One evaluation of the full feedback law.
struct ControllerEval {
    Eigen::MatrixXd e_cascade;
    Eigen::VectorXd k;
    Eigen::VectorXd v;
    Eigen::VectorXd u;
    double kappa = 0.0;
    Eigen::VectorXd psi_dot;
    bool sat_active = false;
};

/// Lower limit on ||e_r|| compatible with an active saturation: theta / (2 sup_{[0,k_r]} |N|).
inline double eta_guard(const Saturation& sat, const Surjection& n, double k_cap) {
    const double theta = sat.theta();
    if (!std::isfinite(theta)) return 0.0;
    const double sup = n.abs_sup(k_cap);
    return sup > 0.0 ? theta / (2.0 * sup) : std::numeric_limits<double>::infinity();
}

inline ControllerEval evaluate_funnel_law(const ErrorStack& stack, const Eigen::VectorXd& psi, const FunnelParams& fp,
                                          const Saturation& sat) {
    ControllerEval ev;
    auto c = error_cascade(stack, psi);
    ev.v = control_signal(c, fp);
    auto s = saturate(sat, ev.v);
    ev.u = std::move(s.u);
    ev.kappa = s.kappa;
    ev.sat_active = ev.kappa > 0.0;
    const Eigen::Index last = c.e.rows() - 1;
    const double er = c.e.row(last).norm();
    const double guard = ev.sat_active ? eta_guard(sat, fp.surjection, c.k(last)) : 0.0;
    ev.psi_dot = funnel_rhs(psi, fp, er, ev.kappa, guard);
    ev.e_cascade = std::move(c.e);
    ev.k = std::move(c.k);
    return ev;
}

// Baseline funnel controllers with prescribed boundary 1/phi(t), single output only.

/// Reciprocal funnel boundary phi(t) = (a e^{-b t} + c)^{-1}.
struct PhiShape {
    double a = 4.0;
    double b = 1.5;
    double c = 0.1;
    double operator()(double t) const { return 1.0 / (a * std::exp(-b * t) + c); }
};

inline double baseline_phi(double t, double a, double b, double c) { return PhiShape{a, b, c}(t); }

namespace detail {

/// alpha(s) = 1/(1-s) on [0,1)
inline double barrier_alpha(double s, const char* where) {
    if (!(s < 1.0)) throw BarrierViolation(std::string(where) + ": barrier argument " + std::to_string(s) + " >= 1");
    return 1.0 / (1.0 - s);
}

/// gamma(s) = alpha(s^2) s on (-1,1)
inline double barrier_gamma(double s, const char* where) { return barrier_alpha(s * s, where) * s; }

}  // namespace detail

struct BaselineEval {
    double u = 0.0;
    double w = 0.0;
    std::vector<double> levels;  ///< |barrier argument| per nesting level, each must stay < 1
    std::vector<double> gains;
};

inline BaselineEval baseline_r2(double e, double edot, double phi, const Surjection& n) {
    BaselineEval b;
    const double g1 = detail::barrier_alpha(phi * phi * e * e, "baseline_r2");
    b.w = phi * edot + g1 * phi * e;
    const double g2 = detail::barrier_alpha(b.w * b.w, "baseline_r2");
    b.u = n(g2) * b.w;
    b.levels = {std::abs(phi * e), std::abs(b.w)};
    b.gains = {g1, g2};
    return b;
}

inline BaselineEval baseline_r3(double e, double edot, double eddot, double phi, const Surjection& n) {
    BaselineEval b;
    const double s1 = phi * e;
    const double inner = detail::barrier_gamma(s1, "baseline_r3");
    const double s2 = phi * edot + inner;
    b.w = phi * eddot + detail::barrier_gamma(s2, "baseline_r3");
    const double g3 = detail::barrier_alpha(b.w * b.w, "baseline_r3");
    b.u = n(g3) * b.w;
    b.levels = {std::abs(s1), std::abs(s2), std::abs(b.w)};
    b.gains = {1.0 / (1.0 - s1 * s1), 1.0 / (1.0 - s2 * s2), g3};
    return b;
}

}  // namespace funnel
