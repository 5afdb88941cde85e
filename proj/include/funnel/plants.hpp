#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

namespace funnel {

/// Car of mass m1 carrying a mass m2 on a spring-damper, sliding on a ramp inclined by theta.
/// State (z, s, z', s'); output y = z + s cos(theta).
struct MassOnCar {
    double m1 = 4.0;
    double m2 = 1.0;
    double k = 2.0;
    double d = 1.0;
    double theta = std::numbers::pi / 4.0;

    std::size_t relative_degree() const { return theta == 0.0 ? 3 : 2; }
    double mass_det() const {
        const double sn = std::sin(theta);
        return m2 * (m1 + m2 * sn * sn);
    }
};

/// Linear system in Byrnes-Isidori form:
///   y^(r) = sum_i R_i y^(i-1) + S eta + Gamma u,   eta' = Q eta + P y.
/// State layout is (y, y', ..., y^(r-1), eta).
struct LinearBIF {
    std::vector<Eigen::MatrixXd> R;  ///< r blocks, m x m
    Eigen::MatrixXd S;               ///< m x q
    Eigen::MatrixXd P;               ///< q x m
    Eigen::MatrixXd Q;               ///< q x q
    Eigen::MatrixXd Gamma;           ///< m x m
    Eigen::VectorXd eta0;            ///< q

    std::size_t r() const { return R.size(); }
    std::size_t m() const { return static_cast<std::size_t>(Gamma.rows()); }
    std::size_t q() const { return static_cast<std::size_t>(Q.rows()); }

    /// Pure integrator y^(r) = gamma u in one channel, no internal dynamics.
    static LinearBIF chain(std::size_t r, double gamma) {
        LinearBIF b;
        b.R.assign(r, Eigen::MatrixXd::Zero(1, 1));
        b.S = Eigen::MatrixXd::Zero(1, 0);
        b.P = Eigen::MatrixXd::Zero(0, 1);
        b.Q = Eigen::MatrixXd::Zero(0, 0);
        b.Gamma = Eigen::MatrixXd::Constant(1, 1, gamma);
        b.eta0 = Eigen::VectorXd::Zero(0);
        return b;
    }

    void check() const {
        const auto mm = Gamma.rows();
        const auto qq = Q.rows();
        if (R.empty()) throw std::invalid_argument("LinearBIF: need at least one R block");
        if (Gamma.cols() != mm || mm < 1) throw std::invalid_argument("LinearBIF: Gamma must be square, m >= 1");
        for (const auto& b : R)
            if (b.rows() != mm || b.cols() != mm) throw std::invalid_argument("LinearBIF: R_i must be m x m");
        if (Q.cols() != qq) throw std::invalid_argument("LinearBIF: Q must be square");
        if (S.rows() != mm || S.cols() != qq) throw std::invalid_argument("LinearBIF: S must be m x q");
        if (P.rows() != qq || P.cols() != mm) throw std::invalid_argument("LinearBIF: P must be q x m");
        if (eta0.size() != qq) throw std::invalid_argument("LinearBIF: eta0 must have q entries");
    }
};

/// y' = y^2 + u, the quadratic-growth example that escapes in finite time under weak saturation.
struct ScalarPrototype {
    double y0 = 1.0;
};

using Plant = std::variant<MassOnCar, LinearBIF, ScalarPrototype>;

inline std::size_t relative_degree(const Plant& p) {
    return std::visit(
        [](const auto& x) -> std::size_t {
            using T = std::decay_t<decltype(x)>;
            if constexpr (std::is_same_v<T, MassOnCar>) return x.relative_degree();
            else if constexpr (std::is_same_v<T, LinearBIF>) return x.r();
            else return 1;
        },
        p);
}

inline std::size_t output_dim(const Plant& p) {
    if (const auto* b = std::get_if<LinearBIF>(&p)) return b->m();
    return 1;
}

inline std::size_t state_dim(const Plant& p) {
    return std::visit(
        [](const auto& x) -> std::size_t {
            using T = std::decay_t<decltype(x)>;
            if constexpr (std::is_same_v<T, MassOnCar>) return 4;
            else if constexpr (std::is_same_v<T, LinearBIF>) return x.r() * x.m() + x.q();
            else return 1;
        },
        p);
}

/// Initial plant state implied by the descriptor alone (zero outputs, eta0, y0).
inline Eigen::VectorXd default_initial_state(const Plant& p) {
    Eigen::VectorXd x = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(state_dim(p)));
    if (const auto* b = std::get_if<LinearBIF>(&p)) x.tail(static_cast<Eigen::Index>(b->q())) = b->eta0;
    if (const auto* s = std::get_if<ScalarPrototype>(&p)) x(0) = s->y0;
    return x;
}

inline Eigen::VectorXd mass_on_car_rhs(const MassOnCar& p, const Eigen::VectorXd& x, double u) {
    const double c = std::cos(p.theta);
    const double det = p.mass_det();
    const double f1 = u;
    const double f2 = -p.k * x(1) - p.d * x(3);
    Eigen::VectorXd dx(4);
    dx(0) = x(2);
    dx(1) = x(3);
    dx(2) = (p.m2 * f1 - p.m2 * c * f2) / det;
    dx(3) = (-p.m2 * c * f1 + (p.m1 + p.m2) * f2) / det;
    return dx;
}

/// (y, y'[, y'']); the second derivative is only input-free when theta = 0.
inline Eigen::VectorXd mass_on_car_outputs(const MassOnCar& p, const Eigen::VectorXd& x, std::size_t count) {
    if (count > 3) throw std::invalid_argument("mass_on_car_outputs: at most three derivatives");
    if (count == 3 && p.theta != 0.0)
        throw std::logic_error("mass_on_car_outputs: y'' depends on u unless theta = 0");
    const double c = std::cos(p.theta);
    Eigen::VectorXd y(static_cast<Eigen::Index>(count));
    if (count > 0) y(0) = x(0) + x(1) * c;
    if (count > 1) y(1) = x(2) + x(3) * c;
    if (count > 2) y(2) = -(p.k * x(1) + p.d * x(3)) / p.m2;
    return y;
}

inline Eigen::VectorXd linear_bif_rhs(const LinearBIF& p, const Eigen::VectorXd& x, const Eigen::VectorXd& u) {
    const auto r = static_cast<Eigen::Index>(p.r());
    const auto m = static_cast<Eigen::Index>(p.m());
    const auto q = static_cast<Eigen::Index>(p.q());
    Eigen::VectorXd dx(x.size());
    for (Eigen::Index i = 0; i + 1 < r; ++i) dx.segment(i * m, m) = x.segment((i + 1) * m, m);
    Eigen::VectorXd top = p.Gamma * u;
    for (Eigen::Index i = 0; i < r; ++i) top += p.R[static_cast<std::size_t>(i)] * x.segment(i * m, m);
    if (q > 0) {
        const auto eta = x.tail(q);
        top += p.S * eta;
        dx.tail(q) = p.Q * eta + p.P * x.head(m);
    }
    dx.segment((r - 1) * m, m) = top;
    return dx;
}

inline double scalar_prototype_rhs(const ScalarPrototype&, double y, double u) { return y * y + u; }

/// Plant state derivative under (already saturated) input u.
inline Eigen::VectorXd plant_rhs(const Plant& p, const Eigen::VectorXd& x, const Eigen::VectorXd& u) {
    if (const auto* mc = std::get_if<MassOnCar>(&p)) return mass_on_car_rhs(*mc, x, u(0));
    if (const auto* b = std::get_if<LinearBIF>(&p)) return linear_bif_rhs(*b, x, u);
    Eigen::VectorXd dx(1);
    dx(0) = scalar_prototype_rhs(std::get<ScalarPrototype>(p), x(0), u(0));
    return dx;
}

/// Rows y, y', ..., y^(count-1) computed from state alone.
inline Eigen::MatrixXd output_stack(const Plant& p, const Eigen::VectorXd& x, std::size_t count) {
    const auto m = static_cast<Eigen::Index>(output_dim(p));
    Eigen::MatrixXd out(static_cast<Eigen::Index>(count), m);
    if (const auto* mc = std::get_if<MassOnCar>(&p)) {
        out.col(0) = mass_on_car_outputs(*mc, x, count);
    } else if (const auto* b = std::get_if<LinearBIF>(&p)) {
        if (count > b->r()) throw std::logic_error("output_stack: derivative order exceeds r - 1");
        for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(count); ++i) out.row(i) = x.segment(i * m, m).transpose();
    } else {
        if (count > 1) throw std::logic_error("output_stack: scalar prototype has relative degree 1");
        if (count == 1) out(0, 0) = x(0);
    }
    return out;
}

/// Reference trajectory with closed-form derivatives, broadcast to every output channel.
struct ReferenceSignal {
    enum class Kind { cosine, zero, polynomial };
    Kind kind = Kind::cosine;
    double amplitude = 1.0;
    double frequency = 1.0;
    std::vector<double> coeffs;  ///< c0 + c1 t + c2 t^2 + ...

    static ReferenceSignal cosine(double a = 1.0, double w = 1.0) { return {Kind::cosine, a, w, {}}; }
    static ReferenceSignal zero() { return {Kind::zero, 0.0, 0.0, {}}; }
    static ReferenceSignal polynomial(std::vector<double> c) { return {Kind::polynomial, 0.0, 0.0, std::move(c)}; }

    double scalar(double t, std::size_t order) const {
        switch (kind) {
        case Kind::zero: return 0.0;
        case Kind::cosine:
            return amplitude * std::pow(frequency, static_cast<double>(order)) *
                   std::cos(frequency * t + static_cast<double>(order) * std::numbers::pi / 2.0);
        case Kind::polynomial: {
            double s = 0.0;
            for (std::size_t j = coeffs.size(); j-- > order;) {
                double fall = 1.0;
                for (std::size_t l = 0; l < order; ++l) fall *= static_cast<double>(j - l);
                s = s * t + coeffs[j] * fall;
            }
            return s;
        }
        }
        return 0.0;
    }

    Eigen::VectorXd eval(double t, std::size_t order, std::size_t m) const {
        return Eigen::VectorXd::Constant(static_cast<Eigen::Index>(m), scalar(t, order));
    }

    /// Rows y_ref, y_ref', ..., y_ref^(count-1).
    Eigen::MatrixXd stack(double t, std::size_t count, std::size_t m) const {
        Eigen::MatrixXd s(static_cast<Eigen::Index>(count), static_cast<Eigen::Index>(m));
        for (std::size_t i = 0; i < count; ++i) s.row(static_cast<Eigen::Index>(i)).setConstant(scalar(t, i));
        return s;
    }

    std::string name() const {
        switch (kind) {
        case Kind::cosine: return "cosine";
        case Kind::zero: return "zero";
        case Kind::polynomial: return "polynomial";
        }
        return "unknown";
    }
};

/// Lower comparison solution z(t) of y' = y^2 - M from y(0) = 1 and its escape time.
struct BlowupClosedForm {
    double level = 0.0;
    double omega = std::numeric_limits<double>::infinity();

    double z(double t) const {
        const double s = std::sqrt(level);
        const double g = (1.0 - s) * std::exp(2.0 * s * t);
        return s * (s + 1.0 + g) / (s + 1.0 - g);
    }
};

inline BlowupClosedForm blowup_closed_form(double level) {
    if (!(level > 0.0)) throw std::invalid_argument("blowup_closed_form: saturation level must be positive");
    BlowupClosedForm b{level, std::numeric_limits<double>::infinity()};
    if (level < 1.0) {
        const double s = std::sqrt(level);
        b.omega = std::log((1.0 + s) / (1.0 - s)) / (2.0 * s);
    }
    return b;
}

}  // namespace funnel
