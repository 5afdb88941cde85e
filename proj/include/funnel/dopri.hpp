#pragma once

#include <algorithm>
#include <cmath>
#include <type_traits>

#include <Eigen/Dense>

namespace funnel {

// Dormand-Prince 5(4) tableau.
namespace dp45 {
inline constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
inline constexpr double a21 = 1.0 / 5;
inline constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
inline constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
inline constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
inline constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                        a65 = -5103.0 / 18656;
inline constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84;
// fifth-order minus embedded fourth-order weights
inline constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200, e6 = 22.0 / 525,
                        e7 = -1.0 / 40;
}  // namespace dp45

/// Result of one trial step. `end` is the evaluation at the new point (first-same-as-last stage).
template <class Eval>
struct DopriTrial {
    Eigen::VectorXd x;
    double err = 0.0;  ///< scaled max-norm of the embedded error estimate; accept iff <= 1
    Eval end;
};

/// One Dormand-Prince trial step from (t, x) with derivative k1 = f(t, x).dx.
/// `f(t, x)` returns an object with a public `dx` member and may throw; exceptions propagate.
template <class F, class Eval = std::invoke_result_t<F, double, const Eigen::VectorXd&>>
DopriTrial<Eval> dopri_trial(F&& f, double t, const Eigen::VectorXd& x, const Eigen::VectorXd& k1, double h,
                             double rtol, double atol) {
    using namespace dp45;
    const Eigen::VectorXd k2 = f(t + c2 * h, x + h * (a21 * k1)).dx;
    const Eigen::VectorXd k3 = f(t + c3 * h, x + h * (a31 * k1 + a32 * k2)).dx;
    const Eigen::VectorXd k4 = f(t + c4 * h, x + h * (a41 * k1 + a42 * k2 + a43 * k3)).dx;
    const Eigen::VectorXd k5 = f(t + c5 * h, x + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4)).dx;
    const Eigen::VectorXd k6 = f(t + h, x + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5)).dx;
    DopriTrial<Eval> out;
    out.x = x + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
    out.end = f(t + h, out.x);
    const Eigen::VectorXd& k7 = out.end.dx;
    const Eigen::VectorXd est = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
    double err = 0.0;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        const double scale = atol + rtol * std::max(std::abs(x(i)), std::abs(out.x(i)));
        err = std::max(err, std::abs(est(i)) / scale);
    }
    out.err = std::isfinite(err) ? err : HUGE_VAL;
    return out;
}

/// Standard step-size controller for a fifth-order pair.
inline double dopri_next_step(double h, double err) {
    const double fac = err > 0.0 ? 0.9 * std::pow(err, -0.2) : 5.0;
    return h * std::clamp(fac, 0.2, 5.0);
}

}  // namespace funnel
