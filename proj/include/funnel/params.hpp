#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace funnel {

/// Continuous surjection N : [0, inf) -> R used to probe the control direction.
struct Surjection {
    enum class Kind { s_sin, neg_s2_cos, linear_signed };

    Kind kind = Kind::neg_s2_cos;
    double sigma = -1.0;  ///< control direction for linear_signed, +1 or -1

    static Surjection s_sin() { return {Kind::s_sin, 1.0}; }
    static Surjection neg_s2_cos() { return {Kind::neg_s2_cos, 1.0}; }
    static Surjection linear_signed(double sigma) { return {Kind::linear_signed, sigma}; }

    double operator()(double s) const {
        switch (kind) {
        case Kind::s_sin: return s * std::sin(s);
        case Kind::neg_s2_cos: return -s * s * std::cos(s);
        case Kind::linear_signed: return sigma * s;
        }
        return 0.0;
    }

    /// sup_{s in [0, upper]} |N(s)|, dense sampling refined by golden-section search
    /// around the best sample. Exact for linear_signed.
    double abs_sup(double upper) const {
        if (!(upper > 0.0)) return 0.0;
        if (kind == Kind::linear_signed) return std::abs(sigma) * upper;
        auto g = [this](double s) { return std::abs((*this)(s)); };
        // |s sin s| and |s^2 cos s| oscillate with period pi; 64 samples per period is ample.
        const std::size_t n = std::max<std::size_t>(256, static_cast<std::size_t>(upper * 64.0 / std::numbers::pi));
        double best_s = upper, best = g(upper);
        for (std::size_t j = 0; j <= n; ++j) {
            const double s = upper * static_cast<double>(j) / static_cast<double>(n);
            if (const double gv = g(s); gv > best) { best = gv; best_s = s; }
        }
        const double step = upper / static_cast<double>(n);
        double lo = std::max(0.0, best_s - step), hi = std::min(upper, best_s + step);
        constexpr double inv_phi = 0.6180339887498949;
        for (int it = 0; it < 80; ++it) {
            const double a = hi - inv_phi * (hi - lo), b = lo + inv_phi * (hi - lo);
            if (g(a) > g(b)) hi = b; else lo = a;
        }
        return std::max(best, g(0.5 * (lo + hi)));
    }

    std::string name() const {
        switch (kind) {
        case Kind::s_sin: return "s_sin";
        case Kind::neg_s2_cos: return "neg_s2_cos";
        case Kind::linear_signed: return "linear_signed";
        }
        return "unknown";
    }
};

/// Design parameters of the input-constrained funnel controller.
///
/// Index i of every vector is cascade level i+1. `p` has r-1 entries.
struct FunnelParams {
    std::size_t m = 1;
    std::vector<double> alpha;
    std::vector<double> beta;
    std::vector<double> p;
    std::vector<double> psi0;
    Surjection surjection;

    std::size_t r() const { return alpha.size(); }
    double floor(std::size_t i) const { return beta[i] / alpha[i]; }
};

/// Violated design inequalities, one readable entry each. Empty means valid.
inline std::vector<std::string> validate_params(const FunnelParams& fp) {
    std::vector<std::string> out;
    const std::size_t r = fp.r();
    auto lvl = [](std::size_t i) { return std::to_string(i + 1); };
    if (r == 0) {
        out.push_back("r >= 1 fails (alpha is empty)");
        return out;
    }
    if (fp.m == 0) out.push_back("m >= 1 fails");
    if (fp.beta.size() != r) out.push_back("beta must have r entries");
    if (fp.psi0.size() != r) out.push_back("psi0 must have r entries");
    if (fp.p.size() + 1 != r) out.push_back("p must have r-1 entries");
    if (!out.empty()) return out;

    for (std::size_t i = 0; i + 1 < r; ++i)
        if (!(fp.alpha[i] > fp.alpha[i + 1]))
            out.push_back("alpha_" + lvl(i) + " > alpha_" + lvl(i + 1) + " fails");
    if (!(fp.alpha[r - 1] > 0.0)) out.push_back("alpha_" + lvl(r - 1) + " > 0 fails");
    for (std::size_t i = 0; i + 1 < r; ++i)
        if (!(fp.p[i] > 1.0)) out.push_back("p_" + lvl(i) + " > 1 fails");
    for (std::size_t i = 0; i < r; ++i) {
        if (!(fp.beta[i] > 0.0)) out.push_back("beta_" + lvl(i) + " > 0 fails");
        else if (fp.alpha[i] > 0.0 && !(fp.psi0[i] > fp.beta[i] / fp.alpha[i]))
            out.push_back("psi_" + lvl(i) + "^0 > beta_" + lvl(i) + "/alpha_" + lvl(i) + " fails");
    }
    if (fp.surjection.kind == Surjection::Kind::linear_signed &&
        !(fp.surjection.sigma == 1.0 || fp.surjection.sigma == -1.0))
        out.push_back("linear_signed sigma must be +1 or -1");
    return out;
}

class InvalidParams : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

inline void require_valid(const FunnelParams& fp) {
    const auto v = validate_params(fp);
    if (v.empty()) return;
    std::string msg = "invalid funnel parameters:";
    for (const auto& s : v) msg += " [" + s + "]";
    throw InvalidParams(msg);
}

/// Thrown when an initial error does not lie strictly inside its funnel.
class InitialConditionViolation : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Upper-triangular table nu(i, j), j >= i, stored row-major over the full r x r square.
class NuTable {
public:
    NuTable() = default;
    explicit NuTable(std::size_t r) : r_(r), v_(r * r, 0.0) {}
    double operator()(std::size_t i, std::size_t j) const { return v_[i * r_ + j]; }
    double& operator()(std::size_t i, std::size_t j) { return v_[i * r_ + j]; }
    std::size_t size() const { return r_; }

private:
    std::size_t r_ = 0;
    std::vector<double> v_;
};

struct DerivedConstants {
    std::vector<double> kappa_c;    ///< beta_i - p_i beta_{i+1}/alpha_{i+1}, r-1 entries
    NuTable nu;
    std::vector<double> mu0;        ///< psi_i(t0) - beta_i/alpha_i
    std::vector<double> psi_floor;  ///< beta_i/alpha_i
};

inline std::vector<double> kappa_constants(const FunnelParams& fp) {
    std::vector<double> k;
    for (std::size_t i = 0; i + 1 < fp.r(); ++i)
        k.push_back(fp.beta[i] - fp.p[i] * fp.beta[i + 1] / fp.alpha[i + 1]);
    return k;
}

/// Recovery coefficients nu_ij and deviations mu_i(t0) for the funnel state psi_at_t0.
inline DerivedConstants recovery_coeffs(const FunnelParams& fp, const std::vector<double>& psi_at_t0) {
    require_valid(fp);
    const std::size_t r = fp.r();
    if (psi_at_t0.size() != r) throw std::invalid_argument("recovery_coeffs: psi_at_t0 must have r entries");
    DerivedConstants dc;
    dc.kappa_c = kappa_constants(fp);
    dc.nu = NuTable(r);
    for (std::size_t i = 0; i < r; ++i) {
        dc.nu(i, i) = 1.0;
        for (std::size_t j = i + 1; j < r; ++j) {
            // every factor depends on j, so no running product across j
            double prod = 1.0;
            for (std::size_t k = i; k < j; ++k) {
                const double gap = fp.alpha[k] - fp.alpha[j];
                if (!(gap > 0.0)) throw std::domain_error("recovery_coeffs: alpha not strictly decreasing");
                prod *= fp.p[k] / gap;
            }
            dc.nu(i, j) = prod;
        }
    }
    for (std::size_t i = 0; i < r; ++i) {
        dc.psi_floor.push_back(fp.floor(i));
        dc.mu0.push_back(psi_at_t0[i] - fp.floor(i));
    }
    return dc;
}

inline DerivedConstants recovery_coeffs(const FunnelParams& fp) { return recovery_coeffs(fp, fp.psi0); }

/// Ceiling on psi_i a time dt after t0 provided the saturation stays inactive on [t0, t0 + dt].
inline std::vector<double> recovery_bound(const FunnelParams& fp, const std::vector<double>& psi_at_t0, double dt) {
    if (!(dt >= 0.0)) throw std::invalid_argument("recovery_bound: dt must be >= 0");
    const auto dc = recovery_coeffs(fp, psi_at_t0);
    const std::size_t r = fp.r();
    std::vector<double> b(r);
    for (std::size_t i = 0; i < r; ++i) {
        double s = dc.psi_floor[i];
        for (std::size_t j = i; j < r; ++j) s += dc.mu0[j] * dc.nu(i, j) * std::exp(-fp.alpha[j] * dt);
        b[i] = s;
    }
    return b;
}

/// Floor psi_i(t) >= mu_i(0) e^{-alpha_i t} + beta_i/alpha_i valid along any closed-loop solution.
inline std::vector<double> lower_bound(const FunnelParams& fp, double t) {
    require_valid(fp);
    std::vector<double> l(fp.r());
    for (std::size_t i = 0; i < fp.r(); ++i)
        l[i] = (fp.psi0[i] - fp.floor(i)) * std::exp(-fp.alpha[i] * t) + fp.floor(i);
    return l;
}

/// Funnel boundaries under permanently inactive saturation, solved level by level from r down to 1.
///
/// Each deviation mu_i(t) = psi_i(t) - beta_i/alpha_i is a sum of exponentials
/// C_ij e^{-alpha_j t}; the coefficients follow from variation of constants.
inline std::vector<double> nominal_funnel(const FunnelParams& fp, const std::vector<double>& psi_at_t0, double dt) {
    require_valid(fp);
    const std::size_t r = fp.r();
    std::vector<std::vector<double>> c(r, std::vector<double>(r, 0.0));
    for (std::size_t ii = r; ii-- > 0;) {
        double rest = 0.0;
        for (std::size_t j = ii + 1; j < r; ++j) {
            c[ii][j] = fp.p[ii] * c[ii + 1][j] / (fp.alpha[ii] - fp.alpha[j]);
            rest += c[ii][j];
        }
        c[ii][ii] = (psi_at_t0[ii] - fp.floor(ii)) - rest;
    }
    std::vector<double> psi(r);
    for (std::size_t i = 0; i < r; ++i) {
        double s = fp.floor(i);
        for (std::size_t j = i; j < r; ++j) s += c[i][j] * std::exp(-fp.alpha[j] * dt);
        psi[i] = s;
    }
    return psi;
}

struct RatioBounds {
    std::vector<double> step4;  ///< bounds on psi_i/psi_r, i = 1..r-1
    std::vector<double> step5;  ///< bounds on psi_i/psi_{i+1}, i = 1..r-1
};

/// Ratio bounds on the funnel boundaries. Empty for r = 1. A vanishing alpha gap yields a huge
/// (possibly infinite) constant which is returned as is.
inline RatioBounds ratio_bound_constants(const FunnelParams& fp) {
    require_valid(fp);
    const std::size_t r = fp.r();
    RatioBounds rb;
    if (r < 2) return rb;
    const auto& a = fp.alpha;
    const auto& b = fp.beta;
    const auto& p = fp.p;
    const auto& s0 = fp.psi0;
    for (std::size_t i = 0; i + 1 < r; ++i) {
        const double second = (p[i] * b[i + 1] + b[i] * a[i + 1]) / (b[i + 1] * (a[i] - a[i + 1]));
        rb.step5.push_back(std::max(s0[i] / s0[i + 1], second));
    }
    rb.step4.assign(r - 1, 0.0);
    const std::size_t last = r - 1;
    rb.step4[last - 1] = std::max(s0[last - 1] / s0[last],
                                  (p[last - 1] * b[last] + b[last - 1] * a[last]) / (b[last] * (a[last - 1] - a[last])));
    for (std::size_t ii = last - 1; ii-- > 0;) {
        const double second = (p[ii] * rb.step4[ii + 1] + b[ii] * a[last] / b[last]) / (a[ii] - a[last]);
        rb.step4[ii] = std::max(s0[ii] / s0[last], second);
    }
    return rb;
}

struct EpsBounds {
    std::vector<double> eps;            ///< r-1 entries
    std::vector<std::string> issues;    ///< arguments of the max that reached 1; never clamped
    bool ok() const { return issues.empty(); }
};

namespace detail {

/// max{first, 1/p_i, sqrt(1 - 1/(p_i^2 alpha_i beta_{i+1}/(beta_i alpha_{i+1}) + p_i (alpha_i + c_i)))}
inline double eps_level(const FunnelParams& fp, std::size_t i, double first, double c, std::vector<std::string>& issues) {
    const double pi = fp.p[i];
    const double ratio = fp.alpha[i] * fp.beta[i + 1] / (fp.beta[i] * fp.alpha[i + 1]);
    const double denom = pi * pi * ratio + pi * (fp.alpha[i] + c);
    const double third = std::sqrt(1.0 - 1.0 / denom);
    const std::string lvl = std::to_string(i + 1);
    if (!(first < 1.0)) issues.push_back("eps_" + lvl + ": first argument " + std::to_string(first) + " >= 1");
    if (!(third < 1.0)) issues.push_back("eps_" + lvl + ": third argument reached 1 (denominator " + std::to_string(denom) + ")");
    return std::max({first, 1.0 / pi, third});
}

}  // namespace detail

/// Invariance levels eps_i for i = 1..r-1 given initial error norms and the c_i bounds.
inline EpsBounds eps_bounds(const FunnelParams& fp, const std::vector<double>& e0_norms, const std::vector<double>& c) {
    require_valid(fp);
    const std::size_t r = fp.r();
    if (e0_norms.size() < r - 1 || c.size() < r - 1)
        throw std::invalid_argument("eps_bounds: e0_norms and c need r-1 entries");
    EpsBounds out;
    for (std::size_t i = 0; i + 1 < r; ++i) {
        if (!(e0_norms[i] < fp.psi0[i]))
            throw InitialConditionViolation("eps_bounds: ||e_" + std::to_string(i + 1) + "(0)|| >= psi_" +
                                            std::to_string(i + 1) + "^0");
        if (c[i] < 0.0) throw std::invalid_argument("eps_bounds: c_i must be >= 0");
        out.eps.push_back(detail::eps_level(fp, i, e0_norms[i] / fp.psi0[i], c[i], out.issues));
    }
    return out;
}

/// Intermediates of the constructive saturation level, up to (not including) the eps_r search.
struct SaturationConstants {
    std::vector<double> c;        ///< c_1..c_r
    std::vector<double> eps;      ///< eps_1..eps_{r-1}
    std::vector<double> psi_max;  ///< psi_i^max, evaluated as recovery_bound at dt = 0
    std::vector<double> ratio;    ///< M_1..M_{r-1} (psi_i/psi_{i+1} bounds)
    std::vector<std::string> issues;
};

inline SaturationConstants saturation_constants(const FunnelParams& fp, double eps) {
    require_valid(fp);
    if (!(eps > 0.0 && eps < 1.0)) throw std::invalid_argument("saturation_constants: eps must lie in (0,1)");
    const std::size_t r = fp.r();
    SaturationConstants sc;
    sc.ratio = ratio_bound_constants(fp).step5;
    const auto kc = kappa_constants(fp);
    sc.c.assign(r, 0.0);
    for (std::size_t i = 0; i + 1 < r; ++i) {
        sc.eps.push_back(detail::eps_level(fp, i, eps, sc.c[i], sc.issues));
        const double g = 1.0 / (1.0 - sc.eps[i] * sc.eps[i]);
        const double mi = sc.ratio[i];
        sc.c[i + 1] = 2.0 * g * (2.0 * fp.p[i] + fp.alpha[i] * mi + fp.alpha[i] * kc[i] / fp.beta[i] + mi * sc.c[i] + mi * g) +
                      g * (1.0 + mi * g + mi * sc.c[i]);
    }
    sc.psi_max = recovery_bound(fp, fp.psi0, 0.0);
    return sc;
}

}  // namespace funnel
