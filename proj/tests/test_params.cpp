#include <cmath>
#include <random>

#include <gtest/gtest.h>
#include <unsupported/Eigen/MatrixFunctions>

#include "funnel/params.hpp"

using namespace funnel;

namespace {

FunnelParams case1() {
    FunnelParams fp;
    fp.alpha = {1.5, 1.35};
    fp.beta = {0.15, 0.675};
    fp.p = {1.1};
    fp.psi0 = {4.1, 2.0};
    return fp;
}

FunnelParams random_params(std::mt19937_64& rng, std::size_t r) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    FunnelParams fp;
    double a = 0.5 + 2.0 * u(rng);
    for (std::size_t i = 0; i < r; ++i) {
        fp.alpha.push_back(a);
        a *= 0.5 + 0.4 * u(rng);
        fp.beta.push_back(0.05 + u(rng));
        fp.psi0.push_back(fp.beta[i] / fp.alpha[i] * (1.1 + 3.0 * u(rng)));
        if (i + 1 < r) fp.p.push_back(1.01 + u(rng));
    }
    return fp;
}

// nu_ij as an explicit product written out without the table.
double nu_oracle(const FunnelParams& fp, std::size_t i, std::size_t j) {
    double v = 1.0;
    for (std::size_t k = i; k < j; ++k) v = v * fp.p[k] / (fp.alpha[k] - fp.alpha[j]);
    return v;
}

// Nominal funnel by matrix exponential of the augmented affine system.
std::vector<double> nominal_oracle(const FunnelParams& fp, const std::vector<double>& psi0, double t) {
    const auto r = static_cast<Eigen::Index>(fp.r());
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(r + 1, r + 1);
    for (Eigen::Index i = 0; i < r; ++i) {
        A(i, i) = -fp.alpha[static_cast<std::size_t>(i)];
        double b = fp.beta[static_cast<std::size_t>(i)];
        if (i + 1 < r) {
            const auto ii = static_cast<std::size_t>(i);
            A(i, i + 1) = fp.p[ii];
            b -= fp.p[ii] * fp.beta[ii + 1] / fp.alpha[ii + 1];
        }
        A(i, r) = b;
    }
    Eigen::VectorXd x(r + 1);
    for (Eigen::Index i = 0; i < r; ++i) x(i) = psi0[static_cast<std::size_t>(i)];
    x(r) = 1.0;
    const Eigen::VectorXd y = (A * t).exp() * x;
    return std::vector<double>(y.data(), y.data() + r);
}

}  // namespace

TEST(Validate, Case1IsValid) { EXPECT_TRUE(validate_params(case1()).empty()); }

TEST(Validate, EqualAlphasReported) {
    auto fp = case1();
    fp.alpha = {1.5, 1.5};
    fp.beta = {0.15, 0.75};
    const auto v = validate_params(fp);
    ASSERT_EQ(v.size(), 1u);
    EXPECT_EQ(v[0], "alpha_1 > alpha_2 fails");
    EXPECT_THROW(require_valid(fp), InvalidParams);
}

TEST(Validate, PsiBelowFloorAndSmallP) {
    auto fp = case1();
    fp.psi0[0] = 0.05;
    fp.p[0] = 1.0;
    const auto v = validate_params(fp);
    EXPECT_NE(std::find(v.begin(), v.end(), "psi_1^0 > beta_1/alpha_1 fails"), v.end());
    EXPECT_NE(std::find(v.begin(), v.end(), "p_1 > 1 fails"), v.end());
}

TEST(Validate, ShapeErrors) {
    FunnelParams fp;
    EXPECT_FALSE(validate_params(fp).empty());
    fp = case1();
    fp.p = {};
    EXPECT_FALSE(validate_params(fp).empty());
    fp = case1();
    fp.alpha[1] = -0.1;
    EXPECT_FALSE(validate_params(fp).empty());
}

TEST(Recovery, Case1Coefficients) {
    const auto dc = recovery_coeffs(case1());
    EXPECT_NEAR(dc.nu(0, 1), 1.1 / 0.15, 1e-12);
    EXPECT_NEAR(dc.mu0[0], 4.0, 1e-12);
    EXPECT_NEAR(dc.mu0[1], 1.5, 1e-12);
    ASSERT_EQ(dc.kappa_c.size(), 1u);
    EXPECT_NEAR(dc.kappa_c[0], 0.15 - 1.1 * 0.5, 1e-12);
}

TEST(Recovery, NuMatchesProductOracle) {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 50; ++trial) {
        const auto fp = random_params(rng, 1 + trial % 4);
        const auto dc = recovery_coeffs(fp);
        for (std::size_t i = 0; i < fp.r(); ++i)
            for (std::size_t j = i; j < fp.r(); ++j) EXPECT_NEAR(dc.nu(i, j), nu_oracle(fp, i, j), 1e-12 * nu_oracle(fp, i, j));
    }
}

TEST(Recovery, BoundAtZeroCase1) {
    const auto b = recovery_bound(case1(), case1().psi0, 0.0);
    EXPECT_NEAR(b[0], 0.1 + 4.0 + 1.1 / 0.15 * 1.5, 1e-12);
    EXPECT_NEAR(b[0], 15.1, 1e-12);
    EXPECT_NEAR(b[1], 2.0, 1e-12);
}

TEST(Recovery, BoundDominatesStartAndDecays) {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 50; ++trial) {
        const auto fp = random_params(rng, 1 + trial % 4);
        const auto b0 = recovery_bound(fp, fp.psi0, 0.0);
        auto prev = b0;
        for (std::size_t i = 0; i < fp.r(); ++i) EXPECT_GE(b0[i], fp.psi0[i] - 1e-12);
        for (double dt : {0.5, 1.0, 5.0, 50.0}) {
            const auto b = recovery_bound(fp, fp.psi0, dt);
            for (std::size_t i = 0; i < fp.r(); ++i) {
                EXPECT_LE(b[i], prev[i] + 1e-12);
                EXPECT_GE(b[i], fp.floor(i));
            }
            prev = b;
        }
    }
}

TEST(Recovery, RejectsNegativeTime) { EXPECT_THROW(recovery_bound(case1(), case1().psi0, -1.0), std::invalid_argument); }

TEST(LowerBound, Case1Values) {
    const auto l0 = lower_bound(case1(), 0.0);
    EXPECT_NEAR(l0[0], 4.1, 1e-12);
    EXPECT_NEAR(l0[1], 2.0, 1e-12);
    EXPECT_NEAR(lower_bound(case1(), 1.0)[0], 4.0 * std::exp(-1.5) + 0.1, 1e-12);
    EXPECT_NEAR(lower_bound(case1(), 1.0)[0], 0.99252, 1e-5);
}

TEST(NominalFunnel, Case1SecondLevelClosedForm) {
    for (double t : {0.0, 0.3, 1.0, 4.0, 15.0})
        EXPECT_NEAR(nominal_funnel(case1(), case1().psi0, t)[1], 1.5 * std::exp(-1.35 * t) + 0.5, 1e-12);
}

TEST(NominalFunnel, MatchesMatrixExponential) {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 40; ++trial) {
        const auto fp = random_params(rng, 1 + trial % 4);
        for (double t : {0.0, 0.7, 3.0, 12.0}) {
            const auto a = nominal_funnel(fp, fp.psi0, t);
            const auto b = nominal_oracle(fp, fp.psi0, t);
            for (std::size_t i = 0; i < fp.r(); ++i) EXPECT_NEAR(a[i], b[i], 1e-9 * std::max(1.0, std::abs(b[i])));
        }
    }
}

TEST(NominalFunnel, StaysAboveLowerBound) {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 40; ++trial) {
        const auto fp = random_params(rng, 1 + trial % 4);
        for (double t = 0.0; t < 10.0; t += 0.25) {
            const auto n = nominal_funnel(fp, fp.psi0, t);
            const auto l = lower_bound(fp, t);
            for (std::size_t i = 0; i < fp.r(); ++i) EXPECT_GE(n[i], l[i] - 1e-12);
        }
    }
}

TEST(RatioBounds, Case1StepConstants) {
    const auto rb = ratio_bound_constants(case1());
    const double second = (1.1 * 0.675 + 0.15 * 1.35) / (0.675 * 0.15);
    ASSERT_EQ(rb.step4.size(), 1u);
    EXPECT_NEAR(rb.step4[0], std::max(2.05, second), 1e-12);
    EXPECT_NEAR(rb.step4[0], 9.0 + 1.0 / 3.0, 1e-9);
    EXPECT_NEAR(rb.step5[0], rb.step4[0], 1e-12);
}

TEST(RatioBounds, EmptyForFirstOrder) {
    FunnelParams fp;
    fp.alpha = {1.0};
    fp.beta = {0.1};
    fp.psi0 = {1.0};
    const auto rb = ratio_bound_constants(fp);
    EXPECT_TRUE(rb.step4.empty());
    EXPECT_TRUE(rb.step5.empty());
}

TEST(RatioBounds, AtLeastInitialRatios) {
    std::mt19937_64 rng(9);
    for (int trial = 0; trial < 40; ++trial) {
        const auto fp = random_params(rng, 2 + trial % 3);
        const auto rb = ratio_bound_constants(fp);
        const std::size_t r = fp.r();
        for (std::size_t i = 0; i + 1 < r; ++i) {
            EXPECT_GE(rb.step5[i], fp.psi0[i] / fp.psi0[i + 1]);
            EXPECT_GE(rb.step4[i], fp.psi0[i] / fp.psi0[r - 1]);
        }
    }
}

TEST(EpsBounds, Case1ThirdTermDominates) {
    const auto eb = eps_bounds(case1(), {0.0}, {0.0});
    ASSERT_EQ(eb.eps.size(), 1u);
    EXPECT_NEAR(eb.eps[0], std::sqrt(1.0 - 1.0 / 7.7), 1e-12);
    EXPECT_NEAR(eb.eps[0], 0.93281, 1e-5);
    EXPECT_TRUE(eb.ok());
}

TEST(EpsBounds, InitialErrorOutsideFunnelThrows) {
    EXPECT_THROW(eps_bounds(case1(), {4.1}, {0.0}), InitialConditionViolation);
    EXPECT_THROW(eps_bounds(case1(), {5.0}, {0.0}), InitialConditionViolation);
}

TEST(EpsBounds, FirstArgumentDominatesWhenLarge) {
    const auto eb = eps_bounds(case1(), {4.0}, {0.0});
    EXPECT_NEAR(eb.eps[0], 4.0 / 4.1, 1e-15);
}

TEST(EpsBounds, AlwaysAtLeastInverseP) {
    std::mt19937_64 rng(13);
    for (int trial = 0; trial < 40; ++trial) {
        const auto fp = random_params(rng, 2 + trial % 3);
        std::vector<double> e0(fp.r() - 1, 0.0), c(fp.r() - 1, 0.0);
        const auto eb = eps_bounds(fp, e0, c);
        for (std::size_t i = 0; i + 1 < fp.r(); ++i) {
            EXPECT_GE(eb.eps[i], 1.0 / fp.p[i]);
            EXPECT_LT(eb.eps[i], 1.0);
        }
    }
}

TEST(SaturationConstants, Case1) {
    const auto sc = saturation_constants(case1(), 0.1);
    ASSERT_EQ(sc.eps.size(), 1u);
    EXPECT_NEAR(sc.eps[0], 0.93281, 1e-5);
    EXPECT_NEAR(sc.psi_max[0], 15.1, 1e-9);
    EXPECT_NEAR(sc.psi_max[1], 2.0, 1e-12);
    EXPECT_EQ(sc.c[0], 0.0);
    // c_2 from the recursion with c_1 = 0, g = 1/(1 - eps_1^2) = 7.7, M_1 = 28/3, kappa_1 = -0.4
    const double g = 1.0 / (1.0 - sc.eps[0] * sc.eps[0]);
    const double m1 = 28.0 / 3.0;
    const double c2 = 2.0 * g * (2.0 * 1.1 + 1.5 * m1 + 1.5 * -0.4 / 0.15 + m1 * g) + g * (1.0 + m1 * g);
    EXPECT_NEAR(g, 7.7, 1e-9);
    EXPECT_NEAR(sc.c[1], c2, 1e-9 * c2);
}

TEST(SaturationConstants, SelfConsistentWithEpsBounds) {
    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 30; ++trial) {
        const auto fp = random_params(rng, 2 + trial % 3);
        const double eps = 0.05 + 0.9 * std::uniform_real_distribution<double>(0.0, 1.0)(rng);
        const auto sc = saturation_constants(fp, eps);
        std::vector<double> e0;
        for (std::size_t i = 0; i + 1 < fp.r(); ++i) e0.push_back(eps * fp.psi0[i]);
        const auto eb = eps_bounds(fp, e0, sc.c);
        ASSERT_EQ(eb.eps.size(), sc.eps.size());
        for (std::size_t i = 0; i < sc.eps.size(); ++i) EXPECT_DOUBLE_EQ(eb.eps[i], sc.eps[i]);
    }
}

TEST(Surjection, Values) {
    EXPECT_NEAR(Surjection::neg_s2_cos()(2.0), -4.0 * std::cos(2.0), 1e-15);
    EXPECT_NEAR(Surjection::s_sin()(2.0), 2.0 * std::sin(2.0), 1e-15);
    EXPECT_EQ(Surjection::linear_signed(-1.0)(3.0), -3.0);
}

TEST(Surjection, AbsSupMatchesDenseScan) {
    for (const auto& n : {Surjection::neg_s2_cos(), Surjection::s_sin(), Surjection::linear_signed(1.0)}) {
        for (double upper : {1.0, 3.7, 10.0, 40.0}) {
            double best = 0.0;
            const int pts = 400000;
            for (int j = 0; j <= pts; ++j) best = std::max(best, std::abs(n(upper * j / pts)));
            const double got = n.abs_sup(upper);
            EXPECT_GE(got, best - 1e-12 * std::max(1.0, best));
            EXPECT_NEAR(got, best, 1e-6 * std::max(1.0, best)) << n.name() << " on [0," << upper << "]";
        }
    }
}
