#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "funnel/controller.hpp"

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

Eigen::VectorXd vec(std::initializer_list<double> xs) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(xs.size()));
    Eigen::Index i = 0;
    for (double x : xs) v(i++) = x;
    return v;
}

}  // namespace

TEST(Cascade, ZeroStackGivesUnitGains) {
    const auto c = error_cascade(Eigen::MatrixXd::Zero(3, 2), vec({1, 2, 3}));
    EXPECT_TRUE(c.e.isZero());
    EXPECT_TRUE(c.k.isOnes());
}

TEST(Cascade, FirstOrderGain) {
    Eigen::MatrixXd s(1, 1);
    s << 0.6 * 2.0;
    EXPECT_NEAR(error_cascade(s, vec({2.0})).k(0), 1.5625, 1e-15);
}

TEST(Cascade, SecondOrderHandRecursion) {
    Eigen::MatrixXd s(2, 1);
    s << 0.5, 0.1;
    const auto c = error_cascade(s, vec({1.0, 2.0}));
    const double k1 = 1.0 / (1.0 - 0.25);
    const double e2 = 0.1 + k1 * 0.5;
    EXPECT_NEAR(c.k(0), 4.0 / 3.0, 1e-15);
    EXPECT_NEAR(c.e(1, 0), e2, 1e-15);
    EXPECT_NEAR(c.k(1), 1.0 / (1.0 - e2 * e2 / 4.0), 1e-14);
    EXPECT_NEAR(c.k(1), 1.17225, 1e-5);
}

TEST(Cascade, ViolationNamesLowestLevel) {
    Eigen::MatrixXd s(2, 1);
    s << 0.5, 5.0;
    try {
        error_cascade(s, vec({1.0, 1.0}));
        FAIL();
    } catch (const FunnelViolation& v) {
        EXPECT_EQ(v.level, 1u);
    }
    s << 1.0, 0.0;
    try {
        error_cascade(s, vec({1.0, 1.0}));
        FAIL();
    } catch (const FunnelViolation& v) {
        EXPECT_EQ(v.level, 0u);
    }
}

TEST(Cascade, RoundTripInversion) {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int trial = 0; trial < 500; ++trial) {
        const int r = 1 + trial % 4, m = 1 + trial % 3;
        Cascade c{Eigen::MatrixXd(r, m), Eigen::VectorXd(r)};
        Eigen::VectorXd psi(r);
        for (int i = 0; i < r; ++i) {
            psi(i) = 0.1 + 5.0 * std::abs(u(rng));
            Eigen::VectorXd d(m);
            for (int j = 0; j < m; ++j) d(j) = u(rng);
            d *= 0.999 * std::abs(u(rng)) * psi(i) / std::max(1.0, d.norm());
            c.e.row(i) = d.transpose();
            const double w = d.norm() / psi(i);
            c.k(i) = 1.0 / (1.0 - w * w);
        }
        const auto stack = stack_from_cascade(c);
        const auto back = error_cascade(stack, psi);
        for (int i = 0; i < r; ++i) {
            EXPECT_LE((back.e.row(i) - c.e.row(i)).norm(), 1e-12 * std::max(1.0, c.e.row(i).norm()));
            EXPECT_NEAR(back.k(i), c.k(i), 1e-12 * c.k(i));
        }
        const auto again = stack_from_cascade(back);
        EXPECT_LE((again - stack).norm(), 1e-12 * std::max(1.0, stack.norm()));
    }
}

TEST(Cascade, GainsAtLeastOne) {
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int trial = 0; trial < 300; ++trial) {
        Eigen::MatrixXd s(2, 1);
        s << 0.9 * u(rng), 0.1 * u(rng);
        try {
            const auto c = error_cascade(s, vec({1.0, 3.0}));
            for (int i = 0; i < 2; ++i) {
                EXPECT_GE(c.k(i), 1.0);
                EXPECT_EQ(c.k(i) == 1.0, c.e(i, 0) == 0.0);
            }
        } catch (const FunnelViolation&) {
        }
    }
}

TEST(ControlSignal, Values) {
    FunnelParams fp = case1();
    Cascade c{Eigen::MatrixXd::Zero(2, 1), vec({1.0, 1.0})};
    EXPECT_TRUE(control_signal(c, fp).isZero());
    c.e(1, 0) = 0.3;
    EXPECT_NEAR(control_signal(c, fp)(0), -std::cos(1.0) * 0.3, 1e-15);
    EXPECT_NEAR(-std::cos(1.0), -0.5403, 1e-4);
    fp.surjection = Surjection::linear_signed(-1.0);
    c.k(1) = 2.5;
    EXPECT_NEAR(control_signal(c, fp)(0), -2.5 * 0.3, 1e-15);
    c.k(1) = INFINITY;
    EXPECT_THROW(control_signal(c, fp), std::invalid_argument);
}

TEST(Saturate, ScalarBox) {
    const auto s = saturate(Saturation::box(10.0), vec({15.0}));
    EXPECT_EQ(s.u(0), 10.0);
    EXPECT_EQ(s.kappa, 5.0);
}

TEST(Saturate, VectorBoxUsesEuclideanDeficit) {
    const auto s = saturate(Saturation::box(1.0), vec({2.0, -3.0}));
    EXPECT_EQ(s.u(0), 1.0);
    EXPECT_EQ(s.u(1), -1.0);
    EXPECT_NEAR(s.kappa, std::sqrt(5.0), 1e-15);
}

TEST(Saturate, Ball) {
    const auto s = saturate(Saturation::ball(5.0), vec({6.0, 8.0}));
    EXPECT_NEAR(s.u.norm(), 5.0, 1e-14);
    EXPECT_NEAR(s.kappa, 5.0, 1e-14);
    const auto id = saturate(Saturation::identity(), vec({1e9}));
    EXPECT_EQ(id.u(0), 1e9);
    EXPECT_EQ(id.kappa, 0.0);
}

TEST(Saturate, NoDeficitInsideTheta) {
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int trial = 0; trial < 1000; ++trial) {
        const int m = 1 + trial % 4;
        const double level = 0.1 + 10.0 * std::abs(u(rng));
        for (const auto& sat : {Saturation::box(level), Saturation::ball(level), Saturation::identity()}) {
            Eigen::VectorXd v(m);
            for (int j = 0; j < m; ++j) v(j) = u(rng);
            const double th = std::isfinite(sat.theta()) ? sat.theta() : 100.0;
            v *= th * std::abs(u(rng)) / std::max(v.norm(), 1e-300);
            const auto s = saturate(sat, v);
            EXPECT_EQ(s.kappa, 0.0);
            EXPECT_EQ(s.u, v);
        }
    }
}

TEST(FunnelRhs, Case1Nominal) {
    const auto d = funnel_rhs(vec({4.1, 2.0}), case1(), 0.0, 0.0);
    // 1.1*2 - 1.5*4.1 + 0.15 - 1.1*0.5
    EXPECT_NEAR(d(0), -4.35, 1e-12);
    EXPECT_NEAR(d(1), -2.025, 1e-12);
}

TEST(FunnelRhs, EquilibriumAtFloors) {
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 100; ++trial) {
        FunnelParams fp;
        const int r = 1 + trial % 4;
        double a = 3.0;
        Eigen::VectorXd floors(r);
        for (int i = 0; i < r; ++i) {
            fp.alpha.push_back(a);
            a *= 0.3 + 0.6 * u(rng);
            fp.beta.push_back(0.05 + u(rng));
            fp.psi0.push_back(10.0);
            if (i + 1 < r) fp.p.push_back(1.0 + 2.0 * u(rng) + 1e-3);
            floors(i) = fp.beta[static_cast<std::size_t>(i)] / fp.alpha[static_cast<std::size_t>(i)];
        }
        EXPECT_LE(funnel_rhs(floors, fp, 0.0, 0.0).cwiseAbs().maxCoeff(), 1e-13);
    }
}

TEST(FunnelRhs, WideningTerm) {
    FunnelParams fp;
    fp.alpha = {1.0};
    fp.beta = {1.0};
    fp.psi0 = {2.0};
    EXPECT_NEAR(funnel_rhs(vec({1.0}), fp, 0.5, 1.0)(0), 2.0, 1e-15);
    double prev = -INFINITY;
    for (double kappa : {0.0, 0.1, 0.5, 1.0, 3.0}) {
        const double d = funnel_rhs(vec({1.0}), fp, 0.5, kappa)(0);
        EXPECT_GT(d, prev);
        prev = d;
    }
}

TEST(FunnelRhs, ZeroKappaNeverDivides) {
    FunnelParams fp;
    fp.alpha = {1.0};
    fp.beta = {1.0};
    fp.psi0 = {2.0};
    EXPECT_NO_THROW(funnel_rhs(vec({1.0}), fp, 0.0, 0.0, 1.0));
    EXPECT_THROW(funnel_rhs(vec({1.0}), fp, 0.1, 1.0, 0.2), SingularKappa);
    EXPECT_THROW(funnel_rhs(vec({1.0}), fp, 0.0, 1.0, 0.0), SingularKappa);
}

TEST(EvaluateLaw, InvariantsHold) {
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    const auto fp = case1();
    for (int trial = 0; trial < 300; ++trial) {
        Eigen::MatrixXd s(2, 1);
        s << 3.0 * u(rng), 0.5 * u(rng);
        const Eigen::VectorXd psi = vec({4.1, 2.0});
        try {
            const auto ev = evaluate_funnel_law(s, psi, fp, Saturation::box(1.0));
            EXPECT_EQ(ev.kappa == 0.0, !ev.sat_active);
            EXPECT_EQ(ev.kappa == 0.0, ev.u == ev.v);
            EXPECT_LE(ev.u.cwiseAbs().maxCoeff(), 1.0);
            for (int i = 0; i < 2; ++i) EXPECT_GE(ev.k(i), 1.0);
        } catch (const FunnelViolation&) {
        } catch (const SingularKappa&) {
        }
    }
}

TEST(EtaGuard, Formula) {
    EXPECT_EQ(eta_guard(Saturation::identity(), Surjection::neg_s2_cos(), 5.0), 0.0);
    EXPECT_NEAR(eta_guard(Saturation::box(10.0), Surjection::linear_signed(-1.0), 4.0), 10.0 / 8.0, 1e-15);
}

TEST(Baseline, Phi) {
    EXPECT_NEAR(baseline_phi(0.0, 4.0, 1.5, 0.1), 1.0 / 4.1, 1e-15);
    EXPECT_NEAR(baseline_phi(0.0, 3.0, 1.0, 0.1), 1.0 / 3.1, 1e-15);
    EXPECT_NEAR(baseline_phi(200.0, 4.0, 1.5, 0.1), 10.0, 1e-12);
}

TEST(Baseline, SecondOrder) {
    const auto n = Surjection::neg_s2_cos();
    EXPECT_EQ(baseline_r2(0.0, 0.0, 1.0, n).u, 0.0);
    const auto b = baseline_r2(0.5, 0.0, 1.0, n);
    EXPECT_NEAR(b.w, 0.5 / 0.75, 1e-15);
    EXPECT_NEAR(b.u, n(1.0 / (1.0 - 4.0 / 9.0)) * (0.5 / 0.75), 1e-14);
    EXPECT_THROW(baseline_r2(1.0, 0.0, 1.0, n), BarrierViolation);
    EXPECT_THROW(baseline_r2(0.0, 1.5, 1.0, n), BarrierViolation);
}

TEST(Baseline, ThirdOrder) {
    const auto n = Surjection::neg_s2_cos();
    EXPECT_EQ(baseline_r3(0.0, 0.0, 0.0, 1.0, n).u, 0.0);
    // gamma(0.5) = 2/3, gamma(2/3) = 1.2, barrier 1.44 >= 1
    EXPECT_THROW(baseline_r3(0.5, 0.0, 0.0, 1.0, n), BarrierViolation);
    EXPECT_THROW(baseline_r3(0.9999999, 0.0, 0.0, 1.0, n), BarrierViolation);
    const auto b = baseline_r3(0.1, 0.0, 0.0, 1.0, n);
    const double g1 = 0.1 / 0.99;
    const double g2 = g1 / (1.0 - g1 * g1);
    EXPECT_NEAR(b.w, g2, 1e-15);
    EXPECT_NEAR(b.u, n(1.0 / (1.0 - g2 * g2)) * g2, 1e-14);
}
