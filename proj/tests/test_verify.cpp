#include <cmath>

#include <gtest/gtest.h>

#include "funnel/verify.hpp"

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

FunnelParams first_order() {
    FunnelParams fp;
    fp.alpha = {1.0};
    fp.beta = {0.1};
    fp.psi0 = {1.0};
    fp.surjection = Surjection::linear_signed(-1.0);
    return fp;
}

SimTrace case1_trace() {
    SimConfig c;
    c.t_end = 15.0;
    c.rel_tol = 1e-8;
    c.abs_tol = 1e-10;
    return integrate(ClosedLoop{MassOnCar{}, FunnelLaw{case1()}, Saturation::box(10.0), ReferenceSignal::cosine()}, Eigen::VectorXd::Zero(4), c);
}

TraceRow row(double t, std::initializer_list<double> e, std::initializer_list<double> psi, bool active = false) {
    TraceRow r;
    r.t = t;
    r.e_norms = Eigen::Map<const Eigen::VectorXd>(e.begin(), static_cast<Eigen::Index>(e.size()));
    r.psi = Eigen::Map<const Eigen::VectorXd>(psi.begin(), static_cast<Eigen::Index>(psi.size()));
    r.sat_active = active;
    return r;
}

}  // namespace

TEST(Membership, Case1Passes) {
    const auto v = check_funnel_membership(case1_trace(), case1());
    EXPECT_TRUE(v.pass);
    EXPECT_GT(v.worst_margin, 0.0);
}

TEST(Membership, BoundaryRowFails) {
    SimTrace tr;
    tr.rows = {row(0.0, {0.5, 0.1}, {4.1, 2.0}), row(1.0, {1.0, 0.1}, {1.0, 2.0})};
    const auto v = check_funnel_membership(tr, case1());
    EXPECT_FALSE(v.pass);
    EXPECT_LE(v.worst_margin, 0.0);
    EXPECT_EQ(v.t_worst, 1.0);
}

TEST(Membership, SingleInitialRowPasses) {
    SimTrace tr;
    tr.rows = {row(0.0, {1.0, 1.06}, {4.1, 2.0})};
    EXPECT_TRUE(check_funnel_membership(tr, case1()).pass);
}

TEST(Recovery, Case1Passes) {
    const auto v = check_recovery(case1_trace(), case1(), {1e-6, 1e-8, 0.0});
    EXPECT_TRUE(v.pass) << v.worst_margin;
}

TEST(Recovery, NominalRunPassesFromStart) {
    SimConfig c;
    c.t_end = 10.0;
    c.rel_tol = 1e-8;
    const auto tr = integrate(ClosedLoop{LinearBIF::chain(1, 1.0), FunnelLaw{first_order()}, Saturation::identity(), ReferenceSignal::cosine()},
                              Eigen::VectorXd::Constant(1, 0.5), c);
    ASSERT_EQ(tr.termination, Termination::completed);
    const auto v = check_recovery(tr, first_order(), {1e-6, 1e-8, 0.0});
    EXPECT_TRUE(v.pass);
    EXPECT_NE(v.details.find("checked: 1"), std::string::npos);
}

TEST(Recovery, InflatedFunnelFails) {
    auto tr = case1_trace();
    const auto iv = saturation_intervals(tr);
    ASSERT_FALSE(iv.empty());
    const double after = iv.back().second;
    for (auto& r : tr.rows)
        if (r.t > after + 2.0) {
            r.psi(0) += 1.0;
            break;
        }
    EXPECT_FALSE(check_recovery(tr, case1(), {1e-6, 1e-8, 0.0}).pass);
}

TEST(Bounds, Case1Passes) {
    const auto v = check_lower_and_ratio_bounds(case1_trace(), case1(), 1e-8);
    EXPECT_TRUE(v.pass) << v.worst_margin;
}

TEST(Bounds, FloorViolationFails) {
    SimTrace tr;
    tr.rows = {row(0.0, {0.0, 0.0}, {4.1, 2.0}), row(1.0, {0.0, 0.0}, {0.5, 0.9})};
    EXPECT_FALSE(check_lower_and_ratio_bounds(tr, case1()).pass);
}

TEST(Checks, PureFunctionsOfTrace) {
    const auto tr = case1_trace();
    const auto a = check_recovery(tr, case1(), {});
    const auto b = check_recovery(tr, case1(), {});
    EXPECT_EQ(a.worst_margin, b.worst_margin);
    EXPECT_EQ(a.t_worst, b.t_worst);
    EXPECT_EQ(check_funnel_membership(tr, case1()).worst_margin, check_funnel_membership(tr, case1()).worst_margin);
}

TEST(BlowupOracle, BatteryPasses) {
    const auto v = blowup_oracle({0.25, 0.81, 1.0, 1.5});
    EXPECT_TRUE(v.pass) << v.details;
}

// Near escape y ~ 1/(omega - t), so crossing the 1e6 threshold happens about 1e-6 before omega.
TEST(BlowupOracle, DetectionLeadsEscapeByThresholdGap) {
    for (double tol : {1e-8, 1e-10})
        for (double M : {0.25, 0.81}) {
            const auto c = blowup_cases({M}, tol)[0];
            ASSERT_TRUE(c.blew_up);
            EXPECT_LT(c.detected, c.omega);
            EXPECT_LT(c.omega - c.detected, 5e-6);
        }
}

TEST(BlowupOracle, RejectsNonPositive) { EXPECT_THROW(blowup_oracle({0.0}), std::invalid_argument); }

TEST(ChiGrid, Examples) {
    HighGainQuery q{LinearBIF::chain(1, 1.0), 0.0};
    EXPECT_NEAR(chi_grid(q, -4.0), 1.0, 1e-15);
    EXPECT_EQ(chi_grid(q, 0.0), 0.0);
    q.r_q = 1.0;
    EXPECT_NEAR(chi_grid(q, -4.0), 0.5, 1e-15);
}

TEST(ChiGrid, MatchesDenseMinimum) {
    for (double rq : {0.0, 0.7, 3.0})
        for (double s : {-10.0, -2.0, 0.0, 1.5}) {
            HighGainQuery q{LinearBIF::chain(1, 2.0), rq, 0.5, 17, 17};
            double dense = INFINITY;
            for (int a = 0; a <= 4000; ++a) {
                const double mag = 0.5 + 0.5 * a / 4000.0;
                for (double w : {mag, -mag}) dense = std::min(dense, -rq * std::abs(w) - s * 2.0 * w * w);
            }
            EXPECT_GE(chi_grid(q, s), dense - 1e-12);
            EXPECT_NEAR(chi_grid(q, s), dense, 1e-12);
        }
}

TEST(ChiGrid, RefinementNeverIncreases) {
    for (double rq : {0.3, 2.0})
        for (double s : {-7.3, -1.1, 0.4}) {
            HighGainQuery q{LinearBIF::chain(1, -0.8), rq, 0.5, 16, 16};
            double prev = chi_grid(q, s);
            for (int j = 0; j < 4; ++j) {
                q.w_grid = 2 * q.w_grid - 1;
                q.z_grid = 2 * q.z_grid - 1;
                const double next = chi_grid(q, s);
                EXPECT_LE(next, prev);
                prev = next;
            }
        }
}

TEST(ChiGrid, Restrictions) {
    LinearBIF two = LinearBIF::chain(1, 1.0);
    two.R = {Eigen::MatrixXd::Zero(2, 2)};
    two.Gamma = Eigen::MatrixXd::Identity(2, 2);
    EXPECT_THROW(chi_grid(HighGainQuery{two, 0.0}, 1.0), std::invalid_argument);
    EXPECT_THROW(chi_grid(HighGainQuery{LinearBIF::chain(1, 1.0), 0.0, 0.5, 8, 64}, 1.0), std::invalid_argument);
}

TEST(SaturationLevel, FirstOrderIntegrator) {
    const auto c = saturation_level(LinearBIF::chain(1, 1.0), first_order(), 0.5, 0.0);
    ASSERT_TRUE(c.ok);
    EXPECT_EQ(c.eps_r, 0.9375);
    EXPECT_NEAR(c.k_r, 1.0 / (1.0 - 0.9375 * 0.9375), 1e-12);
    EXPECT_NEAR(c.chi_star, 1.0, 1e-12);
    EXPECT_GE(c.chi_at_eps_r, 2.0 * c.chi_star);
    EXPECT_NEAR(c.level, c.k_r * 1.0 + 1.0, 1e-9);
    ASSERT_EQ(c.eps.size(), 1u);
    EXPECT_EQ(c.eps[0], c.eps_r);
}

TEST(SaturationLevel, DeltaIsAdditive) {
    SaturationOptions o;
    const auto a = saturation_level(LinearBIF::chain(1, 1.0), first_order(), 0.5, 0.0, o);
    o.delta = 2.0;
    const auto b = saturation_level(LinearBIF::chain(1, 1.0), first_order(), 0.5, 0.0, o);
    EXPECT_NEAR(b.level - a.level, 1.0, 1e-12);
}

TEST(SaturationLevel, PositiveFloorAsToleranceShrinks) {
    double prev = INFINITY;
    for (double eps : {0.5, 0.1, 1e-3}) {
        const auto c = saturation_level(LinearBIF::chain(1, 1.0), first_order(), eps, 0.0);
        ASSERT_TRUE(c.ok);
        EXPECT_GE(c.level, 1.0);
        EXPECT_LE(c.level, prev + 1e-12);
        prev = c.level;
    }
}

TEST(SaturationLevel, SecondOrderCertificateSelfConsistent) {
    FunnelParams fp;
    fp.alpha = {2.0, 1.0};
    fp.beta = {0.2, 0.5};
    fp.p = {1.5};
    fp.psi0 = {2.0, 2.0};
    fp.surjection = Surjection::linear_signed(-1.0);
    LinearBIF plant = LinearBIF::chain(2, 1.0);
    plant.R = {Eigen::MatrixXd::Constant(1, 1, -1.0), Eigen::MatrixXd::Constant(1, 1, 0.0)};
    plant.S = Eigen::MatrixXd::Constant(1, 1, 0.5);
    plant.P = Eigen::MatrixXd::Constant(1, 1, 1.0);
    plant.Q = Eigen::MatrixXd::Constant(1, 1, -2.0);
    plant.eta0 = Eigen::VectorXd::Constant(1, 0.1);
    const auto c = saturation_level(plant, fp, 0.3, 1.0);
    ASSERT_TRUE(c.ok) << (c.issues.empty() ? "" : c.issues[0]);
    ASSERT_EQ(c.eps.size(), 2u);
    std::vector<double> e0{0.3 * fp.psi0[0]};
    const auto eb = eps_bounds(fp, e0, c.c);
    EXPECT_DOUBLE_EQ(eb.eps[0], c.eps[0]);
    EXPECT_GE(c.r_q, c.r_q_sampled);
    EXPECT_GE(c.c_q, 1.0);
    EXPECT_NEAR(c.level_refined, c.level, 0.01 * c.level);
}

TEST(SaturationLevel, Rejections) {
    LinearBIF unstable = LinearBIF::chain(1, 1.0);
    unstable.S = Eigen::MatrixXd::Constant(1, 1, 1.0);
    unstable.P = Eigen::MatrixXd::Constant(1, 1, 1.0);
    unstable.Q = Eigen::MatrixXd::Constant(1, 1, 0.5);
    unstable.eta0 = Eigen::VectorXd::Zero(1);
    EXPECT_THROW(saturation_level(unstable, first_order(), 0.5, 0.0), std::invalid_argument);
    EXPECT_THROW(saturation_level(LinearBIF::chain(1, 0.0), first_order(), 0.5, 0.0), std::invalid_argument);
    EXPECT_THROW(saturation_level(LinearBIF::chain(1, 1.0), first_order(), 1.0, 0.0), std::invalid_argument);
}

TEST(SaturationLevel, WrongControlDirectionExhaustsSearch) {
    auto fp = first_order();
    fp.surjection = Surjection::linear_signed(1.0);
    const auto c = saturation_level(LinearBIF::chain(1, 1.0), fp, 0.5, 0.0);
    EXPECT_FALSE(c.ok);
    EXPECT_FALSE(c.issues.empty());
}

TEST(InvariantSweep, TrivialZeroErrors) {
    InvariantSweepOptions o;
    o.sim.t_end = 3.0;
    const auto v = invariant_set_sweep(LinearBIF::chain(1, 1.0), first_order(), 5.0, {1e-300}, 0.0, 4, o);
    EXPECT_TRUE(v.pass);
}

TEST(InvariantSweep, CertifiedLevelPassesAndTinyLevelFails) {
    const auto cert = saturation_level(LinearBIF::chain(1, 1.0), first_order(), 0.5, 0.0);
    ASSERT_TRUE(cert.ok);
    InvariantSweepOptions o;
    o.sim.t_end = 5.0;
    const auto good = invariant_set_sweep(LinearBIF::chain(1, 1.0), first_order(), cert.level, cert.eps, 0.0, 20, o);
    EXPECT_TRUE(good.pass) << good.details;
    const auto bad = invariant_set_sweep(LinearBIF::chain(1, 1.0), first_order(), cert.level / 100.0, cert.eps, 0.0, 20, o);
    EXPECT_FALSE(bad.pass);
}

TEST(InvariantSweep, OrderIndependentOfWorkers) {
    const auto cert = saturation_level(LinearBIF::chain(1, 1.0), first_order(), 0.5, 0.0);
    InvariantSweepOptions o;
    o.sim.t_end = 2.0;
    const auto a = invariant_set_sweep(LinearBIF::chain(1, 1.0), first_order(), cert.level, cert.eps, 0.0, 8, o);
    const auto b = invariant_set_sweep(LinearBIF::chain(1, 1.0), first_order(), cert.level, cert.eps, 0.0, 8, o);
    EXPECT_EQ(a.worst_margin, b.worst_margin);
    EXPECT_EQ(a.t_worst, b.t_worst);
}
