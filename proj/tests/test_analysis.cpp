#include <gtest/gtest.h>

#include "checks.hpp"
#include "l1est/analysis.hpp"

using namespace l1est;

TEST(Eta, Examples)
{
    EXPECT_EQ(eta(Mat::Identity(3, 3)), 3.0);
    EXPECT_EQ(eta(Mat::Zero(4, 4)), 0.0);
    EXPECT_EQ(eta((Mat(2, 2) << 1, -2, 0.5, 0).finished()), 3.5);
    EXPECT_THROW(eta(Mat::Zero(2, 3)), ValidationError);
}

TEST(NspStructured, Examples)
{
    EXPECT_TRUE(nsp_check_structured(3, 1, {1}, false).satisfies);
    const auto v = nsp_check_structured(4, 1, {1, 2}, false);
    EXPECT_FALSE(v.satisfies);
    ASSERT_TRUE(v.witness.has_value());
    EXPECT_EQ(*v.witness, Vec::Ones(4));
    EXPECT_TRUE(nsp_check_structured(9, 2, {2, 4, 6, 9}, false).satisfies);
    EXPECT_TRUE(nsp_check_structured(4, 2, {1, 2, 3, 4}, true).satisfies);
    EXPECT_TRUE(nsp_check_structured(4, 2, {}, false).satisfies);
    EXPECT_THROW(nsp_check_structured(3, 1, {4}, false), ValidationError);
    EXPECT_THROW(nsp_check_structured(3, 1, {1, 1}, false), ValidationError);
}

TEST(NspGeneric, Examples)
{
    EXPECT_TRUE(nsp_check_generic(Mat::Identity(3, 3), {0, 1}).satisfies);
    EXPECT_EQ(nsp_check_generic(Mat::Identity(3, 3), {0}).method, NspMethod::trivial_kernel);
    const Mat cp0 = build_structured_matrices(chain_graph(3), 1).cp0;
    const auto ok = nsp_check_generic(cp0, {0});
    EXPECT_TRUE(ok.satisfies);
    EXPECT_TRUE(ok.proven);
    EXPECT_EQ(ok.method, NspMethod::kernel_dim_1_exact);
    const auto bad = nsp_check_generic(cp0, {0, 1});
    EXPECT_FALSE(bad.satisfies);
    ASSERT_TRUE(bad.witness.has_value());
    const Vec w = *bad.witness;
    EXPECT_NEAR(std::abs(w(0)), std::abs(w(1)), 1e-12);
    EXPECT_NEAR(std::abs(w(1)), std::abs(w(2)), 1e-12);
    EXPECT_THROW(nsp_check_generic(cp0, {3}), ValidationError);
}

TEST(NspGeneric, FalsifierIsLabelled)
{
    const Mat cp0 = build_structured_matrices(chain_graph(5), 2).cp0;
    const auto v = nsp_check_generic(cp0, fault_support_sets({1, 2}, make_plan(2, 5)));
    EXPECT_TRUE(v.satisfies);
    EXPECT_FALSE(v.proven);
    EXPECT_EQ(v.method, NspMethod::sampled_falsifier);
    EXPECT_EQ(to_string(v.method).find("sampled"), 0u);
}

TEST(NspCheckers, AgreeOnSmallInstances)
{
    const auto t = checks::nsp_agreement(6, 2);
    EXPECT_TRUE(t.ok()) << t.failures << " failures, first: " << t.first_failure;
}

TEST(NspRoundTrip, SmallInstances)
{
    const auto t = checks::nsp_round_trip(4, 2, 5, 3);
    EXPECT_TRUE(t.ok()) << t.failures << " failures, first: " << t.first_failure;
}

TEST(RecoveryLimit, Examples)
{
    std::vector<FaultEntry> e;
    for (NodeId i : {2, 4, 6, 9}) e.push_back({i, 100, 300, UniformFault{-10, 10, {2}}});
    const auto r = recovery_limit_holds(FaultSchedule(e, 1), 9, 4, 351);
    EXPECT_TRUE(r.all);
    EXPECT_EQ(r.per_step.size(), 351u);

    std::vector<FaultEntry> five;
    for (NodeId i = 1; i <= 5; ++i) five.push_back({i, 100, 300, UniformFault{-10, 10, {2}}});
    const auto r5 = recovery_limit_holds(FaultSchedule(five, 1), 9, 4, 351);
    EXPECT_FALSE(r5.all);
    EXPECT_TRUE(r5.per_step[99]);
    EXPECT_FALSE(r5.per_step[100]);
    EXPECT_FALSE(r5.per_step[300]);
    EXPECT_TRUE(r5.per_step[301]);

    EXPECT_TRUE(recovery_limit_holds(FaultSchedule{}, 3, 1, 10).all);
}

TEST(FaultBound, Examples)
{
    EXPECT_DOUBLE_EQ(fault_error_bound(9, 4, 1.0, 1.0).fault_bound, 10.0);
    EXPECT_DOUBLE_EQ(fault_error_bound(3, 0, 1.0, 1.0).fault_bound, 2.0);
    EXPECT_EQ(fault_error_bound(5, 2, 7.0, 0.0).fault_bound, 0.0);
    EXPECT_DOUBLE_EQ(fault_error_bound(3, 1, 3.0, 1.0).growth_factor, 15.0);
    EXPECT_DOUBLE_EQ(fault_error_bound(3, 1, Mat::Identity(3, 3), 0.5).fault_bound, 6.0);
    EXPECT_THROW(fault_error_bound(4, 2, 1.0, 1.0), UndefinedBoundError);
    EXPECT_THROW(fault_error_bound(4, 1, 1.0, -1.0), ValidationError);
}

TEST(FaultBound, IncreasingInFaultCount)
{
    for (int M = 1; M <= 40; ++M) {
        double prev = -1;
        for (int a = 0; 2 * a < M; ++a) {
            const double b = fault_error_bound(M, a, 1.0, 1.0).fault_bound;
            EXPECT_GT(b, prev) << "M=" << M << " a=" << a;
            prev = b;
        }
    }
}

TEST(FaultBound, DominatesObservedError)
{
    const NetworkPlant chain(chain_graph(3), integrator(1));
    const NetworkPlant grid(grid_graph(2, 2), double_integrator(0.05));
    for (double d : {0.01, 1.0}) {
        for (const NetworkPlant* p : {&chain, &grid}) {
            const auto t = checks::fault_bound_trials(*p, d, 40, 9);
            EXPECT_TRUE(t.ok()) << t.failures << " failures, first: " << t.first_failure;
        }
    }
}

TEST(Recursion, Examples)
{
    const auto all_active = error_recursion(3, 0.7, {{1, 0}, {1, 1}, {1, 0}}, 3.0, 1e-8);
    EXPECT_EQ(all_active, (std::vector<double>{0.7, 1e-8, 1e-8, 1e-8}));
    EXPECT_DOUBLE_EQ(error_recursion(3, 1.0, {{0, 1}}, 3.0, 1e-8).back(), 15.0);
    EXPECT_DOUBLE_EQ(error_recursion(3, 1.0, {{0, 1}}, 3.0, 1e-8, 0.1).back(), 15.1);
    const auto mixed = error_recursion(3, 1.0, {{0, 0}, {1, 1}, {0, 1}}, 1.0, 0.5);
    EXPECT_DOUBLE_EQ(mixed[1], 3.0);
    EXPECT_DOUBLE_EQ(mixed[2], 0.5);
    EXPECT_DOUBLE_EQ(mixed[3], 2.5);
    try {
        error_recursion(4, 1.0, {{0, 1}, {0, 2}}, 1.0, 0.1);
        FAIL();
    } catch (const UndefinedBoundError& e) {
        EXPECT_NE(std::string(e.what()).find("step 2"), std::string::npos) << e.what();
    }
    EXPECT_THROW(error_recursion(3, -1.0, {}, 1.0, 0.1), ValidationError);
}

TEST(Counterexample, Examples)
{
    const auto c2 = counterexample_fault(2, 1, {1});
    EXPECT_EQ(c2.kernel, Vec::Ones(2));
    EXPECT_EQ(c2.fault, (Vec(2) << -1, 0).finished());
    EXPECT_EQ(c2.competing, (Vec(2) << 0, 1).finished());
    EXPECT_EQ(c2.fault.lpNorm<1>(), c2.competing.lpNorm<1>());

    const auto c4 = counterexample_fault(4, 1, {1, 2});
    EXPECT_EQ(c4.fault, (Vec(4) << -1, -1, 0, 0).finished());
    EXPECT_EQ(c4.competing, (Vec(4) << 0, 0, 1, 1).finished());

    EXPECT_THROW(counterexample_fault(3, 1, {1}), ValidationError);
}

TEST(Counterexample, AllSmallNetworks)
{
    for (int M = 2; M <= 5; ++M) {
        const auto t = checks::necessity(M);
        EXPECT_TRUE(t.ok()) << t.failures << " failures, first: " << t.first_failure;
    }
}
