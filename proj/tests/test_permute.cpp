#include <gtest/gtest.h>

#include <random>

#include "l1est/permute.hpp"

using namespace l1est;

TEST(Permute, WorkedExample)
{
    const auto plan = make_plan(2, 3);
    const Vec z = (Vec(6) << 11, 12, 21, 22, 31, 32).finished();
    EXPECT_EQ(to_coordinate_major(z, plan), (Vec(6) << 11, 21, 31, 12, 22, 32).finished());
}

TEST(Permute, ScalarIsIdentity)
{
    const auto plan = make_plan(1, 5);
    const Vec z = Vec::LinSpaced(5, 1, 5);
    EXPECT_EQ(to_coordinate_major(z, plan), z);
}

TEST(Permute, RoundTrip)
{
    std::mt19937_64 rng(1);
    std::normal_distribution<double> nd;
    for (int n = 1; n <= 4; ++n) {
        for (int M = 1; M <= 6; ++M) {
            const auto plan = make_plan(n, M);
            Vec v(n * M);
            for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = nd(rng);
            EXPECT_EQ(to_node_major(to_coordinate_major(v, plan), plan), v);
            EXPECT_EQ(to_coordinate_major(to_node_major(v, plan), plan), v);
            for (int p = 0; p < n * M; ++p) EXPECT_EQ(plan.forward[plan.inverse[p]], p);
        }
    }
}

TEST(Permute, LengthMismatch)
{
    EXPECT_THROW(to_coordinate_major(Vec::Zero(5), make_plan(2, 3)), ValidationError);
    EXPECT_THROW(to_node_major(Vec::Zero(7), make_plan(2, 3)), ValidationError);
    EXPECT_THROW(make_plan(0, 3), ValidationError);
}

TEST(Permute, IndexSets)
{
    const auto plan = make_plan(2, 3);
    // T_1 = {1, 3, 5}, T~_1 = {1, 4} in 1-based terms
    EXPECT_EQ(plan.coord_sets[0], (std::vector<int>{0, 2, 4}));
    EXPECT_EQ(plan.node_sets[0], (std::vector<int>{0, 3}));
}

TEST(FaultSupport, Examples)
{
    const auto plan = make_plan(2, 3);
    EXPECT_EQ(fault_support_sets({1}, plan), (std::vector<int>{0, 3}));
    EXPECT_TRUE(fault_support_sets({}, plan).empty());
    EXPECT_EQ(fault_support_sets({1, 2, 3}, plan), (std::vector<int>{0, 1, 2, 3, 4, 5}));
    EXPECT_THROW(fault_support_sets({4}, plan), ValidationError);
}

TEST(FaultSupport, SparsityCorrespondence)
{
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(0.5, 2.0);
    for (int n = 1; n <= 3; ++n) {
        for (int M = 1; M <= 6; ++M) {
            const auto plan = make_plan(n, M);
            for (unsigned mask = 0; mask < (1u << M); ++mask) {
                std::vector<NodeId> faulty;
                Vec f = Vec::Zero(n * M);
                for (int i = 0; i < M; ++i) {
                    if (!(mask & (1u << i))) continue;
                    faulty.push_back(i + 1);
                    for (int c = 0; c < n; ++c) f(i * n + c) = u(rng);
                }
                const Vec fp = to_coordinate_major(f, plan);
                const auto support = fault_support_sets(faulty, plan);
                std::vector<int> nonzero;
                for (int p = 0; p < n * M; ++p) {
                    if (fp(p) != 0.0) nonzero.push_back(p);
                }
                EXPECT_EQ(nonzero, support);
            }
        }
    }
}

TEST(Structured, TwoChainPlanar)
{
    const auto s = build_structured_matrices(chain_graph(2), 2);
    Mat cp0(2, 4), cp1(4, 4);
    cp0 << 1, -1, 0, 0, 0, 0, 1, -1;
    cp1 << 1, 0, 0, 0, 1, -1, 0, 0, 0, 0, 1, 0, 0, 0, 1, -1;
    EXPECT_EQ(s.cp0, cp0);
    EXPECT_EQ(s.cp1, cp1);
}

TEST(Structured, ScalarIsIncidenceTranspose)
{
    const Graph g = grid_graph(2, 3);
    const auto s = build_structured_matrices(g, 1);
    EXPECT_EQ(s.cp0, Mat(incidence_matrix(g).transpose()));
}

TEST(Structured, ThreeChainActiveFullRank)
{
    const auto s = build_structured_matrices(chain_graph(3), 1);
    Mat expect(3, 3);
    expect << 1, 0, 0, 1, -1, 0, 0, 1, -1;
    EXPECT_EQ(s.cp1, expect);
    EXPECT_EQ(Eigen::FullPivLU<Mat>(s.cp1).rank(), 3);
}

TEST(Structured, RandomGraphsPermuteExactly)
{
    std::mt19937_64 rng(21);
    for (int trial = 0; trial < 80; ++trial) {
        std::uniform_int_distribution<int> mdist(1, 8), ndist(1, 3);
        const int M = mdist(rng), n = ndist(rng);
        std::vector<std::pair<NodeId, NodeId>> e;
        for (int i = 2; i <= M; ++i) {
            std::uniform_int_distribution<int> pick(1, i - 1);
            // random orientation too
            if (rng() & 1) e.emplace_back(pick(rng), i); else e.emplace_back(i, pick(rng));
        }
        for (int i = 1; i <= M; ++i) {
            for (int j = i + 2; j <= M; ++j) {
                if (rng() % 5 == 0) e.emplace_back(i, j);
            }
        }
        std::shuffle(e.begin(), e.end(), rng);
        Graph g;
        try {
            g = build_graph(M, e);
        } catch (const ValidationError&) {
            continue; // duplicate pair drawn
        }
        const auto s = build_structured_matrices(g, n);
        const auto out = build_output_matrices(g, n);
        const Mat pcol = permutation_matrix(s.plan.forward);
        EXPECT_EQ(permutation_matrix(s.row_perm0) * out.c0 * pcol.transpose(), s.cp0);
        EXPECT_EQ(permutation_matrix(s.row_perm1) * out.c1 * pcol.transpose(), s.cp1);
        const Mat d = incidence_matrix(g);
        EXPECT_EQ(s.cp0.topLeftCorner(d.cols(), M), Mat(d.transpose()));
    }
}

TEST(Structured, PlanJson)
{
    const auto j = to_json(make_plan(2, 3));
    EXPECT_EQ(j["index_base"], 0);
    EXPECT_EQ(j["forward"].size(), 6u);
}
