#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "l1est/runner.hpp"
#include "l1est/scenario.hpp"
#include "l1est/svg.hpp"

using namespace l1est;

namespace {

std::string scenario_path(const std::string& name) { return std::string(L1EST_SOURCE_DIR) + "/scenarios/" + name; }

const char* tiny = R"(name: tiny
nodes: 2
edges: [[1, 2]]
horizon: 1
initial_state: [1, 2]
estimators: [l1, kalman]
)";

std::string csv_of(const EstimatorTrace& t)
{
    std::ostringstream os;
    write_trace_csv(os, t);
    return os.str();
}

} // namespace

TEST(Scenario, BundledFilesLoad)
{
    for (const char* f : {"fig1_left.yaml", "fig1_right.yaml", "platoon9.yaml", "noise_chain.yaml"}) {
        EXPECT_NO_THROW(load_scenario(scenario_path(f))) << f;
    }
    const auto fig = load_scenario(scenario_path("fig1_left.yaml"));
    EXPECT_EQ(fig.nodes, 3);
    EXPECT_EQ(fig.horizon, 40);
    EXPECT_EQ(fig.leader.mode(19), 1);
    EXPECT_EQ(fig.leader.mode(20), 0);
    EXPECT_EQ(fig.estimators, (std::vector<EstimatorKind>{EstimatorKind::l1, EstimatorKind::kalman}));
    EXPECT_EQ(fig.initial(fig.plant()), (Vec(3) << 2, 4, 6).finished());

    const auto pl = load_scenario(scenario_path("platoon9.yaml"));
    EXPECT_EQ(pl.graph().edge_count(), 12);
    EXPECT_EQ(pl.dynamics.preset, "double_integrator");
    EXPECT_TRUE(pl.distributed);
    EXPECT_TRUE(pl.initial_formation);
    EXPECT_EQ(pl.faults.sample(200, 9, 4).faulty, (std::vector<NodeId>{2, 4, 6, 9}));
    EXPECT_EQ(pl.sweep.coords, std::vector<int>{2});
    const Vec x0 = pl.initial(pl.plant());
    EXPECT_EQ(x0(4), -2.0);
    EXPECT_EQ(x0(32), -16.0);
}

TEST(Scenario, MissingNodesReportsLine)
{
    try {
        parse_scenario("edges: [[1, 2]]\nhorizon: 3\n", "bad.yaml");
        FAIL();
    } catch (const ValidationError& e) {
        const std::string msg = e.what();
        EXPECT_NE(msg.find("bad.yaml"), std::string::npos) << msg;
        EXPECT_NE(msg.find("'nodes'"), std::string::npos) << msg;
        EXPECT_NE(msg.find("line "), std::string::npos) << msg;
    }
}

TEST(Scenario, RejectsBadFields)
{
    EXPECT_THROW(parse_scenario("nodes: 2\nedges: [[1, 3]]\nhorizon: 3\n"), ValidationError);
    EXPECT_THROW(parse_scenario("nodes: 2\nedges: [[1, 2]]\nhorizon: 0\n"), ValidationError);
    EXPECT_THROW(parse_scenario("nodes: 2\nedges: [[1, 2]]\nhorizon: 3\nestimators: [lasso]\n"), ValidationError);
    EXPECT_THROW(parse_scenario("nodes: 2\nedges: [[1, 2]]\nhorizon: 3\ninitial_state: [1]\n"), ValidationError);
    EXPECT_THROW(parse_scenario("nodes: 2\nedges: [[1, 2]]\nhorizon: 3\n"
                                "faults:\n  - {node: 5, k_start: 0, k_end: 1, vector: [1]}\n"),
                 ValidationError);
    EXPECT_THROW(parse_scenario("nodes: 2\nedges: [[1, 2]]\nhorizon: 3\ndistributed: {zeta: 0}\n"), ValidationError);
    EXPECT_THROW(parse_scenario("nodes: [2\n"), ValidationError);
    EXPECT_THROW(load_scenario("/nonexistent/x.yaml"), ValidationError);
}

TEST(Runner, SingleStepRun)
{
    const auto r = run_scenario(parse_scenario(tiny));
    ASSERT_EQ(r.traces.size(), 2u);
    for (const auto& t : r.traces) {
        ASSERT_EQ(t.rows.size(), 1u);
        EXPECT_EQ(t.rows[0].k, 0);
        EXPECT_LT(t.rows[0].err_x_l2, 1e-9);
    }
    EXPECT_EQ(r.summary["estimators"].size(), 2u);
}

TEST(Runner, CsvHeaderAndReproducibility)
{
    const auto s = parse_scenario(tiny);
    const std::string a = csv_of(run_scenario(s).traces[0]);
    EXPECT_EQ(a.substr(0, a.find('\n')),
              "k,a1,faulty_count,x_0,x_1,xhat_0,xhat_1,f_0,f_1,fhat_0,fhat_1,"
              "err_x_l2,err_x_l1,err_f_l1,d_bound,fault_bound,iterations,converged,nonunique");
    const auto fig = load_scenario(scenario_path("fig1_left.yaml"));
    EXPECT_EQ(csv_of(run_scenario(fig).traces[0]), csv_of(run_scenario(fig).traces[0]));
    const auto pl = load_scenario(scenario_path("fig1_right.yaml"));
    EXPECT_EQ(csv_of(run_scenario(pl).traces[1]), csv_of(run_scenario(pl).traces[1]));
}

TEST(Runner, ChainScenarioErrors)
{
    const auto r = run_scenario(load_scenario(scenario_path("fig1_left.yaml")));
    double max_f = 0;
    for (const auto& row : r.traces[0].rows) max_f = std::max(max_f, row.err_f_l1);
    EXPECT_LE(max_f, 1e-5);
    EXPECT_GE(r.traces[1].rows[30].err_x_l2, 1.0);
}

TEST(Runner, CsvRoundTrip)
{
    const auto r = run_scenario(load_scenario(scenario_path("fig1_left.yaml")));
    std::istringstream in(csv_of(r.traces[0]));
    const CsvTable t = read_csv(in);
    ASSERT_EQ(t.rows.size(), 40u);
    const int col = t.column("err_f_l1");
    ASSERT_GE(col, 0);
    EXPECT_NEAR(t.rows[30][col], r.traces[0].rows[30].err_f_l1, 1e-11);
    EXPECT_EQ(t.column("nope"), -1);

    std::istringstream ragged("a,b\n1,2\n3\n");
    EXPECT_THROW(read_csv(ragged), ValidationError);
    std::istringstream empty("");
    EXPECT_THROW(read_csv(empty), ValidationError);
    std::istringstream blanks("a,b\n1,\n");
    const auto tb = read_csv(blanks);
    EXPECT_TRUE(std::isnan(tb.rows[0][1]));
}

TEST(Runner, EmptyOutputsAreErrors)
{
    std::ostringstream os;
    EXPECT_THROW(write_trace_csv(os, EstimatorTrace{}), ValidationError);
    EXPECT_THROW(write_distributed_csv(os, {}), ValidationError);
    EXPECT_THROW(svg::run_charts("x", RunResult{}), ValidationError);
}

TEST(Runner, ChartsAreSvg)
{
    const auto r = run_scenario(load_scenario(scenario_path("fig1_left.yaml")));
    const auto charts = svg::run_charts("fig1_left", r);
    ASSERT_FALSE(charts.empty());
    for (const auto& c : charts) {
        EXPECT_EQ(c.content.rfind("<svg", 0), 0u) << c.file;
        EXPECT_NE(c.content.find("</svg>"), std::string::npos) << c.file;
    }
}

TEST(Runner, IntRange)
{
    EXPECT_EQ(parse_int_range("1..4"), (std::vector<int>{1, 2, 3, 4}));
    EXPECT_EQ(parse_int_range("1,4,5"), (std::vector<int>{1, 4, 5}));
    EXPECT_THROW(parse_int_range("4..1"), ValidationError);
    EXPECT_THROW(parse_int_range("x"), ValidationError);
    EXPECT_THROW(parse_int_range(""), ValidationError);
}

TEST(Runner, SweepCellShape)
{
    const auto base = load_scenario(scenario_path("platoon9.yaml"));
    const auto cell = sweep_cell(base, 3, 11);
    EXPECT_EQ(cell.faults.sample(150, 9, 4).faulty, (std::vector<NodeId>{1, 2, 3}));
    EXPECT_TRUE(cell.faults.sample(99, 9, 4).faulty.empty());
    EXPECT_EQ(cell.estimators, std::vector<EstimatorKind>{EstimatorKind::l1});
    EXPECT_FALSE(cell.distributed);
    EXPECT_THROW(sweep_cell(base, 10, 1), ValidationError);
}
