// Acceptance runner: one PASS/FAIL line per criterion, nonzero exit on any
// failure. Sizes and tolerances are the full ones; the unit suite runs
// smaller versions of the same checks.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "checks.hpp"
#include "l1est/dbp.hpp"
#include "l1est/runner.hpp"
#include "l1est/scenario.hpp"

using namespace l1est;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string scenario_path(const std::string& name) { return std::string(L1EST_SOURCE_DIR) + "/scenarios/" + name; }

std::string sci(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

std::string tally_text(const checks::Tally& t)
{
    std::string s = std::to_string(t.trials) + " checks, " + std::to_string(t.failures) + " failed, worst excess "
                    + sci(t.worst);
    if (t.failures) s += ", first failure: " + t.first_failure;
    return s;
}

Outcome exact_recovery()
{
    const NetworkPlant chain3(chain_graph(3), integrator(1));
    const NetworkPlant chain5(chain_graph(5), integrator(1));
    const NetworkPlant grid(grid_graph(3, 3), integrator(2));
    checks::Tally all;
    std::string text;
    for (auto [name, p] : {std::pair{"chain3", &chain3}, {"chain5", &chain5}, {"grid3x3 n=2", &grid}}) {
        const auto t = checks::exact_recovery(*p, 20, 101);
        text += std::string(name) + ": " + tally_text(t) + "; ";
        all.trials += t.trials;
        all.failures += t.failures;
    }
    return {all.ok(), text};
}

Outcome necessity()
{
    bool ok = true;
    std::string text;
    for (int M = 2; M <= 5; ++M) {
        const auto t = checks::necessity(M);
        ok = ok && t.ok();
        text += "M=" + std::to_string(M) + ": " + tally_text(t) + "; ";
    }
    return {ok, text};
}

Outcome fault_bound()
{
    const NetworkPlant chain3(chain_graph(3), integrator(1));
    const NetworkPlant chain5(chain_graph(5), integrator(1));
    const NetworkPlant grid(grid_graph(3, 3), double_integrator(0.05));
    bool ok = true;
    int trials = 0, failures = 0;
    double worst = -1e300;
    std::uint64_t seed = 300;
    for (const NetworkPlant* p : {&chain3, &chain5, &grid}) {
        for (double d : {0.01, 0.1, 1.0}) {
            const auto t = checks::fault_bound_trials(*p, d, 200, ++seed);
            ok = ok && t.ok();
            trials += t.trials;
            failures += t.failures;
            worst = std::max(worst, t.worst);
        }
    }
    return {ok, std::to_string(trials) + " trials over M in {3,5,9}, " + std::to_string(failures)
                    + " above the bound, worst (error - bound) " + sci(worst)};
}

Outcome distributed_agreement()
{
    const Scenario s = load_scenario(scenario_path("fig1_left.yaml"));
    const NetworkPlant p = s.plant();
    const Vec x0 = s.initial(p);
    auto run = [&](int l_max) {
        RoundConfig cfg = s.rounds;
        cfg.zeta = 1.0;
        cfg.l_max = l_max;
        return run_distributed_trajectory(p, s.faults, s.leader, cfg, s.horizon, x0);
    };
    const auto r500 = run(500), r50 = run(50);
    Estimator central(p, EstimatorKind::l1);
    central.seed_prior(x0);
    double dev = 0.0, dis500 = 0.0, dis50 = 0.0;
    for (std::size_t k = 0; k < r500.size(); ++k) {
        const auto e = central.step(p.measure(r500[k].x, r500[k].a1), Vec::Zero(p.agents() * p.m()), r500[k].a1);
        for (const auto& node : r500[k].round.nodes) dev = std::max(dev, (node.chi - e.x).lpNorm<Eigen::Infinity>());
        dis500 = std::max(dis500, r500[k].round.disagreement);
        dis50 = std::max(dis50, r50[k].round.disagreement);
    }
    return {dev <= 1e-3 && dis500 <= dis50, "max |chi_i - x_central|_inf " + sci(dev) + " (<= 1e-3); disagreement L=500 "
                                                + sci(dis500) + " vs L=50 " + sci(dis50)};
}

Outcome chain_thresholds()
{
    const auto left = run_scenario(load_scenario(scenario_path("fig1_left.yaml")));
    const auto right = run_scenario(load_scenario(scenario_path("fig1_right.yaml")));
    double l1_max = 0.0;
    for (const auto& r : left.traces[0].rows) l1_max = std::max(l1_max, r.err_x_l2);
    const auto& kal = left.traces[1].rows;
    int first = -1;
    double kal_peak = 0.0, kal_after = std::numeric_limits<double>::infinity();
    for (const auto& r : kal) {
        if (r.k < 30) continue;
        kal_peak = std::max(kal_peak, r.err_x_l2);
        if (first < 0 && r.err_x_l2 > 0.5) first = r.k;
        if (first >= 0) kal_after = std::min(kal_after, r.err_x_l2);
    }
    const double right_f = right.traces[0].rows[30].err_f_l1;
    const bool ok = l1_max <= 1e-4 && first >= 0 && kal_after > 1e-2 && right_f > 0.1;
    return {ok, "fig1_left l1 max state error " + sci(l1_max) + " (<= 1e-4); kalman peak after k=30 " + sci(kal_peak)
                    + " (> 0.5), min after first exceedance " + sci(kal_after) + " (> 1e-2); fig1_right l1 fault error "
                    + "at k=30 " + sci(right_f) + " (> 0.1)"};
}

Outcome platoon()
{
    const Scenario s = load_scenario(scenario_path("platoon9.yaml"));
    const auto r = run_scenario(s, {true});
    std::map<int, double> node1;
    for (const auto& d : r.distributed) {
        if (d.node == 1) node1[d.k] = d.err_x_l2;
    }
    int up = 0, pairs = 0;
    for (int k = 150; k < 300; ++k) {
        ++pairs;
        up += node1.at(k + 1) > node1.at(k);
    }
    const double frac = static_cast<double>(up) / pairs;
    const double drop = node1.at(300) / node1.at(305);
    const auto sweep = sweep_fault_count(s, {4, 5}, s.seed);
    const double ratio = sweep[1].cumulative / sweep[0].cumulative;
    const bool ok = frac >= 0.8 && drop >= 100 && ratio >= 10;
    return {ok, "node 1 distributed error increasing on " + sci(frac) + " of pairs in [150,300] (>= 0.8); drop k=300->305 x"
                    + sci(drop) + " (>= 100); sweep cumulative M_f=4 " + sci(sweep[0].cumulative) + ", M_f=5 "
                    + sci(sweep[1].cumulative) + ", ratio " + sci(ratio) + " (>= 10)"};
}

Outcome nsp()
{
    const auto agree = checks::nsp_agreement(9, 2);
    const auto trip = checks::nsp_round_trip(6, 2, 5, 707);
    return {agree.ok() && trip.ok(), "agreement (M <= 9, n <= 2): " + tally_text(agree)
                                         + "; round trip (M <= 6, n <= 2, chain and star): " + tally_text(trip)};
}

Outcome solver_oracles()
{
    const auto lp = checks::lp_oracle_agreement(100, 2024);
    const auto grid = checks::node_grid_agreement(50, 99);
    return {lp.ok() && grid.ok(), "LP oracle, 100 instances: " + tally_text(lp) + "; grid search, 50 instances: "
                                      + tally_text(grid)};
}

Outcome noise()
{
    bool ok = true;
    std::string text;
    for (double w : {0.01, 0.05}) {
        Scenario s = load_scenario(scenario_path("noise_chain.yaml"));
        s.horizon = 100;
        s.leader = LeaderSchedule::always(1);
        s.faults = FaultSchedule{};
        s.estimators = {EstimatorKind::l1_denoise, EstimatorKind::l1};
        s.w_max = w;
        s.noise_w_max = w;
        const auto p = s.plant();
        const double limit = 10.0 * w * std::sqrt(static_cast<double>(p.c(1).rows()));
        const auto r = run_scenario(s);
        text += "w_max=" + sci(w) + " (limit " + sci(limit) + "): max state error";
        for (const auto& t : r.traces) {
            double worst = 0.0;
            for (const auto& row : t.rows) worst = std::max(worst, row.err_x_l2);
            ok = ok && t.rows.size() == 100 && worst <= limit;
            text += " " + to_string(t.kind) + " " + sci(worst) + ",";
        }

        // an exact prior already lies in the noise ball, so also start the
        // denoising estimator from a perturbed one
        std::mt19937_64 rng(s.seed + 1);
        Vec x = s.initial(p);
        Vec delta = checks::gaussian(rng, p.state_size());
        delta /= delta.lpNorm<1>();
        Estimator est(p, EstimatorKind::l1_denoise, s.solver, s.kalman, w);
        est.seed_prior(x + delta);
        Vec u = Vec::Zero(p.agents() * p.m());
        double worst = 0.0;
        for (int k = 0; k < s.horizon; ++k) {
            if (k > 0) x = p.step_truth(x, u, Vec::Zero(p.state_size()));
            const auto e = est.step(p.measure(x, 1, bounded_l2_noise(rng, p.c(1).rows(), w)), u, 1);
            worst = std::max(worst, (e.x - x).norm());
            u = p.control(x);
        }
        ok = ok && worst <= limit;
        text += " l1_denoise from a prior off by 1 in l1 " + sci(worst) + "; ";
    }
    return {ok, text};
}

} // namespace

int main()
{
    struct Criterion {
        std::string name;
        std::function<Outcome()> run;
        double max_seconds; // 0: no cap
    };
    const std::vector<Criterion> criteria{
        {"exact recovery below half the agents faulty", exact_recovery, 120},
        {"counterexamples at or above half", necessity, 0},
        {"fault error bound under prior perturbation", fault_bound, 120},
        {"distributed estimate agrees with centralized", distributed_agreement, 60},
        {"three-agent chain thresholds", chain_thresholds, 0},
        {"platoon growth, recovery and sweep ratio", platoon, 300},
        {"null space property checkers", nsp, 120},
        {"solver against LP and grid oracles", solver_oracles, 0},
        {"bounded-noise estimation error", noise, 0},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const auto& c = criteria[i];
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::string timing = sci(secs) + "s";
        if (c.max_seconds > 0) {
            timing += " of " + sci(c.max_seconds) + "s";
            if (secs > c.max_seconds) o.pass = false;
        }
        failed += !o.pass;
        std::printf("%s criterion %zu: %s [%s] %s\n", o.pass ? "PASS" : "FAIL", i + 1, c.name.c_str(), timing.c_str(),
                    o.detail.c_str());
        std::fflush(stdout);
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
    return failed ? 1 : 0;
}
