// Command-line front end: run scenarios, sweep fault counts, plot traces.
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "l1est/runner.hpp"
#include "l1est/scenario.hpp"
#include "l1est/svg.hpp"

namespace fs = std::filesystem;
using namespace l1est;

namespace {

void write_file(const fs::path& p, const std::string& content)
{
    std::ofstream os(p, std::ios::binary);
    if (!os) throw RuntimeError("cannot write '" + p.string() + "'");
    os << content;
}

fs::path output_dir(const Scenario& s, const std::string& flag)
{
    fs::path dir = !flag.empty() ? fs::path(flag) : !s.output_dir.empty() ? fs::path(s.output_dir) : fs::path("out") / s.name;
    fs::create_directories(dir);
    return dir;
}

struct RunArgs {
    std::string scenario;
    std::vector<std::string> estimators;
    bool distributed = false;
    std::optional<double> zeta;
    std::optional<int> lmax;
    std::optional<double> detect_eps;
    std::optional<std::uint64_t> seed;
    std::string out;
    bool no_plots = false;
};

int cmd_run(const RunArgs& a)
{
    Scenario s = load_scenario(a.scenario);
    if (!a.estimators.empty()) {
        s.estimators.clear();
        for (const auto& e : a.estimators) s.estimators.push_back(parse_estimator_kind(e));
    }
    if (a.zeta) s.rounds.zeta = *a.zeta;
    if (a.lmax) s.rounds.l_max = *a.lmax;
    if (a.detect_eps) s.detect_eps = *a.detect_eps;
    if (a.seed) {
        s.seed = *a.seed;
        s.faults.set_seed(*a.seed);
    }
    s.rounds.validate();
    const RunResult r = run_scenario(s, {a.distributed});
    const fs::path dir = output_dir(s, a.out);
    for (const auto& t : r.traces) {
        std::ostringstream os;
        write_trace_csv(os, t);
        write_file(dir / ("trace_" + to_string(t.kind) + ".csv"), os.str());
    }
    if (!r.distributed.empty()) {
        std::ostringstream os;
        write_distributed_csv(os, r.distributed);
        write_file(dir / "trace_distributed.csv", os.str());
    }
    write_file(dir / "summary.json", r.summary.dump(2) + "\n");
    if (!a.no_plots) {
        for (const auto& c : svg::run_charts(s.name, r)) write_file(dir / c.file, c.content);
    }
    std::cout << r.summary.dump(2) << "\n";
    std::cout << "wrote " << dir.string() << "\n";
    return 0;
}

int cmd_sweep(const std::string& scenario, const std::string& mf, std::uint64_t seed, bool distributed,
              const std::string& out)
{
    const Scenario s = load_scenario(scenario);
    const auto rows = sweep_fault_count(s, parse_int_range(mf), seed, distributed);
    const fs::path dir = output_dir(s, out);
    std::ostringstream os;
    write_sweep_csv(os, rows);
    write_file(dir / "sweep.csv", os.str());
    write_file(dir / "sweep.svg", svg::sweep_chart(rows));
    std::cout << os.str() << "wrote " << dir.string() << "\n";
    return 0;
}

int cmd_plot(const std::string& trace, std::string out)
{
    std::ifstream in(trace);
    if (!in) throw ValidationError("cannot open trace '" + trace + "'");
    const CsvTable t = read_csv(in);
    if (out.empty()) out = fs::path(trace).replace_extension(".svg").string();
    write_file(out, svg::csv_error_chart(fs::path(trace).stem().string(), t));
    std::cout << "wrote " << out << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"l1 state and fault estimation for networked agents"};
    app.require_subcommand(1);

    RunArgs ra;
    auto* run = app.add_subcommand("run", "simulate a scenario and write traces, summary and plots");
    run->add_option("scenario", ra.scenario, "scenario YAML file")->required();
    run->add_option("--estimator", ra.estimators, "l1, l1_denoise or kalman (repeatable)");
    run->add_flag("--distributed", ra.distributed, "also run the distributed estimator");
    run->add_option("--zeta", ra.zeta, "consensus penalty");
    run->add_option("--lmax", ra.lmax, "round cap");
    run->add_option("--detect-eps", ra.detect_eps, "fault flag threshold");
    run->add_option("--seed", ra.seed, "override the scenario seed");
    run->add_option("--out", ra.out, "output directory");
    run->add_flag("--no-plots", ra.no_plots, "skip SVG output");

    std::string sweep_scenario = "scenarios/platoon9.yaml", mf = "1..6", sweep_out;
    std::uint64_t sweep_seed = 7;
    bool sweep_distributed = false;
    auto* sweep = app.add_subcommand("sweep", "cumulative error against the number of faulty agents");
    sweep->add_option("scenario", sweep_scenario, "base scenario")->capture_default_str();
    sweep->add_option("--mf", mf, "fault counts, e.g. 1..6 or 1,4,5")->capture_default_str();
    sweep->add_option("--seed", sweep_seed, "fault seed")->capture_default_str();
    sweep->add_option("--out", sweep_out, "output directory");
    sweep->add_flag("--distributed", sweep_distributed, "score node 1 of the distributed estimator");

    std::string trace, plot_out;
    auto* plot = app.add_subcommand("plot", "render an error-vs-k SVG from a trace CSV");
    plot->add_option("trace", trace, "trace CSV")->required();
    plot->add_option("--out", plot_out, "SVG path (default: next to the CSV)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (*run) return cmd_run(ra);
        if (*sweep) return cmd_sweep(sweep_scenario, mf, sweep_seed, sweep_distributed, sweep_out);
        if (*plot) return cmd_plot(trace, plot_out);
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
