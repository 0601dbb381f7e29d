#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <limits>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "l1est/analysis.hpp"
#include "l1est/dbp.hpp"
#include "l1est/error.hpp"
#include "l1est/estimators.hpp"
#include "l1est/scenario.hpp"

namespace l1est {

struct TraceRow {
    int k = 0;
    int a1 = 1;
    int faulty_count = 0;
    Vec x, xhat, f, fhat;
    double err_x_l2 = 0.0;
    double err_x_l1 = 0.0;
    double err_f_l1 = 0.0;
    double d_bound = std::numeric_limits<double>::quiet_NaN();     // NaN where undefined
    double fault_bound = std::numeric_limits<double>::quiet_NaN(); // NaN where undefined
    int iterations = 0;
    bool converged = true;
    bool nonunique = false;
};

struct EstimatorTrace {
    EstimatorKind kind = EstimatorKind::l1;
    std::vector<TraceRow> rows;
};

/// One row per (k, node) of the distributed run. fhat holds varsigma_i(k).
struct DistributedRow {
    int k = 0;
    NodeId node = 1;
    int a1 = 1;
    int faulty_count = 0;
    Vec x, xhat, f, fhat;
    double err_x_l2 = 0.0;
    double err_x_l1 = 0.0;
    double err_f_l1 = 0.0;
    double disagreement = 0.0;
    int rounds = 0;
    bool converged = true;
    std::vector<NodeId> flagged;
};

struct RunResult {
    std::vector<EstimatorTrace> traces;
    std::vector<DistributedRow> distributed;
    std::vector<int> leader_modes; // a1(k)
    nlohmann::json summary;
};

struct RunOptions {
    bool distributed = false;
};

namespace detail {

inline double nan() { return std::numeric_limits<double>::quiet_NaN(); }

/// d(k) and the fault bound per step. d(0) = d_bar on an active first step
/// and undefined otherwise; once |I_k| >= M/2 both stay undefined until
/// the next active step.
inline void fill_bounds(std::vector<TraceRow>& rows, int M, double eta_value, double d_bar, double v_max)
{
    double d_prev = nan();
    for (auto& r : rows) {
        const bool recoverable = 2 * r.faulty_count < M;
        if (recoverable && !std::isnan(d_prev)) {
            r.fault_bound = fault_error_bound(M, r.faulty_count, eta_value, d_prev).fault_bound;
        }
        if (r.a1) {
            r.d_bound = d_bar;
        } else if (recoverable && !std::isnan(d_prev)) {
            r.d_bound = fault_error_bound(M, r.faulty_count, eta_value, d_prev).growth_factor * d_prev + v_max;
        }
        d_prev = r.d_bound;
    }
}

inline nlohmann::json summarize(const EstimatorTrace& t)
{
    double max_x = 0, max_f = 0, cum = 0;
    int nonunique = 0, unconverged = 0;
    for (const auto& r : t.rows) {
        max_x = std::max(max_x, r.err_x_l2);
        max_f = std::max(max_f, r.err_f_l1);
        cum += r.err_x_l2;
        nonunique += r.nonunique;
        unconverged += !r.converged;
    }
    return {{"estimator", to_string(t.kind)},      {"steps", t.rows.size()},
            {"max_err_x_l2", max_x},               {"max_err_f_l1", max_f},
            {"cumulative_err_x_l2", cum},          {"nonunique_steps", nonunique},
            {"unconverged_steps", unconverged}};
}

} // namespace detail

/// Closed-loop simulation. Truth feedback uses the exact state unless the
/// scenario sets control_from_estimate, in which case the first estimator
/// (or, for distributed runs, each node's own estimate) drives the input.
inline RunResult run_scenario(const Scenario& s, const RunOptions& opt = {})
{
    const NetworkPlant plant = s.plant();
    const int M = plant.agents(), n = plant.n(), m = plant.m();
    const bool distributed = opt.distributed || s.distributed;
    if (s.estimators.empty() && !distributed) throw ValidationError("scenario selects no estimator");

    std::vector<Estimator> ests;
    RunResult out;
    for (EstimatorKind kind : s.estimators) {
        ests.emplace_back(plant, kind, s.solver, s.kalman, s.w_max);
        out.traces.push_back({kind, {}});
    }
    std::optional<DistributedEstimator> dist;
    if (distributed) dist.emplace(plant, s.rounds);

    std::mt19937_64 noise_rng(s.seed ^ 0x9e3779b97f4a7c15ULL);
    Vec x = s.initial(plant);
    Vec u = Vec::Zero(m * M);
    // Estimators know the nominal initial state; faults at k = 0 still
    // have to be found.
    for (auto& e : ests) e.seed_prior(x);
    if (dist) dist->seed_shift(x);

    for (int k = 0; k < s.horizon; ++k) {
        try {
            const FaultSample fs = s.faults.sample(k, M, n);
            if (k == 0) {
                x += fs.f;
            } else if (s.noise_v_max > 0) {
                x = plant.step_truth(x, u, fs.f, bounded_l1_noise(noise_rng, x.size(), s.noise_v_max));
            } else {
                x = plant.step_truth(x, u, fs.f);
            }
            const int a1 = s.leader.mode(k);
            out.leader_modes.push_back(a1);
            Vec y = plant.measure(x, a1);
            if (s.noise_w_max > 0) y += bounded_l2_noise(noise_rng, y.size(), s.noise_w_max);

            for (std::size_t e = 0; e < ests.size(); ++e) {
                const StepEstimate est = ests[e].step(y, u, a1);
                TraceRow r;
                r.k = k;
                r.a1 = a1;
                r.faulty_count = static_cast<int>(fs.faulty.size());
                r.x = x;
                r.xhat = est.x;
                r.f = fs.f;
                r.fhat = est.f;
                r.err_x_l2 = (x - est.x).norm();
                r.err_x_l1 = (x - est.x).lpNorm<1>();
                r.err_f_l1 = (fs.f - est.f).lpNorm<1>();
                r.iterations = est.diag.iterations;
                r.converged = est.diag.converged;
                r.nonunique = est.nonunique;
                out.traces[e].rows.push_back(std::move(r));
            }

            std::vector<Vec> node_chi;
            if (dist) {
                const RoundResult rr = dist->step(y, a1);
                for (NodeId i = 1; i <= M; ++i) {
                    const auto& ne = rr.nodes[i - 1];
                    DistributedRow d;
                    d.k = k;
                    d.node = i;
                    d.a1 = a1;
                    d.faulty_count = static_cast<int>(fs.faulty.size());
                    d.x = x;
                    d.xhat = ne.chi;
                    d.f = fs.f;
                    d.fhat = ne.varsigma;
                    d.err_x_l2 = (x - ne.chi).norm();
                    d.err_x_l1 = (x - ne.chi).lpNorm<1>();
                    d.err_f_l1 = (fs.f - ne.varsigma).lpNorm<1>();
                    d.disagreement = rr.disagreement;
                    d.rounds = rr.rounds;
                    d.converged = rr.converged;
                    d.flagged = detect_faults(ne.varsigma, n, s.detect_eps);
                    out.distributed.push_back(std::move(d));
                    node_chi.push_back(ne.chi);
                }
            }

            if (!s.control_from_estimate) {
                u = plant.control(x);
            } else if (dist) {
                for (NodeId i = 1; i <= M; ++i) {
                    u.segment((i - 1) * m, m) = plant.control(node_chi[i - 1]).segment((i - 1) * m, m);
                }
            } else {
                u = plant.control(ests.front().previous());
            }
        } catch (const ValidationError& e) {
            throw ValidationError("step " + std::to_string(k) + ": " + e.what());
        } catch (const RuntimeError& e) {
            throw RuntimeError("step " + std::to_string(k) + ": " + e.what());
        }
    }

    const double eta_value = eta(plant.a());
    for (auto& t : out.traces) detail::fill_bounds(t.rows, M, eta_value, s.d_bar, s.noise_v_max);

    auto& sum = out.summary;
    sum["scenario"] = s.name;
    sum["nodes"] = M;
    sum["state_size"] = plant.state_size();
    sum["horizon"] = s.horizon;
    sum["seed"] = s.seed;
    sum["eta"] = eta_value;
    sum["estimators"] = nlohmann::json::array();
    for (const auto& t : out.traces) sum["estimators"].push_back(detail::summarize(t));
    if (dist) {
        double max_dis = 0, max_err = 0;
        int unconverged = 0;
        for (const auto& d : out.distributed) {
            max_dis = std::max(max_dis, d.disagreement);
            max_err = std::max(max_err, d.err_x_l2);
            if (d.node == 1) unconverged += !d.converged;
        }
        sum["distributed"] = {{"zeta", s.rounds.zeta},
                              {"lmax", s.rounds.l_max},
                              {"max_disagreement_linf", max_dis},
                              {"max_err_x_l2", max_err},
                              {"unconverged_steps", unconverged}};
    }
    return out;
}

// ---------------------------------------------------------------------------
// CSV

namespace detail {

inline std::string fmt(double v)
{
    if (std::isnan(v)) return "";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

inline void put_vec(std::ostream& os, const Vec& v)
{
    for (Eigen::Index i = 0; i < v.size(); ++i) os << ',' << fmt(v(i));
}

inline void put_names(std::ostream& os, const char* prefix, Eigen::Index count)
{
    for (Eigen::Index i = 0; i < count; ++i) os << ',' << prefix << '_' << i;
}

} // namespace detail

/// Header of a centralized trace for a state of size q.
inline std::string trace_header(Eigen::Index q)
{
    std::ostringstream os;
    os << "k,a1,faulty_count";
    detail::put_names(os, "x", q);
    detail::put_names(os, "xhat", q);
    detail::put_names(os, "f", q);
    detail::put_names(os, "fhat", q);
    os << ",err_x_l2,err_x_l1,err_f_l1,d_bound,fault_bound,iterations,converged,nonunique";
    return os.str();
}

inline void write_trace_csv(std::ostream& os, const EstimatorTrace& t)
{
    if (t.rows.empty()) throw ValidationError("cannot write an empty trace");
    os << trace_header(t.rows.front().x.size()) << '\n';
    for (const auto& r : t.rows) {
        os << r.k << ',' << r.a1 << ',' << r.faulty_count;
        detail::put_vec(os, r.x);
        detail::put_vec(os, r.xhat);
        detail::put_vec(os, r.f);
        detail::put_vec(os, r.fhat);
        os << ',' << detail::fmt(r.err_x_l2) << ',' << detail::fmt(r.err_x_l1) << ',' << detail::fmt(r.err_f_l1) << ','
           << detail::fmt(r.d_bound) << ',' << detail::fmt(r.fault_bound) << ',' << r.iterations << ','
           << int(r.converged) << ',' << int(r.nonunique) << '\n';
    }
}

inline std::string distributed_header(Eigen::Index q)
{
    std::ostringstream os;
    os << "k,node_id,a1,faulty_count";
    detail::put_names(os, "xhat", q);
    detail::put_names(os, "fhat", q);
    os << ",err_x_l2,err_x_l1,err_f_l1,disagreement_linf,rounds,converged,flagged";
    return os.str();
}

inline void write_distributed_csv(std::ostream& os, const std::vector<DistributedRow>& rows)
{
    if (rows.empty()) throw ValidationError("cannot write an empty distributed trace");
    os << distributed_header(rows.front().xhat.size()) << '\n';
    for (const auto& r : rows) {
        os << r.k << ',' << r.node << ',' << r.a1 << ',' << r.faulty_count;
        detail::put_vec(os, r.xhat);
        detail::put_vec(os, r.fhat);
        os << ',' << detail::fmt(r.err_x_l2) << ',' << detail::fmt(r.err_x_l1) << ',' << detail::fmt(r.err_f_l1) << ','
           << detail::fmt(r.disagreement) << ',' << r.rounds << ',' << int(r.converged) << ',';
        for (std::size_t i = 0; i < r.flagged.size(); ++i) os << (i ? ";" : "") << r.flagged[i];
        os << '\n';
    }
}

/// Minimal CSV table with a header row; numeric cells parse as doubles and
/// empty cells as NaN.
struct CsvTable {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;

    int column(const std::string& name) const
    {
        for (std::size_t i = 0; i < columns.size(); ++i) {
            if (columns[i] == name) return static_cast<int>(i);
        }
        return -1;
    }
};

inline CsvTable read_csv(std::istream& in)
{
    CsvTable t;
    std::string line;
    auto split = [](const std::string& s) {
        std::vector<std::string> cells;
        std::stringstream ss(s);
        std::string c;
        while (std::getline(ss, c, ',')) cells.push_back(c);
        if (!s.empty() && s.back() == ',') cells.emplace_back();
        return cells;
    };
    if (!std::getline(in, line) || line.empty()) throw ValidationError("CSV has no header");
    t.columns = split(line);
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto cells = split(line);
        if (cells.size() != t.columns.size()) {
            throw ValidationError("CSV line " + std::to_string(lineno) + ": expected " + std::to_string(t.columns.size())
                                  + " cells, got " + std::to_string(cells.size()));
        }
        std::vector<double> row;
        for (const auto& c : cells) {
            if (c.empty()) {
                row.push_back(detail::nan());
                continue;
            }
            try {
                std::size_t used = 0;
                row.push_back(std::stod(c, &used));
                if (used != c.size()) row.back() = detail::nan();
            } catch (const std::exception&) {
                row.push_back(detail::nan()); // non-numeric cell such as a flag list
            }
        }
        t.rows.push_back(std::move(row));
    }
    return t;
}

// ---------------------------------------------------------------------------
// Fault-count sweep

struct SweepRow {
    int mf = 0;
    double cumulative = 0.0; // sum over k in (k_start, k_end] of ||x - xhat||_2
    double max_error = 0.0;
};

/// Scenario with I_k = {1..mf} receiving uniform faults on the sweep
/// coordinates over the sweep window; other fault entries are dropped.
/// The centralized l1 estimator is scored unless `distributed` is set, in
/// which case node 1's distributed estimate is.
inline Scenario sweep_cell(const Scenario& base, int mf, std::uint64_t seed, bool distributed = false)
{
    if (mf < 0 || mf > base.nodes) throw ValidationError("M_f = " + std::to_string(mf) + " outside 0.." + std::to_string(base.nodes));
    Scenario s = base;
    const int n = s.dynamics.agent().a.rows();
    std::vector<int> coords = s.sweep.coords;
    if (coords.empty()) coords = {n >= 4 ? 2 : 0};
    std::vector<FaultEntry> entries;
    for (NodeId i = 1; i <= mf; ++i) entries.push_back({i, s.sweep.k_start, s.sweep.k_end, UniformFault{s.sweep.lo, s.sweep.hi, coords}});
    s.faults = FaultSchedule(std::move(entries), seed);
    s.seed = seed;
    s.estimators = {EstimatorKind::l1};
    s.distributed = distributed;
    if (s.horizon <= s.sweep.k_end) s.horizon = s.sweep.k_end + 1;
    return s;
}

inline std::vector<SweepRow> sweep_fault_count(const Scenario& base, const std::vector<int>& mf_values,
                                               std::uint64_t seed, bool distributed = false)
{
    std::vector<std::future<SweepRow>> jobs;
    for (int mf : mf_values) {
        Scenario cell = sweep_cell(base, mf, seed, distributed);
        jobs.push_back(std::async(std::launch::async, [cell = std::move(cell), mf] {
            const RunResult r = run_scenario(cell);
            SweepRow row{mf, 0.0, 0.0};
            auto add = [&](int k, double err) {
                if (k > cell.sweep.k_start && k <= cell.sweep.k_end) {
                    row.cumulative += err;
                    row.max_error = std::max(row.max_error, err);
                }
            };
            if (cell.distributed) {
                for (const auto& d : r.distributed) {
                    if (d.node == 1) add(d.k, d.err_x_l2);
                }
            } else {
                for (const auto& tr : r.traces.front().rows) add(tr.k, tr.err_x_l2);
            }
            return row;
        }));
    }
    std::vector<SweepRow> out;
    for (auto& j : jobs) out.push_back(j.get());
    return out;
}

inline void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows)
{
    os << "mf,cumulative_err_x_l2,max_err_x_l2\n";
    for (const auto& r : rows) os << r.mf << ',' << detail::fmt(r.cumulative) << ',' << detail::fmt(r.max_error) << '\n';
}

/// Parse "a..b" or a comma list such as "1,2,5".
inline std::vector<int> parse_int_range(const std::string& text)
{
    std::vector<int> out;
    try {
        if (const auto dots = text.find(".."); dots != std::string::npos) {
            const int a = std::stoi(text.substr(0, dots)), b = std::stoi(text.substr(dots + 2));
            if (b < a) throw ValidationError("range '" + text + "' is empty");
            for (int v = a; v <= b; ++v) out.push_back(v);
        } else {
            std::stringstream ss(text);
            std::string c;
            while (std::getline(ss, c, ',')) out.push_back(std::stoi(c));
        }
    } catch (const ValidationError&) {
        throw;
    } catch (const std::logic_error&) {
        throw ValidationError("cannot parse integer range '" + text + "'");
    }
    if (out.empty()) throw ValidationError("empty integer range");
    return out;
}

} // namespace l1est
