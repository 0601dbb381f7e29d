#pragma once

#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <yaml-cpp/yaml.h>

#include "l1est/dbp.hpp"
#include "l1est/error.hpp"
#include "l1est/estimators.hpp"
#include "l1est/graph.hpp"
#include "l1est/plant.hpp"
#include "l1est/solver.hpp"

namespace l1est {

struct DynamicsSpec {
    std::string preset = "integrator"; // integrator | double_integrator | custom
    int n = 1;
    int m = 1;
    double dt = 0.05;
    Mat a, b; // custom only

    AgentDynamics agent() const
    {
        if (preset == "integrator") return integrator(n, m);
        if (preset == "double_integrator") return double_integrator(dt);
        return {a, b};
    }
};

struct ControlSpec {
    std::string law = "zero"; // zero | formation | custom
    Vec gains;                // formation: per-input gains (c1, c2, ...)
    double spacing = 2.0;     // formation: line spacing along -x
    Vec leader_velocity;      // formation: leader velocity target
    Mat gain_matrix;          // custom: m x n
};

/// Parameters for the fault-count sweep: I = {1..M_f} receives uniform
/// faults on `coords` over [k_start, k_end].
struct SweepSpec {
    int k_start = 100;
    int k_end = 300;
    double lo = -10.0;
    double hi = 10.0;
    std::vector<int> coords;
};

struct Scenario {
    std::string name = "scenario";
    int nodes = 0;
    std::vector<std::pair<NodeId, NodeId>> edges;
    int horizon = 0;
    std::uint64_t seed = 0;
    DynamicsSpec dynamics;
    Vec initial_state;             // empty: zero
    bool initial_formation = false; // positions at formation references, zero velocity
    LeaderSchedule leader;
    FaultSchedule faults;
    ControlSpec control;
    bool control_from_estimate = false;
    std::vector<EstimatorKind> estimators{EstimatorKind::l1};
    double w_max = 0.0;
    KalmanParams kalman;
    SolverConfig solver;
    bool distributed = false;
    RoundConfig rounds;
    double detect_eps = 0.5;
    double noise_v_max = 0.0;
    double noise_w_max = 0.0;
    double d_bar = 1e-8;
    SweepSpec sweep;
    std::string output_dir;

    Graph graph() const { return build_graph(nodes, edges); }

    ControlLaw control_law() const
    {
        const int m = dynamics.agent().b.cols();
        ControlLaw law;
        if (control.law == "formation") {
            law.follower = ControlLaw::Follower::relative_feedback;
            law.gains = control.gains.size() ? control.gains : Vec(Vec::Constant(m, 1.5));
            for (int i = 0; i < nodes; ++i) {
                Vec r = Vec::Zero(m);
                r(0) = -control.spacing * i;
                law.formation.push_back(r);
            }
            law.leader_tracking = true;
            law.leader_velocity = control.leader_velocity.size() ? control.leader_velocity : Vec(Vec::Unit(m, 0));
        } else if (control.law == "custom") {
            law.follower = ControlLaw::Follower::custom;
            law.custom_gain = control.gain_matrix;
        }
        return law;
    }

    NetworkPlant plant() const { return NetworkPlant(graph(), dynamics.agent(), control_law()); }

    Vec initial(const NetworkPlant& p) const
    {
        if (initial_formation) {
            Vec x = Vec::Zero(p.state_size());
            const auto law = control_law();
            for (int i = 0; i < nodes; ++i) {
                if (!law.formation.empty()) x.segment(i * p.n(), p.m()) = law.formation[i];
            }
            return x;
        }
        if (initial_state.size() == 0) return Vec::Zero(p.state_size());
        if (initial_state.size() != p.state_size()) {
            throw ValidationError("initial_state has length " + std::to_string(initial_state.size()) + ", expected "
                                  + std::to_string(p.state_size()));
        }
        return initial_state;
    }
};

namespace detail {

inline std::string at_line(const YAML::Node& node, const std::string& msg)
{
    const auto mark = node.Mark();
    if (mark.line < 0) return msg;
    return "line " + std::to_string(mark.line + 1) + ": " + msg;
}

template <class T>
T read_as(const YAML::Node& node, const std::string& what)
{
    try {
        return node.as<T>();
    } catch (const YAML::Exception&) {
        throw ValidationError(at_line(node, "could not read '" + what + "'"));
    }
}

inline Vec read_vec(const YAML::Node& node, const std::string& what)
{
    if (!node.IsSequence()) throw ValidationError(at_line(node, "'" + what + "' must be a list of numbers"));
    Vec v(node.size());
    for (std::size_t i = 0; i < node.size(); ++i) v(i) = read_as<double>(node[i], what);
    return v;
}

inline Mat read_mat(const YAML::Node& node, const std::string& what)
{
    if (!node.IsSequence() || node.size() == 0) {
        throw ValidationError(at_line(node, "'" + what + "' must be a non-empty list of rows"));
    }
    const Vec first = read_vec(node[0], what);
    Mat out(node.size(), first.size());
    for (std::size_t r = 0; r < node.size(); ++r) {
        const Vec row = read_vec(node[r], what);
        if (row.size() != first.size()) throw ValidationError(at_line(node[r], "ragged matrix '" + what + "'"));
        out.row(r) = row;
    }
    return out;
}

template <class T>
void read_opt(const YAML::Node& parent, const char* key, T& out)
{
    if (const auto n = parent[key]) out = read_as<T>(n, key);
}

inline const YAML::Node require(const YAML::Node& parent, const char* key)
{
    const auto n = parent[key];
    if (!n) throw ValidationError(at_line(parent, std::string("missing required key '") + key + "'"));
    return n;
}

inline SolverConfig read_solver(const YAML::Node& n, SolverConfig cfg)
{
    read_opt(n, "feas_tol", cfg.feas_tol);
    read_opt(n, "step_tol", cfg.step_tol);
    read_opt(n, "max_iterations", cfg.max_iterations);
    read_opt(n, "penalty", cfg.penalty);
    read_opt(n, "relaxation", cfg.relaxation);
    return cfg;
}

} // namespace detail

/// Parse a scenario from YAML text. `origin` names the source in errors.
inline Scenario parse_scenario(const std::string& text, const std::string& origin = "<string>")
{
    using namespace detail;
    YAML::Node root;
    try {
        root = YAML::Load(text);
    } catch (const YAML::Exception& e) {
        throw ValidationError(origin + ": " + e.what());
    }
    if (!root.IsMap()) throw ValidationError(origin + ": scenario must be a mapping");
    Scenario s;
    try {
        read_opt(root, "name", s.name);
        s.nodes = read_as<int>(require(root, "nodes"), "nodes");
        const auto edges = require(root, "edges");
        if (!edges.IsSequence()) throw ValidationError(at_line(edges, "'edges' must be a list of [i, j] pairs"));
        for (const auto& e : edges) {
            if (!e.IsSequence() || e.size() != 2) throw ValidationError(at_line(e, "each edge must be [i, j]"));
            s.edges.emplace_back(read_as<int>(e[0], "edge"), read_as<int>(e[1], "edge"));
        }
        s.horizon = read_as<int>(require(root, "horizon"), "horizon");
        if (s.horizon < 1) throw ValidationError(at_line(root["horizon"], "horizon must be >= 1"));
        read_opt(root, "seed", s.seed);

        if (const auto d = root["dynamics"]) {
            read_opt(d, "preset", s.dynamics.preset);
            read_opt(d, "n", s.dynamics.n);
            read_opt(d, "m", s.dynamics.m);
            read_opt(d, "dt", s.dynamics.dt);
            if (s.dynamics.preset == "custom") {
                s.dynamics.a = read_mat(require(d, "a"), "a");
                s.dynamics.b = read_mat(require(d, "b"), "b");
            } else if (s.dynamics.preset != "integrator" && s.dynamics.preset != "double_integrator") {
                throw ValidationError(at_line(d, "unknown dynamics preset '" + s.dynamics.preset + "'"));
            }
        }

        if (const auto x0 = root["initial_state"]) {
            if (x0.IsScalar() && x0.as<std::string>() == "formation") {
                s.initial_formation = true;
            } else {
                s.initial_state = read_vec(x0, "initial_state");
            }
        }

        if (const auto lm = root["leader_mode"]) {
            std::vector<LeaderSchedule::Interval> iv;
            for (const auto& e : lm) {
                iv.push_back({read_as<int>(require(e, "k_start"), "k_start"), read_as<int>(require(e, "k_end"), "k_end"),
                              read_as<int>(require(e, "a1"), "a1")});
            }
            try {
                s.leader = LeaderSchedule(std::move(iv));
            } catch (const ValidationError& err) {
                throw ValidationError(at_line(lm, err.what()));
            }
        }

        std::vector<FaultEntry> faults;
        if (const auto fl = root["faults"]) {
            for (const auto& e : fl) {
                FaultEntry f;
                f.node = read_as<int>(require(e, "node"), "node");
                f.k_start = read_as<int>(require(e, "k_start"), "k_start");
                f.k_end = read_as<int>(require(e, "k_end"), "k_end");
                if (const auto v = e["vector"]) {
                    f.value = read_vec(v, "vector");
                } else if (const auto r = e["random_uniform"]) {
                    UniformFault u;
                    const Vec range = read_vec(require(r, "range"), "range");
                    if (range.size() != 2) throw ValidationError(at_line(r, "random_uniform range must be [lo, hi]"));
                    u.lo = range(0);
                    u.hi = range(1);
                    for (const auto& c : require(r, "coords")) u.coords.push_back(read_as<int>(c, "coords"));
                    f.value = u;
                } else {
                    throw ValidationError(at_line(e, "fault needs 'vector' or 'random_uniform'"));
                }
                faults.push_back(std::move(f));
            }
        }
        s.faults = FaultSchedule(std::move(faults), s.seed);

        if (const auto c = root["control"]) {
            read_opt(c, "law", s.control.law);
            if (s.control.law != "zero" && s.control.law != "formation" && s.control.law != "custom") {
                throw ValidationError(at_line(c, "unknown control law '" + s.control.law + "'"));
            }
            if (const auto g = c["gains"]) s.control.gains = read_vec(g, "gains");
            read_opt(c, "spacing", s.control.spacing);
            if (const auto v = c["leader_velocity"]) s.control.leader_velocity = read_vec(v, "leader_velocity");
            if (s.control.law == "custom") s.control.gain_matrix = read_mat(require(c, "gain_matrix"), "gain_matrix");
        }
        read_opt(root, "control_from_estimate", s.control_from_estimate);

        if (const auto e = root["estimators"]) {
            s.estimators.clear();
            for (const auto& k : e) s.estimators.push_back(parse_estimator_kind(read_as<std::string>(k, "estimators")));
        } else if (const auto e1 = root["estimator"]) {
            s.estimators = {parse_estimator_kind(read_as<std::string>(e1, "estimator"))};
        }
        read_opt(root, "w_max", s.w_max);
        if (const auto k = root["kalman"]) {
            read_opt(k, "p_scale", s.kalman.p_scale);
            read_opt(k, "v_scale", s.kalman.v_scale);
        }
        if (const auto sv = root["solver"]) s.solver = read_solver(sv, s.solver);
        if (const auto d = root["distributed"]) {
            read_opt(d, "enabled", s.distributed);
            read_opt(d, "zeta", s.rounds.zeta);
            read_opt(d, "lmax", s.rounds.l_max);
            read_opt(d, "detect_eps", s.detect_eps);
            if (const auto inner = d["inner"]) s.rounds.inner = read_solver(inner, s.rounds.inner);
        }
        if (const auto nz = root["noise"]) {
            read_opt(nz, "v_max", s.noise_v_max);
            read_opt(nz, "w_max", s.noise_w_max);
        }
        if (const auto b = root["bounds"]) read_opt(b, "d_bar", s.d_bar);
        if (const auto sw = root["sweep"]) {
            if (const auto w = sw["window"]) {
                const Vec win = read_vec(w, "window");
                if (win.size() != 2) throw ValidationError(at_line(w, "sweep window must be [k_start, k_end]"));
                s.sweep.k_start = static_cast<int>(win(0));
                s.sweep.k_end = static_cast<int>(win(1));
            }
            if (const auto r = sw["range"]) {
                const Vec range = read_vec(r, "range");
                if (range.size() != 2) throw ValidationError(at_line(r, "sweep range must be [lo, hi]"));
                s.sweep.lo = range(0);
                s.sweep.hi = range(1);
            }
            if (const auto c = sw["coords"]) {
                for (const auto& x : c) s.sweep.coords.push_back(read_as<int>(x, "coords"));
            }
        }
        read_opt(root, "output_dir", s.output_dir);
    } catch (const ValidationError& e) {
        throw ValidationError(origin + ": " + e.what());
    }

    // Cross-field checks need the assembled plant.
    try {
        const NetworkPlant p = s.plant();
        s.faults.validate(p.agents(), p.n());
        (void)s.initial(p);
        s.solver.validate();
        s.rounds.validate();
        if (s.w_max < 0 || s.noise_v_max < 0 || s.noise_w_max < 0) throw ValidationError("noise bounds must be >= 0");
        for (int c : s.sweep.coords) {
            if (c < 0 || c >= p.n()) throw ValidationError("sweep coordinate " + std::to_string(c) + " out of range");
        }
    } catch (const ValidationError& e) {
        throw ValidationError(origin + ": " + e.what());
    }
    return s;
}

inline Scenario load_scenario(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open scenario file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_scenario(ss.str(), path);
}

} // namespace l1est
