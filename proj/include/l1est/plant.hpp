#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <variant>
#include <vector>

#include "l1est/error.hpp"
#include "l1est/graph.hpp"
#include "l1est/linalg.hpp"

namespace l1est {

struct AgentDynamics {
    Mat a; // n x n
    Mat b; // n x m
};

/// x_i(k) = x_i(k-1) + f_i(k): identity dynamics, inputs have no effect.
inline AgentDynamics integrator(int n, int m = 1)
{
    return {Mat::Identity(n, n), Mat::Zero(n, m)};
}

/// Planar double integrator, state [px, py, vx, vy], input [ux, uy],
/// zero-order hold with sampling interval dt (exact for this system).
inline AgentDynamics double_integrator(double dt = 0.05)
{
    AgentDynamics d{Mat::Identity(4, 4), Mat::Zero(4, 2)};
    d.a(0, 2) = dt;
    d.a(1, 3) = dt;
    d.b(0, 0) = 0.5 * dt * dt;
    d.b(1, 1) = 0.5 * dt * dt;
    d.b(2, 0) = dt;
    d.b(3, 1) = dt;
    return d;
}

/// Contiguous rows [offset, offset + count) of a stacked output matrix.
struct RowBlock {
    int offset = 0;
    int count = 0;
};

/// C_0 (leader non-active) and C_1 (leader active), plus which rows each
/// node owns. Rows are node-major; within a node, one n-row block per
/// measured neighbor in ascending id. In C_1 the leader's absolute block
/// comes first.
struct OutputMatrices {
    Mat c0;
    Mat c1;
    std::vector<RowBlock> rows0;
    std::vector<RowBlock> rows1;

    const Mat& matrix(int a1) const { return a1 ? c1 : c0; }
    const std::vector<RowBlock>& rows(int a1) const { return a1 ? rows1 : rows0; }
};

inline OutputMatrices build_output_matrices(const Graph& g, int n)
{
    if (n < 1) throw ValidationError("state dimension must be positive");
    if (!check_weak_connectivity(g).weakly_connected) {
        throw ValidationError("output matrices require a weakly connected graph");
    }
    const int M = g.node_count();
    const Mat eye = Mat::Identity(n, n);
    OutputMatrices out;
    for (int active = 0; active <= 1; ++active) {
        int total = active ? n : 0;
        for (NodeId i = 1; i <= M; ++i) total += n * static_cast<int>(g.measured_by(i).size());
        Mat c = Mat::Zero(total, n * M);
        std::vector<RowBlock> blocks(M);
        int r = 0;
        for (NodeId i = 1; i <= M; ++i) {
            blocks[i - 1].offset = r;
            if (i == 1 && active) {
                c.block(r, 0, n, n) = eye;
                r += n;
            }
            for (NodeId j : g.measured_by(i)) {
                c.block(r, (i - 1) * n, n, n) = eye;
                c.block(r, (j - 1) * n, n, n) = -eye;
                r += n;
            }
            blocks[i - 1].count = r - blocks[i - 1].offset;
        }
        (active ? out.c1 : out.c0) = std::move(c);
        (active ? out.rows1 : out.rows0) = std::move(blocks);
    }
    return out;
}

/// Piecewise-constant leader mode a_1(k). Steps not covered by any
/// interval are active.
class LeaderSchedule {
public:
    struct Interval {
        int k_start;
        int k_end; // inclusive
        int a1;
    };

    LeaderSchedule() = default;
    explicit LeaderSchedule(std::vector<Interval> intervals) : intervals_(std::move(intervals))
    {
        for (const auto& iv : intervals_) {
            if (iv.a1 != 0 && iv.a1 != 1) throw ValidationError("leader mode must be 0 or 1");
            if (iv.k_end < iv.k_start) throw ValidationError("leader mode interval has k_end < k_start");
        }
    }

    static LeaderSchedule always(int a1) { return LeaderSchedule({{0, 1 << 30, a1}}); }

    int mode(int k) const
    {
        // later intervals override earlier ones
        int a1 = 1;
        for (const auto& iv : intervals_) {
            if (k >= iv.k_start && k <= iv.k_end) a1 = iv.a1;
        }
        return a1;
    }

    const std::vector<Interval>& intervals() const { return intervals_; }

private:
    std::vector<Interval> intervals_;
};

/// Uniform draws on selected coordinates (0-based) of one node's block.
struct UniformFault {
    double lo = -10.0;
    double hi = 10.0;
    std::vector<int> coords;
};

struct FaultEntry {
    NodeId node = 1;
    int k_start = 0;
    int k_end = 0; // inclusive
    std::variant<Vec, UniformFault> value;
};

struct FaultSample {
    Vec f;                       // stacked, node-major
    std::vector<NodeId> faulty;  // I_k, ascending
};

/// Time-indexed fault injections. Random entries are reproducible:
/// each (entry, k) pair draws from its own seeded stream, so queries can
/// happen in any order.
class FaultSchedule {
public:
    FaultSchedule() = default;
    explicit FaultSchedule(std::vector<FaultEntry> entries, std::uint64_t seed = 0)
        : entries_(std::move(entries)), seed_(seed)
    {
    }

    void add(FaultEntry e) { entries_.push_back(std::move(e)); }
    void add_constant(NodeId node, int k_start, int k_end, Vec v)
    {
        entries_.push_back({node, k_start, k_end, std::move(v)});
    }

    const std::vector<FaultEntry>& entries() const { return entries_; }
    std::uint64_t seed() const { return seed_; }
    void set_seed(std::uint64_t s) { seed_ = s; }
    bool empty() const { return entries_.empty(); }

    void validate(int M, int n) const
    {
        for (const auto& e : entries_) {
            if (e.node < 1 || e.node > M) {
                throw ValidationError("fault schedule references node " + std::to_string(e.node)
                                      + " outside 1.." + std::to_string(M));
            }
            if (e.k_end < e.k_start) throw ValidationError("fault interval has k_end < k_start");
            if (const auto* v = std::get_if<Vec>(&e.value)) {
                if (v->size() != n) {
                    throw ValidationError("fault vector for node " + std::to_string(e.node) + " has length "
                                          + std::to_string(v->size()) + ", expected " + std::to_string(n));
                }
            } else {
                const auto& u = std::get<UniformFault>(e.value);
                if (u.hi < u.lo) throw ValidationError("random_uniform fault has hi < lo");
                for (int c : u.coords) {
                    if (c < 0 || c >= n) {
                        throw ValidationError("random_uniform coordinate " + std::to_string(c) + " outside 0.."
                                              + std::to_string(n - 1));
                    }
                }
            }
        }
    }

    FaultSample sample(int k, int M, int n) const
    {
        validate(M, n);
        FaultSample s{Vec::Zero(n * M), {}};
        for (std::size_t idx = 0; idx < entries_.size(); ++idx) {
            const auto& e = entries_[idx];
            if (k < e.k_start || k > e.k_end) continue;
            auto block = s.f.segment((e.node - 1) * n, n);
            if (const auto* v = std::get_if<Vec>(&e.value)) {
                block += *v;
            } else {
                const auto& u = std::get<UniformFault>(e.value);
                std::seed_seq seq{static_cast<std::uint32_t>(seed_), static_cast<std::uint32_t>(seed_ >> 32),
                                  static_cast<std::uint32_t>(idx), static_cast<std::uint32_t>(k)};
                std::mt19937_64 rng(seq);
                std::uniform_real_distribution<double> dist(u.lo, u.hi);
                for (int c : u.coords) block(c) += dist(rng);
            }
        }
        for (int i = 0; i < M; ++i) {
            if (!s.f.segment(i * n, n).isZero(0.0)) s.faulty.push_back(i + 1);
        }
        return s;
    }

private:
    std::vector<FaultEntry> entries_;
    std::uint64_t seed_ = 0;
};

/// Stacked f(k) and I_k.
inline FaultSample fault_vector(const FaultSchedule& s, int k, int M, int n)
{
    return s.sample(k, M, n);
}

/// Shared control law kappa. Followers (and the leader, unless
/// leader_tracking is set) use only relative states to neighbors.
struct ControlLaw {
    enum class Follower { zero, relative_feedback, custom };

    Follower follower = Follower::zero;
    /// Per-input gains for relative feedback (c1, c2, ...), size m.
    Vec gains;
    /// Formation reference positions r_i (size m each); the desired offset
    /// from i to j is d_ij = r_j - r_i. Empty means all zero.
    std::vector<Vec> formation;
    /// m x n gain K for the custom law u_i = sum_j K (x_i - x_j).
    Mat custom_gain;

    /// Leader tracks a velocity: u_1 = -v_1 + leader_velocity. Requires a
    /// [position; velocity] state layout with n >= 2m.
    bool leader_tracking = false;
    Vec leader_velocity;

    static ControlLaw zero() { return {}; }
};

inline Vec eval_control(const ControlLaw& law, const Graph& g, int n, int m, const Vec& x)
{
    const int M = g.node_count();
    Vec u = Vec::Zero(m * M);
    if (x.size() != n * M) throw ValidationError("control law: state has wrong length");
    for (NodeId i = 1; i <= M; ++i) {
        auto ui = u.segment((i - 1) * m, m);
        const auto xi = x.segment((i - 1) * n, n);
        if (i == 1 && law.leader_tracking) {
            if (n < 2 * m) throw ValidationError("leader tracking needs n >= 2m");
            ui = -xi.segment(m, m) + law.leader_velocity;
            continue;
        }
        switch (law.follower) {
        case ControlLaw::Follower::zero:
            break;
        case ControlLaw::Follower::relative_feedback:
            if (n < m) throw ValidationError("relative feedback needs n >= m");
            for (NodeId j : g.neighbors_of(i)) {
                const auto xj = x.segment((j - 1) * n, n);
                Vec diff = xi.head(m) - xj.head(m);
                if (!law.formation.empty()) diff += law.formation[j - 1] - law.formation[i - 1];
                ui -= law.gains.cwiseProduct(diff);
            }
            break;
        case ControlLaw::Follower::custom:
            for (NodeId j : g.neighbors_of(i)) ui += law.custom_gain * (xi - x.segment((j - 1) * n, n));
            break;
        }
    }
    return u;
}

/// Stacked multi-agent LTI plant. Immutable once built.
class NetworkPlant {
public:
    NetworkPlant(Graph graph, std::vector<AgentDynamics> agents, ControlLaw law = ControlLaw::zero())
        : graph_(std::move(graph)), agents_(std::move(agents)), law_(std::move(law))
    {
        if (static_cast<int>(agents_.size()) != graph_.node_count()) {
            throw ValidationError("need one AgentDynamics per node");
        }
        n_ = static_cast<int>(agents_.front().a.rows());
        m_ = static_cast<int>(agents_.front().b.cols());
        std::vector<Mat> as, bs;
        for (const auto& ag : agents_) {
            if (ag.a.rows() != n_ || ag.a.cols() != n_ || ag.b.rows() != n_ || ag.b.cols() != m_) {
                throw ValidationError("all agents must share state dimension n and input dimension m");
            }
            as.push_back(ag.a);
            bs.push_back(ag.b);
        }
        a_ = linalg::block_diag(as);
        b_ = linalg::block_diag(bs);
        outputs_ = build_output_matrices(graph_, n_);
        validate_law();
    }

    NetworkPlant(Graph graph, const AgentDynamics& shared, ControlLaw law = ControlLaw::zero())
        : NetworkPlant(graph, std::vector<AgentDynamics>(graph.node_count(), shared), std::move(law))
    {
    }

    const Graph& graph() const { return graph_; }
    int n() const { return n_; }
    int m() const { return m_; }
    int agents() const { return graph_.node_count(); }
    int state_size() const { return n_ * graph_.node_count(); }
    const Mat& a() const { return a_; }
    const Mat& b() const { return b_; }
    const OutputMatrices& outputs() const { return outputs_; }
    const Mat& c(int a1) const { return outputs_.matrix(a1); }
    const ControlLaw& law() const { return law_; }

    Vec control(const Vec& x) const { return eval_control(law_, graph_, n_, m_, x); }

    /// x(k) = A x(k-1) + B u(k-1) + f(k)
    Vec step_truth(const Vec& x_prev, const Vec& u_prev, const Vec& f) const
    {
        check_sizes(x_prev, u_prev, f);
        return a_ * x_prev + b_ * u_prev + f;
    }

    /// Variant with additive system noise v(k-1).
    Vec step_truth(const Vec& x_prev, const Vec& u_prev, const Vec& f, const Vec& v) const
    {
        if (v.size() != state_size()) throw ValidationError("step_truth: noise has wrong length");
        return step_truth(x_prev, u_prev, f) + v;
    }

    Vec measure(const Vec& x, int a1) const
    {
        if (x.size() != state_size()) throw ValidationError("measure: state has wrong length");
        return c(a1) * x;
    }

    Vec measure(const Vec& x, int a1, const Vec& w) const
    {
        Vec y = measure(x, a1);
        if (w.size() != y.size()) throw ValidationError("measure: noise has wrong length");
        return y + w;
    }

private:
    void check_sizes(const Vec& x, const Vec& u, const Vec& f) const
    {
        if (x.size() != state_size() || f.size() != state_size() || u.size() != m_ * agents()) {
            throw ValidationError("step_truth: dimension mismatch (x " + std::to_string(x.size()) + ", u "
                                  + std::to_string(u.size()) + ", f " + std::to_string(f.size()) + ")");
        }
    }

    void validate_law() const
    {
        const auto& l = law_;
        if (l.follower == ControlLaw::Follower::relative_feedback) {
            if (l.gains.size() != m_) throw ValidationError("relative feedback gains must have length m");
            if (!l.formation.empty()) {
                if (static_cast<int>(l.formation.size()) != agents()) {
                    throw ValidationError("formation needs one reference per node");
                }
                for (const auto& r : l.formation) {
                    if (r.size() != m_) throw ValidationError("formation references must have length m");
                }
            }
        }
        if (l.follower == ControlLaw::Follower::custom && (l.custom_gain.rows() != m_ || l.custom_gain.cols() != n_)) {
            throw ValidationError("custom control gain must be m x n");
        }
        if (l.leader_tracking && l.leader_velocity.size() != m_) {
            throw ValidationError("leader velocity must have length m");
        }
    }

    Graph graph_;
    std::vector<AgentDynamics> agents_;
    ControlLaw law_;
    int n_ = 0;
    int m_ = 0;
    Mat a_, b_;
    OutputMatrices outputs_;
};

/// Noise with ||v||_1 <= bound: random direction on the l1 sphere scaled by
/// a uniform radius.
inline Vec bounded_l1_noise(std::mt19937_64& rng, Eigen::Index dim, double bound)
{
    Vec v(dim);
    std::exponential_distribution<double> ex(1.0);
    std::bernoulli_distribution sign(0.5);
    for (Eigen::Index i = 0; i < dim; ++i) v(i) = (sign(rng) ? 1.0 : -1.0) * ex(rng);
    const double norm = v.lpNorm<1>();
    std::uniform_real_distribution<double> radius(0.0, bound);
    return norm > 0 ? Vec(v * (radius(rng) / norm)) : Vec(Vec::Zero(dim));
}

/// Noise with ||w||_2 <= bound.
inline Vec bounded_l2_noise(std::mt19937_64& rng, Eigen::Index dim, double bound)
{
    Vec w(dim);
    std::normal_distribution<double> nd(0.0, 1.0);
    for (Eigen::Index i = 0; i < dim; ++i) w(i) = nd(rng);
    const double norm = w.norm();
    std::uniform_real_distribution<double> radius(0.0, bound);
    return norm > 0 ? Vec(w * (radius(rng) / norm)) : Vec(Vec::Zero(dim));
}

} // namespace l1est
