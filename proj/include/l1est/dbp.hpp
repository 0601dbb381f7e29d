#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "l1est/error.hpp"
#include "l1est/graph.hpp"
#include "l1est/linalg.hpp"
#include "l1est/plant.hpp"
#include "l1est/solver.hpp"

namespace l1est {

struct RoundConfig {
    double zeta = 1.0;
    /// Rounds run while L < l_max, so l_max = 1 performs none.
    int l_max = 500;
    SolverConfig inner{1e-9, 1e-10, 20000, 1.0, 1.6};
    /// Early stop once iterates agree, satisfy their rows and stop moving,
    /// all within this tolerance.
    double early_stop_tol = 1e-6;

    void validate() const
    {
        if (!(zeta > 0)) throw ValidationError("zeta must be positive");
        if (l_max < 1) throw ValidationError("l_max must be >= 1");
        if (!(early_stop_tol >= 0)) throw ValidationError("early-stop tolerance must be non-negative");
        inner.validate();
    }
};

struct NodeState {
    NodeId id = 0;
    int cls = 1;
    int degree = 0;
    Vec prior_state;   // chi_hat_i(k-1)
    Vec shift;         // A chi_hat_i(k-1) + B kappa(chi_hat_i(k-1))
    Vec iterate;       // chi_i^L
    Vec dual;          // mu_i^L
    Vec multiplier;    // local row multiplier, reused between rounds
    Mat rows;          // C_i (or C_1q for the leader)
    Vec y;
    /// Latest iterate received from each neighbor; absent means zero.
    std::map<NodeId, Vec> mailbox;
};

struct NodeEstimate {
    Vec chi;      // chi_hat_i(k)
    Vec varsigma; // chi_hat_i(k) - shift_i
};

struct RoundResult {
    std::vector<NodeEstimate> nodes;
    int rounds = 0;
    bool converged = false;
    double disagreement = 0.0; // max_{i,j} ||chi_i - chi_j||_inf
    double max_residual = 0.0; // max_i ||C_i chi_i - y_i||
};

/// Nodes j whose block of varsigma has Euclidean norm above eps.
inline std::vector<NodeId> detect_faults(const Vec& varsigma, int n, double eps)
{
    if (!(eps > 0)) throw ValidationError("detection threshold must be positive");
    std::vector<NodeId> out;
    for (Eigen::Index j = 0; j * n < varsigma.size(); ++j) {
        if (varsigma.segment(j * n, n).norm() > eps) out.push_back(static_cast<NodeId>(j + 1));
    }
    return out;
}

/// Round-based simulation of the distributed basis-pursuit estimator.
/// Each round: nodes in class one solve their local problem and post the
/// result to their neighbors, then class two does the same, then every
/// node updates its dual. Within a class, updates read only state fixed
/// before the phase started.
class DistributedEstimator {
public:
    DistributedEstimator(const NetworkPlant& plant, RoundConfig cfg)
        : plant_(&plant), cfg_(cfg), parts_(bipartition(plant.graph()))
    {
        cfg_.validate();
        const int M = plant.agents();
        nodes_.resize(M);
        for (NodeId i = 1; i <= M; ++i) {
            auto& s = nodes_[i - 1];
            s.id = i;
            s.cls = parts_.class_of(i);
            s.degree = plant.graph().degree(i);
            s.prior_state = Vec::Zero(plant.state_size());
        }
    }

    const Bipartition& classes() const { return parts_; }
    const std::vector<NodeState>& nodes() const { return nodes_; }
    const NodeState& node(NodeId i) const { return nodes_.at(i - 1); }
    const RoundConfig& config() const { return cfg_; }

    /// Overwrite every node's previous estimate (for seeded comparisons).
    void set_priors(const Vec& x)
    {
        for (auto& s : nodes_) s.prior_state = x;
    }

    /// Every node uses `shift` as its a-priori estimate on the next round
    /// only (a known initial state).
    void seed_shift(const Vec& shift)
    {
        if (shift.size() != plant_->state_size()) throw ValidationError("seed_shift: wrong length");
        seeded_ = shift;
    }

    /// Zero all iterates and duals, clear mailboxes, load the step's local
    /// measurements and compute each node's a-priori shift.
    void init_round(const Vec& y, int a1)
    {
        const auto& rows = plant_->outputs().rows(a1);
        const Mat& c = plant_->c(a1);
        if (y.size() != c.rows()) throw ValidationError("distributed step: measurement has wrong length");
        const auto q = plant_->state_size();
        for (auto& s : nodes_) {
            const RowBlock rb = rows[s.id - 1];
            s.rows = c.middleRows(rb.offset, rb.count);
            s.y = y.segment(rb.offset, rb.count);
            s.shift = seeded_ ? *seeded_ : Vec(plant_->a() * s.prior_state + plant_->b() * plant_->control(s.prior_state));
            s.iterate = Vec::Zero(q);
            s.dual = Vec::Zero(q);
            s.multiplier.resize(0);
            s.mailbox.clear();
        }
        seeded_.reset();
        projectors_.clear();
        for (const auto& s : nodes_) projectors_.emplace_back(s.rows, s.y);
    }

    /// Local solves for the given nodes (all must share one class), then
    /// delivery of the new iterates to neighbors.
    void class_update(std::span<const NodeId> ids)
    {
        const int M = plant_->agents();
        std::vector<Vec> fresh, mult;
        fresh.reserve(ids.size());
        mult.reserve(ids.size());
        for (NodeId i : ids) {
            const auto& s = nodes_.at(i - 1);
            Vec v = s.dual;
            for (NodeId j : plant_->graph().neighbors_of(i)) {
                if (auto it = s.mailbox.find(j); it != s.mailbox.end()) v -= cfg_.zeta * it->second;
            }
            NodeProblem p{s.rows, s.y, s.shift, v, s.degree * cfg_.zeta, 1.0 / M, s.multiplier};
            try {
                NodeSolution sol = solve_node_subproblem(p, projectors_.at(i - 1), cfg_.inner);
                fresh.push_back(std::move(sol.chi));
                mult.push_back(std::move(sol.multiplier));
            } catch (const RuntimeError& e) {
                throw RuntimeError("node " + std::to_string(i) + " local solve failed: " + e.what());
            }
        }
        for (std::size_t t = 0; t < ids.size(); ++t) {
            auto& s = nodes_[ids[t] - 1];
            s.iterate = std::move(fresh[t]);
            s.multiplier = std::move(mult[t]);
            for (NodeId j : plant_->graph().neighbors_of(s.id)) nodes_[j - 1].mailbox[s.id] = s.iterate;
        }
    }

    void class_update(int cls) { class_update(cls == 1 ? parts_.class_one : parts_.class_two); }

    /// mu_i += zeta * sum_{j in N_i} (chi_i - chi_j), all nodes at once.
    void dual_update()
    {
        std::vector<Vec> next;
        next.reserve(nodes_.size());
        for (const auto& s : nodes_) {
            Vec mu = s.dual;
            for (NodeId j : plant_->graph().neighbors_of(s.id)) mu += cfg_.zeta * (s.iterate - nodes_[j - 1].iterate);
            next.push_back(std::move(mu));
        }
        for (std::size_t t = 0; t < nodes_.size(); ++t) nodes_[t].dual = std::move(next[t]);
    }

    double disagreement() const
    {
        double d = 0.0;
        for (std::size_t a = 0; a < nodes_.size(); ++a) {
            for (std::size_t b = a + 1; b < nodes_.size(); ++b) {
                d = std::max(d, (nodes_[a].iterate - nodes_[b].iterate).lpNorm<Eigen::Infinity>());
            }
        }
        return d;
    }

    double max_residual() const
    {
        double r = 0.0;
        for (const auto& s : nodes_) {
            if (s.rows.rows()) r = std::max(r, (s.rows * s.iterate - s.y).norm());
        }
        return r;
    }

    /// Report chi_hat_i(k), varsigma_i(k) and advance the priors.
    std::vector<NodeEstimate> finalize_round()
    {
        std::vector<NodeEstimate> out;
        for (auto& s : nodes_) {
            out.push_back({s.iterate, s.iterate - s.shift});
            s.prior_state = s.iterate;
        }
        return out;
    }

    /// Full estimation step at one time index.
    RoundResult step(const Vec& y, int a1)
    {
        init_round(y, a1);
        RoundResult r;
        std::vector<Vec> last(nodes_.size());
        for (int L = 1; L < cfg_.l_max; ++L) {
            for (std::size_t t = 0; t < nodes_.size(); ++t) last[t] = nodes_[t].iterate;
            class_update(1);
            class_update(2);
            dual_update();
            r.rounds = L;
            double moved = 0.0;
            for (std::size_t t = 0; t < nodes_.size(); ++t) {
                moved = std::max(moved, (nodes_[t].iterate - last[t]).lpNorm<Eigen::Infinity>());
            }
            if (moved <= cfg_.early_stop_tol && disagreement() <= cfg_.early_stop_tol
                && max_residual() <= cfg_.early_stop_tol) {
                r.converged = true;
                break;
            }
        }
        r.disagreement = disagreement();
        r.max_residual = max_residual();
        r.nodes = finalize_round();
        return r;
    }

private:
    const NetworkPlant* plant_;
    RoundConfig cfg_;
    Bipartition parts_;
    std::vector<NodeState> nodes_;
    std::vector<AffineProjector> projectors_;
    std::optional<Vec> seeded_;
};

struct DistributedStepRecord {
    int k = 0;
    int a1 = 1;
    Vec x;
    Vec f;
    std::vector<NodeId> faulty;
    RoundResult round;
};

/// Closed loop in which node i applies its own block of kappa(chi_hat_i).
inline std::vector<DistributedStepRecord> run_distributed_trajectory(const NetworkPlant& plant,
                                                                     const FaultSchedule& faults,
                                                                     const LeaderSchedule& leader,
                                                                     const RoundConfig& cfg, int horizon,
                                                                     const Vec& x0)
{
    if (horizon < 0) throw ValidationError("horizon must be non-negative");
    if (x0.size() != plant.state_size()) throw ValidationError("initial state has wrong length");
    DistributedEstimator est(plant, cfg);
    est.seed_shift(x0);
    std::vector<DistributedStepRecord> out;
    const int M = plant.agents(), n = plant.n(), m = plant.m();
    Vec x = x0;
    Vec u = Vec::Zero(m * M);
    for (int k = 0; k < horizon; ++k) {
        const FaultSample fs = faults.sample(k, M, n);
        x = k == 0 ? Vec(x0 + fs.f) : plant.step_truth(x, u, fs.f);
        const int a1 = leader.mode(k);
        DistributedStepRecord rec{k, a1, x, fs.f, fs.faulty, est.step(plant.measure(x, a1), a1)};
        for (NodeId i = 1; i <= M; ++i) {
            u.segment((i - 1) * m, m) = plant.control(rec.round.nodes[i - 1].chi).segment((i - 1) * m, m);
        }
        out.push_back(std::move(rec));
    }
    return out;
}

} // namespace l1est
