#pragma once

#include <algorithm>
#include <queue>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "l1est/error.hpp"
#include "l1est/linalg.hpp"

namespace l1est {

/// Node ids are 1-based throughout the public API.
using NodeId = int;

/// Oriented edge. For an input pair (i, j) node i is the head, and in the
/// measurement model the head is the node that senses x_i - x_j.
struct Edge {
    NodeId head;
    NodeId tail;

    friend bool operator==(const Edge&, const Edge&) = default;
};

/// Immutable undirected-connectivity graph with a fixed edge orientation.
class Graph {
public:
    Graph() = default;

    int node_count() const { return node_count_; }
    int edge_count() const { return static_cast<int>(edges_.size()); }
    const std::vector<Edge>& edges() const { return edges_; }

    bool contains(NodeId i) const { return i >= 1 && i <= node_count_; }

    /// Neighbors under the undirected view, ascending.
    const std::vector<NodeId>& neighbors_of(NodeId i) const { return adjacency_.at(i - 1); }

    /// Tails of the edges headed at i, ascending. These are the relative
    /// measurements x_i - x_j that node i owns.
    const std::vector<NodeId>& measured_by(NodeId i) const { return measured_.at(i - 1); }

    int degree(NodeId i) const { return static_cast<int>(neighbors_of(i).size()); }

    friend Graph build_graph(int node_count, const std::vector<std::pair<NodeId, NodeId>>& pairs);

private:
    int node_count_ = 0;
    std::vector<Edge> edges_;
    std::vector<std::vector<NodeId>> adjacency_;
    std::vector<std::vector<NodeId>> measured_;
};

struct Bipartition {
    std::vector<NodeId> class_one;
    std::vector<NodeId> class_two;

    /// 1 or 2. Throws for ids in neither class.
    int class_of(NodeId i) const
    {
        if (std::binary_search(class_one.begin(), class_one.end(), i)) return 1;
        if (std::binary_search(class_two.begin(), class_two.end(), i)) return 2;
        throw ValidationError("node " + std::to_string(i) + " not in bipartition");
    }
};

struct ConnectivityReport {
    bool weakly_connected = false;
    int incidence_rank = 0;
};

inline std::string describe_edge(NodeId i, NodeId j)
{
    std::ostringstream os;
    os << "(" << i << "," << j << ")";
    return os.str();
}

inline Graph build_graph(int node_count, const std::vector<std::pair<NodeId, NodeId>>& pairs)
{
    if (node_count < 1) {
        throw ValidationError("graph needs at least one node, got " + std::to_string(node_count));
    }
    Graph g;
    g.node_count_ = node_count;
    g.adjacency_.assign(node_count, {});
    g.measured_.assign(node_count, {});
    std::set<std::pair<NodeId, NodeId>> seen;
    for (const auto& [i, j] : pairs) {
        if (i < 1 || i > node_count || j < 1 || j > node_count) {
            throw ValidationError("edge " + describe_edge(i, j) + " references a node outside 1.."
                                  + std::to_string(node_count));
        }
        if (i == j) throw ValidationError("edge " + describe_edge(i, j) + " is a self-loop");
        if (!seen.emplace(std::min(i, j), std::max(i, j)).second) {
            throw ValidationError("edge " + describe_edge(i, j) + " duplicates an earlier edge");
        }
        g.edges_.push_back({i, j});
        g.adjacency_[i - 1].push_back(j);
        g.adjacency_[j - 1].push_back(i);
        g.measured_[i - 1].push_back(j);
    }
    for (auto& a : g.adjacency_) std::sort(a.begin(), a.end());
    for (auto& a : g.measured_) std::sort(a.begin(), a.end());
    return g;
}

/// D[i, e] = +1 if node i is the head of edge e, -1 if it is the tail.
inline Mat incidence_matrix(const Graph& g)
{
    Mat d = Mat::Zero(g.node_count(), g.edge_count());
    for (int e = 0; e < g.edge_count(); ++e) {
        d(g.edges()[e].head - 1, e) = 1.0;
        d(g.edges()[e].tail - 1, e) = -1.0;
    }
    return d;
}

inline std::vector<NodeId> neighbors(const Graph& g, NodeId i)
{
    if (!g.contains(i)) {
        throw ValidationError("node " + std::to_string(i) + " outside 1.." + std::to_string(g.node_count()));
    }
    return g.neighbors_of(i);
}

namespace detail {

inline std::vector<int> component_labels(const Graph& g)
{
    std::vector<int> label(g.node_count(), -1);
    int next = 0;
    for (int s = 0; s < g.node_count(); ++s) {
        if (label[s] >= 0) continue;
        std::queue<int> q;
        q.push(s);
        label[s] = next;
        while (!q.empty()) {
            const int u = q.front();
            q.pop();
            for (NodeId w : g.neighbors_of(u + 1)) {
                if (label[w - 1] < 0) {
                    label[w - 1] = next;
                    q.push(w - 1);
                }
            }
        }
        ++next;
    }
    return label;
}

} // namespace detail

inline ConnectivityReport check_weak_connectivity(const Graph& g)
{
    const auto label = detail::component_labels(g);
    ConnectivityReport rep;
    rep.weakly_connected = std::all_of(label.begin(), label.end(), [](int l) { return l == 0; });
    rep.incidence_rank = linalg::numerical_rank(incidence_matrix(g), 1e-8);
    return rep;
}

/// BFS two-coloring from node 1. Requires a weakly connected graph.
inline Bipartition bipartition(const Graph& g)
{
    if (!check_weak_connectivity(g).weakly_connected) {
        throw ValidationError("bipartition requires a weakly connected graph");
    }
    std::vector<int> color(g.node_count(), 0);
    std::queue<NodeId> q;
    color[0] = 1;
    q.push(1);
    while (!q.empty()) {
        const NodeId u = q.front();
        q.pop();
        for (NodeId w : g.neighbors_of(u)) {
            if (color[w - 1] == 0) {
                color[w - 1] = 3 - color[u - 1];
                q.push(w);
            } else if (color[w - 1] == color[u - 1]) {
                throw ValidationError("graph is not bipartite: edge " + describe_edge(u, w)
                                      + " closes an odd cycle (add a relay node to break it)");
            }
        }
    }
    Bipartition b;
    for (int i = 0; i < g.node_count(); ++i) {
        (color[i] == 1 ? b.class_one : b.class_two).push_back(i + 1);
    }
    return b;
}

/// Path 1-2-...-M.
inline Graph chain_graph(int node_count)
{
    std::vector<std::pair<NodeId, NodeId>> e;
    for (int i = 1; i < node_count; ++i) e.emplace_back(i, i + 1);
    return build_graph(node_count, e);
}

/// rows x cols lattice, row-major ids, each edge listed once from the
/// smaller id. Node 1 is a corner.
inline Graph grid_graph(int rows, int cols)
{
    std::vector<std::pair<NodeId, NodeId>> e;
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) {
            const int id = r * cols + c + 1;
            if (c + 1 < cols) e.emplace_back(id, id + 1);
            if (r + 1 < rows) e.emplace_back(id, id + cols);
        }
    }
    return build_graph(rows * cols, e);
}

} // namespace l1est
