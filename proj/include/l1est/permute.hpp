#pragma once

#include <set>
#include <string>
#include <vector>

#include "json.hpp"

#include "l1est/error.hpp"
#include "l1est/graph.hpp"
#include "l1est/linalg.hpp"
#include "l1est/plant.hpp"

namespace l1est {

/// Node-major <-> coordinate-major rearrangement of vectors in R^{nM}.
///
/// Node-major stacks x_1, ..., x_M (each in R^n). Coordinate-major stacks,
/// for each coordinate c, that coordinate of every node. All index sets
/// here are 0-based; documentation elsewhere uses 1-based ids.
struct PermutationPlan {
    int n = 0;
    int M = 0;
    /// coord_sets[c]: node-major indices holding coordinate c (T_c).
    std::vector<std::vector<int>> coord_sets;
    /// node_sets[i]: coordinate-major indices holding node i+1 (T~_i).
    std::vector<std::vector<int>> node_sets;
    /// forward[p] = node-major index of coordinate-major position p.
    std::vector<int> forward;
    /// inverse[q] = coordinate-major position of node-major index q.
    std::vector<int> inverse;
};

inline PermutationPlan make_plan(int n, int M)
{
    if (n < 1 || M < 1) throw ValidationError("permutation plan needs n, M >= 1");
    PermutationPlan p;
    p.n = n;
    p.M = M;
    p.coord_sets.assign(n, {});
    p.node_sets.assign(M, {});
    p.forward.resize(n * M);
    p.inverse.resize(n * M);
    for (int c = 0; c < n; ++c) {
        for (int i = 0; i < M; ++i) {
            const int pos = c * M + i;
            const int nm = i * n + c;
            p.forward[pos] = nm;
            p.inverse[nm] = pos;
            p.coord_sets[c].push_back(nm);
            p.node_sets[i].push_back(pos);
        }
    }
    return p;
}

inline Vec to_coordinate_major(const Vec& v, const PermutationPlan& plan)
{
    if (v.size() != plan.n * plan.M) {
        throw ValidationError("to_coordinate_major: expected length " + std::to_string(plan.n * plan.M) + ", got "
                              + std::to_string(v.size()));
    }
    Vec out(v.size());
    for (Eigen::Index p = 0; p < v.size(); ++p) out(p) = v(plan.forward[p]);
    return out;
}

inline Vec to_node_major(const Vec& vp, const PermutationPlan& plan)
{
    if (vp.size() != plan.n * plan.M) {
        throw ValidationError("to_node_major: expected length " + std::to_string(plan.n * plan.M) + ", got "
                              + std::to_string(vp.size()));
    }
    Vec out(vp.size());
    for (Eigen::Index p = 0; p < vp.size(); ++p) out(plan.forward[p]) = vp(p);
    return out;
}

/// T~ = union of T~_i over i in faulty (1-based node ids), ascending,
/// coordinate-major 0-based positions.
inline std::vector<int> fault_support_sets(const std::vector<NodeId>& faulty, const PermutationPlan& plan)
{
    std::set<int> out;
    for (NodeId i : faulty) {
        if (i < 1 || i > plan.M) throw ValidationError("fault support: node " + std::to_string(i) + " out of range");
        out.insert(plan.node_sets[i - 1].begin(), plan.node_sets[i - 1].end());
    }
    return {out.begin(), out.end()};
}

/// Permutation matrix P with P(r, perm[r]) = 1, so (P x)(r) = x(perm[r]).
inline Mat permutation_matrix(const std::vector<int>& perm)
{
    const auto size = static_cast<Eigen::Index>(perm.size());
    Mat p = Mat::Zero(size, size);
    for (Eigen::Index r = 0; r < size; ++r) p(r, perm[r]) = 1.0;
    return p;
}

/// Block-diagonal forms of the output matrices in coordinate-major
/// columns: C_p0 = blkdiag(D^T, ..., D^T) and C_p1 = blkdiag([e, D]^T, ...).
/// Satisfies C_pq = P_row,q * C_q * P_col^T exactly.
struct StructuredMatrices {
    PermutationPlan plan;
    Mat cp0;
    Mat cp1;
    std::vector<int> row_perm0;
    std::vector<int> row_perm1;

    const Mat& matrix(int a1) const { return a1 ? cp1 : cp0; }
};

namespace detail {

// Finds, for each target row, an unused source row with an identical pattern.
inline std::vector<int> match_rows(const Mat& source, const Mat& target)
{
    if (source.rows() != target.rows() || source.cols() != target.cols()) {
        throw InternalError("structured matrix shape mismatch: row conventions disagree");
    }
    std::vector<bool> used(source.rows(), false);
    std::vector<int> perm(target.rows(), -1);
    for (Eigen::Index r = 0; r < target.rows(); ++r) {
        for (Eigen::Index s = 0; s < source.rows(); ++s) {
            if (!used[s] && source.row(s) == target.row(r)) {
                perm[r] = static_cast<int>(s);
                used[s] = true;
                break;
            }
        }
        if (perm[r] < 0) {
            throw InternalError("structured matrix row " + std::to_string(r) + " has no matching measurement row");
        }
    }
    return perm;
}

} // namespace detail

inline StructuredMatrices build_structured_matrices(const Graph& g, int n)
{
    const OutputMatrices out = build_output_matrices(g, n);
    const int M = g.node_count();
    StructuredMatrices s;
    s.plan = make_plan(n, M);
    const Mat d = incidence_matrix(g);
    Mat d2(M, d.cols() + 1);
    d2.col(0) = Vec::Unit(M, 0);
    d2.rightCols(d.cols()) = d;
    s.cp0 = linalg::block_diag(Mat(d.transpose()), n);
    s.cp1 = linalg::block_diag(Mat(d2.transpose()), n);

    const Mat pcol = permutation_matrix(s.plan.forward);
    const Mat c0p = out.c0 * pcol.transpose();
    const Mat c1p = out.c1 * pcol.transpose();
    s.row_perm0 = detail::match_rows(c0p, s.cp0);
    s.row_perm1 = detail::match_rows(c1p, s.cp1);

    if (permutation_matrix(s.row_perm0) * out.c0 * pcol.transpose() != s.cp0
        || permutation_matrix(s.row_perm1) * out.c1 * pcol.transpose() != s.cp1) {
        throw InternalError("structured matrix verification failed");
    }
    return s;
}

/// Debug dump. Indices are 0-based.
inline nlohmann::json to_json(const PermutationPlan& p)
{
    return nlohmann::json{{"index_base", 0},       {"n", p.n},
                          {"M", p.M},              {"coord_sets", p.coord_sets},
                          {"node_sets", p.node_sets}, {"forward", p.forward},
                          {"inverse", p.inverse}};
}

} // namespace l1est
