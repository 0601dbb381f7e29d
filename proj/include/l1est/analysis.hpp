#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "l1est/error.hpp"
#include "l1est/linalg.hpp"
#include "l1est/permute.hpp"
#include "l1est/plant.hpp"

namespace l1est {

/// Sum of absolute entries of A.
inline double eta(const Mat& a)
{
    if (a.rows() != a.cols()) throw ValidationError("eta expects a square matrix");
    return a.cwiseAbs().sum();
}

enum class NspMethod { analytic_structured, trivial_kernel, kernel_dim_1_exact, sampled_falsifier };

inline std::string to_string(NspMethod m)
{
    switch (m) {
    case NspMethod::analytic_structured: return "analytic-structured";
    case NspMethod::trivial_kernel: return "trivial-kernel";
    case NspMethod::kernel_dim_1_exact: return "kernel-dim-1-exact";
    case NspMethod::sampled_falsifier: return "sampled-falsifier";
    }
    return "?";
}

struct NspVerdict {
    bool satisfies = true;
    /// Kernel vector with ||v_T||_1 >= ||v_Tc||_1; present iff !satisfies.
    std::optional<Vec> witness;
    NspMethod method = NspMethod::analytic_structured;
    /// For the sampled falsifier, a "true" verdict means no violation was
    /// found, not that the property is proven.
    bool proven = true;
};

/// ||v_T||_1 - ||v_Tc||_1 for a 0-based index set T.
inline double nsp_margin(const Vec& v, const std::vector<int>& t)
{
    std::vector<bool> in(v.size(), false);
    for (int i : t) in.at(i) = true;
    double on = 0.0, off = 0.0;
    for (Eigen::Index i = 0; i < v.size(); ++i) (in[i] ? on : off) += std::abs(v(i));
    return on - off;
}

namespace detail {

inline void check_node_set(int M, const std::vector<NodeId>& nodes)
{
    std::set<NodeId> seen;
    for (NodeId i : nodes) {
        if (i < 1 || i > M) throw ValidationError("node " + std::to_string(i) + " outside 1.." + std::to_string(M));
        if (!seen.insert(i).second) throw ValidationError("node " + std::to_string(i) + " repeated in set");
    }
}

// Violation test with a relative tolerance so that exact ties (which the
// property treats as violations) survive rounding in computed kernels.
inline bool violates(const Vec& v, const std::vector<int>& t)
{
    return nsp_margin(v, t) >= -1e-9 * v.lpNorm<1>();
}

} // namespace detail

/// T~-NSP of the structured output matrix for fault set I on a weakly
/// connected topology. The kernel of C_p0 is spanned by the per-coordinate
/// consensus vectors, giving ||v_T~||_1 = |I| S and ||v_T~c||_1 = (M - |I|) S
/// with S = sum_j |gamma_j|; C_p1 has a trivial kernel.
inline NspVerdict nsp_check_structured(int M, int n, const std::vector<NodeId>& faulty, bool active)
{
    if (M < 1 || n < 1) throw ValidationError("nsp_check_structured needs M, n >= 1");
    detail::check_node_set(M, faulty);
    NspVerdict v;
    v.method = NspMethod::analytic_structured;
    if (active || faulty.empty()) return v;
    const auto count = static_cast<int>(faulty.size());
    v.satisfies = 2 * count < M;
    if (!v.satisfies) v.witness = Vec::Ones(n * M);
    return v;
}

/// NSP of an arbitrary matrix for a 0-based index set T. Exact when the
/// kernel has dimension 0 or 1; otherwise a seeded falsifier over basis
/// vectors, their signed pairwise combinations and `samples` random unit
/// kernel vectors.
inline NspVerdict nsp_check_generic(const Mat& a, const std::vector<int>& t, int samples = 200,
                                    std::uint64_t seed = 1)
{
    for (int i : t) {
        if (i < 0 || i >= a.cols()) throw ValidationError("NSP index " + std::to_string(i) + " out of range");
    }
    const Mat k = linalg::kernel_basis(a, 1e-10);
    NspVerdict v;
    if (k.cols() == 0) {
        v.method = NspMethod::trivial_kernel;
        return v;
    }
    auto test = [&](const Vec& cand) {
        if (cand.lpNorm<1>() == 0.0 || !detail::violates(cand, t)) return false;
        v.satisfies = false;
        v.witness = cand;
        return true;
    };
    if (k.cols() == 1) {
        v.method = NspMethod::kernel_dim_1_exact;
        test(k.col(0));
        return v;
    }
    v.method = NspMethod::sampled_falsifier;
    v.proven = false;
    for (Eigen::Index c = 0; c < k.cols(); ++c) {
        if (test(k.col(c))) return v;
    }
    for (Eigen::Index c = 0; c < k.cols(); ++c) {
        for (Eigen::Index d = c + 1; d < k.cols(); ++d) {
            if (test(k.col(c) + k.col(d)) || test(k.col(c) - k.col(d))) return v;
        }
    }
    if (test(k.rowwise().sum())) return v;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd(0.0, 1.0);
    for (int s = 0; s < samples; ++s) {
        Vec g(k.cols());
        for (Eigen::Index c = 0; c < g.size(); ++c) g(c) = nd(rng);
        if (test(k * g.normalized())) return v;
    }
    return v;
}

struct RecoveryReport {
    std::vector<bool> per_step;
    bool all = true;
};

/// |I_k| < M/2 for each k in [0, horizon).
inline RecoveryReport recovery_limit_holds(const FaultSchedule& s, int M, int n, int horizon)
{
    RecoveryReport r;
    for (int k = 0; k < horizon; ++k) {
        const auto count = static_cast<int>(s.sample(k, M, n).faulty.size());
        r.per_step.push_back(2 * count < M);
        r.all = r.all && r.per_step.back();
    }
    return r;
}

struct ErrorBoundReport {
    int M = 0;
    int faulty = 0;
    double eta = 0.0;
    double d_max = 0.0;
    /// 2 (M - |I|) / (M - 2|I|) * eta * d_max
    double fault_bound = 0.0;
    /// (3M - 4|I|) / (M - 2|I|) * eta
    double growth_factor = 0.0;
};

inline ErrorBoundReport fault_error_bound(int M, int faulty_count, double eta_value, double d_max)
{
    if (M < 1 || faulty_count < 0) throw ValidationError("fault_error_bound: bad M or |I|");
    if (!(d_max >= 0)) throw ValidationError("fault_error_bound: d_max must be non-negative");
    if (2 * faulty_count >= M) {
        throw UndefinedBoundError("error bound undefined for |I| = " + std::to_string(faulty_count)
                                  + " >= M/2 with M = " + std::to_string(M));
    }
    ErrorBoundReport r;
    r.M = M;
    r.faulty = faulty_count;
    r.eta = eta_value;
    r.d_max = d_max;
    const double denom = M - 2.0 * faulty_count;
    r.fault_bound = 2.0 * (M - faulty_count) / denom * eta_value * d_max;
    r.growth_factor = (3.0 * M - 4.0 * faulty_count) / denom * eta_value;
    return r;
}

inline ErrorBoundReport fault_error_bound(int M, int faulty_count, const Mat& a, double d_max)
{
    return fault_error_bound(M, faulty_count, eta(a), d_max);
}

struct RecursionStep {
    int a1 = 0;
    int faulty = 0;
};

/// d(0) = d0; for k >= 1, d(k) = d_bar on active steps and
/// (3M - 4|I_k|) / (M - 2|I_k|) * eta * d(k-1) + v_max otherwise.
/// steps[k-1] describes step k.
inline std::vector<double> error_recursion(int M, double d0, const std::vector<RecursionStep>& steps,
                                           double eta_value, double d_bar, double v_max = 0.0)
{
    if (!(d0 >= 0) || !(d_bar >= 0) || !(v_max >= 0)) {
        throw ValidationError("error_recursion: d0, d_bar and v_max must be non-negative");
    }
    std::vector<double> d{d0};
    for (std::size_t k = 0; k < steps.size(); ++k) {
        const auto& s = steps[k];
        if (2 * s.faulty >= M) {
            throw UndefinedBoundError("error bound undefined at step " + std::to_string(k + 1) + ": |I_k| = "
                                      + std::to_string(s.faulty) + " >= M/2");
        }
        if (s.a1) {
            d.push_back(d_bar);
        } else {
            const double g = (3.0 * M - 4.0 * s.faulty) / (M - 2.0 * s.faulty) * eta_value;
            d.push_back(g * d.back() + v_max);
        }
    }
    return d;
}

struct Counterexample {
    Vec fault;     // node-major, supported on the blocks of I
    Vec competing; // fault + kernel, same measurements, no larger l1 norm
    Vec kernel;    // stacked consensus vector (all gamma_j = 1)
};

/// Non-recoverable fault for |I| >= M/2 in non-active mode: negate the
/// consensus kernel vector on T~ so that f + v zeroes the faulty blocks
/// and costs (M - |I|) n <= |I| n.
inline Counterexample counterexample_fault(int M, int n, const std::vector<NodeId>& faulty)
{
    detail::check_node_set(M, faulty);
    if (2 * static_cast<int>(faulty.size()) < M) {
        throw ValidationError("no counterexample exists for |I| = " + std::to_string(faulty.size()) + " < M/2");
    }
    const PermutationPlan plan = make_plan(n, M);
    const Vec vp = Vec::Ones(n * M);
    Vec fp = Vec::Zero(n * M);
    for (int idx : fault_support_sets(faulty, plan)) fp(idx) = -vp(idx);
    Counterexample c;
    c.kernel = to_node_major(vp, plan);
    c.fault = to_node_major(fp, plan);
    c.competing = c.fault + c.kernel;
    return c;
}

} // namespace l1est
