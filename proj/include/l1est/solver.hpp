#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "json.hpp"

#include "l1est/error.hpp"
#include "l1est/linalg.hpp"

namespace l1est {

struct SolverConfig {
    double feas_tol = 1e-8;
    double step_tol = 1e-9;
    int max_iterations = 20000;
    double penalty = 1.0;
    double relaxation = 1.6;

    void validate() const
    {
        if (!(feas_tol > 0) || !(step_tol > 0) || !(penalty > 0)) {
            throw ValidationError("solver tolerances and penalty must be positive");
        }
        if (max_iterations < 1) throw ValidationError("solver max_iterations must be >= 1");
        if (!(relaxation > 0 && relaxation < 2)) throw ValidationError("solver relaxation must lie in (0, 2)");
    }
};

enum class ConstraintKind { equality, ball };

/// minimize ||z - shift||_1 subject to A z = b (equality) or
/// ||A z - b||_2 <= radius (ball). An empty shift means zero.
struct BpProblem {
    Mat a;
    Vec b;
    ConstraintKind kind = ConstraintKind::equality;
    double radius = 0.0;
    Vec shift;
};

struct SolveDiagnostics {
    int iterations = 0;
    double residual = 0.0; // ||Az - b|| or ball violation
    double last_step = 0.0;
    bool converged = false;
};

struct BpSolution {
    Vec z;
    double objective = 0.0;
    SolveDiagnostics diag;
    /// s in the subdifferential of ||. - shift||_1 at z, recovered from the
    /// scaled dual; for the equality problem s = A^T lambda at optimality.
    Vec subgradient;
    Vec lambda;
    /// ||A^T lambda - s||_inf
    double certificate_gap = 0.0;
    /// false when the dual certificate cannot rule out other minimizers
    bool unique = true;
};

inline nlohmann::json to_json(const SolveDiagnostics& d)
{
    return {{"iterations", d.iterations}, {"residual", d.residual}, {"last_step", d.last_step},
            {"converged", d.converged}};
}

/// Projection onto {x : A x = b} with dependent rows pruned. The
/// factorization is computed once per instance.
class AffineProjector {
public:
    AffineProjector(const Mat& a, const Vec& b) : q_(a.cols())
    {
        if (a.rows() != b.size()) throw ValidationError("constraint matrix and rhs disagree in row count");
        if (a.rows() == 0) {
            x0_ = Vec::Zero(q_);
            return;
        }
        Eigen::ColPivHouseholderQR<Mat> rr(a.transpose());
        rr.setThreshold(1e-10);
        rank_ = static_cast<int>(rr.rank());
        if (rank_ == 0) {
            x0_ = Vec::Zero(q_);
        } else {
            Mat ar(rank_, q_);
            Vec br(rank_);
            for (int r = 0; r < rank_; ++r) {
                const auto row = rr.colsPermutation().indices()(r);
                ar.row(r) = a.row(row);
                br(r) = b(row);
            }
            Eigen::HouseholderQR<Mat> qr(ar.transpose());
            q_basis_ = qr.householderQ() * Mat::Identity(q_, rank_);
            const Mat rtop = qr.matrixQR().topLeftCorner(rank_, rank_).triangularView<Eigen::Upper>();
            // x0 = Q R^{-T} b_r is the minimum-norm solution of A_r x = b_r
            const Vec t = rtop.transpose().triangularView<Eigen::Lower>().solve(br);
            x0_ = q_basis_ * t;
        }
        floor_ = (a * x0_ - b).norm();
    }

    /// Least-squares residual of b against range(A); zero for consistent data.
    double residual_floor() const { return floor_; }
    int rank() const { return rank_; }
    const Vec& min_norm_solution() const { return x0_; }

    Vec project(const Vec& v) const
    {
        if (rank_ == 0) return v;
        return v - q_basis_ * (q_basis_.transpose() * v) + x0_;
    }

private:
    Eigen::Index q_;
    int rank_ = 0;
    Mat q_basis_;
    Vec x0_;
    double floor_ = 0.0;
};

namespace detail {

inline Vec shift_or_zero(const Vec& shift, Eigen::Index q)
{
    if (shift.size() == 0) return Vec::Zero(q);
    if (shift.size() != q) throw ValidationError("objective shift has wrong length");
    return shift;
}

inline void finish_certificate(const Mat& a, BpSolution& sol, const Vec& c)
{
    const Eigen::Index q = sol.z.size();
    if (a.rows() == 0) {
        sol.lambda = Vec();
        sol.certificate_gap = sol.subgradient.lpNorm<Eigen::Infinity>();
    } else {
        Eigen::ColPivHouseholderQR<Mat> qr(a.transpose());
        sol.lambda = qr.solve(sol.subgradient);
        sol.certificate_gap = q ? (a.transpose() * sol.lambda - sol.subgradient).lpNorm<Eigen::Infinity>() : 0.0;
    }
    // Unique if the support columns are independent and the certificate is
    // strictly inside (-1, 1) off the support.
    const double support_tol = 1e-7;
    std::vector<Eigen::Index> support;
    bool strict = true;
    for (Eigen::Index j = 0; j < q; ++j) {
        if (std::abs(sol.z(j) - c(j)) > support_tol) {
            support.push_back(j);
        } else if (std::abs(sol.subgradient(j)) >= 1.0 - 1e-6) {
            strict = false;
        }
    }
    bool independent = true;
    if (!support.empty()) {
        Mat as(a.rows(), static_cast<Eigen::Index>(support.size()));
        for (std::size_t s = 0; s < support.size(); ++s) as.col(s) = a.col(support[s]);
        independent = linalg::numerical_rank(as, 1e-9) == static_cast<int>(support.size());
    }
    sol.unique = strict && independent;
}

} // namespace detail

/// Basis pursuit: min ||z - c||_1 s.t. A z = b, by over-relaxed ADMM that
/// alternates affine projection and soft-thresholding around c.
///
/// Small right-hand sides are rescaled: the iteration runs on z = c + s z'
/// with s = min(1, ||b - A c||), since the multiplier must reach unit size
/// and moves only as fast as the iterates. Tolerances are absolute for
/// s = 1 and relative to s below; convergence asks for the projected and
/// thresholded iterates to agree.
inline BpSolution solve_bp(const BpProblem& p, const SolverConfig& cfg = {})
{
    cfg.validate();
    if (p.kind != ConstraintKind::equality) throw ValidationError("solve_bp expects an equality problem");
    const Eigen::Index q = p.a.cols();
    const Vec c = detail::shift_or_zero(p.shift, q);
    const Vec r0 = p.a.rows() ? Vec(p.b - p.a * c) : Vec();
    const AffineProjector proj(p.a, r0);
    if (proj.residual_floor() > cfg.feas_tol * (1.0 + p.b.norm())) {
        throw InfeasibleError("basis pursuit is infeasible: ||Az - b|| cannot go below "
                              + std::to_string(proj.residual_floor()));
    }
    BpSolution sol;
    const double scale = r0.size() ? std::min(1.0, r0.norm()) : 0.0;
    if (scale == 0.0) {
        sol.z = c;
        sol.objective = 0.0;
        sol.diag = {0, 0.0, 0.0, true};
        sol.subgradient = Vec::Zero(q);
        sol.lambda = Vec::Zero(p.a.rows());
        sol.unique = true;
        return sol;
    }
    if (proj.rank() == q) {
        // a single feasible point
        sol.z = c + proj.min_norm_solution();
        sol.diag = {0, (p.a * sol.z - p.b).norm(), 0.0, true};
        sol.objective = (sol.z - c).lpNorm<1>();
        sol.subgradient = Vec::Zero(q);
        for (Eigen::Index j = 0; j < q; ++j) {
            if (sol.z(j) != c(j)) sol.subgradient(j) = sol.z(j) > c(j) ? 1.0 : -1.0;
        }
        detail::finish_certificate(p.a, sol, c);
        sol.unique = true;
        return sol;
    }
    const AffineProjector unit(p.a, r0 / scale);
    const double feas = cfg.feas_tol;
    const double step = cfg.step_tol;
    const double rho = cfg.penalty;
    const double alpha = cfg.relaxation;
    Vec z = Vec::Zero(q);
    Vec u = Vec::Zero(q);
    Vec x(q), xr(q), z_old(q);
    for (int it = 1; it <= cfg.max_iterations; ++it) {
        x = unit.project(z - u);
        xr = alpha * x + (1.0 - alpha) * z;
        z_old = z;
        for (Eigen::Index j = 0; j < q; ++j) z(j) = linalg::soft_threshold(xr(j) + u(j), 1.0 / rho);
        u += xr - z;
        sol.diag.iterations = it;
        const double moved = (z - z_old).norm();
        // distance between the projected and thresholded iterates; unlike
        // ||Az - b|| it is not bounded below by rounding in b
        const double resid = (x - z).norm();
        sol.diag.last_step = moved * scale;
        sol.diag.residual = resid * scale;
        if (resid <= feas && moved <= step) {
            sol.diag.converged = true;
            break;
        }
    }
    sol.z = c + scale * z;
    sol.diag.residual = (p.a * sol.z - p.b).norm();
    sol.objective = (sol.z - c).lpNorm<1>();
    sol.subgradient = rho * u;
    detail::finish_certificate(p.a, sol, c);
    return sol;
}

/// Basis pursuit denoising: min ||z - c||_1 s.t. ||A z - b||_2 <= radius.
/// ADMM on the split z = x, w = A x with a Euclidean-ball projection for w.
inline BpSolution solve_bp_denoise(const BpProblem& p, const SolverConfig& cfg = {})
{
    cfg.validate();
    if (p.kind != ConstraintKind::ball) throw ValidationError("solve_bp_denoise expects a ball problem");
    if (!(p.radius >= 0)) throw ValidationError("ball radius must be non-negative");
    if (p.radius == 0.0) {
        BpProblem eq = p;
        eq.kind = ConstraintKind::equality;
        return solve_bp(eq, cfg);
    }
    const Eigen::Index q = p.a.cols();
    const Eigen::Index rows = p.a.rows();
    const Vec c = detail::shift_or_zero(p.shift, q);
    BpSolution sol;
    const double slack0 = rows ? (p.a * c - p.b).norm() : 0.0;
    if (slack0 <= p.radius) {
        sol.z = c;
        sol.objective = 0.0;
        sol.diag = {0, 0.0, 0.0, true};
        sol.subgradient = Vec::Zero(q);
        sol.lambda = Vec::Zero(rows);
        sol.unique = true;
        return sol;
    }
    const AffineProjector proj(p.a, p.b);
    if (proj.residual_floor() > p.radius + cfg.feas_tol) {
        throw InfeasibleError("ball-constrained basis pursuit is infeasible: distance to range(A) is "
                              + std::to_string(proj.residual_floor()));
    }
    const double rho = cfg.penalty;
    const double alpha = cfg.relaxation;
    const Eigen::LLT<Mat> normal(Mat::Identity(q, q) + p.a.transpose() * p.a);
    Vec z = c, w = p.a * c;
    Vec u1 = Vec::Zero(q), u2 = Vec::Zero(rows);
    Vec x(q), ax(rows), hx(q), hw(rows), z_old(q), t(rows);
    for (int it = 1; it <= cfg.max_iterations; ++it) {
        x = normal.solve(z - u1 + p.a.transpose() * (w - u2));
        ax = p.a * x;
        hx = alpha * x + (1.0 - alpha) * z;
        hw = alpha * ax + (1.0 - alpha) * w;
        z_old = z;
        for (Eigen::Index j = 0; j < q; ++j) z(j) = c(j) + linalg::soft_threshold(hx(j) + u1(j) - c(j), 1.0 / rho);
        t = hw + u2 - p.b;
        const double tn = t.norm();
        w = p.b + (tn > p.radius ? Vec(t * (p.radius / tn)) : t);
        u1 += hx - z;
        u2 += hw - w;
        sol.diag.iterations = it;
        sol.diag.last_step = (z - z_old).norm();
        sol.diag.residual = std::max(0.0, (p.a * z - p.b).norm() - p.radius);
        if (sol.diag.residual <= cfg.feas_tol && sol.diag.last_step <= cfg.step_tol
            && (x - z).norm() <= cfg.feas_tol) {
            sol.diag.converged = true;
            break;
        }
    }
    sol.z = z;
    sol.objective = (z - c).lpNorm<1>();
    sol.subgradient = rho * u1;
    sol.lambda = Vec();
    sol.certificate_gap = 0.0;
    sol.unique = true;
    return sol;
}

/// One node's step of the distributed scheme:
///   min  l1_weight * ||chi - shift||_1 + linear^T chi + (weight / 2) ||chi||^2
///   s.t. rows * chi = y
struct NodeProblem {
    Mat rows;
    Vec y;
    Vec shift;
    Vec linear;
    double weight = 1.0;
    double l1_weight = 1.0;
    /// Optional starting multiplier for the rows.
    Vec warm_start;
};

struct NodeSolution {
    Vec chi;
    SolveDiagnostics diag;
    /// Multiplier of the constraint rows when found by the dual method
    /// (empty otherwise); feed it back as a warm start.
    Vec multiplier;
};

namespace detail {

// argmin_w l1 |w - c| + v w + (q/2) w^2 + (rho/2) (w - a)^2
inline double scalar_prox(double a, double c, double v, double q, double rho, double l1)
{
    return c + linalg::soft_threshold((rho * a - v) / (q + rho) - c, l1 / (q + rho));
}

// Exact maximizer over t >= 0 of the dual along lambda + t d. The
// directional derivative is piecewise linear and non-increasing in t, with
// kinks where a coordinate enters or leaves its threshold band.
inline double node_exact_step(const NodeProblem& p, const Vec& g, const Vec& dir_g, double slope0, double dy)
{
    const double tau = p.l1_weight / p.weight;
    auto deriv = [&](double t) {
        double acc = -dy;
        for (Eigen::Index j = 0; j < g.size(); ++j) {
            acc += dir_g(j) * scalar_prox(0.0, p.shift(j), g(j) + t * dir_g(j), p.weight, 0.0, p.l1_weight);
        }
        return acc;
    };
    std::vector<double> kinks;
    for (Eigen::Index j = 0; j < g.size(); ++j) {
        if (dir_g(j) == 0.0) continue;
        const double s0 = -g(j) / p.weight - p.shift(j);
        for (double edge : {tau, -tau}) {
            const double t = (s0 - edge) * p.weight / dir_g(j);
            if (t > 0) kinks.push_back(t);
        }
    }
    std::sort(kinks.begin(), kinks.end());
    double t_lo = 0.0, d_lo = slope0;
    for (double t : kinks) {
        const double d = deriv(t);
        if (d <= 0) return d_lo == d ? t : t_lo + (t - t_lo) * d_lo / (d_lo - d);
        t_lo = t;
        d_lo = d;
    }
    // past the last kink the derivative is linear; probe one unit ahead
    const double d1 = deriv(t_lo + 1.0);
    if (d1 >= d_lo) return t_lo + 1.0;
    return t_lo + d_lo / (d_lo - d1);
}

// Regularized semismooth Newton ascent on the concave, piecewise-quadratic
// dual with exact line search. Returns false if it fails to reach the
// feasibility tolerance, leaving the caller to fall back on ADMM.
inline bool node_dual_newton(const NodeProblem& p, const SolverConfig& cfg, NodeSolution& sol, Vec lambda)
{
    const Eigen::Index r = p.rows.rows();
    if (lambda.size() != r) lambda = Vec::Zero(r);
    for (int it = 1; it <= 100; ++it) {
        const Vec g = p.linear + p.rows.transpose() * lambda;
        Vec chi(g.size());
        for (Eigen::Index j = 0; j < g.size(); ++j) chi(j) = scalar_prox(0.0, p.shift(j), g(j), p.weight, 0.0, p.l1_weight);
        const Vec grad = p.rows * chi - p.y;
        sol.diag.iterations = it;
        sol.diag.residual = grad.norm();
        if (sol.diag.residual <= cfg.feas_tol) {
            sol.chi = std::move(chi);
            sol.multiplier = std::move(lambda);
            sol.diag.converged = true;
            return true;
        }
        // active coordinates move with lambda; the others sit at the kink
        Mat h = Mat::Zero(r, r);
        for (Eigen::Index j = 0; j < g.size(); ++j) {
            const double t = -g(j) / p.weight - p.shift(j);
            if (std::abs(t) > p.l1_weight / p.weight) h.noalias() += p.rows.col(j) * p.rows.col(j).transpose() / p.weight;
        }
        // flat dual directions make h singular; a shift proportional to the
        // residual keeps steps bounded and vanishes near the solution
        h.diagonal().array() += std::min(1.0, sol.diag.residual) + 1e-12 * (1.0 + h.diagonal().maxCoeff());
        const Vec d = h.ldlt().solve(grad);
        const double slope0 = grad.dot(d);
        if (!(slope0 > 0)) return false;
        const double t = node_exact_step(p, g, p.rows.transpose() * d, slope0, d.dot(p.y));
        if (!(t > 0) || !std::isfinite(t)) return false;
        lambda += t * d;
        sol.diag.last_step = t * d.norm();
    }
    return false;
}

} // namespace detail

/// Variant reusing a projector built from (p.rows, p.y).
inline NodeSolution solve_node_subproblem(const NodeProblem& p, const AffineProjector& proj, const SolverConfig& cfg)
{
    cfg.validate();
    const Eigen::Index q = p.shift.size();
    if (p.linear.size() != q || p.rows.cols() != q) throw ValidationError("node subproblem dimensions disagree");
    NodeSolution sol;
    // an isolated node has no proximal term and no prices: plain basis pursuit
    if (p.weight == 0.0 && p.linear.isZero(0.0) && p.l1_weight > 0) {
        if (p.rows.rows() == 0) {
            sol.chi = p.shift;
            sol.diag = {0, 0.0, 0.0, true};
            return sol;
        }
        const BpSolution bp = solve_bp({p.rows, p.y - p.rows * p.shift, ConstraintKind::equality, 0.0, {}}, cfg);
        sol.chi = p.shift + bp.z;
        sol.diag = bp.diag;
        return sol;
    }
    if (!(p.weight > 0)) throw ValidationError("node subproblem weight must be positive");
    if (p.rows.rows() == 0) {
        sol.chi.resize(q);
        for (Eigen::Index j = 0; j < q; ++j) {
            sol.chi(j) = detail::scalar_prox(0.0, p.shift(j), p.linear(j), p.weight, 0.0, p.l1_weight);
        }
        sol.diag = {0, 0.0, 0.0, true};
        return sol;
    }
    if (proj.residual_floor() > cfg.feas_tol * (1.0 + p.y.norm())) {
        throw InfeasibleError("node subproblem is infeasible: residual floor " + std::to_string(proj.residual_floor()));
    }
    if (detail::node_dual_newton(p, cfg, sol, p.warm_start)) return sol;
    sol.diag = {};
    const double rho = cfg.penalty;
    const double alpha = cfg.relaxation;
    Vec w = proj.project(p.shift);
    Vec u = Vec::Zero(q);
    Vec x(q), xr(q), w_old(q);
    for (int it = 1; it <= cfg.max_iterations; ++it) {
        x = proj.project(w - u);
        xr = alpha * x + (1.0 - alpha) * w;
        w_old = w;
        for (Eigen::Index j = 0; j < q; ++j) {
            w(j) = detail::scalar_prox(xr(j) + u(j), p.shift(j), p.linear(j), p.weight, rho, p.l1_weight);
        }
        u += xr - w;
        sol.diag.iterations = it;
        sol.diag.last_step = (w - w_old).norm();
        sol.diag.residual = (p.rows * w - p.y).norm();
        if (sol.diag.residual <= cfg.feas_tol && sol.diag.last_step <= cfg.step_tol) {
            sol.diag.converged = true;
            break;
        }
    }
    sol.chi = w;
    return sol;
}

/// Strongly convex, so the minimizer is unique. Without constraint rows
/// it is solved in closed form per coordinate; otherwise by Newton ascent
/// on the small dual, with ADMM (affine projection plus the scalar
/// l1-plus-quadratic prox) as a fallback.
inline NodeSolution solve_node_subproblem(const NodeProblem& p, const SolverConfig& cfg = {})
{
    if (p.rows.rows() != p.y.size()) throw ValidationError("node subproblem rows and y disagree");
    return solve_node_subproblem(p, AffineProjector(p.rows, p.y), cfg);
}

} // namespace l1est
