#pragma once

#include <optional>
#include <string>

#include "l1est/error.hpp"
#include "l1est/linalg.hpp"
#include "l1est/plant.hpp"
#include "l1est/solver.hpp"

namespace l1est {

enum class EstimatorKind { l1, l1_denoise, kalman };

inline std::string to_string(EstimatorKind k)
{
    switch (k) {
    case EstimatorKind::l1: return "l1";
    case EstimatorKind::l1_denoise: return "l1_denoise";
    case EstimatorKind::kalman: return "kalman";
    }
    return "?";
}

inline EstimatorKind parse_estimator_kind(const std::string& s)
{
    if (s == "l1") return EstimatorKind::l1;
    if (s == "l1_denoise") return EstimatorKind::l1_denoise;
    if (s == "kalman") return EstimatorKind::kalman;
    throw ValidationError("unknown estimator '" + s + "' (expected l1, l1_denoise or kalman)");
}

/// Fixed-gain Kalman weights P = p_scale * I and V = v_scale * I, with V
/// sized to whichever output matrix is active at the step.
struct KalmanParams {
    double p_scale = 1e-4;
    double v_scale = 1e-4;
};

struct StepEstimate {
    Vec x;
    Vec f;
    SolveDiagnostics diag;
    /// set when the l1 minimizer may not be unique
    bool nonunique = false;
};

/// A x_prev + B u_prev.
inline Vec apriori(const NetworkPlant& plant, const Vec& x_prev, const Vec& u_prev)
{
    if (x_prev.size() != plant.state_size()) throw ValidationError("previous estimate has wrong length");
    if (u_prev.size() != plant.b().cols()) throw ValidationError("control input has wrong length");
    return plant.a() * x_prev + plant.b() * u_prev;
}

namespace detail {

inline StepEstimate finish(const Vec& prior, Vec x_hat)
{
    StepEstimate e;
    e.x = std::move(x_hat);
    e.f = e.x - prior;
    return e;
}

} // namespace detail

/// min ||x - prior||_1 s.t. y = C x, solved as basis pursuit on z = x - prior.
inline StepEstimate l1_step_from_prior(const NetworkPlant& plant, const Vec& prior, const Vec& y, int a1,
                                       const SolverConfig& cfg = {})
{
    if (prior.size() != plant.state_size()) throw ValidationError("l1_step: prior has wrong length");
    const Mat& c = plant.c(a1);
    if (y.size() != c.rows()) throw ValidationError("l1_step: measurement has wrong length for the leader mode");
    BpProblem p{c, y - c * prior, ConstraintKind::equality, 0.0, {}};
    const BpSolution s = solve_bp(p, cfg);
    StepEstimate e = detail::finish(prior, prior + s.z);
    e.diag = s.diag;
    e.nonunique = !s.unique;
    return e;
}

inline StepEstimate l1_step(const NetworkPlant& plant, const Vec& x_prev, const Vec& y, const Vec& u_prev, int a1,
                            const SolverConfig& cfg = {})
{
    return l1_step_from_prior(plant, apriori(plant, x_prev, u_prev), y, a1, cfg);
}

/// min ||x - prior||_1 s.t. ||y - C x||_2 <= w_max.
inline StepEstimate l1_denoise_step_from_prior(const NetworkPlant& plant, const Vec& prior, const Vec& y, int a1,
                                               double w_max, const SolverConfig& cfg = {})
{
    if (!(w_max >= 0)) throw ValidationError("w_max must be non-negative");
    if (w_max == 0.0) return l1_step_from_prior(plant, prior, y, a1, cfg);
    if (prior.size() != plant.state_size()) throw ValidationError("l1_denoise_step: prior has wrong length");
    const Mat& c = plant.c(a1);
    if (y.size() != c.rows()) throw ValidationError("l1_denoise_step: measurement has wrong length");
    BpProblem p{c, y - c * prior, ConstraintKind::ball, w_max, {}};
    const BpSolution s = solve_bp_denoise(p, cfg);
    StepEstimate e = detail::finish(prior, prior + s.z);
    e.diag = s.diag;
    return e;
}

inline StepEstimate l1_denoise_step(const NetworkPlant& plant, const Vec& x_prev, const Vec& y, const Vec& u_prev,
                                    int a1, double w_max, const SolverConfig& cfg = {})
{
    return l1_denoise_step_from_prior(plant, apriori(plant, x_prev, u_prev), y, a1, w_max, cfg);
}

/// Steady-state Kalman update: predict, then correct with the fixed gain
/// P C^T (V + C P C^T)^{-1} applied to the innovation y - C x^-.
inline StepEstimate kalman_step_from_prior(const NetworkPlant& plant, const Vec& prior, const Vec& y, int a1,
                                           const KalmanParams& kp = {})
{
    if (!(kp.p_scale > 0) || !(kp.v_scale > 0)) throw ValidationError("Kalman P and V scales must be positive");
    if (prior.size() != plant.state_size()) throw ValidationError("kalman_step: prior has wrong length");
    const Mat& c = plant.c(a1);
    if (y.size() != c.rows()) throw ValidationError("kalman_step: measurement has wrong length");
    const Eigen::Index q = plant.state_size();
    const Mat p = kp.p_scale * Mat::Identity(q, q);
    const Mat s = kp.v_scale * Mat::Identity(c.rows(), c.rows()) + c * p * c.transpose();
    const Eigen::LLT<Mat> llt(s);
    if (llt.info() != Eigen::Success) throw RuntimeError("Kalman innovation covariance is not positive definite");
    const Vec correction = p * c.transpose() * llt.solve(y - c * prior);
    StepEstimate e = detail::finish(prior, prior + correction);
    e.diag.converged = true;
    return e;
}

inline StepEstimate kalman_step(const NetworkPlant& plant, const Vec& x_prev, const Vec& y, const Vec& u_prev, int a1,
                                const KalmanParams& kp = {})
{
    return kalman_step_from_prior(plant, apriori(plant, x_prev, u_prev), y, a1, kp);
}

/// Sequential estimator; owns x_hat(k-1), which starts at zero. The first
/// a-priori estimate can instead be supplied directly (a known initial
/// state) with seed_prior.
class Estimator {
public:
    Estimator(const NetworkPlant& plant, EstimatorKind kind, SolverConfig solver = {}, KalmanParams kalman = {},
              double w_max = 0.0)
        : plant_(&plant), kind_(kind), solver_(solver), kalman_(kalman), w_max_(w_max),
          x_prev_(Vec::Zero(plant.state_size()))
    {
        solver_.validate();
    }

    EstimatorKind kind() const { return kind_; }
    const Vec& previous() const { return x_prev_; }
    void reset(const Vec& x_prev) { x_prev_ = x_prev; }

    /// Use `prior` in place of A x_hat(k-1) + B u(k-1) on the next step only.
    void seed_prior(const Vec& prior)
    {
        if (prior.size() != plant_->state_size()) throw ValidationError("seed_prior: wrong length");
        seeded_ = prior;
    }

    StepEstimate step(const Vec& y, const Vec& u_prev, int a1)
    {
        const Vec prior = seeded_ ? *seeded_ : apriori(*plant_, x_prev_, u_prev);
        seeded_.reset();
        StepEstimate e;
        switch (kind_) {
        case EstimatorKind::l1: e = l1_step_from_prior(*plant_, prior, y, a1, solver_); break;
        case EstimatorKind::l1_denoise: e = l1_denoise_step_from_prior(*plant_, prior, y, a1, w_max_, solver_); break;
        case EstimatorKind::kalman: e = kalman_step_from_prior(*plant_, prior, y, a1, kalman_); break;
        }
        x_prev_ = e.x;
        return e;
    }

private:
    const NetworkPlant* plant_;
    EstimatorKind kind_;
    SolverConfig solver_;
    KalmanParams kalman_;
    double w_max_;
    Vec x_prev_;
    std::optional<Vec> seeded_;
};

} // namespace l1est
