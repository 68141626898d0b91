#pragma once

// Time-domain machinery shared by the structural models: Newmark integration of
// linear and nonlinear MDOF systems under ground acceleration, stiffness
// proportional damping, and first-mode extraction.

#include <Eigen/Dense>

#include <cmath>
#include <concepts>
#include <limits>
#include <optional>
#include <string>
#include <utility>

#include "mvbu/error.hpp"
#include "mvbu/time_series.hpp"

namespace mvbu::dynamics {

using Eigen::MatrixXd;
using Eigen::VectorXd;

struct LinearSystem {
    MatrixXd mass;
    MatrixXd stiffness;
    MatrixXd damping;
    VectorXd influence;

    int dof_count() const { return static_cast<int>(mass.rows()); }
    void validate() const;
};

struct IntegrationConfig {
    double dt = 0.01;
    double newmark_beta = 0.25;
    double newmark_gamma = 0.5;
    double newton_tol = 1e-6; // absolute, in force units of the system
    int newton_max_iter = 50;

    void validate() const;
};

/// All arrays are dof_count x n_steps. Displacement, velocity and acceleration
/// are relative to the ground.
struct ResponseHistory {
    double dt = 0.0;
    MatrixXd displacement;
    MatrixXd velocity;
    MatrixXd acceleration;
    MatrixXd absolute_acceleration;

    int steps() const { return static_cast<int>(displacement.cols()); }
    TimeSeries channel(const MatrixXd& m, int dof) const;
};

struct InitialConditions {
    VectorXd displacement;
    VectorXd velocity;
};

struct ModalResult {
    double frequency_hz = 0.0;
    VectorXd shape; // max-magnitude entry scaled to +1
};

bool is_symmetric(const MatrixXd& a, double rel_tol = 1e-9);

ModalResult modal_first(const MatrixXd& mass, const MatrixXd& stiffness);

/// a1 such that C = a1 K gives damping ratio zeta in a mode of frequency f1.
double stiffness_proportional_coefficient(double f1_hz, double zeta);
MatrixXd stiffness_proportional_damping(const MatrixXd& stiffness, double f1_hz, double zeta);

ResponseHistory integrate(const LinearSystem& system, const TimeSeries& ground,
                          const IntegrationConfig& cfg,
                          const std::optional<InitialConditions>& init = std::nullopt);

// ---------------------------------------------------------------------------
// Nonlinear systems
// ---------------------------------------------------------------------------

enum class DampingMode { Constant, Instantaneous };

template <class State>
struct RestoringEval {
    VectorXd force;
    MatrixXd tangent;
    State state;
};

/// A restoring-force model maps a committed state and a trial displacement to
/// (force, tangent, trial state). evaluate() must be pure.
template <class R>
concept RestoringForceModel = requires(const R& r, const typename R::State& s, const VectorXd& d) {
    typename R::State;
    { r.dof_count() } -> std::convertible_to<int>;
    { r.initial_state() } -> std::same_as<typename R::State>;
    { r.evaluate(s, d) } -> std::same_as<RestoringEval<typename R::State>>;
};

template <RestoringForceModel R>
struct NonlinearSystem {
    MatrixXd mass;
    VectorXd influence;
    R restoring;
    DampingMode damping_mode = DampingMode::Instantaneous;
    double damping_coefficient = 0.0;     // a1 in C = a1 * K_t
    std::optional<MatrixXd> fixed_damping; // Constant mode only; defaults to a1 * K_t(initial)
};

/// Linear elastic restoring force, f = K d.
class LinearRestoring {
public:
    struct State {};

    explicit LinearRestoring(MatrixXd k) : k_(std::move(k)) {}

    int dof_count() const { return static_cast<int>(k_.rows()); }
    State initial_state() const { return {}; }
    RestoringEval<State> evaluate(const State&, const VectorXd& d) const { return {k_ * d, k_, {}}; }

private:
    MatrixXd k_;
};

namespace detail {

template <class State>
struct StepResult {
    bool converged = false;
    VectorXd d, v, a;
    VectorXd force;
    MatrixXd tangent;
    State state;
};

template <RestoringForceModel R>
StepResult<typename R::State> newmark_newton_step(const NonlinearSystem<R>& sys, const IntegrationConfig& cfg,
                                                  double h, const VectorXd& d_n, const VectorXd& v_n,
                                                  const VectorXd& a_n, const typename R::State& state_n,
                                                  const MatrixXd& damping, double ground_next)
{
    const double beta = cfg.newmark_beta;
    const double gamma = cfg.newmark_gamma;
    const VectorXd load = -(sys.mass * sys.influence) * ground_next;
    const VectorXd d_pred = d_n + h * v_n + h * h * (0.5 - beta) * a_n;
    const VectorXd v_pred = v_n + h * (1.0 - gamma) * a_n;

    StepResult<typename R::State> out;
    VectorXd d = d_n;
    for (int it = 0; it <= cfg.newton_max_iter; ++it) {
        const VectorXd a = (d - d_pred) / (beta * h * h);
        const VectorXd v = v_pred + gamma * h * a;
        auto eval = sys.restoring.evaluate(state_n, d);
        const VectorXd r = load - sys.mass * a - damping * v - eval.force;
        if (!r.allFinite()) return out;
        if (r.template lpNorm<Eigen::Infinity>() < cfg.newton_tol) {
            out.converged = true;
            out.d = d;
            out.v = v;
            out.a = a;
            out.force = std::move(eval.force);
            out.tangent = std::move(eval.tangent);
            out.state = std::move(eval.state);
            return out;
        }
        const MatrixXd k_eff = eval.tangent + (gamma / (beta * h)) * damping + (1.0 / (beta * h * h)) * sys.mass;
        d += k_eff.ldlt().solve(r);
    }
    return out;
}

} // namespace detail

/// Newmark integration with Newton iteration at each step. Instantaneous damping
/// uses the converged tangent of the previous step (refreshed once per step).
/// A step that fails to converge is retried once as two half steps.
template <RestoringForceModel R>
ResponseHistory integrate(const NonlinearSystem<R>& sys, const TimeSeries& ground, const IntegrationConfig& cfg)
{
    cfg.validate();
    ground.validate("ground motion");
    const int n = sys.restoring.dof_count();
    require(sys.mass.rows() == n && sys.mass.cols() == n, "mass matrix size mismatch");
    require(sys.influence.size() == n, "influence vector size mismatch");
    require(std::abs(ground.dt - cfg.dt) <= 1e-12 * cfg.dt, "ground motion dt differs from integration dt");

    const int steps = static_cast<int>(ground.size());
    ResponseHistory hist;
    hist.dt = cfg.dt;
    hist.displacement = MatrixXd::Zero(n, steps);
    hist.velocity = MatrixXd::Zero(n, steps);
    hist.acceleration = MatrixXd::Zero(n, steps);
    hist.absolute_acceleration = MatrixXd::Zero(n, steps);

    auto state = sys.restoring.initial_state();
    const auto eval0 = sys.restoring.evaluate(state, VectorXd::Zero(n));
    MatrixXd tangent = eval0.tangent;
    const MatrixXd constant_damping =
        sys.fixed_damping ? *sys.fixed_damping : MatrixXd(sys.damping_coefficient * eval0.tangent);

    VectorXd d = VectorXd::Zero(n);
    VectorXd v = VectorXd::Zero(n);
    VectorXd a = sys.mass.ldlt().solve(VectorXd(-(sys.mass * sys.influence) * ground.values[0] - eval0.force));
    hist.acceleration.col(0) = a;
    hist.absolute_acceleration.col(0) = a + sys.influence * ground.values[0];

    for (int i = 1; i < steps; ++i) {
        const MatrixXd damping = sys.damping_mode == DampingMode::Instantaneous
                                     ? MatrixXd(sys.damping_coefficient * tangent)
                                     : constant_damping;
        auto res = detail::newmark_newton_step(sys, cfg, cfg.dt, d, v, a, state, damping, ground.values[i]);
        if (!res.converged) {
            const double g_mid = 0.5 * (ground.values[i - 1] + ground.values[i]);
            auto half = detail::newmark_newton_step(sys, cfg, 0.5 * cfg.dt, d, v, a, state, damping, g_mid);
            if (half.converged) {
                const MatrixXd damping2 = sys.damping_mode == DampingMode::Instantaneous
                                              ? MatrixXd(sys.damping_coefficient * half.tangent)
                                              : constant_damping;
                res = detail::newmark_newton_step(sys, cfg, 0.5 * cfg.dt, half.d, half.v, half.a, half.state,
                                                  damping2, ground.values[i]);
            }
            if (!half.converged || !res.converged)
                throw NumericalError("Newton iteration failed to converge at step " + std::to_string(i));
        }
        d = std::move(res.d);
        v = std::move(res.v);
        a = std::move(res.a);
        tangent = std::move(res.tangent);
        state = std::move(res.state);
        if (!d.allFinite() || !a.allFinite())
            throw NumericalError("non-finite response at step " + std::to_string(i));
        hist.displacement.col(i) = d;
        hist.velocity.col(i) = v;
        hist.acceleration.col(i) = a;
        hist.absolute_acceleration.col(i) = a + sys.influence * ground.values[i];
    }
    return hist;
}

} // namespace mvbu::dynamics
