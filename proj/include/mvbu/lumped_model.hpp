#pragma once

// Three-story lumped-mass shear model with Takeda-slip story springs.

#include <array>
#include <vector>

#include "mvbu/dynamics.hpp"
#include "mvbu/signals.hpp"
#include "mvbu/takeda.hpp"

namespace mvbu::lumped {

inline constexpr std::array<double, 3> kDefaultMasses{7.5e4, 7.3e4, 5.5e4}; // kg
inline constexpr double kDefaultDampingRatio = 0.04;

/// Restoring-force model over floor displacements (m, relative to ground).
class ShearBuildingRestoring {
public:
    using State = std::array<takeda::HysteresisState, 3>;

    explicit ShearBuildingRestoring(const takeda::TakedaParameters& params);

    int dof_count() const { return 3; }
    State initial_state() const;
    dynamics::RestoringEval<State> evaluate(const State& committed, const dynamics::VectorXd& d) const;

    const std::array<takeda::StoryLaw, 3>& laws() const { return laws_; }

private:
    std::array<takeda::StoryLaw, 3> laws_;
};

struct LumpedConfig {
    std::array<double, 3> masses = kDefaultMasses;
    double damping_ratio = kDefaultDampingRatio;
};

/// Initial-stiffness shear-building matrix (N/m).
dynamics::MatrixXd initial_stiffness(const takeda::TakedaParameters& params);

dynamics::NonlinearSystem<ShearBuildingRestoring> build_system(const takeda::TakedaParameters& params,
                                                                const LumpedConfig& cfg);

struct LumpedResponse {
    std::array<TimeSeries, 3> floor_acceleration; // absolute, m/s^2
    std::array<TimeSeries, 3> drift;              // interstory, mm
    dynamics::ResponseHistory history;
};

/// Nonlinear response with instantaneous-stiffness-proportional damping.
/// Noise (per channel seeds derived from noise.seed) goes on recorded copies only.
LumpedResponse simulate_lumped(const takeda::TakedaParameters& params, const TimeSeries& ground,
                               const signals::NoiseSpec& noise, const LumpedConfig& cfg = {});

/// Linear counterpart with the initial stiffnesses and constant damping.
dynamics::LinearSystem linear_system(const takeda::TakedaParameters& params, const LumpedConfig& cfg = {});

} // namespace mvbu::lumped
