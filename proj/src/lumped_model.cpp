#include "mvbu/lumped_model.hpp"

#include <algorithm>

#include "mvbu/rng.hpp"

namespace mvbu::lumped {

using dynamics::MatrixXd;
using dynamics::VectorXd;

namespace {

constexpr double kMmPerM = 1e3;
constexpr double kNPerKn = 1e3;
constexpr double kStiffnessToSi = kNPerKn * kMmPerM; // kN/mm -> N/m

MatrixXd shear_matrix(const std::array<double, 3>& story_k)
{
    MatrixXd k = MatrixXd::Zero(3, 3);
    for (int i = 0; i < 3; ++i) {
        k(i, i) += story_k[i];
        if (i > 0) {
            k(i - 1, i - 1) += story_k[i];
            k(i - 1, i) -= story_k[i];
            k(i, i - 1) -= story_k[i];
        }
    }
    return k;
}

MatrixXd mass_matrix(const LumpedConfig& cfg)
{
    MatrixXd m = MatrixXd::Zero(3, 3);
    for (int i = 0; i < 3; ++i) {
        require(cfg.masses[i] > 0.0, "lumped masses must be positive");
        m(i, i) = cfg.masses[i];
    }
    return m;
}

} // namespace

ShearBuildingRestoring::ShearBuildingRestoring(const takeda::TakedaParameters& params)
{
    params.validate();
    for (int i = 0; i < 3; ++i) laws_[i] = takeda::story_law(params, i);
}

ShearBuildingRestoring::State ShearBuildingRestoring::initial_state() const
{
    State s;
    for (int i = 0; i < 3; ++i) s[i] = takeda::initial_state(laws_[i]);
    return s;
}

dynamics::RestoringEval<ShearBuildingRestoring::State>
ShearBuildingRestoring::evaluate(const State& committed, const VectorXd& d) const
{
    dynamics::RestoringEval<State> out;
    std::array<double, 3> q{};
    std::array<double, 3> kt{};
    for (int i = 0; i < 3; ++i) {
        const double drift_mm = (d(i) - (i > 0 ? d(i - 1) : 0.0)) * kMmPerM;
        const auto step = takeda::takeda_step(laws_[i], committed[i], drift_mm);
        q[i] = step.q * kNPerKn;
        kt[i] = step.tangent * kStiffnessToSi;
        out.state[i] = step.state;
    }
    out.force = VectorXd(3);
    for (int i = 0; i < 3; ++i) out.force(i) = q[i] - (i < 2 ? q[i + 1] : 0.0);
    out.tangent = shear_matrix(kt);
    return out;
}

MatrixXd initial_stiffness(const takeda::TakedaParameters& params)
{
    std::array<double, 3> k{};
    for (int i = 0; i < 3; ++i) k[i] = params.k[i] * kStiffnessToSi;
    return shear_matrix(k);
}

dynamics::NonlinearSystem<ShearBuildingRestoring> build_system(const takeda::TakedaParameters& params,
                                                                const LumpedConfig& cfg)
{
    dynamics::NonlinearSystem<ShearBuildingRestoring> sys{mass_matrix(cfg), VectorXd::Ones(3),
                                                           ShearBuildingRestoring(params), dynamics::DampingMode::Instantaneous, 0.0, std::nullopt};
    const auto mode = dynamics::modal_first(sys.mass, initial_stiffness(params));
    sys.damping_mode = dynamics::DampingMode::Instantaneous;
    sys.damping_coefficient = dynamics::stiffness_proportional_coefficient(mode.frequency_hz, cfg.damping_ratio);
    return sys;
}

dynamics::LinearSystem linear_system(const takeda::TakedaParameters& params, const LumpedConfig& cfg)
{
    dynamics::LinearSystem sys;
    sys.mass = mass_matrix(cfg);
    sys.stiffness = initial_stiffness(params);
    const auto mode = dynamics::modal_first(sys.mass, sys.stiffness);
    sys.damping = dynamics::stiffness_proportional_damping(sys.stiffness, mode.frequency_hz, cfg.damping_ratio);
    sys.influence = VectorXd::Ones(3);
    return sys;
}

LumpedResponse simulate_lumped(const takeda::TakedaParameters& params, const TimeSeries& ground,
                               const signals::NoiseSpec& noise, const LumpedConfig& cfg)
{
    auto sys = build_system(params, cfg);
    double q_yield_max = 0.0;
    for (const auto& law : sys.restoring.laws()) q_yield_max = std::max(q_yield_max, law.q_yield());

    dynamics::IntegrationConfig icfg;
    icfg.dt = ground.dt;
    icfg.newton_tol = 1e-8 * q_yield_max * kNPerKn;
    icfg.newton_max_iter = 50;

    LumpedResponse out;
    out.history = dynamics::integrate(sys, ground, icfg);
    const auto& h = out.history;
    for (int i = 0; i < 3; ++i) {
        const auto acc = h.channel(h.absolute_acceleration, i);
        out.floor_acceleration[i] = signals::add_noise(acc, noise.with_seed(derive_seed(noise.seed, i)));
        std::vector<double> drift(h.steps());
        for (int t = 0; t < h.steps(); ++t)
            drift[t] = (h.displacement(i, t) - (i > 0 ? h.displacement(i - 1, t) : 0.0)) * kMmPerM;
        out.drift[i] = TimeSeries(h.dt, std::move(drift));
    }
    return out;
}

} // namespace mvbu::lumped
