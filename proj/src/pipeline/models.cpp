#include "mvbu/pipeline/models.hpp"

#include <cmath>

#include "mvbu/dynamics.hpp"
#include "mvbu/error.hpp"
#include "mvbu/lumped_model.hpp"
#include "mvbu/rng.hpp"
#include "mvbu/takeda.hpp"

namespace mvbu::pipeline {

namespace {

constexpr std::uint64_t kInputNoiseStream = 0x1a9;

frame::FrameParameters frame_params(std::span<const double> theta)
{
    require(theta.size() == 3, "frame model takes 3 parameters");
    return {theta[0], theta[1], theta[2]};
}

takeda::TakedaParameters takeda_params(std::span<const double> theta)
{
    require(theta.size() == 9, "lumped model takes 9 parameters");
    takeda::TakedaParameters p;
    p.k = {theta[0], theta[1], theta[2]};
    p.d_c = theta[3];
    p.d_y = theta[4];
    p.alpha_c = theta[5];
    p.alpha_y = theta[6];
    p.gamma = theta[7];
    p.lambda = theta[8];
    p.validate();
    return p;
}

TimeSeries simulate_sdof(double stiffness, const TimeSeries& ground)
{
    require(stiffness > 0.0, "sdof stiffness must be positive");
    dynamics::LinearSystem sys;
    sys.mass = dynamics::MatrixXd::Constant(1, 1, kSdofMass);
    sys.stiffness = dynamics::MatrixXd::Constant(1, 1, stiffness);
    sys.damping = dynamics::MatrixXd::Constant(1, 1, 2.0 * kSdofDamping * std::sqrt(stiffness * kSdofMass));
    sys.influence = dynamics::VectorXd::Ones(1);
    dynamics::IntegrationConfig cfg;
    cfg.dt = ground.dt;
    const auto h = dynamics::integrate(sys, ground, cfg);
    return h.channel(h.absolute_acceleration, 0);
}

} // namespace

std::string to_string(ModelKind kind)
{
    switch (kind) {
    case ModelKind::Frame:
        return "frame";
    case ModelKind::Lumped:
        return "lumped";
    case ModelKind::Sdof:
        return "sdof";
    }
    return "unknown";
}

ModelKind model_kind_from_string(const std::string& s)
{
    if (s == "frame") return ModelKind::Frame;
    if (s == "lumped") return ModelKind::Lumped;
    if (s == "sdof") return ModelKind::Sdof;
    throw ValidationError("unknown model kind '" + s + "' (expected frame, lumped or sdof)");
}

ParameterSpace default_space(ModelKind kind)
{
    switch (kind) {
    case ModelKind::Frame:
        return ParameterSpace({{"R", 1.0, 10.0, PriorKind::LogUniform},
                               {"k_theta_1", 10.0, 1e4, PriorKind::LogUniform},
                               {"k_theta_6", 10.0, 1e4, PriorKind::LogUniform}});
    case ModelKind::Lumped:
        return ParameterSpace({{"k1", 100.0, 200.0, PriorKind::Uniform},
                               {"k2", 60.0, 160.0, PriorKind::Uniform},
                               {"k3", 20.0, 120.0, PriorKind::Uniform},
                               {"d_c", 2.5, 20.0, PriorKind::Uniform},
                               {"d_y", 20.0, 80.0, PriorKind::Uniform},
                               {"alpha_c", 0.05, 0.25, PriorKind::Uniform},
                               {"alpha_y", 0.0, 0.05, PriorKind::Uniform},
                               {"gamma", 0.0, 1.0, PriorKind::Uniform},
                               {"lambda", 0.0, 1.0, PriorKind::Uniform}});
    case ModelKind::Sdof:
        return ParameterSpace({{"k", 1e4, 1e6, PriorKind::LogUniform}});
    }
    throw ValidationError("unknown model kind");
}

std::vector<double> frame_case(int case_number)
{
    require(case_number >= 1 && case_number <= 4, "frame cases are numbered 1 to 4");
    const double k1 = case_number <= 2 ? 1000.0 : 5000.0;
    const double k6 = case_number % 2 == 1 ? 1000.0 : 5000.0;
    return {2.0, k1, k6};
}

std::vector<double> default_ground_truth(ModelKind kind)
{
    switch (kind) {
    case ModelKind::Frame:
        return frame_case(1);
    case ModelKind::Lumped: {
        const takeda::TakedaParameters p;
        return {p.k[0], p.k[1], p.k[2], p.d_c, p.d_y, p.alpha_c, p.alpha_y, p.gamma, p.lambda};
    }
    case ModelKind::Sdof:
        return {1e5};
    }
    throw ValidationError("unknown model kind");
}

int channel_count(ModelKind kind)
{
    switch (kind) {
    case ModelKind::Frame:
        return frame::kFrameChannels;
    case ModelKind::Lumped:
        return 6;
    case ModelKind::Sdof:
        return 1;
    }
    return 0;
}

signals::FeatureKind feature_kind(ModelKind kind)
{
    return kind == ModelKind::Lumped ? signals::FeatureKind::FrfRealImag : signals::FeatureKind::LogAmplitudeRatio;
}

ResponseSimulator::ResponseSimulator(ModelKind kind, TimeSeries ground, signals::NoiseSpec noise, bool noise_on_input,
                                     std::optional<frame::FrameGeometry> geometry)
    : kind_(kind), ground_(std::move(ground)), noise_(noise), noise_on_input_(noise_on_input),
      geometry_(geometry ? std::move(*geometry) : frame::FrameGeometry{})
{
    ground_.validate("ground motion");
    if (kind_ == ModelKind::Frame) {
        if (!geometry) geometry_ = frame::default_geometry();
        geometry_.validate();
    }
}

std::vector<TimeSeries> ResponseSimulator::simulate(std::span<const double> theta,
                                                    const signals::NoiseSpec& noise) const
{
    switch (kind_) {
    case ModelKind::Frame: {
        const auto r = frame::simulate_frame(frame_params(theta), ground_, noise, geometry_);
        return {r.channels.begin(), r.channels.end()};
    }
    case ModelKind::Lumped: {
        const auto r = lumped::simulate_lumped(takeda_params(theta), ground_, noise);
        return {r.floor_acceleration.begin(), r.floor_acceleration.end()};
    }
    case ModelKind::Sdof: {
        require(theta.size() == 1, "sdof model takes 1 parameter");
        return {signals::add_noise(simulate_sdof(theta[0], ground_), noise.with_seed(derive_seed(noise.seed, 0)))};
    }
    }
    throw ValidationError("unknown model kind");
}

Recording ResponseSimulator::record(std::span<const double> theta, std::uint64_t noise_seed) const
{
    Recording rec;
    rec.responses = simulate(theta, noise_.with_seed(noise_seed));
    rec.input = noise_on_input_ ? signals::add_noise(ground_, noise_.with_seed(derive_seed(noise_seed, kInputNoiseStream)))
                                : ground_;
    return rec;
}

signals::FeatureMatrix ResponseSimulator::features(const Recording& rec) const
{
    if (kind_ == ModelKind::Lumped) return signals::frf_features(rec.responses, rec.input);
    return signals::log_spectral_ratio_features(rec.responses, rec.input);
}

signals::FeatureMatrix ResponseSimulator::features(std::span<const double> theta, std::uint64_t noise_seed) const
{
    return features(record(theta, noise_seed));
}

signals::FeatureMatrix ResponseSimulator::clean_features(std::span<const double> theta,
                                                         const TimeSeries& recorded_input) const
{
    Recording rec{simulate(theta, signals::NoiseSpec::none()), recorded_input};
    return features(rec);
}

std::vector<std::string> ResponseSimulator::channel_names() const
{
    switch (kind_) {
    case ModelKind::Frame:
        return {"node4_acceleration", "strain_element1_bottom", "strain_element2_bottom", "strain_element3_top",
                "strain_element4_top"};
    case ModelKind::Lumped:
        return {"floor1_acceleration", "floor2_acceleration", "floor3_acceleration"};
    case ModelKind::Sdof:
        return {"mass_acceleration"};
    }
    return {};
}

} // namespace mvbu::pipeline
