#pragma once

// Model kinds known to the pipeline and the response simulation that turns a
// parameter vector into recorded channels and a feature matrix.

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mvbu/frame_model.hpp"
#include "mvbu/parameter_space.hpp"
#include "mvbu/signals.hpp"
#include "mvbu/time_series.hpp"

namespace mvbu::pipeline {

/// frame: 3-parameter plane frame, 5 log-ratio channels.
/// lumped: 9-parameter Takeda shear building, 6 FRF rows.
/// sdof: 1-parameter linear oscillator used for fast end-to-end checks.
enum class ModelKind { Frame, Lumped, Sdof };

std::string to_string(ModelKind kind);
ModelKind model_kind_from_string(const std::string& s);

ParameterSpace default_space(ModelKind kind);
std::vector<double> default_ground_truth(ModelKind kind);
int channel_count(ModelKind kind);
signals::FeatureKind feature_kind(ModelKind kind);

/// Frame ground truths: case 1..4 combine R = 2 with base springs of 1000 or
/// 5000 kNm/rad at nodes 1 and 6.
std::vector<double> frame_case(int case_number);

inline constexpr double kSdofMass = 1000.0;  // kg
inline constexpr double kSdofDamping = 0.05; // damping ratio

/// Recorded channels plus the recorded copy of the input.
struct Recording {
    std::vector<TimeSeries> responses;
    TimeSeries input;
};

class ResponseSimulator {
public:
    /// `noise` gives the mode and level; its seed is replaced per call.
    ResponseSimulator(ModelKind kind, TimeSeries ground, signals::NoiseSpec noise, bool noise_on_input,
                      std::optional<frame::FrameGeometry> geometry = std::nullopt);

    ModelKind kind() const { return kind_; }
    const TimeSeries& ground() const { return ground_; }

    /// Noisy recorded channels and input for one analysis; `noise_seed` fixes
    /// every noise realization.
    Recording record(std::span<const double> theta, std::uint64_t noise_seed) const;
    signals::FeatureMatrix features(const Recording& rec) const;
    signals::FeatureMatrix features(std::span<const double> theta, std::uint64_t noise_seed) const;

    /// Noise-free responses against a fixed recorded input copy; the
    /// simulation-in-the-loop likelihood uses this.
    signals::FeatureMatrix clean_features(std::span<const double> theta, const TimeSeries& recorded_input) const;

    /// Channel names used for files written by the simulate stage.
    std::vector<std::string> channel_names() const;

private:
    std::vector<TimeSeries> simulate(std::span<const double> theta, const signals::NoiseSpec& noise) const;

    ModelKind kind_;
    TimeSeries ground_;
    signals::NoiseSpec noise_;
    bool noise_on_input_;
    frame::FrameGeometry geometry_;
};

} // namespace mvbu::pipeline
