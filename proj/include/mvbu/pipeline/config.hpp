#pragma once

// Experiment configuration: one JSON document per run. Unknown keys are errors.
// Every stage seed derives from the top-level `seed`, so configs carry no
// per-stage seeds.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "mvbu/jmvae.hpp"
#include "mvbu/parameter_space.hpp"
#include "mvbu/pipeline/ground_motion.hpp"
#include "mvbu/pipeline/models.hpp"
#include "mvbu/samplers.hpp"
#include "mvbu/signals.hpp"

namespace mvbu::pipeline {

/// Either a record file or a synthetic motion generated on load.
struct GroundMotionSource {
    std::string path; // relative paths resolve against the config's directory
    std::optional<SyntheticMotion> synthetic;

    nlohmann::json to_json() const;
    static GroundMotionSource from_json(const nlohmann::json& j);
    bool operator==(const GroundMotionSource&) const = default;
};

enum class SamplerMethod { MetropolisHastings, ReplicaExchange };

std::string to_string(SamplerMethod m);
SamplerMethod sampler_method_from_string(const std::string& s);

struct SamplerSettings {
    SamplerMethod method = SamplerMethod::MetropolisHastings;
    samplers::ChainConfig chain;
    samplers::ReplicaConfig replica;
    int screen_candidates = 2000; // Latin-hypercube points ranked to pick chain starts

    nlohmann::json to_json() const;
    static SamplerSettings from_json(const nlohmann::json& j);
};

/// Stage seed streams under the master seed.
enum class SeedStream : std::uint64_t {
    Dataset = 1,
    ModelInit = 2,
    Training = 3,
    Observation = 4,
    Chain = 5,
    Screen = 6,
    Fallback = 7,
};

struct ExperimentConfig {
    ModelKind model = ModelKind::Frame;
    GroundMotionSource ground_motion;
    signals::NoiseSpec noise;   // seed unused; noise seeds derive from `seed`
    bool noise_on_input = true; // the recorded input copy carries noise too
    ParameterSpace parameters;
    std::vector<double> ground_truth;
    int dataset_size = 2000;
    jmvae::Architecture architecture;
    jmvae::TrainingConfig training;
    SamplerSettings sampler;
    std::uint64_t seed = 1;
    std::string geometry;          // frame only; empty selects the bundled geometry
    std::string output_dir = "out";
    int threads = 1;               // dataset workers and replica threads
    bool compare_simulation = false; // also sample with the simulation-in-the-loop likelihood

    std::filesystem::path base_dir; // not serialized: where relative paths resolve

    /// Desk-scale defaults for a model kind, or the full-size settings.
    static ExperimentConfig preset(ModelKind kind, bool paper_scale = false);

    std::uint64_t stage_seed(SeedStream s) const { return derive_seed(seed, static_cast<std::uint64_t>(s)); }
    std::filesystem::path resolve(const std::string& p) const;
    std::filesystem::path output_path(const std::string& file) const;

    /// Consistency of sizes, bounds and presence of every referenced file.
    void validate() const;
    nlohmann::json to_json() const;
    /// Keys absent from `j` take the preset values of its model kind.
    static ExperimentConfig from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = ".");

    TimeSeries load_ground_motion() const;
    std::optional<frame::FrameGeometry> load_geometry() const;
    ResponseSimulator simulator() const;
    /// FNV-1a of the canonical JSON text.
    std::uint64_t hash() const;
};

/// Reads a config file; `overrides` is merged over the file's JSON before
/// validation, so command-line values take precedence.
ExperimentConfig load_config(const std::filesystem::path& path, const nlohmann::json& overrides = nullptr);

nlohmann::json noise_to_json(const signals::NoiseSpec& n);
signals::NoiseSpec noise_from_json(const nlohmann::json& j);

} // namespace mvbu::pipeline
