#pragma once

// Pipeline stages. Each stage reads its inputs from files in the output
// directory and writes its own artifacts there, so stages can run as separate
// invocations:
//   simulate  -> observation/<channel>.txt, observation/features.csv
//   dataset   -> dataset.bin
//   train     -> model.ckpt, training_log.csv
//   update    -> posterior_samples.csv, diagnostics.json
//   report    -> report/
// Every stage records its config hash, seeds and artifact hashes in manifest.json.

#include <filesystem>
#include <optional>
#include <string>

#include <json.hpp>

#include "mvbu/jmvae.hpp"
#include "mvbu/latent_inference.hpp"
#include "mvbu/pipeline/config.hpp"
#include "mvbu/pipeline/dataset.hpp"
#include "mvbu/samplers.hpp"

namespace mvbu::pipeline {

inline constexpr const char* kDatasetFile = "dataset.bin";
inline constexpr const char* kModelFile = "model.ckpt";
inline constexpr const char* kTrainingLogFile = "training_log.csv";
inline constexpr const char* kSamplesFile = "posterior_samples.csv";
inline constexpr const char* kSimulationSamplesFile = "posterior_samples_simulation.csv";
inline constexpr const char* kDiagnosticsFile = "diagnostics.json";
inline constexpr const char* kManifestFile = "manifest.json";

/// Ground-truth recording and its features. The observation noise comes from
/// the Observation seed stream.
struct Observation {
    Recording recording;
    signals::FeatureMatrix features;
};

Observation simulate_observation(const ExperimentConfig& cfg, const ResponseSimulator& sim);

/// Writes each recorded channel and the recorded input as ground-motion text
/// files plus the feature matrix as CSV (one row per channel).
void write_observation(const std::filesystem::path& dir, const Observation& obs,
                       const std::vector<std::string>& channel_names);

/// Builds a model with the ModelInit seed, trains it with the Training seed and
/// saves the checkpoint and a per-epoch loss log.
jmvae::TrainingResult run_training(const ExperimentConfig& cfg, const Dataset& ds,
                                   const jmvae::EpochCallback& on_epoch = {});

struct UpdateResult {
    samplers::PosteriorSamples samples; // natural units
    nlohmann::json diagnostics;
    std::optional<samplers::PosteriorSamples> simulation_samples;
};

/// Simulates the observation, encodes it once and samples the posterior in
/// transformed coordinates. Writes samples and diagnostics when `write` is set.
UpdateResult run_update(const ExperimentConfig& cfg, const jmvae::JmvaeModel& model, bool write = true);

/// Samples kept in transformed coordinates, mapped back to natural units.
samplers::PosteriorSamples to_natural_units(const ParameterSpace& space, const samplers::PosteriorSamples& t);

struct LikelihoodBenchmark {
    int evaluations = 0;
    double surrogate_seconds = 0.0;  // per evaluation
    double simulation_seconds = 0.0; // per evaluation
    double speedup() const { return simulation_seconds / surrogate_seconds; }
    nlohmann::json to_json() const;
};

/// Times both likelihood paths on the same prior draws.
LikelihoodBenchmark benchmark_likelihood(const ExperimentConfig& cfg, const jmvae::JmvaeModel& model,
                                         int evaluations);

/// Merges `artifacts` (file name -> hash) and the stage seeds into manifest.json.
void update_manifest(const ExperimentConfig& cfg, const std::string& stage,
                     const std::vector<std::filesystem::path>& artifacts);

} // namespace mvbu::pipeline
