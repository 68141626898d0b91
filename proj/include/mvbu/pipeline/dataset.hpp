#pragma once

// Training-set container. Layout (little-endian):
//   "MVBUDSET" | u32 format version | u64 header length | header JSON text |
//   per sample: theta as f64[theta_dim], features as f32[channels * bins]
// The header records the model kind, parameter space, feature grid, channel
// count, sample count and generator seed.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <vector>

#include <json.hpp>

#include "mvbu/jmvae.hpp"
#include "mvbu/pipeline/config.hpp"

namespace mvbu::pipeline {

inline constexpr std::uint32_t kDatasetVersion = 1;

struct DatasetHeader {
    ModelKind model = ModelKind::Frame;
    ParameterSpace space;
    signals::FrequencyGrid grid;
    signals::FeatureKind kind = signals::FeatureKind::LogAmplitudeRatio;
    int channels = 0;
    std::uint64_t generator_seed = 0;
    std::vector<std::uint64_t> skipped; // sample indices whose simulation failed

    nlohmann::json to_json(std::size_t sample_count) const;
    static DatasetHeader from_json(const nlohmann::json& j, std::size_t* sample_count);
};

struct Dataset {
    DatasetHeader header;
    jmvae::TrainingSet data;

    std::size_t size() const { return data.size(); }
    std::size_t record_bytes() const;
};

void write_dataset(const std::filesystem::path& path, const Dataset& ds);
Dataset read_dataset(const std::filesystem::path& path);

/// Prior draw used for sample `index`; independent of whether its simulation succeeds.
std::vector<double> dataset_theta(const ExperimentConfig& cfg, std::size_t index);

/// Called after each finished sample with (done, total).
using ProgressCallback = std::function<void(std::size_t, std::size_t)>;

/// Draws cfg.dataset_size parameter vectors from the prior and simulates each
/// under the configured ground motion with independent noise. Sample i uses
/// seeds derived from (dataset seed, i), so the output does not depend on the
/// worker count. Failed simulations are skipped; more than 1% failures abort.
Dataset generate_dataset(const ExperimentConfig& cfg, const ProgressCallback& progress = {});

} // namespace mvbu::pipeline
