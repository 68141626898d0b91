#pragma once

// Ground-motion records. Text format: a header line `dt=<seconds>`, an optional
// line `duration=<seconds>`, then one acceleration (m/s^2) per line.

#include <cstdint>
#include <filesystem>

#include <json.hpp>

#include "mvbu/time_series.hpp"

namespace mvbu::pipeline {

TimeSeries read_ground_motion(const std::filesystem::path& path);
/// Writes dt, duration and values with 17 significant digits.
void write_ground_motion(const std::filesystem::path& path, const TimeSeries& ts);

/// Stationary filtered white noise (a ground filter followed by a high-pass
/// filter that removes drift) under a rise / plateau / decay envelope, scaled to
/// the requested peak acceleration.
struct SyntheticMotion {
    double dt = 0.02;
    std::size_t samples = 2048;
    double pga = 3.0;            // m/s^2
    double ground_freq = 2.5;    // Hz, dominant frequency of the ground filter
    double ground_damping = 0.6;
    double highpass_freq = 0.2;  // Hz
    double highpass_damping = 0.6;
    std::uint64_t seed = 1;

    void validate() const;
    nlohmann::json to_json() const;
    static SyntheticMotion from_json(const nlohmann::json& j);
    bool operator==(const SyntheticMotion&) const = default;
};

TimeSeries synthetic_ground_motion(const SyntheticMotion& spec);

} // namespace mvbu::pipeline
