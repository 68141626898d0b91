#pragma once

// Posterior report: per-parameter empirical CDF tables and plots plus one
// summary table. Quantiles are type 7 (samplers::quantile).

#include <filesystem>
#include <string>
#include <vector>

#include "mvbu/parameter_space.hpp"
#include "mvbu/samplers.hpp"

namespace mvbu::pipeline {

struct SummaryRow {
    std::string parameter;
    double median = 0.0, q05 = 0.0, q95 = 0.0;
    double truth = 0.0;
    bool has_truth = false;
};

std::vector<SummaryRow> summarize(const ParameterSpace& space, const samplers::PosteriorSamples& samples,
                                  const std::vector<double>& truth);

/// Writes cdf_<name>.csv, cdf_<name>.svg and summary.csv into `dir`; returns
/// the written paths. `truth` may be empty.
std::vector<std::filesystem::path> emit_report(const ParameterSpace& space, const samplers::PosteriorSamples& samples,
                                               const std::vector<double>& truth, const std::filesystem::path& dir);

/// Parses summary.csv back; lines starting with '#' are skipped.
std::vector<SummaryRow> read_summary_csv(const std::filesystem::path& path);

/// Parses a cdf_<name>.csv back into (value, cdf) pairs.
std::vector<std::pair<double, double>> read_cdf_csv(const std::filesystem::path& path);

/// Standalone SVG step plot of an empirical CDF with an optional vertical truth marker.
std::string cdf_svg(const std::string& title, const std::vector<std::pair<double, double>>& cdf, double lower,
                    double upper, bool log_axis, const double* truth);

} // namespace mvbu::pipeline
