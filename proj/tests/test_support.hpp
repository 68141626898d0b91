#pragma once

#include <cmath>
#include <random>
#include <vector>

#include "mvbu/time_series.hpp"

namespace mvbu::test {

/// Gaussian white noise smoothed by a short moving average, tapered at both ends.
inline TimeSeries broadband(std::size_t n, double dt, double rms_target, std::uint64_t seed, std::size_t smooth = 3)
{
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<double> w(n + smooth);
    for (double& v : w) v = normal(rng);
    std::vector<double> x(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < smooth; ++j) x[i] += w[i + j];
        x[i] /= static_cast<double>(smooth);
    }
    const std::size_t taper = n / 20;
    for (std::size_t i = 0; i < taper; ++i) {
        const double s = 0.5 - 0.5 * std::cos(M_PI * static_cast<double>(i) / static_cast<double>(taper));
        x[i] *= s;
        x[n - 1 - i] *= s;
    }
    double ss = 0.0;
    for (double v : x) ss += v * v;
    const double scale = rms_target / std::sqrt(ss / static_cast<double>(n));
    for (double& v : x) v *= scale;
    return TimeSeries(dt, std::move(x));
}

inline double max_abs(const std::vector<double>& v)
{
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

} // namespace mvbu::test
