#pragma once

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "mvbu/error.hpp"

namespace mvbu {

/// Uniformly sampled record (acceleration in m/s^2, strain, drift, ...).
struct TimeSeries {
    double dt = 0.0;
    std::vector<double> values;

    TimeSeries() = default;
    TimeSeries(double dt_, std::vector<double> v) : dt(dt_), values(std::move(v)) {}

    std::size_t size() const { return values.size(); }
    double duration() const { return dt * static_cast<double>(values.size()); }
    std::span<const double> view() const { return values; }

    void validate(const std::string& what = "time series") const
    {
        require(dt > 0.0, what + ": dt must be positive");
        require(!values.empty(), what + ": empty record");
        for (double v : values)
            require(std::isfinite(v), what + ": non-finite sample");
    }

    TimeSeries scaled(double s) const
    {
        TimeSeries out = *this;
        for (double& v : out.values) v *= s;
        return out;
    }
};

} // namespace mvbu
