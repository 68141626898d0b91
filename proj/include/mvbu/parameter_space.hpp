#pragma once

// Bounded model parameters with a per-parameter prior kind. Samplers and the
// networks work in transformed coordinates: identity for uniform priors and
// log10 for log-uniform priors, in which every prior is uniform.

#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "mvbu/rng.hpp"

namespace mvbu {

enum class PriorKind { Uniform, LogUniform };

std::string to_string(PriorKind kind);
PriorKind prior_kind_from_string(const std::string& s);

struct ParameterSpec {
    std::string name;
    double lower = 0.0;
    double upper = 1.0;
    PriorKind prior = PriorKind::Uniform;

    double transform(double v) const;
    double inverse(double t) const;
    double transformed_lower() const { return transform(lower); }
    double transformed_upper() const { return transform(upper); }
};

class ParameterSpace {
public:
    ParameterSpace() = default;
    explicit ParameterSpace(std::vector<ParameterSpec> specs);

    std::size_t size() const { return specs_.size(); }
    const ParameterSpec& operator[](std::size_t i) const { return specs_[i]; }
    const std::vector<ParameterSpec>& specs() const { return specs_; }
    std::vector<std::string> names() const;

    std::vector<double> transform(std::span<const double> theta) const;
    std::vector<double> inverse(std::span<const double> t) const;
    /// Closed bounds check in natural units.
    bool contains(std::span<const double> theta) const;
    bool contains_transformed(std::span<const double> t) const;
    /// Width of each transformed interval.
    std::vector<double> transformed_ranges() const;
    /// One draw from the prior, in natural units.
    std::vector<double> sample(Rng& rng) const;
    /// Log prior density in transformed coordinates up to a constant: 0 inside, -inf outside.
    double log_prior_transformed(std::span<const double> t) const;

    nlohmann::json to_json() const;
    static ParameterSpace from_json(const nlohmann::json& j);

    bool operator==(const ParameterSpace&) const;

private:
    std::vector<ParameterSpec> specs_;
};

bool operator==(const ParameterSpec& a, const ParameterSpec& b);

} // namespace mvbu
