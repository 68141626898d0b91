#include "mvbu/parameter_space.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mvbu/error.hpp"

namespace mvbu {

std::string to_string(PriorKind kind) { return kind == PriorKind::Uniform ? "uniform" : "log-uniform"; }

PriorKind prior_kind_from_string(const std::string& s)
{
    if (s == "uniform") return PriorKind::Uniform;
    if (s == "log-uniform") return PriorKind::LogUniform;
    throw ValidationError("unknown prior kind '" + s + "' (expected uniform or log-uniform)");
}

double ParameterSpec::transform(double v) const { return prior == PriorKind::LogUniform ? std::log10(v) : v; }

double ParameterSpec::inverse(double t) const { return prior == PriorKind::LogUniform ? std::pow(10.0, t) : t; }

bool operator==(const ParameterSpec& a, const ParameterSpec& b)
{
    return a.name == b.name && a.lower == b.lower && a.upper == b.upper && a.prior == b.prior;
}

ParameterSpace::ParameterSpace(std::vector<ParameterSpec> specs) : specs_(std::move(specs))
{
    require(!specs_.empty(), "parameter space is empty");
    for (const auto& s : specs_) {
        require(!s.name.empty(), "parameter without a name");
        require(std::isfinite(s.lower) && std::isfinite(s.upper) && s.lower < s.upper,
                "parameter '" + s.name + "' needs finite bounds with lower < upper");
        require(s.prior != PriorKind::LogUniform || s.lower > 0.0,
                "log-uniform parameter '" + s.name + "' needs a positive lower bound");
    }
}

std::vector<std::string> ParameterSpace::names() const
{
    std::vector<std::string> out;
    for (const auto& s : specs_) out.push_back(s.name);
    return out;
}

std::vector<double> ParameterSpace::transform(std::span<const double> theta) const
{
    require(theta.size() == size(), "parameter vector has wrong length");
    std::vector<double> t(size());
    for (std::size_t i = 0; i < size(); ++i) t[i] = specs_[i].transform(theta[i]);
    return t;
}

std::vector<double> ParameterSpace::inverse(std::span<const double> t) const
{
    require(t.size() == size(), "parameter vector has wrong length");
    std::vector<double> theta(size());
    for (std::size_t i = 0; i < size(); ++i) theta[i] = specs_[i].inverse(t[i]);
    return theta;
}

bool ParameterSpace::contains(std::span<const double> theta) const
{
    if (theta.size() != size()) return false;
    for (std::size_t i = 0; i < size(); ++i)
        if (!(theta[i] >= specs_[i].lower && theta[i] <= specs_[i].upper)) return false;
    return true;
}

bool ParameterSpace::contains_transformed(std::span<const double> t) const
{
    if (t.size() != size()) return false;
    for (std::size_t i = 0; i < size(); ++i)
        if (!(t[i] >= specs_[i].transformed_lower() && t[i] <= specs_[i].transformed_upper())) return false;
    return true;
}

std::vector<double> ParameterSpace::transformed_ranges() const
{
    std::vector<double> r(size());
    for (std::size_t i = 0; i < size(); ++i) r[i] = specs_[i].transformed_upper() - specs_[i].transformed_lower();
    return r;
}

std::vector<double> ParameterSpace::sample(Rng& rng) const
{
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> theta(size());
    for (std::size_t i = 0; i < size(); ++i) {
        const auto& s = specs_[i];
        const double t = s.transformed_lower() + u(rng) * (s.transformed_upper() - s.transformed_lower());
        theta[i] = std::clamp(s.inverse(t), s.lower, s.upper);
    }
    return theta;
}

double ParameterSpace::log_prior_transformed(std::span<const double> t) const
{
    return contains_transformed(t) ? 0.0 : -std::numeric_limits<double>::infinity();
}

nlohmann::json ParameterSpace::to_json() const
{
    auto arr = nlohmann::json::array();
    for (const auto& s : specs_)
        arr.push_back({{"name", s.name}, {"lower", s.lower}, {"upper", s.upper}, {"prior", to_string(s.prior)}});
    return arr;
}

ParameterSpace ParameterSpace::from_json(const nlohmann::json& j)
{
    require(j.is_array(), "parameters must be a JSON array");
    std::vector<ParameterSpec> specs;
    for (const auto& e : j) {
        require(e.is_object(), "parameter entry must be an object");
        for (const auto& [key, _] : e.items())
            require(key == "name" || key == "lower" || key == "upper" || key == "prior",
                    "unknown key '" + key + "' in parameter entry");
        try {
            specs.push_back({e.at("name").get<std::string>(), e.at("lower").get<double>(), e.at("upper").get<double>(),
                             prior_kind_from_string(e.value("prior", std::string("uniform")))});
        } catch (const nlohmann::json::exception& ex) {
            throw ValidationError(std::string("malformed parameter entry: ") + ex.what());
        }
    }
    return ParameterSpace(std::move(specs));
}

bool ParameterSpace::operator==(const ParameterSpace& o) const { return specs_ == o.specs_; }

} // namespace mvbu
