#include "mvbu/pipeline/ground_motion.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <random>
#include <string>

#include "mvbu/error.hpp"
#include "mvbu/json_util.hpp"
#include "mvbu/rng.hpp"
#include "mvbu/signals.hpp"

namespace mvbu::pipeline {

namespace {

double parse_header_value(const std::string& line, const std::string& key, const std::filesystem::path& path)
{
    const std::string prefix = key + "=";
    if (line.rfind(prefix, 0) != 0) throw IoError(path.string() + ": expected a '" + prefix + "' header line");
    try {
        std::size_t used = 0;
        const double v = std::stod(line.substr(prefix.size()), &used);
        if (used != line.size() - prefix.size()) throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        throw IoError(path.string() + ": malformed header '" + line + "'");
    }
}

} // namespace

TimeSeries read_ground_motion(const std::filesystem::path& path)
{
    std::ifstream is(path);
    if (!is) throw IoError("cannot open ground motion " + path.string());
    std::string line;
    if (!std::getline(is, line)) throw IoError(path.string() + " is empty");
    const double dt = parse_header_value(line, "dt", path);
    std::vector<double> values;
    double duration = -1.0;
    bool first = true;
    while (std::getline(is, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (first && line.rfind("duration=", 0) == 0) {
            duration = parse_header_value(line, "duration", path);
            first = false;
            continue;
        }
        first = false;
        try {
            std::size_t used = 0;
            values.push_back(std::stod(line, &used));
            if (used != line.size()) throw std::invalid_argument("trailing characters");
        } catch (const std::exception&) {
            throw IoError(path.string() + ": bad sample '" + line + "'");
        }
    }
    TimeSeries ts(dt, std::move(values));
    ts.validate("ground motion " + path.string());
    if (duration >= 0.0 && std::abs(ts.duration() - duration) > 0.5 * dt)
        throw ValidationError(path.string() + ": " + std::to_string(ts.size()) + " samples at dt=" + std::to_string(dt) +
                              " do not match the declared duration " + std::to_string(duration));
    return ts;
}

void write_ground_motion(const std::filesystem::path& path, const TimeSeries& ts)
{
    ts.validate("ground motion");
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw IoError("cannot write " + path.string());
    char buf[40];
    std::snprintf(buf, sizeof buf, "dt=%.17g\n", ts.dt);
    os << buf;
    std::snprintf(buf, sizeof buf, "duration=%.17g\n", ts.duration());
    os << buf;
    for (double v : ts.values) {
        std::snprintf(buf, sizeof buf, "%.17g\n", v);
        os << buf;
    }
    if (!os) throw IoError("failed writing " + path.string());
}

void SyntheticMotion::validate() const
{
    require(dt > 0.0, "synthetic motion: dt must be positive");
    require(samples >= 16, "synthetic motion: at least 16 samples");
    require(pga > 0.0, "synthetic motion: pga must be positive");
    require(ground_freq > 0.0 && highpass_freq > 0.0, "synthetic motion: filter frequencies must be positive");
    require(ground_damping > 0.0 && highpass_damping > 0.0, "synthetic motion: filter damping must be positive");
}

nlohmann::json SyntheticMotion::to_json() const
{
    return {{"dt", dt},
            {"samples", samples},
            {"pga", pga},
            {"ground_freq", ground_freq},
            {"ground_damping", ground_damping},
            {"highpass_freq", highpass_freq},
            {"highpass_damping", highpass_damping},
            {"seed", seed}};
}

SyntheticMotion SyntheticMotion::from_json(const nlohmann::json& j)
{
    using json_util::get_checked;
    json_util::reject_unknown(j, {"dt", "samples", "pga", "ground_freq", "ground_damping", "highpass_freq",
                                  "highpass_damping", "seed"},
                              "synthetic motion");
    SyntheticMotion s;
    s.dt = get_checked(j, "dt", s.dt);
    s.samples = get_checked(j, "samples", s.samples);
    s.pga = get_checked(j, "pga", s.pga);
    s.ground_freq = get_checked(j, "ground_freq", s.ground_freq);
    s.ground_damping = get_checked(j, "ground_damping", s.ground_damping);
    s.highpass_freq = get_checked(j, "highpass_freq", s.highpass_freq);
    s.highpass_damping = get_checked(j, "highpass_damping", s.highpass_damping);
    s.seed = get_checked(j, "seed", s.seed);
    s.validate();
    return s;
}

TimeSeries synthetic_ground_motion(const SyntheticMotion& spec)
{
    spec.validate();
    const std::size_t n = spec.samples;
    Rng rng(derive_seed(spec.seed, 0x6d07));
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<double> white(n);
    for (double& v : white) v = normal(rng);

    auto spectrum = signals::rfft(white, n);
    const double wg = 2.0 * std::numbers::pi * spec.ground_freq, zg = spec.ground_damping;
    const double wf = 2.0 * std::numbers::pi * spec.highpass_freq, zf = spec.highpass_damping;
    for (std::size_t k = 0; k < spectrum.size(); ++k) {
        const double w = 2.0 * std::numbers::pi * static_cast<double>(k) / (static_cast<double>(n) * spec.dt);
        const double w2 = w * w;
        const double ground = (wg * wg * wg * wg + 4.0 * zg * zg * wg * wg * w2) /
                              ((wg * wg - w2) * (wg * wg - w2) + 4.0 * zg * zg * wg * wg * w2);
        const double highpass = w2 * w2 / ((wf * wf - w2) * (wf * wf - w2) + 4.0 * zf * zf * wf * wf * w2);
        spectrum[k] *= std::sqrt(ground * highpass);
    }
    auto x = signals::irfft(spectrum, n);

    // Quadratic rise over the first 5%, plateau to 30%, then exponential decay
    // to 5% of the plateau at the end of the record.
    const double total = static_cast<double>(n) * spec.dt;
    const double t1 = 0.05 * total, t2 = 0.30 * total;
    const double decay = std::log(20.0) / (total - t2);
    for (std::size_t i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) * spec.dt;
        const double env = t < t1 ? (t / t1) * (t / t1) : (t <= t2 ? 1.0 : std::exp(-decay * (t - t2)));
        x[i] *= env;
    }
    double peak = 0.0;
    for (double v : x) peak = std::max(peak, std::abs(v));
    for (double& v : x) v *= spec.pga / peak;
    return TimeSeries(spec.dt, std::move(x));
}

} // namespace mvbu::pipeline
