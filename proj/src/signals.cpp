#include "mvbu/signals.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <mutex>
#include <random>

#include "mvbu/error.hpp"
#include "mvbu/rng.hpp"

namespace mvbu::signals {

namespace {

// FFTW planning is not thread safe; execution on new-array plans is.
std::mutex& planner_mutex()
{
    static std::mutex m;
    return m;
}

void validate_pair(std::span<const TimeSeries> responses, const TimeSeries& input)
{
    input.validate("input record");
    require(!responses.empty(), "no response channels");
    for (const auto& r : responses) {
        r.validate("response record");
        require(r.size() == input.size(), "response and input lengths differ");
        require(std::abs(r.dt - input.dt) <= 1e-12 * input.dt, "response and input sampling differ");
    }
}

double floor_for(std::span<const Complex> spec)
{
    double mx = 0.0;
    for (const auto& c : spec) mx = std::max(mx, std::abs(c));
    return std::max(mx * kSpectrumFloor, std::numeric_limits<double>::min());
}

} // namespace

std::string to_string(FeatureKind kind)
{
    return kind == FeatureKind::LogAmplitudeRatio ? "log-amplitude-ratio" : "frf-real-imag";
}

FeatureKind feature_kind_from_string(const std::string& s)
{
    if (s == "log-amplitude-ratio") return FeatureKind::LogAmplitudeRatio;
    if (s == "frf-real-imag") return FeatureKind::FrfRealImag;
    throw ValidationError("unknown feature kind: " + s);
}

void FeatureMatrix::validate() const
{
    require(grid.n_bins == kFeatureBins, "feature matrix must have 512 bins");
    require(channels > 0, "feature matrix has no channels");
    require(data.size() == static_cast<std::size_t>(channels) * grid.n_bins, "feature matrix size mismatch");
    for (double v : data) require(std::isfinite(v), "non-finite feature entry");
}

double rms(std::span<const double> x)
{
    if (x.empty()) return 0.0;
    double s = 0.0;
    for (double v : x) s += v * v;
    return std::sqrt(s / static_cast<double>(x.size()));
}

std::size_t next_pow2(std::size_t n)
{
    std::size_t p = 1;
    while (p < n) p <<= 1;
    return p;
}

std::vector<Complex> rfft(std::span<const double> x, std::size_t n_fft)
{
    require(n_fft >= x.size() && n_fft > 0, "rfft: n_fft shorter than the record");
    std::vector<double> in(n_fft, 0.0);
    std::copy(x.begin(), x.end(), in.begin());
    std::vector<Complex> out(n_fft / 2 + 1);
    fftw_plan plan;
    {
        std::lock_guard lock(planner_mutex());
        plan = fftw_plan_dft_r2c_1d(static_cast<int>(n_fft), in.data(),
                                    reinterpret_cast<fftw_complex*>(out.data()), FFTW_ESTIMATE);
    }
    fftw_execute(plan);
    {
        std::lock_guard lock(planner_mutex());
        fftw_destroy_plan(plan);
    }
    return out;
}

std::vector<double> irfft(std::span<const Complex> spectrum, std::size_t n)
{
    require(spectrum.size() == n / 2 + 1, "irfft: spectrum length mismatch");
    std::vector<Complex> in(spectrum.begin(), spectrum.end()); // c2r destroys its input
    std::vector<double> out(n);
    fftw_plan plan;
    {
        std::lock_guard lock(planner_mutex());
        plan = fftw_plan_dft_c2r_1d(static_cast<int>(n), reinterpret_cast<fftw_complex*>(in.data()), out.data(),
                                    FFTW_ESTIMATE);
    }
    fftw_execute(plan);
    {
        std::lock_guard lock(planner_mutex());
        fftw_destroy_plan(plan);
    }
    for (double& v : out) v /= static_cast<double>(n);
    return out;
}

FeatureMatrix log_spectral_ratio_features(std::span<const TimeSeries> responses, const TimeSeries& input,
                                          const LogRatioSettings& settings)
{
    validate_pair(responses, input);
    const std::size_t n_fft = next_pow2(input.size());
    const double df = 1.0 / (static_cast<double>(n_fft) * input.dt);
    const auto first = static_cast<std::size_t>(std::ceil(settings.f_start / df - 1e-9));
    require(first + settings.n_bins <= n_fft / 2 + 1, "feature band exceeds the Nyquist frequency");

    const auto in_spec = rfft(input.view(), n_fft);
    const double floor = floor_for(in_spec);

    FeatureMatrix fm;
    fm.channels = static_cast<int>(responses.size());
    fm.grid = {static_cast<double>(first) * df, df, settings.n_bins};
    fm.kind = FeatureKind::LogAmplitudeRatio;
    fm.data.resize(static_cast<std::size_t>(fm.channels) * settings.n_bins);
    for (int c = 0; c < fm.channels; ++c) {
        const auto spec = rfft(responses[c].view(), n_fft);
        const double out_floor = floor_for(spec);
        for (int b = 0; b < settings.n_bins; ++b) {
            const double num = std::max(std::abs(spec[first + b]), out_floor);
            const double den = std::max(std::abs(in_spec[first + b]), floor);
            fm.at(c, b) = std::log(num / den);
        }
    }
    return fm;
}

std::size_t frf_fft_length(const TimeSeries& input, double df)
{
    require(df > 0.0, "FRF grid spacing must be positive");
    const double exact = 1.0 / (input.dt * df);
    const auto n = static_cast<std::size_t>(std::llround(exact));
    require(std::abs(exact - static_cast<double>(n)) < 1e-6 * exact,
            "FRF grid spacing is not commensurate with the sampling rate");
    // Pad by whole multiples so bins stay on the grid.
    std::size_t len = n;
    while (len < input.size()) len += n;
    return len;
}

FeatureMatrix frf_features(std::span<const TimeSeries> responses, const TimeSeries& input,
                           const FrfSettings& settings)
{
    validate_pair(responses, input);
    const std::size_t n_fft = frf_fft_length(input, settings.df);
    const double bin_df = 1.0 / (static_cast<double>(n_fft) * input.dt);
    const auto stride = static_cast<std::size_t>(std::llround(settings.df / bin_df));
    const auto first = static_cast<std::size_t>(std::llround(settings.f_start / bin_df));
    require(std::abs(first * bin_df - settings.f_start) < 1e-9, "FRF start frequency is not on the DFT grid");
    require(first + stride * (settings.n_bins - 1) <= n_fft / 2, "FRF band exceeds the Nyquist frequency");

    const auto in_spec = rfft(input.view(), n_fft);
    const double floor = floor_for(in_spec);

    FeatureMatrix fm;
    fm.channels = static_cast<int>(2 * responses.size());
    fm.grid = {settings.f_start, settings.df, settings.n_bins};
    fm.kind = FeatureKind::FrfRealImag;
    fm.data.resize(static_cast<std::size_t>(fm.channels) * settings.n_bins);
    for (std::size_t c = 0; c < responses.size(); ++c) {
        const auto spec = rfft(responses[c].view(), n_fft);
        for (int b = 0; b < settings.n_bins; ++b) {
            const std::size_t k = first + stride * b;
            Complex den = in_spec[k];
            const double mag = std::abs(den);
            if (mag < floor) den = mag > 0.0 ? den * (floor / mag) : Complex(floor, 0.0);
            const Complex h = spec[k] / den;
            fm.at(static_cast<int>(2 * c), b) = h.real();
            fm.at(static_cast<int>(2 * c + 1), b) = h.imag();
        }
    }
    return fm;
}

TimeSeries add_noise(const TimeSeries& ts, const NoiseSpec& spec)
{
    if (spec.is_silent()) return ts;
    double sigma = spec.sigma;
    if (spec.mode == NoiseSpec::Mode::SnrDb) sigma = rms(ts.view()) / std::pow(10.0, spec.snr_db / 20.0);
    require(sigma >= 0.0 && std::isfinite(sigma), "invalid noise level");
    Rng rng(spec.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    TimeSeries out = ts;
    for (double& v : out.values) v += sigma * normal(rng);
    return out;
}

} // namespace mvbu::signals
