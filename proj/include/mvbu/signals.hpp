#pragma once

#include <complex>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "mvbu/time_series.hpp"

namespace mvbu::signals {

using Complex = std::complex<double>;

inline constexpr int kFeatureBins = 512;

enum class FeatureKind { LogAmplitudeRatio, FrfRealImag };

std::string to_string(FeatureKind kind);
FeatureKind feature_kind_from_string(const std::string& s);

struct FrequencyGrid {
    double f_start = 0.0; // Hz, frequency of the first bin
    double df = 0.0;      // Hz
    int n_bins = kFeatureBins;

    double frequency(int bin) const { return f_start + df * bin; }
};

/// channels x n_bins, row-major.
struct FeatureMatrix {
    int channels = 0;
    FrequencyGrid grid;
    FeatureKind kind = FeatureKind::LogAmplitudeRatio;
    std::vector<double> data;

    double& at(int c, int b) { return data[static_cast<std::size_t>(c) * grid.n_bins + b]; }
    double at(int c, int b) const { return data[static_cast<std::size_t>(c) * grid.n_bins + b]; }
    void validate() const;
};

struct NoiseSpec {
    enum class Mode { SnrDb, Sigma };
    Mode mode = Mode::SnrDb;
    double snr_db = std::numeric_limits<double>::infinity();
    double sigma = 0.0;
    std::uint64_t seed = 0;

    static NoiseSpec none() { return {}; }
    static NoiseSpec snr(double db, std::uint64_t seed) { return {Mode::SnrDb, db, 0.0, seed}; }
    static NoiseSpec absolute(double sigma, std::uint64_t seed) { return {Mode::Sigma, 0.0, sigma, seed}; }
    NoiseSpec with_seed(std::uint64_t s) const
    {
        NoiseSpec n = *this;
        n.seed = s;
        return n;
    }
    bool is_silent() const { return mode == Mode::SnrDb ? std::isinf(snr_db) && snr_db > 0 : sigma == 0.0; }
};

double rms(std::span<const double> x);

/// Forward DFT of a real series zero-padded to n_fft; returns bins 0..n_fft/2.
std::vector<Complex> rfft(std::span<const double> x, std::size_t n_fft);
/// Inverse of rfft for an n-point real series (includes the 1/n factor).
std::vector<double> irfft(std::span<const Complex> spectrum, std::size_t n);

std::size_t next_pow2(std::size_t n);

struct LogRatioSettings {
    double f_start = 0.12; // first DFT bin at or above this frequency
    int n_bins = kFeatureBins;
};

/// ln |FFT(response)| / |FFT(input)| on n_bins consecutive DFT bins. Records are
/// zero-padded to the next power of two.
FeatureMatrix log_spectral_ratio_features(std::span<const TimeSeries> responses, const TimeSeries& input,
                                          const LogRatioSettings& settings = {});

struct FrfSettings {
    double f_start = 0.10;
    double df = 0.01;
    int n_bins = kFeatureBins;
};

/// Complex FRF response/input on an exact df grid: real parts then imaginary
/// parts, two rows per response.
FeatureMatrix frf_features(std::span<const TimeSeries> responses, const TimeSeries& input,
                           const FrfSettings& settings = {});

/// DFT length giving bins exactly df apart for a record sampled at dt.
std::size_t frf_fft_length(const TimeSeries& input, double df);

TimeSeries add_noise(const TimeSeries& ts, const NoiseSpec& spec);

/// Input-spectrum magnitudes below this fraction of the largest bin are floored.
inline constexpr double kSpectrumFloor = 1e-12;

} // namespace mvbu::signals
