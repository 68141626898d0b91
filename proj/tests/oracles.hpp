#pragma once

// Independent reference computations shared by the unit and acceptance suites:
// adaptive quadrature of the latent likelihood integrand and sampler
// experiments on targets with known moments.

#include <cmath>
#include <functional>
#include <numbers>
#include <random>
#include <vector>

#include "mvbu/latent_inference.hpp"
#include "mvbu/samplers.hpp"

namespace mvbu::test {

namespace detail {
inline double simpson_step(const std::function<double(double)>& f, double a, double b, double fa, double fm, double fb,
                           double whole, double tol, int depth)
{
    const double m = 0.5 * (a + b), lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    const double flm = f(lm), frm = f(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    if (depth <= 0 || std::abs(left + right - whole) <= 15.0 * tol) return left + right + (left + right - whole) / 15.0;
    return simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
           simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}
} // namespace detail

/// Adaptive Simpson quadrature to absolute tolerance `tol`.
inline double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double tol, int depth = 50)
{
    const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    return detail::simpson_step(f, a, b, fa, fm, fb, whole, tol, depth);
}

inline double normal_density(double z, double mu, double var)
{
    return std::exp(-0.5 * (z - mu) * (z - mu) / var) / std::sqrt(2.0 * std::numbers::pi * var);
}

/// 1-D latent integral q_X(z) q_theta(z) / N(z; 0, 1) by adaptive quadrature,
/// split at the integrand's peak so narrow peaks are resolved.
inline double latent_integral_quadrature(double mx, double vx, double mt, double vt)
{
    const auto f = [=](double z) {
        return normal_density(z, mx, vx) * normal_density(z, mt, vt) / normal_density(z, 0.0, 1.0);
    };
    const double p = 1.0 / vx + 1.0 / vt - 1.0;
    const double centre = (mx / vx + mt / vt) / p;
    const double width = 1.0 / std::sqrt(p);
    const double lo = centre - 40.0 * width, hi = centre + 40.0 * width;
    double total = 0.0;
    // Panels of one width each keep the adaptive rule from missing the peak.
    for (double a = lo; a < hi; a += width) total += adaptive_simpson(f, a, std::min(a + width, hi), 1e-15);
    return total;
}

/// Random valid 1-D case with variances in [0.05, 0.95] (always integrable).
inline std::array<double, 4> random_latent_case(std::mt19937_64& rng)
{
    std::uniform_real_distribution<double> mean(-2.0, 2.0), var(0.05, 0.95);
    return {mean(rng), var(rng), mean(rng), var(rng)};
}

inline jmvae::DiagonalGaussianLatent latent(std::vector<double> mu, const std::vector<double>& var)
{
    std::vector<double> lv(var.size());
    for (std::size_t i = 0; i < var.size(); ++i) lv[i] = std::log(var[i]);
    return {std::move(mu), std::move(lv)};
}

// ---------------------------------------------------------------------------
// Sampler experiments

struct Moments {
    double mean_x = 0.0, mean_y = 0.0, se_x = 0.0, se_y = 0.0, corr = 0.0;
};

/// Batch-means standard errors: the chain is split into `batches` blocks.
inline Moments chain_moments(const samplers::PosteriorSamples& s, int batches = 50)
{
    const auto x = s.column(0), y = s.column(1);
    const std::size_t n = x.size();
    Moments m;
    for (std::size_t i = 0; i < n; ++i) {
        m.mean_x += x[i] / n;
        m.mean_y += y[i] / n;
    }
    double sxx = 0.0, syy = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (x[i] - m.mean_x) * (x[i] - m.mean_x);
        syy += (y[i] - m.mean_y) * (y[i] - m.mean_y);
        sxy += (x[i] - m.mean_x) * (y[i] - m.mean_y);
    }
    m.corr = sxy / std::sqrt(sxx * syy);
    const std::size_t len = n / static_cast<std::size_t>(batches);
    double vx = 0.0, vy = 0.0;
    for (int b = 0; b < batches; ++b) {
        double bx = 0.0, by = 0.0;
        for (std::size_t i = 0; i < len; ++i) {
            bx += x[b * len + i] / len;
            by += y[b * len + i] / len;
        }
        vx += (bx - m.mean_x) * (bx - m.mean_x) / (batches - 1);
        vy += (by - m.mean_y) * (by - m.mean_y) / (batches - 1);
    }
    m.se_x = std::sqrt(vx / batches);
    m.se_y = std::sqrt(vy / batches);
    return m;
}

inline constexpr double kGaussMeanX = 0.5, kGaussMeanY = -0.3, kGaussRho = 0.8;

/// Bivariate normal, unit variances, correlation 0.8.
inline double correlated_gaussian(std::span<const double> p)
{
    const double x = p[0] - kGaussMeanX, y = p[1] - kGaussMeanY;
    return -0.5 * (x * x - 2.0 * kGaussRho * x * y + y * y) / (1.0 - kGaussRho * kGaussRho);
}

inline samplers::PosteriorSamples run_correlated_gaussian(std::uint64_t seed)
{
    samplers::ChainConfig cfg;
    cfg.burn_in = 2000;
    cfg.thin = 10;
    cfg.target_samples = 20000;
    cfg.seed = seed;
    const samplers::Box box{{-6.0, -6.0}, {6.0, 6.0}};
    const std::vector<double> start{0.0, 0.0};
    return samplers::mh_sample(correlated_gaussian, box, start, cfg);
}

/// Tilted double well with modes near -1 and +1 separated by a deep barrier.
inline double double_well(std::span<const double> p)
{
    const double x = p[0];
    return -(x * x - 1.0) * (x * x - 1.0) / 0.05 + 0.5 * x;
}

/// Mass of the x > 0 mode divided by the x < 0 mode, by quadrature.
inline double double_well_ratio_quadrature()
{
    const auto f = [](double x) { return std::exp(double_well(std::span<const double>(&x, 1))); };
    return adaptive_simpson(f, 0.0, 2.0, 1e-13) / adaptive_simpson(f, -2.0, 0.0, 1e-13);
}

inline double positive_to_negative_ratio(const samplers::PosteriorSamples& s)
{
    double pos = 0.0, neg = 0.0;
    for (double v : s.column(0)) (v > 0.0 ? pos : neg) += 1.0;
    return neg > 0.0 ? pos / neg : std::numeric_limits<double>::infinity();
}

inline samplers::ChainConfig double_well_chain(std::uint64_t seed)
{
    samplers::ChainConfig cfg;
    cfg.burn_in = 2000;
    cfg.thin = 10;
    cfg.target_samples = 20000;
    cfg.seed = seed;
    return cfg;
}

inline samplers::ReplicaConfig double_well_ladder()
{
    samplers::ReplicaConfig r;
    r.n_replicas = 8;
    r.max_temperature = 50.0;
    // Mode flips reach the T = 1 chain only through swaps, so frequent swaps
    // set the effective sample size of the mode-mass ratio.
    r.exchange_interval = 10;
    r.n_exchanges = 20200;
    return r;
}

inline const samplers::Box kDoubleWellBox{{-2.0}, {2.0}};

/// Replica exchange on the double well; starts in the left mode.
inline double double_well_re_ratio(std::uint64_t seed)
{
    const std::vector<std::vector<double>> start{{-1.0}};
    return positive_to_negative_ratio(samplers::replica_exchange_sample(double_well, kDoubleWellBox, start,
                                                                        double_well_chain(seed), double_well_ladder()));
}

/// Plain MH with the same number of T = 1 steps.
inline double double_well_mh_ratio(std::uint64_t seed)
{
    const std::vector<double> start{-1.0};
    return positive_to_negative_ratio(samplers::mh_sample(double_well, kDoubleWellBox, start, double_well_chain(seed)));
}

inline const std::vector<double> kDiscreteWeights{1.0, 2.0, 3.0, 4.0, 5.0};

/// Piecewise-constant target on [0, 5): state k has weight k + 1.
inline double discrete_target(std::span<const double> p)
{
    const int k = std::min(4, static_cast<int>(std::floor(p[0])));
    return std::log(kDiscreteWeights[static_cast<std::size_t>(k)]);
}

/// Largest relative error of the state occupancies after `steps` MH steps.
inline double discrete_occupancy_error(std::uint64_t seed, long steps = 1000000)
{
    samplers::ChainConfig cfg;
    cfg.burn_in = 1000;
    cfg.thin = 1;
    cfg.target_samples = static_cast<int>(steps);
    cfg.seed = seed;
    cfg.proposal_std_fraction = 0.5;
    const samplers::Box box{{0.0}, {5.0}};
    const std::vector<double> start{2.5};
    const auto s = samplers::mh_sample(discrete_target, box, start, cfg);
    std::vector<double> count(5, 0.0);
    for (double v : s.column(0)) count[static_cast<std::size_t>(std::min(4, static_cast<int>(v)))] += 1.0;
    double worst = 0.0;
    for (int k = 0; k < 5; ++k) {
        const double expected = kDiscreteWeights[static_cast<std::size_t>(k)] / 15.0;
        worst = std::max(worst, std::abs(count[static_cast<std::size_t>(k)] / s.size() - expected) / expected);
    }
    return worst;
}

} // namespace mvbu::test
