#pragma once

// Likelihood of observed features given parameters, evaluated in latent space:
//   p(X_obs | theta) is proportional to  integral q_X(z | X_obs) q_theta(z | theta) / p(z) dz
// with p(z) = N(0, I). Every factor is a diagonal Gaussian, so the integral
// factorizes per dimension. The normalizing constants of the likelihood and of
// the posterior are never computed; samplers only use differences.

#include <atomic>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "mvbu/jmvae.hpp"
#include "mvbu/parameter_space.hpp"
#include "mvbu/signals.hpp"

namespace mvbu::inference {

using jmvae::DiagonalGaussianLatent;

enum class Method { ClosedForm, MonteCarlo, SimulationInLoop };

std::string to_string(Method m);

struct LikelihoodEstimate {
    double log_value = 0.0;
    double mc_std_error = 0.0; // standard error of log_value; 0 for the closed form
    Method method = Method::ClosedForm;
    bool integrable = true;    // false: some dimension has 1/vx + 1/vt - 1 <= 0
    bool used_fallback = false; // value comes from the truncated-variance surrogate
};

/// Per-dimension precision 1/vx + 1/vt - 1 of the integrand.
std::vector<double> combined_precision(const DiagonalGaussianLatent& qx, const DiagonalGaussianLatent& qt);

/// Exact log of the latent integral. When any dimension is not integrable the
/// result carries integrable = false and log_value = -inf.
LikelihoodEstimate marginal_likelihood_closed(const DiagonalGaussianLatent& qx, const DiagonalGaussianLatent& qt);

/// Importance sampling with q_theta as the proposal: mean of q_X(z) / p(z)
/// over n_samples draws. The standard error comes from the delta method.
LikelihoodEstimate marginal_likelihood_mc(const DiagonalGaussianLatent& qx, const DiagonalGaussianLatent& qt,
                                          int n_samples, std::uint64_t seed);

/// Shrinks both variances in each non-integrable dimension until the combined
/// precision reaches `min_precision`.
std::pair<DiagonalGaussianLatent, DiagonalGaussianLatent>
truncated_variance_surrogate(const DiagonalGaussianLatent& qx, const DiagonalGaussianLatent& qt,
                             double min_precision = 0.05);

struct LikelihoodOptions {
    int fallback_samples = 4000;
    std::uint64_t fallback_seed = 0x1a7e57;
};

/// Closed form, or the Monte Carlo estimate over the truncated-variance
/// surrogate when the closed form is not integrable.
LikelihoodEstimate latent_likelihood(const DiagonalGaussianLatent& qx, const DiagonalGaussianLatent& qt,
                                     const LikelihoodOptions& opts = {});

/// Unnormalized log posterior with a uniform prior in transformed coordinates.
/// Holds the observation latent, computed once. Thread-safe for concurrent calls.
class LatentPosterior {
public:
    LatentPosterior(const jmvae::JmvaeModel& model, DiagonalGaussianLatent x_obs_latent, LikelihoodOptions opts = {});

    /// theta in natural units; -inf outside the prior bounds.
    double log_density(std::span<const double> theta) const;
    /// Same target in transformed coordinates (log10 for log-uniform parameters).
    double log_density_transformed(std::span<const double> t) const;
    LikelihoodEstimate likelihood(std::span<const double> theta) const;

    const DiagonalGaussianLatent& observation_latent() const { return x_obs_; }
    long fallback_count() const { return fallbacks_.load(); }

private:
    const jmvae::JmvaeModel* model_;
    DiagonalGaussianLatent x_obs_;
    LikelihoodOptions opts_;
    mutable std::atomic<long> fallbacks_{0};
};

/// Runs the response analysis for theta and returns its features.
using FeatureSimulator = std::function<signals::FeatureMatrix(std::span<const double> theta)>;

/// Comparison path without the theta encoder: simulate, extract features, encode
/// them with the X encoder, then evaluate the same latent integral.
class SimulationPosterior {
public:
    SimulationPosterior(const jmvae::JmvaeModel& model, FeatureSimulator simulator, DiagonalGaussianLatent x_obs_latent,
                        LikelihoodOptions opts = {});

    double log_density(std::span<const double> theta) const;
    double log_density_transformed(std::span<const double> t) const;
    LikelihoodEstimate likelihood(std::span<const double> theta) const;

private:
    const jmvae::JmvaeModel* model_;
    FeatureSimulator simulator_;
    DiagonalGaussianLatent x_obs_;
    LikelihoodOptions opts_;
};

} // namespace mvbu::inference
