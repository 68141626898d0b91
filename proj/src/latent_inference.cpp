#include "mvbu/latent_inference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "mvbu/error.hpp"
#include "mvbu/rng.hpp"

namespace mvbu::inference {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void check_pair(const DiagonalGaussianLatent& qx, const DiagonalGaussianLatent& qt)
{
    require(qx.dim() > 0 && qx.dim() == qt.dim() && qx.log_var.size() == qx.dim() && qt.log_var.size() == qt.dim(),
            "latent dimensions differ");
}

double log_normal_pdf(double z, double mu, double log_var)
{
    const double d = z - mu;
    return -0.5 * (std::log(2.0 * std::numbers::pi) + log_var + d * d * std::exp(-log_var));
}

} // namespace

std::string to_string(Method m)
{
    switch (m) {
    case Method::ClosedForm:
        return "closed-form";
    case Method::MonteCarlo:
        return "monte-carlo";
    case Method::SimulationInLoop:
        return "simulation-in-loop";
    }
    return "unknown";
}

std::vector<double> combined_precision(const DiagonalGaussianLatent& qx, const DiagonalGaussianLatent& qt)
{
    check_pair(qx, qt);
    std::vector<double> p(qx.dim());
    for (std::size_t i = 0; i < p.size(); ++i) p[i] = std::exp(-qx.log_var[i]) + std::exp(-qt.log_var[i]) - 1.0;
    return p;
}

LikelihoodEstimate marginal_likelihood_closed(const DiagonalGaussianLatent& qx, const DiagonalGaussianLatent& qt)
{
    const auto precision = combined_precision(qx, qt);
    LikelihoodEstimate est;
    est.method = Method::ClosedForm;
    double log_value = 0.0;
    for (std::size_t i = 0; i < precision.size(); ++i) {
        const double p = precision[i];
        if (!(p > 0.0)) {
            est.integrable = false;
            est.log_value = kNegInf;
            return est;
        }
        const double ix = std::exp(-qx.log_var[i]), it = std::exp(-qt.log_var[i]);
        const double b = qx.mu[i] * ix + qt.mu[i] * it;
        const double c = qx.mu[i] * qx.mu[i] * ix + qt.mu[i] * qt.mu[i] * it;
        // integral of N(z; mx, vx) N(z; mt, vt) / N(z; 0, 1)
        log_value += -0.5 * (qx.log_var[i] + qt.log_var[i] + std::log(p)) + 0.5 * b * b / p - 0.5 * c;
    }
    est.log_value = log_value;
    return est;
}

LikelihoodEstimate marginal_likelihood_mc(const DiagonalGaussianLatent& qx, const DiagonalGaussianLatent& qt,
                                          int n_samples, std::uint64_t seed)
{
    check_pair(qx, qt);
    require(n_samples >= 100, "Monte Carlo likelihood needs at least 100 samples");
    Rng rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    const std::size_t d = qx.dim();
    std::vector<double> log_w(static_cast<std::size_t>(n_samples));
    for (auto& lw : log_w) {
        double s = 0.0;
        for (std::size_t i = 0; i < d; ++i) {
            const double z = qt.mu[i] + std::exp(0.5 * qt.log_var[i]) * normal(rng);
            s += log_normal_pdf(z, qx.mu[i], qx.log_var[i]) - log_normal_pdf(z, 0.0, 0.0);
        }
        lw = s;
    }
    LikelihoodEstimate est;
    est.method = Method::MonteCarlo;
    const double max_lw = *std::max_element(log_w.begin(), log_w.end());
    if (!std::isfinite(max_lw)) {
        est.integrable = false;
        est.log_value = kNegInf;
        return est;
    }
    // Scaled weights w_i / max w keep the sums finite.
    double sum = 0.0, sum2 = 0.0;
    for (double lw : log_w) {
        const double w = std::exp(lw - max_lw);
        sum += w;
        sum2 += w * w;
    }
    const double n = static_cast<double>(n_samples);
    const double mean = sum / n;
    const double var = std::max(0.0, (sum2 - n * mean * mean) / (n - 1.0));
    est.log_value = max_lw + std::log(mean);
    est.mc_std_error = std::sqrt(var / n) / mean; // delta method: se(log m) = se(m) / m
    return est;
}

std::pair<DiagonalGaussianLatent, DiagonalGaussianLatent>
truncated_variance_surrogate(const DiagonalGaussianLatent& qx, const DiagonalGaussianLatent& qt, double min_precision)
{
    auto sx = qx, st = qt;
    const auto p = combined_precision(qx, qt);
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (p[i] >= min_precision) continue;
        // Scaling both variances by s multiplies (1/vx + 1/vt) by 1/s.
        const double inv_sum = std::exp(-qx.log_var[i]) + std::exp(-qt.log_var[i]);
        const double log_s = std::log(inv_sum / (1.0 + min_precision));
        sx.log_var[i] += log_s;
        st.log_var[i] += log_s;
    }
    return {sx, st};
}

LikelihoodEstimate latent_likelihood(const DiagonalGaussianLatent& qx, const DiagonalGaussianLatent& qt,
                                     const LikelihoodOptions& opts)
{
    auto est = marginal_likelihood_closed(qx, qt);
    if (est.integrable) return est;
    const auto [sx, st] = truncated_variance_surrogate(qx, qt);
    auto mc = marginal_likelihood_mc(sx, st, opts.fallback_samples, opts.fallback_seed);
    mc.used_fallback = true;
    mc.integrable = false;
    return mc;
}

// ---------------------------------------------------------------------------

LatentPosterior::LatentPosterior(const jmvae::JmvaeModel& model, DiagonalGaussianLatent x_obs_latent,
                                 LikelihoodOptions opts)
    : model_(&model), x_obs_(std::move(x_obs_latent)), opts_(opts)
{
    require(x_obs_.dim() == static_cast<std::size_t>(model.architecture().latent_dim),
            "observation latent has the wrong dimension");
}

LikelihoodEstimate LatentPosterior::likelihood(std::span<const double> theta) const
{
    auto est = latent_likelihood(x_obs_, model_->encode_theta(theta), opts_);
    if (est.used_fallback) ++fallbacks_;
    return est;
}

double LatentPosterior::log_density(std::span<const double> theta) const
{
    if (!model_->space().contains(theta)) return kNegInf;
    return likelihood(theta).log_value;
}

double LatentPosterior::log_density_transformed(std::span<const double> t) const
{
    if (!model_->space().contains_transformed(t)) return kNegInf;
    auto theta = model_->space().inverse(t);
    // Round-off in 10^t must not push a boundary point outside.
    for (std::size_t i = 0; i < theta.size(); ++i)
        theta[i] = std::clamp(theta[i], model_->space()[i].lower, model_->space()[i].upper);
    return likelihood(theta).log_value;
}

SimulationPosterior::SimulationPosterior(const jmvae::JmvaeModel& model, FeatureSimulator simulator,
                                         DiagonalGaussianLatent x_obs_latent, LikelihoodOptions opts)
    : model_(&model), simulator_(std::move(simulator)), x_obs_(std::move(x_obs_latent)), opts_(opts)
{
    require(static_cast<bool>(simulator_), "simulation posterior needs a simulator");
}

LikelihoodEstimate SimulationPosterior::likelihood(std::span<const double> theta) const
{
    const auto features = simulator_(theta);
    auto est = latent_likelihood(x_obs_, model_->encode_x(features), opts_);
    if (!est.used_fallback) est.method = Method::SimulationInLoop;
    return est;
}

double SimulationPosterior::log_density(std::span<const double> theta) const
{
    if (!model_->space().contains(theta)) return kNegInf;
    return likelihood(theta).log_value;
}

double SimulationPosterior::log_density_transformed(std::span<const double> t) const
{
    if (!model_->space().contains_transformed(t)) return kNegInf;
    auto theta = model_->space().inverse(t);
    for (std::size_t i = 0; i < theta.size(); ++i)
        theta[i] = std::clamp(theta[i], model_->space()[i].lower, model_->space()[i].upper);
    return likelihood(theta).log_value;
}

} // namespace mvbu::inference
