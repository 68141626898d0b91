#pragma once

// Joint multimodal VAE over model parameters theta and response features X.
// Three encoders map (theta, X), theta alone and X alone to diagonal Gaussian
// latents; one decoder maps a latent sample back to Gaussian means and
// log-variances for both modalities. Training pulls each unimodal encoder
// toward the joint one.

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "mvbu/nn/layers.hpp"
#include "mvbu/parameter_space.hpp"
#include "mvbu/signals.hpp"

namespace mvbu::jmvae {

inline constexpr int kDefaultLatentDim = 10;

struct DiagonalGaussianLatent {
    std::vector<double> mu;
    std::vector<double> log_var;

    std::size_t dim() const { return mu.size(); }
    std::vector<double> variance() const;
};

/// z = mu + exp(log_var / 2) * eps. A log_var of -inf gives z = mu.
std::vector<double> reparameterize(const DiagonalGaussianLatent& latent, std::span<const double> eps);

struct Architecture {
    int theta_dim = 3;
    int channels = 5;
    int bins = signals::kFeatureBins;
    int latent_dim = kDefaultLatentDim;
    int conv_width = 8; // channels of the first conv stage; doubled at each of 4 stages
    int hidden = 128;   // width of the dense layers
    bool residual = false;

    void validate() const;
    nlohmann::json to_json() const;
    static Architecture from_json(const nlohmann::json& j);

    /// Full-width presets; desk scale halves conv_width and hidden.
    static Architecture frame(bool paper_scale = false);
    static Architecture lumped(bool paper_scale = false);

    int coarse_length() const { return bins / 16; }
    int coarse_channels() const { return 8 * conv_width; }
};

/// Per-entry affine normalization. theta statistics apply to transformed
/// coordinates (log10 for log-uniform parameters).
struct Normalization {
    std::vector<double> theta_mean, theta_std;
    std::vector<double> x_mean, x_std; // channels * bins entries

    std::vector<double> normalize_theta(const ParameterSpace& space, std::span<const double> theta) const;
    std::vector<double> denormalize_theta(const ParameterSpace& space, std::span<const double> normalized) const;
    template <class T>
    void normalize_x(std::span<const T> x, std::span<double> out) const
    {
        for (std::size_t i = 0; i < x.size(); ++i) out[i] = (static_cast<double>(x[i]) - x_mean[i]) / x_std[i];
    }
};

/// In-memory training set: theta in natural units, X as float features.
struct TrainingSet {
    int theta_dim = 0;
    int feature_size = 0; // channels * bins
    std::vector<double> theta;
    std::vector<float> x;

    std::size_t size() const { return theta_dim ? theta.size() / static_cast<std::size_t>(theta_dim) : 0; }
    std::span<const double> theta_row(std::size_t i) const
    {
        return {theta.data() + i * static_cast<std::size_t>(theta_dim), static_cast<std::size_t>(theta_dim)};
    }
    std::span<const float> x_row(std::size_t i) const
    {
        return {x.data() + i * static_cast<std::size_t>(feature_size), static_cast<std::size_t>(feature_size)};
    }
    void validate() const;
};

Normalization fit_normalization(const ParameterSpace& space, const TrainingSet& data);

struct LatentTensors {
    nn::Tensor mu;      // [B, latent]
    nn::Tensor log_var; // [B, latent], clamped
};

struct Decoded {
    nn::Tensor theta_mu, theta_log_var; // [B, theta_dim]
    nn::Tensor x_mu, x_log_var;         // [B, channels * bins]
};

class JmvaeModel {
public:
    JmvaeModel(Architecture arch, ParameterSpace space, std::uint64_t seed);

    const Architecture& architecture() const { return arch_; }
    const ParameterSpace& space() const { return space_; }
    const Normalization& normalization() const { return norm_; }
    void set_normalization(Normalization n);

    // Graph-level interface on normalized inputs: theta [B, theta_dim], x [B, channels * bins].
    LatentTensors encode_joint(const nn::Tensor& theta, const nn::Tensor& x) const;
    LatentTensors encode_theta(const nn::Tensor& theta) const;
    LatentTensors encode_x(const nn::Tensor& x) const;
    Decoded decode(const nn::Tensor& z) const;

    // Natural-unit inference helpers (no graph is recorded).
    DiagonalGaussianLatent encode_theta(std::span<const double> theta) const;
    DiagonalGaussianLatent encode_x(std::span<const double> features) const;
    DiagonalGaussianLatent encode_x(const signals::FeatureMatrix& features) const;
    DiagonalGaussianLatent encode_joint(std::span<const double> theta, std::span<const double> features) const;

    std::vector<nn::NamedTensor> parameters() const;
    std::vector<nn::Tensor> parameter_tensors() const;

    void save(const std::string& path, const nlohmann::json& extra = {}) const;
    static JmvaeModel load(const std::string& path);
    /// Metadata block written by save().
    nlohmann::json metadata() const;

private:
    LatentTensors split_latent(const nn::Tensor& head) const;

    Architecture arch_;
    ParameterSpace space_;
    std::uint64_t seed_;
    Normalization norm_;
    nn::Sequential joint_x_, joint_theta_, joint_merge_;
    nn::Sequential theta_encoder_, x_encoder_;
    nn::Sequential decoder_trunk_, theta_head_, x_head_;
};

struct LossTerms {
    double nll_theta = 0.0, nll_x = 0.0, kl_prior = 0.0, kl_theta = 0.0, kl_x = 0.0;
    double total() const { return nll_theta + nll_x + kl_prior + kl_theta + kl_x; }
};

/// Batch-mean negated objective: reconstruction NLL of (theta, X) under one
/// reparameterized joint sample, plus KL(joint || N(0, I)), plus the KL of each
/// unimodal latent to the joint latent. eps is [B, latent].
nn::Tensor jmvae_kl_loss(const JmvaeModel& model, const nn::Tensor& theta, const nn::Tensor& x, const nn::Tensor& eps,
                         LossTerms* terms = nullptr);

struct TrainingConfig {
    int batch_size = 64;
    double learning_rate = 1e-4;
    int epochs = 200;
    std::uint64_t seed = 1;
    int checkpoint_every = 0; // epochs; 0 writes only at the end when a path is set
    std::string checkpoint_path;

    void validate() const;
    nlohmann::json to_json() const;
    static TrainingConfig from_json(const nlohmann::json& j);
};

struct TrainingResult {
    std::vector<double> loss_history; // per-epoch mean loss per datum
};

using EpochCallback = std::function<void(int epoch, double mean_loss)>;

/// Fits normalization statistics if none are set, then runs mini-batch Adam.
/// Divergence (10 consecutive epochs with loss above initial + 9 |initial|) or a
/// non-finite batch loss throws NumericalError.
TrainingResult train(JmvaeModel& model, const TrainingSet& data, const TrainingConfig& cfg,
                     const EpochCallback& on_epoch = {});

/// Sum of KL(q_theta(z | theta_i) || q(z | theta_i, X_i)) averaged over the set.
double mean_unimodal_kl(const JmvaeModel& model, const TrainingSet& data, bool theta_side = true);

} // namespace mvbu::jmvae
