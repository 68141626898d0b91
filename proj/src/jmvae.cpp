#include "mvbu/jmvae.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mvbu/error.hpp"
#include "mvbu/nn/checkpoint.hpp"
#include "mvbu/nn/optim.hpp"

namespace mvbu::jmvae {

using nn::LayerSpec;
using nn::Tensor;

namespace {

constexpr double kOutputInitScale = 0.1;

// Dense stack in -> hidden x (n-1) -> out with activations between layers.
// `activate_last` also activates the final output.
std::vector<LayerSpec> dense(int in, int hidden, int out, int n_layers, bool activate_last)
{
    std::vector<LayerSpec> s;
    for (int i = 0; i < n_layers; ++i) {
        const int a = i == 0 ? in : hidden;
        const int b = i == n_layers - 1 ? out : hidden;
        s.push_back(LayerSpec::linear(a, b));
        if (i < n_layers - 1 || activate_last) s.push_back(LayerSpec::leaky());
    }
    return s;
}

// Four stride-2 stages: bins -> bins / 16.
std::vector<LayerSpec> conv_down(const Architecture& a)
{
    std::vector<LayerSpec> s;
    int in = a.channels;
    for (int stage = 0; stage < 4; ++stage) {
        const int out = a.conv_width << stage;
        if (a.residual) {
            s.push_back(LayerSpec::down(in, out));
        } else {
            s.push_back(LayerSpec::conv(in, out, 3, 2, 1));
            s.push_back(LayerSpec::leaky());
        }
        in = out;
    }
    return s;
}

// Four x2 stages back to bins, ending in 2 * channels maps (means, log-variances).
std::vector<LayerSpec> conv_up(const Architecture& a)
{
    std::vector<LayerSpec> s;
    int in = a.coarse_channels();
    for (int stage = 0; stage < 3; ++stage) {
        const int out = in / 2;
        if (a.residual) {
            s.push_back(LayerSpec::up(in, out));
        } else {
            s.push_back(LayerSpec::up_conv(in, out));
            s.push_back(LayerSpec::leaky());
        }
        in = out;
    }
    s.push_back(LayerSpec::up_conv(in, 2 * a.channels));
    return s;
}

template <class... Parts>
std::vector<LayerSpec> join(Parts... parts)
{
    std::vector<LayerSpec> out;
    (out.insert(out.end(), parts.begin(), parts.end()), ...);
    return out;
}

std::vector<double> to_vector(std::span<const double> s) { return {s.begin(), s.end()}; }

DiagonalGaussianLatent row_latent(const LatentTensors& t, int row)
{
    const int d = t.mu.dim(1);
    const auto mu = t.mu.values().subspan(static_cast<std::size_t>(row) * d, d);
    const auto lv = t.log_var.values().subspan(static_cast<std::size_t>(row) * d, d);
    return {to_vector(mu), to_vector(lv)};
}

void append_all(std::vector<nn::NamedTensor>& out, const std::vector<nn::NamedTensor>& part)
{
    out.insert(out.end(), part.begin(), part.end());
}

void put_array(std::vector<nn::NamedTensor>& out, const std::string& name, const std::vector<double>& v)
{
    out.push_back({name, Tensor::from({static_cast<int>(v.size())}, v)});
}

} // namespace

std::vector<double> DiagonalGaussianLatent::variance() const
{
    std::vector<double> v(log_var.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = std::exp(log_var[i]);
    return v;
}

std::vector<double> reparameterize(const DiagonalGaussianLatent& latent, std::span<const double> eps)
{
    require(eps.size() == latent.dim() && latent.log_var.size() == latent.dim(), "reparameterize: size mismatch");
    std::vector<double> z(latent.dim());
    for (std::size_t i = 0; i < z.size(); ++i)
        z[i] = latent.mu[i] + (std::isinf(latent.log_var[i]) && latent.log_var[i] < 0
                                   ? 0.0
                                   : std::exp(0.5 * latent.log_var[i]) * eps[i]);
    return z;
}

// ---------------------------------------------------------------------------

void Architecture::validate() const
{
    require(theta_dim > 0 && channels > 0 && latent_dim > 0 && conv_width > 0 && hidden > 0,
            "architecture sizes must be positive");
    require(bins % 16 == 0 && bins >= 16, "feature length must be a multiple of 16");
}

nlohmann::json Architecture::to_json() const
{
    return {{"theta_dim", theta_dim}, {"channels", channels}, {"bins", bins},         {"latent_dim", latent_dim},
            {"conv_width", conv_width}, {"hidden", hidden},   {"residual", residual}};
}

Architecture Architecture::from_json(const nlohmann::json& j)
{
    static const char* kKeys[] = {"theta_dim", "channels", "bins", "latent_dim", "conv_width", "hidden", "residual"};
    require(j.is_object(), "architecture must be an object");
    for (const auto& [key, _] : j.items())
        require(std::find(std::begin(kKeys), std::end(kKeys), key) != std::end(kKeys),
                "unknown key '" + key + "' in architecture");
    Architecture a;
    try {
        a.theta_dim = j.value("theta_dim", a.theta_dim);
        a.channels = j.value("channels", a.channels);
        a.bins = j.value("bins", a.bins);
        a.latent_dim = j.value("latent_dim", a.latent_dim);
        a.conv_width = j.value("conv_width", a.conv_width);
        a.hidden = j.value("hidden", a.hidden);
        a.residual = j.value("residual", a.residual);
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("malformed architecture: ") + e.what());
    }
    a.validate();
    return a;
}

Architecture Architecture::frame(bool paper_scale)
{
    Architecture a;
    a.theta_dim = 3;
    a.channels = 5;
    a.conv_width = paper_scale ? 16 : 8;
    a.hidden = paper_scale ? 256 : 128;
    return a;
}

Architecture Architecture::lumped(bool paper_scale)
{
    Architecture a = frame(paper_scale);
    a.theta_dim = 9;
    a.channels = 6;
    a.residual = true;
    return a;
}

// ---------------------------------------------------------------------------

std::vector<double> Normalization::normalize_theta(const ParameterSpace& space, std::span<const double> theta) const
{
    auto t = space.transform(theta);
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = (t[i] - theta_mean[i]) / theta_std[i];
    return t;
}

std::vector<double> Normalization::denormalize_theta(const ParameterSpace& space,
                                                     std::span<const double> normalized) const
{
    std::vector<double> t(normalized.size());
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = normalized[i] * theta_std[i] + theta_mean[i];
    return space.inverse(t);
}

void TrainingSet::validate() const
{
    require(theta_dim > 0 && feature_size > 0, "training set has no layout");
    require(theta.size() % static_cast<std::size_t>(theta_dim) == 0, "theta payload is not a whole number of rows");
    require(x.size() == size() * static_cast<std::size_t>(feature_size), "feature payload does not match theta rows");
    require(size() > 0, "training set is empty");
}

Normalization fit_normalization(const ParameterSpace& space, const TrainingSet& data)
{
    data.validate();
    require(static_cast<std::size_t>(data.theta_dim) == space.size(), "training set dimension differs from the space");
    const auto n = static_cast<double>(data.size());
    Normalization norm;
    norm.theta_mean.assign(data.theta_dim, 0.0);
    norm.theta_std.assign(data.theta_dim, 0.0);
    norm.x_mean.assign(data.feature_size, 0.0);
    norm.x_std.assign(data.feature_size, 0.0);
    for (std::size_t r = 0; r < data.size(); ++r) {
        const auto t = space.transform(data.theta_row(r));
        for (int i = 0; i < data.theta_dim; ++i) norm.theta_mean[i] += t[i] / n;
        const auto x = data.x_row(r);
        for (int i = 0; i < data.feature_size; ++i) norm.x_mean[i] += x[i] / n;
    }
    for (std::size_t r = 0; r < data.size(); ++r) {
        const auto t = space.transform(data.theta_row(r));
        for (int i = 0; i < data.theta_dim; ++i) norm.theta_std[i] += std::pow(t[i] - norm.theta_mean[i], 2) / n;
        const auto x = data.x_row(r);
        for (int i = 0; i < data.feature_size; ++i) norm.x_std[i] += std::pow(x[i] - norm.x_mean[i], 2) / n;
    }
    // Constant entries are left unscaled rather than divided by zero.
    for (double& s : norm.theta_std) s = s > 0.0 ? std::sqrt(s) : 1.0;
    for (double& s : norm.x_std) s = s > 1e-24 ? std::sqrt(s) : 1.0;
    return norm;
}

// ---------------------------------------------------------------------------

JmvaeModel::JmvaeModel(Architecture arch, ParameterSpace space, std::uint64_t seed)
    : arch_(arch), space_(std::move(space)), seed_(seed)
{
    arch_.validate();
    require(space_.size() == static_cast<std::size_t>(arch_.theta_dim), "architecture and parameter space disagree");
    const int h = arch_.hidden, nz = arch_.latent_dim;
    const int flat = arch_.coarse_channels() * arch_.coarse_length();

    // Each network has its own RNG stream so layer changes in one do not
    // reshuffle the others.
    auto build = [&](std::uint64_t stream, std::vector<LayerSpec> specs) {
        Rng rng(derive_seed(seed_, stream));
        return nn::Sequential(std::move(specs), rng);
    };
    joint_x_ = build(1, join(conv_down(arch_), dense(flat, h, h, 3, true)));
    joint_theta_ = build(2, dense(arch_.theta_dim, h, h, 3, true));
    joint_merge_ = build(3, dense(2 * h, h, 2 * nz, 4, false));
    theta_encoder_ = build(4, dense(arch_.theta_dim, h, 2 * nz, 7, false));
    x_encoder_ = build(5, join(conv_down(arch_), dense(flat, h, 2 * nz, 6, false)));
    decoder_trunk_ = build(6, dense(nz, h, h, 4, true));
    theta_head_ = build(7, dense(h, h, 2 * arch_.theta_dim, 3, false));
    x_head_ = build(8, join(dense(h, h, flat, 3, true), conv_up(arch_)));
    // Heads start near mean 0 and log-variance 0: a log-variance of -3 on a
    // 6-sigma feature entry costs thousands per datum, and the resulting first
    // updates can leave most leaky units in their flat half.
    for (auto* head : {&joint_merge_, &theta_encoder_, &x_encoder_, &theta_head_, &x_head_})
        head->scale_output_weights(kOutputInitScale);
}

void JmvaeModel::set_normalization(Normalization n)
{
    require(n.theta_mean.size() == static_cast<std::size_t>(arch_.theta_dim) &&
                n.theta_std.size() == n.theta_mean.size(),
            "normalization has the wrong theta dimension");
    const auto fs = static_cast<std::size_t>(arch_.channels) * arch_.bins;
    require(n.x_mean.size() == fs && n.x_std.size() == fs, "normalization has the wrong feature size");
    norm_ = std::move(n);
}

LatentTensors JmvaeModel::split_latent(const Tensor& head) const
{
    const int nz = arch_.latent_dim;
    return {nn::slice_cols(head, 0, nz), nn::clamp(nn::slice_cols(head, nz, nz), nn::kLogVarMin, nn::kLogVarMax)};
}

LatentTensors JmvaeModel::encode_joint(const Tensor& theta, const Tensor& x) const
{
    return split_latent(joint_merge_.forward(nn::concat({joint_x_.forward(x), joint_theta_.forward(theta)})));
}

LatentTensors JmvaeModel::encode_theta(const Tensor& theta) const
{
    require(theta.rank() == 2 && theta.dim(1) == arch_.theta_dim, "theta batch has the wrong shape");
    return split_latent(theta_encoder_.forward(theta));
}

LatentTensors JmvaeModel::encode_x(const Tensor& x) const
{
    require(x.rank() == 2 && x.dim(1) == arch_.channels * arch_.bins, "feature batch has the wrong shape " +
                                                                         nn::shape_string(x.shape()));
    return split_latent(x_encoder_.forward(x));
}

Decoded JmvaeModel::decode(const Tensor& z) const
{
    require(z.rank() == 2 && z.dim(1) == arch_.latent_dim, "latent batch has the wrong shape");
    const Tensor trunk = decoder_trunk_.forward(z);
    const Tensor th = theta_head_.forward(trunk);
    const int b = z.dim(0), d = arch_.theta_dim, fs = arch_.channels * arch_.bins;
    const Tensor xh = nn::reshape(x_head_.forward(trunk), {b, 2 * fs});
    return {nn::slice_cols(th, 0, d), nn::clamp(nn::slice_cols(th, d, d), nn::kLogVarMin, nn::kLogVarMax),
            nn::slice_cols(xh, 0, fs), nn::clamp(nn::slice_cols(xh, fs, fs), nn::kLogVarMin, nn::kLogVarMax)};
}

DiagonalGaussianLatent JmvaeModel::encode_theta(std::span<const double> theta) const
{
    require(!norm_.theta_mean.empty(), "model has no normalization statistics");
    nn::NoGradGuard guard;
    const auto t = norm_.normalize_theta(space_, theta);
    return row_latent(encode_theta(Tensor::from({1, arch_.theta_dim}, t)), 0);
}

DiagonalGaussianLatent JmvaeModel::encode_x(std::span<const double> features) const
{
    require(!norm_.x_mean.empty(), "model has no normalization statistics");
    const auto fs = static_cast<std::size_t>(arch_.channels) * arch_.bins;
    require(features.size() == fs, "feature vector has " + std::to_string(features.size()) + " entries, expected " +
                                       std::to_string(fs));
    nn::NoGradGuard guard;
    std::vector<double> x(fs);
    norm_.normalize_x(features, std::span<double>(x));
    return row_latent(encode_x(Tensor::from({1, static_cast<int>(fs)}, std::move(x))), 0);
}

DiagonalGaussianLatent JmvaeModel::encode_x(const signals::FeatureMatrix& features) const
{
    require(features.channels == arch_.channels && features.grid.n_bins == arch_.bins,
            "feature matrix layout does not match the model");
    return encode_x(std::span<const double>(features.data));
}

DiagonalGaussianLatent JmvaeModel::encode_joint(std::span<const double> theta, std::span<const double> features) const
{
    const auto fs = static_cast<std::size_t>(arch_.channels) * arch_.bins;
    require(features.size() == fs, "feature vector has the wrong length");
    nn::NoGradGuard guard;
    const auto t = norm_.normalize_theta(space_, theta);
    std::vector<double> x(fs);
    norm_.normalize_x(features, std::span<double>(x));
    return row_latent(encode_joint(Tensor::from({1, arch_.theta_dim}, t), Tensor::from({1, static_cast<int>(fs)}, x)),
                      0);
}

std::vector<nn::NamedTensor> JmvaeModel::parameters() const
{
    std::vector<nn::NamedTensor> out;
    append_all(out, joint_x_.parameters("joint_x."));
    append_all(out, joint_theta_.parameters("joint_theta."));
    append_all(out, joint_merge_.parameters("joint_merge."));
    append_all(out, theta_encoder_.parameters("theta_encoder."));
    append_all(out, x_encoder_.parameters("x_encoder."));
    append_all(out, decoder_trunk_.parameters("decoder_trunk."));
    append_all(out, theta_head_.parameters("theta_head."));
    append_all(out, x_head_.parameters("x_head."));
    return out;
}

std::vector<Tensor> JmvaeModel::parameter_tensors() const
{
    std::vector<Tensor> out;
    for (const auto& p : parameters()) out.push_back(p.tensor);
    return out;
}

nlohmann::json JmvaeModel::metadata() const
{
    auto layers = [](const nn::Sequential& s) {
        auto a = nlohmann::json::array();
        for (const auto& l : s.specs()) a.push_back(nn::to_json(l));
        return a;
    };
    return {{"format", "mvbu-jmvae"},
            {"architecture", arch_.to_json()},
            {"parameters", space_.to_json()},
            {"init_seed", seed_},
            {"layers",
             {{"joint_x", layers(joint_x_)},
              {"joint_theta", layers(joint_theta_)},
              {"joint_merge", layers(joint_merge_)},
              {"theta_encoder", layers(theta_encoder_)},
              {"x_encoder", layers(x_encoder_)},
              {"decoder_trunk", layers(decoder_trunk_)},
              {"theta_head", layers(theta_head_)},
              {"x_head", layers(x_head_)}}}};
}

void JmvaeModel::save(const std::string& path, const nlohmann::json& extra) const
{
    require(!norm_.theta_mean.empty(), "cannot save a model without normalization statistics");
    auto meta = metadata();
    if (!extra.is_null()) meta["extra"] = extra;
    auto arrays = parameters();
    put_array(arrays, "norm.theta_mean", norm_.theta_mean);
    put_array(arrays, "norm.theta_std", norm_.theta_std);
    put_array(arrays, "norm.x_mean", norm_.x_mean);
    put_array(arrays, "norm.x_std", norm_.x_std);
    nn::write_checkpoint(path, meta, arrays);
}

JmvaeModel JmvaeModel::load(const std::string& path)
{
    const auto ck = nn::read_checkpoint(path);
    const auto& m = ck.metadata;
    if (m.value("format", std::string()) != "mvbu-jmvae") throw IoError(path + " is not a model checkpoint");
    JmvaeModel model(Architecture::from_json(m.at("architecture")), ParameterSpace::from_json(m.at("parameters")),
                     m.at("init_seed").get<std::uint64_t>());
    nn::load_into(ck, model.parameters());
    Normalization n;
    n.theta_mean = ck.find("norm.theta_mean").values;
    n.theta_std = ck.find("norm.theta_std").values;
    n.x_mean = ck.find("norm.x_mean").values;
    n.x_std = ck.find("norm.x_std").values;
    model.set_normalization(std::move(n));
    return model;
}

// ---------------------------------------------------------------------------

Tensor jmvae_kl_loss(const JmvaeModel& model, const Tensor& theta, const Tensor& x, const Tensor& eps,
                     LossTerms* terms)
{
    const auto joint = model.encode_joint(theta, x);
    const auto q_theta = model.encode_theta(theta);
    const auto q_x = model.encode_x(x);
    const Tensor z = nn::reparameterize(joint.mu, joint.log_var, eps);
    const auto dec = model.decode(z);

    const Tensor nll_theta = nn::gaussian_nll(theta, dec.theta_mu, dec.theta_log_var);
    const Tensor nll_x = nn::gaussian_nll(x, dec.x_mu, dec.x_log_var);
    const Tensor kl_prior = nn::kl_standard_normal(joint.mu, joint.log_var);
    const Tensor kl_theta = nn::kl_diag(q_theta.mu, q_theta.log_var, joint.mu, joint.log_var);
    const Tensor kl_x = nn::kl_diag(q_x.mu, q_x.log_var, joint.mu, joint.log_var);

    const double inv_b = 1.0 / theta.dim(0);
    if (terms)
        *terms = {nll_theta.item() * inv_b, nll_x.item() * inv_b, kl_prior.item() * inv_b, kl_theta.item() * inv_b,
                  kl_x.item() * inv_b};
    const Tensor total =
        nn::add(nn::add(nn::add(nll_theta, nll_x), kl_prior), nn::add(kl_theta, kl_x));
    return nn::scale(total, inv_b);
}

void TrainingConfig::validate() const
{
    require(batch_size > 0, "batch_size must be positive");
    require(learning_rate > 0.0, "learning_rate must be positive");
    require(epochs > 0, "epochs must be positive");
    require(checkpoint_every >= 0, "checkpoint_every must be non-negative");
}

nlohmann::json TrainingConfig::to_json() const
{
    return {{"batch_size", batch_size},
            {"learning_rate", learning_rate},
            {"epochs", epochs},
            {"seed", seed},
            {"checkpoint_every", checkpoint_every}};
}

TrainingConfig TrainingConfig::from_json(const nlohmann::json& j)
{
    static const char* kKeys[] = {"batch_size", "learning_rate", "epochs", "seed", "checkpoint_every"};
    require(j.is_object(), "training config must be an object");
    for (const auto& [key, _] : j.items())
        require(std::find(std::begin(kKeys), std::end(kKeys), key) != std::end(kKeys),
                "unknown key '" + key + "' in training config");
    TrainingConfig c;
    try {
        c.batch_size = j.value("batch_size", c.batch_size);
        c.learning_rate = j.value("learning_rate", c.learning_rate);
        c.epochs = j.value("epochs", c.epochs);
        c.seed = j.value("seed", c.seed);
        c.checkpoint_every = j.value("checkpoint_every", c.checkpoint_every);
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("malformed training config: ") + e.what());
    }
    c.validate();
    return c;
}

namespace {

struct Batch {
    Tensor theta, x;
};

Batch make_batch(const JmvaeModel& model, const TrainingSet& data, std::span<const std::size_t> rows)
{
    const auto& norm = model.normalization();
    const int b = static_cast<int>(rows.size());
    std::vector<double> theta, x(rows.size() * static_cast<std::size_t>(data.feature_size));
    theta.reserve(rows.size() * static_cast<std::size_t>(data.theta_dim));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto t = norm.normalize_theta(model.space(), data.theta_row(rows[i]));
        theta.insert(theta.end(), t.begin(), t.end());
        norm.normalize_x(data.x_row(rows[i]),
                         std::span<double>(x.data() + i * static_cast<std::size_t>(data.feature_size),
                                           static_cast<std::size_t>(data.feature_size)));
    }
    return {Tensor::from({b, data.theta_dim}, std::move(theta)), Tensor::from({b, data.feature_size}, std::move(x))};
}

} // namespace

TrainingResult train(JmvaeModel& model, const TrainingSet& data, const TrainingConfig& cfg,
                     const EpochCallback& on_epoch)
{
    cfg.validate();
    data.validate();
    const auto& arch = model.architecture();
    require(data.theta_dim == arch.theta_dim && data.feature_size == arch.channels * arch.bins,
            "training set layout does not match the model");
    if (model.normalization().theta_mean.empty()) model.set_normalization(fit_normalization(model.space(), data));

    nn::Adam opt(model.parameter_tensors(), {cfg.learning_rate});
    std::vector<std::size_t> order(data.size());
    TrainingResult result;
    int above = 0;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        Rng rng(derive_seed(cfg.seed, 0x5eed, static_cast<std::uint64_t>(epoch)));
        std::shuffle(order.begin(), order.end(), rng);
        std::normal_distribution<double> normal(0.0, 1.0);
        double total = 0.0;
        for (std::size_t start = 0, batch_index = 0; start < order.size(); start += cfg.batch_size, ++batch_index) {
            const auto count = std::min<std::size_t>(cfg.batch_size, order.size() - start);
            const auto batch = make_batch(model, data, std::span<const std::size_t>(order).subspan(start, count));
            std::vector<double> eps(count * static_cast<std::size_t>(arch.latent_dim));
            for (double& e : eps) e = normal(rng);
            opt.zero_grad();
            const Tensor loss = jmvae_kl_loss(model, batch.theta, batch.x,
                                              Tensor::from({static_cast<int>(count), arch.latent_dim}, std::move(eps)));
            if (!std::isfinite(loss.item()))
                throw NumericalError("non-finite training loss at epoch " + std::to_string(epoch + 1) + ", batch " +
                                     std::to_string(batch_index));
            loss.backward();
            opt.step();
            total += loss.item() * static_cast<double>(count);
        }
        const double mean = total / static_cast<double>(data.size());
        result.loss_history.push_back(mean);
        const double initial = result.loss_history.front();
        above = mean > initial + 9.0 * std::abs(initial) ? above + 1 : 0;
        if (above >= 10)
            throw NumericalError("training diverged: loss " + std::to_string(mean) + " at epoch " +
                                 std::to_string(epoch + 1) + " versus initial " + std::to_string(initial));
        if (on_epoch) on_epoch(epoch + 1, mean);
        const bool last = epoch + 1 == cfg.epochs;
        if (!cfg.checkpoint_path.empty() &&
            (last || (cfg.checkpoint_every > 0 && (epoch + 1) % cfg.checkpoint_every == 0)))
            model.save(cfg.checkpoint_path, {{"training", cfg.to_json()}, {"epochs_completed", epoch + 1}});
    }
    return result;
}

double mean_unimodal_kl(const JmvaeModel& model, const TrainingSet& data, bool theta_side)
{
    data.validate();
    nn::NoGradGuard guard;
    double total = 0.0;
    std::vector<std::size_t> rows(data.size());
    std::iota(rows.begin(), rows.end(), std::size_t{0});
    constexpr std::size_t kChunk = 256;
    for (std::size_t start = 0; start < rows.size(); start += kChunk) {
        const auto count = std::min(kChunk, rows.size() - start);
        const auto batch = make_batch(model, data, std::span<const std::size_t>(rows).subspan(start, count));
        const auto joint = model.encode_joint(batch.theta, batch.x);
        const auto uni = theta_side ? model.encode_theta(batch.theta) : model.encode_x(batch.x);
        total += nn::kl_diag(uni.mu, uni.log_var, joint.mu, joint.log_var).item();
    }
    return total / static_cast<double>(data.size());
}

} // namespace mvbu::jmvae
