#include "mvbu/nn/layers.hpp"

#include <cmath>

#include "mvbu/error.hpp"

namespace mvbu::nn {

namespace {

constexpr std::pair<LayerKind, const char*> kKindNames[] = {
    {LayerKind::Linear, "linear"},
    {LayerKind::Conv1d, "conv1d"},
    {LayerKind::LeakyRelu, "leaky-relu"},
    {LayerKind::DownResidual, "downsample-residual-block"},
    {LayerKind::UpResidual, "upsample-residual-block"},
    {LayerKind::UpConv1d, "upsample-conv1d"},
};

Tensor as_channels(const Tensor& x, int channels)
{
    if (x.rank() == 3) {
        require(x.dim(1) == channels, "layer expects " + std::to_string(channels) + " channels, got " +
                                          shape_string(x.shape()));
        return x;
    }
    const int b = x.dim(0);
    const auto per_sample = x.size() / static_cast<std::size_t>(b);
    require(per_sample % static_cast<std::size_t>(channels) == 0,
            "cannot view " + shape_string(x.shape()) + " as " + std::to_string(channels) + " channels");
    return reshape(x, {b, channels, static_cast<int>(per_sample / static_cast<std::size_t>(channels))});
}

Tensor flat(const Tensor& x)
{
    if (x.rank() == 2) return x;
    const int b = x.dim(0);
    return reshape(x, {b, static_cast<int>(x.size() / static_cast<std::size_t>(b))});
}

} // namespace

std::string to_string(LayerKind kind)
{
    for (const auto& [k, name] : kKindNames)
        if (k == kind) return name;
    return "unknown";
}

LayerKind layer_kind_from_string(const std::string& s)
{
    for (const auto& [k, name] : kKindNames)
        if (s == name) return k;
    throw ValidationError("unknown layer kind '" + s + "'");
}

nlohmann::json to_json(const LayerSpec& spec)
{
    return {{"kind", to_string(spec.kind)}, {"in", spec.in},         {"out", spec.out}, {"kernel", spec.kernel},
            {"stride", spec.stride},        {"pad", spec.pad},       {"slope", spec.slope}};
}

LayerSpec layer_spec_from_json(const nlohmann::json& j)
{
    try {
        LayerSpec s;
        s.kind = layer_kind_from_string(j.at("kind").get<std::string>());
        s.in = j.at("in").get<int>();
        s.out = j.at("out").get<int>();
        s.kernel = j.at("kernel").get<int>();
        s.stride = j.at("stride").get<int>();
        s.pad = j.at("pad").get<int>();
        s.slope = j.at("slope").get<double>();
        return s;
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("malformed layer spec: ") + e.what());
    }
}

Tensor kaiming_normal(const Shape& shape, int fan_in, Rng& rng)
{
    std::normal_distribution<double> normal(0.0, std::sqrt(2.0 / fan_in));
    std::vector<double> v(numel(shape));
    for (double& x : v) x = normal(rng);
    return Tensor::from(shape, std::move(v), true);
}

Sequential::Sequential(std::vector<LayerSpec> specs, Rng& rng) : specs_(std::move(specs))
{
    for (const auto& s : specs_) {
        Layer layer{s, {}};
        switch (s.kind) {
        case LayerKind::Linear:
            require(s.in > 0 && s.out > 0, "linear layer needs positive sizes");
            layer.params = {kaiming_normal({s.out, s.in}, s.in, rng), Tensor::zeros({s.out}, true)};
            break;
        case LayerKind::Conv1d:
        case LayerKind::UpConv1d:
        case LayerKind::DownResidual:
        case LayerKind::UpResidual:
            require(s.in > 0 && s.out > 0 && s.kernel > 0 && s.stride > 0 && s.pad >= 0,
                    "convolution layer needs positive sizes");
            layer.params = {kaiming_normal({s.out, s.in, s.kernel}, s.in * s.kernel, rng),
                            Tensor::zeros({s.out}, true)};
            if (s.kind == LayerKind::DownResidual || s.kind == LayerKind::UpResidual) {
                layer.params.push_back(kaiming_normal({s.out, s.in, 1}, s.in, rng));
                layer.params.push_back(Tensor::zeros({s.out}, true));
            }
            break;
        case LayerKind::LeakyRelu:
            break;
        }
        layers_.push_back(std::move(layer));
    }
}

void Sequential::scale_output_weights(double factor)
{
    for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) {
        if (it->params.empty()) continue;
        for (std::size_t slot = 0; slot < it->params.size(); slot += 2)
            for (double& w : it->params[slot].values()) w *= factor;
        return;
    }
}

Tensor Sequential::forward(const Tensor& input) const
{
    Tensor x = input;
    for (const auto& layer : layers_) {
        const auto& s = layer.spec;
        const auto& p = layer.params;
        switch (s.kind) {
        case LayerKind::Linear:
            x = linear(flat(x), p[0], p[1]);
            break;
        case LayerKind::Conv1d:
            x = conv1d(as_channels(x, s.in), p[0], p[1], s.stride, s.pad);
            break;
        case LayerKind::UpConv1d:
            x = conv1d(upsample2(as_channels(x, s.in)), p[0], p[1], 1, s.pad);
            break;
        case LayerKind::LeakyRelu:
            x = leaky_relu(x, s.slope);
            break;
        case LayerKind::DownResidual: {
            const Tensor c = as_channels(x, s.in);
            const Tensor main = leaky_relu(conv1d(c, p[0], p[1], s.stride, s.pad), s.slope);
            x = add(main, conv1d(c, p[2], p[3], s.stride, 0));
            break;
        }
        case LayerKind::UpResidual: {
            const Tensor c = upsample2(as_channels(x, s.in));
            const Tensor main = leaky_relu(conv1d(c, p[0], p[1], 1, s.pad), s.slope);
            x = add(main, conv1d(c, p[2], p[3], 1, 0));
            break;
        }
        }
    }
    return x;
}

std::vector<NamedTensor> Sequential::parameters(const std::string& prefix) const
{
    static constexpr const char* kSlots[] = {"weight", "bias", "skip_weight", "skip_bias"};
    std::vector<NamedTensor> out;
    for (std::size_t i = 0; i < layers_.size(); ++i)
        for (std::size_t k = 0; k < layers_[i].params.size(); ++k)
            out.push_back({prefix + std::to_string(i) + "." + kSlots[k], layers_[i].params[k]});
    return out;
}

} // namespace mvbu::nn
