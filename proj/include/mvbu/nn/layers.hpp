#pragma once

// Layer stacks described by a list of LayerSpec entries. Linear layers flatten
// any [B, ...] input; convolutional layers reshape a flat [B, n] input to
// [B, in, n / in].

#include <string>
#include <vector>

#include <json.hpp>

#include "mvbu/nn/tensor.hpp"
#include "mvbu/rng.hpp"

namespace mvbu::nn {

enum class LayerKind {
    Linear,
    Conv1d,
    LeakyRelu,
    DownResidual, // stride-2 conv + activation, summed with a stride-2 1x1 skip
    UpResidual,   // x2 upsample, then conv + activation summed with a 1x1 skip
    UpConv1d,     // x2 upsample followed by a stride-1 conv
};

std::string to_string(LayerKind kind);
LayerKind layer_kind_from_string(const std::string& s);

struct LayerSpec {
    LayerKind kind = LayerKind::Linear;
    int in = 0;  // features or channels
    int out = 0; // features or channels
    int kernel = 3;
    int stride = 1;
    int pad = 1;
    double slope = 0.01;

    static LayerSpec linear(int in, int out) { return {LayerKind::Linear, in, out, 0, 0, 0, 0.0}; }
    static LayerSpec conv(int in, int out, int kernel, int stride, int pad)
    {
        return {LayerKind::Conv1d, in, out, kernel, stride, pad, 0.0};
    }
    static LayerSpec leaky(double slope = 0.01) { return {LayerKind::LeakyRelu, 0, 0, 0, 0, 0, slope}; }
    static LayerSpec down(int in, int out) { return {LayerKind::DownResidual, in, out, 3, 2, 1, 0.01}; }
    static LayerSpec up(int in, int out) { return {LayerKind::UpResidual, in, out, 3, 1, 1, 0.01}; }
    static LayerSpec up_conv(int in, int out) { return {LayerKind::UpConv1d, in, out, 3, 1, 1, 0.0}; }

    bool operator==(const LayerSpec&) const = default;
};

nlohmann::json to_json(const LayerSpec& spec);
LayerSpec layer_spec_from_json(const nlohmann::json& j);

struct NamedTensor {
    std::string name;
    Tensor tensor;
};

class Sequential {
public:
    Sequential() = default;
    /// Parameters are drawn from `rng` with fan-in scaled normal weights and zero biases.
    Sequential(std::vector<LayerSpec> specs, Rng& rng);

    Tensor forward(const Tensor& x) const;
    /// Multiplies the weights (not biases) of the last parameterized layer.
    void scale_output_weights(double factor);
    const std::vector<LayerSpec>& specs() const { return specs_; }
    /// Parameters in a fixed order, named "<prefix><layer>.<slot>".
    std::vector<NamedTensor> parameters(const std::string& prefix) const;

private:
    struct Layer {
        LayerSpec spec;
        std::vector<Tensor> params; // weight, bias[, skip weight, skip bias]
    };
    std::vector<LayerSpec> specs_;
    std::vector<Layer> layers_;
};

Tensor kaiming_normal(const Shape& shape, int fan_in, Rng& rng);

} // namespace mvbu::nn
