#pragma once

// Central-difference gradient checks shared by the unit and acceptance suites.

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "mvbu/nn/layers.hpp"

namespace mvbu::test {

struct GradCheck {
    double max_rel_error = 0.0; // worst over checked tensors of |a - n| / max(|a|, |n|) in 2-norm
    int tensors = 0;
};

/// Checks d(loss)/d(leaf) for every leaf against central differences with step
/// h, sampling at most `per_tensor` entries of each leaf.
inline GradCheck check_gradients(const std::function<nn::Tensor()>& loss, const std::vector<nn::Tensor>& leaves,
                                 std::mt19937_64& rng, double h = 1e-5, int per_tensor = 24)
{
    for (const auto& t : leaves) t.zero_grad();
    loss().backward();
    GradCheck out;
    for (const auto& t : leaves) {
        auto& node = t.node();
        std::vector<std::size_t> idx(node.value.size());
        for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
        std::shuffle(idx.begin(), idx.end(), rng);
        idx.resize(std::min<std::size_t>(idx.size(), static_cast<std::size_t>(per_tensor)));
        double diff2 = 0.0, a2 = 0.0, n2 = 0.0;
        for (std::size_t i : idx) {
            const double saved = node.value[i];
            node.value[i] = saved + h;
            const double up = loss().item();
            node.value[i] = saved - h;
            const double down = loss().item();
            node.value[i] = saved;
            const double numeric = (up - down) / (2.0 * h);
            const double analytic = node.grad.empty() ? 0.0 : node.grad[i];
            diff2 += (analytic - numeric) * (analytic - numeric);
            a2 += analytic * analytic;
            n2 += numeric * numeric;
        }
        const double scale = std::sqrt(std::max(a2, n2));
        const double rel = scale > 0.0 ? std::sqrt(diff2) / scale : 0.0;
        out.max_rel_error = std::max(out.max_rel_error, rel);
        ++out.tensors;
    }
    return out;
}

inline nn::Tensor random_tensor(const nn::Shape& shape, std::mt19937_64& rng, bool requires_grad = true)
{
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<double> v(nn::numel(shape));
    for (double& x : v) x = normal(rng);
    return nn::Tensor::from(shape, std::move(v), requires_grad);
}

/// Gradient check of one layer kind on a random shape drawn from `rng`.
inline GradCheck check_layer_kind(nn::LayerKind kind, std::mt19937_64& rng)
{
    std::uniform_int_distribution<int> small(1, 4);
    std::uniform_int_distribution<int> length(3, 12);
    const int batch = small(rng);
    nn::LayerSpec spec;
    nn::Shape in_shape;
    switch (kind) {
    case nn::LayerKind::Linear:
        spec = nn::LayerSpec::linear(small(rng) + 1, small(rng) + 1);
        in_shape = {batch, spec.in};
        break;
    case nn::LayerKind::Conv1d: {
        std::uniform_int_distribution<int> k(1, 4), s(1, 2);
        const int kernel = k(rng);
        spec = nn::LayerSpec::conv(small(rng), small(rng), kernel, s(rng), std::uniform_int_distribution<int>(0, kernel - 1)(rng));
        in_shape = {batch, spec.in, length(rng) + kernel};
        break;
    }
    case nn::LayerKind::LeakyRelu:
        spec = nn::LayerSpec::leaky(0.01);
        in_shape = {batch, small(rng), length(rng)};
        break;
    case nn::LayerKind::DownResidual:
        spec = nn::LayerSpec::down(small(rng), small(rng));
        in_shape = {batch, spec.in, 2 * length(rng)};
        break;
    case nn::LayerKind::UpResidual:
        spec = nn::LayerSpec::up(small(rng), small(rng));
        in_shape = {batch, spec.in, length(rng)};
        break;
    case nn::LayerKind::UpConv1d:
        spec = nn::LayerSpec::up_conv(small(rng), small(rng));
        in_shape = {batch, spec.in, length(rng)};
        break;
    }
    Rng init(rng());
    const nn::Sequential layer({spec}, init);
    const nn::Tensor x = random_tensor(in_shape, rng);
    std::vector<nn::Tensor> leaves{x};
    for (const auto& p : layer.parameters("")) {
        // Random biases so kinks of the activation are not aligned with zero.
        std::normal_distribution<double> normal(0.0, 0.5);
        if (p.tensor.rank() == 1)
            for (double& v : p.tensor.node().value) v = normal(rng);
        leaves.push_back(p.tensor);
    }
    const nn::Tensor probe = layer.forward(x);
    const nn::Tensor w = random_tensor(probe.shape(), rng, false);
    // Quadratic in every output entry with random positive weights e^{-w}.
    const auto loss = [&] {
        const nn::Tensor y = layer.forward(x);
        return nn::gaussian_nll(nn::Tensor::zeros(y.shape()), y, w);
    };
    return check_gradients(loss, leaves, rng);
}

} // namespace mvbu::test
