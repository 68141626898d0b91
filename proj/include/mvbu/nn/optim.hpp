#pragma once

#include <vector>

#include "mvbu/nn/tensor.hpp"

namespace mvbu::nn {

struct AdamConfig {
    double lr = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

/// Bias-corrected Adam. Moment buffers are allocated to match each parameter.
class Adam {
public:
    Adam(std::vector<Tensor> params, AdamConfig cfg = {});

    /// Applies one update from the accumulated gradients; parameters without
    /// a gradient buffer are treated as having zero gradient.
    void step();
    void zero_grad();

    long steps() const { return t_; }
    const AdamConfig& config() const { return cfg_; }

private:
    std::vector<Tensor> params_;
    std::vector<std::vector<double>> m_, v_;
    AdamConfig cfg_;
    long t_ = 0;
};

} // namespace mvbu::nn
