#include "mvbu/nn/optim.hpp"

#include <cmath>

#include "mvbu/error.hpp"

namespace mvbu::nn {

Adam::Adam(std::vector<Tensor> params, AdamConfig cfg) : params_(std::move(params)), cfg_(cfg)
{
    require(cfg_.lr > 0.0 && cfg_.beta1 >= 0.0 && cfg_.beta1 < 1.0 && cfg_.beta2 >= 0.0 && cfg_.beta2 < 1.0 &&
                cfg_.eps > 0.0,
            "invalid Adam configuration");
    for (const auto& p : params_) {
        m_.emplace_back(p.size(), 0.0);
        v_.emplace_back(p.size(), 0.0);
    }
}

void Adam::step()
{
    ++t_;
    const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    for (std::size_t i = 0; i < params_.size(); ++i) {
        auto& node = params_[i].node();
        if (node.grad.empty()) continue;
        auto& m = m_[i];
        auto& v = v_[i];
        for (std::size_t k = 0; k < node.value.size(); ++k) {
            const double g = node.grad[k];
            m[k] = cfg_.beta1 * m[k] + (1.0 - cfg_.beta1) * g;
            v[k] = cfg_.beta2 * v[k] + (1.0 - cfg_.beta2) * g * g;
            node.value[k] -= cfg_.lr * (m[k] / c1) / (std::sqrt(v[k] / c2) + cfg_.eps);
        }
    }
}

void Adam::zero_grad()
{
    for (const auto& p : params_) p.zero_grad();
}

} // namespace mvbu::nn
