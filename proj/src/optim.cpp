#include "polarcod/optim.hpp"

#include <cmath>

namespace polarcod {

Adam::Adam(std::vector<nn::NamedParam> params, double beta1, double beta2, double eps)
    : params_(std::move(params)), beta1_(beta1), beta2_(beta2), eps_(eps) {
    for (const auto& p : params_) {
        m_.emplace_back(p.tensor->numel(), 0.0);
        v_.emplace_back(p.tensor->numel(), 0.0);
    }
}

void Adam::step(double lr) {
    ++t_;
    const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    for (std::size_t k = 0; k < params_.size(); ++k) {
        Tensor& p = *params_[k].tensor;
        const auto g = p.grad();
        if (g.empty()) continue;
        auto w = p.mutable_data();
        auto& m = m_[k];
        auto& v = v_[k];
        for (std::size_t i = 0; i < w.size(); ++i) {
            m[i] = beta1_ * m[i] + (1.0 - beta1_) * g[i];
            v[i] = beta2_ * v[i] + (1.0 - beta2_) * g[i] * g[i];
            w[i] -= lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + eps_);
        }
    }
}

double step_decay_lr(double lr, double decay, int period, int epoch) {
    return lr * std::pow(decay, static_cast<double>(epoch / period));
}

}  // namespace polarcod
