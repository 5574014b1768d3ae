#pragma once

#include <vector>

#include "polarcod/nn.hpp"

namespace polarcod {

// Adam with bias correction; parameters without gradient are left untouched.
class Adam {
   public:
    Adam() = default;
    Adam(std::vector<nn::NamedParam> params, double beta1, double beta2, double eps);

    void step(double lr);
    long long steps() const { return t_; }

    // State access for checkpoints, in parameter order.
    std::vector<std::vector<double>>& first_moments() { return m_; }
    std::vector<std::vector<double>>& second_moments() { return v_; }
    const std::vector<std::vector<double>>& first_moments() const { return m_; }
    const std::vector<std::vector<double>>& second_moments() const { return v_; }
    void set_steps(long long t) { t_ = t; }
    const std::vector<nn::NamedParam>& params() const { return params_; }

   private:
    std::vector<nn::NamedParam> params_;
    std::vector<std::vector<double>> m_, v_;
    double beta1_ = 0.9, beta2_ = 0.999, eps_ = 1e-8;
    long long t_ = 0;
};

// lr * decay^floor(epoch / period)
double step_decay_lr(double lr, double decay, int period, int epoch);

}  // namespace polarcod
