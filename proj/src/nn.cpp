#include "polarcod/nn.hpp"

#include <cmath>

namespace polarcod::nn {

Conv2d::Conv2d(int cin, int cout, int kernel, Rng& rng, bool with_bias, int stride, int dilation)
    : Conv2d(cin, cout, kernel, rng, with_bias, ops::Conv2dOptions{stride, dilation * (kernel - 1) / 2, dilation}) {}

Conv2d::Conv2d(int cin, int cout, int kernel, Rng& rng, bool with_bias, ops::Conv2dOptions options) : opt(options) {
    const Shape ws{cout, cin, kernel, kernel};
    const double bound = 1.0 / std::sqrt(static_cast<double>(cin) * kernel * kernel);
    std::vector<double> w(ws.numel());
    for (double& v : w) v = round_to_precision(rng.uniform(-bound, bound));
    weight = Tensor::from(ws, std::move(w), true);
    if (with_bias) {
        std::vector<double> b(cout);
        for (double& v : b) v = round_to_precision(rng.uniform(-bound, bound));
        bias = Tensor::from({1, cout, 1, 1}, std::move(b), true);
    }
}

void Conv2d::zero_init() {
    for (double& v : weight.mutable_data()) v = 0.0;
    if (bias.defined()) {
        for (double& v : bias.mutable_data()) v = 0.0;
    }
}

void Conv2d::collect(ParamRegistry& reg, const std::string& prefix, const std::string& group) {
    reg.add(prefix + ".weight", group, weight);
    if (bias.defined()) reg.add(prefix + ".bias", group, bias);
}

BatchNorm2d::BatchNorm2d(int channels) {
    gamma = Tensor::full({1, channels, 1, 1}, 1.0, true);
    beta = Tensor::zeros({1, channels, 1, 1}, true);
    stats.running_mean.assign(channels, 0.0);
    stats.running_var.assign(channels, 1.0);
}

void BatchNorm2d::collect(ParamRegistry& reg, const std::string& prefix, const std::string& group) {
    reg.add(prefix + ".gamma", group, gamma);
    reg.add(prefix + ".beta", group, beta);
    reg.add_buffer(prefix + ".running_mean", stats.running_mean);
    reg.add_buffer(prefix + ".running_var", stats.running_var);
}

ConvBn::ConvBn(int cin, int cout, int kernel, Rng& rng, bool with_relu, int stride, int dilation)
    : conv(cin, cout, kernel, rng, false, stride, dilation), bn(cout), relu(with_relu) {}

ConvBn::ConvBn(int cin, int cout, int kernel, Rng& rng, bool with_relu, ops::Conv2dOptions options)
    : conv(cin, cout, kernel, rng, false, options), bn(cout), relu(with_relu) {}

void ConvBn::collect(ParamRegistry& reg, const std::string& prefix, const std::string& group) {
    conv.collect(reg, prefix + ".conv", group);
    bn.collect(reg, prefix + ".bn", group);
}

}  // namespace polarcod::nn
