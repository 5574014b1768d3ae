#pragma once

#include <string>
#include <vector>

#include "polarcod/ops.hpp"
#include "polarcod/rng.hpp"
#include "polarcod/tensor.hpp"

namespace polarcod::nn {

// Trainable tensor with a dotted name and the ablation group it belongs to.
struct NamedParam {
    std::string name;
    std::string group;
    Tensor* tensor;
};

// Non-trainable state that still belongs in a checkpoint (running statistics).
struct NamedBuffer {
    std::string name;
    std::vector<double>* values;
};

class ParamRegistry {
   public:
    void add(std::string name, std::string group, Tensor& t) {
        params_.push_back({std::move(name), std::move(group), &t});
    }
    void add_buffer(std::string name, std::vector<double>& v) { buffers_.push_back({std::move(name), &v}); }

    const std::vector<NamedParam>& params() const { return params_; }
    const std::vector<NamedBuffer>& buffers() const { return buffers_; }

   private:
    std::vector<NamedParam> params_;
    std::vector<NamedBuffer> buffers_;
};

struct Conv2d {
    Tensor weight;  // (Cout, Cin, K, K)
    Tensor bias;    // (1, Cout, 1, 1) or undefined
    ops::Conv2dOptions opt;

    Conv2d() = default;
    // Fan-in scaled uniform init U(-1/sqrt(fan_in), 1/sqrt(fan_in)); padding
    // defaults to "same" for odd kernels at stride 1.
    Conv2d(int cin, int cout, int kernel, Rng& rng, bool with_bias = true, int stride = 1, int dilation = 1);
    Conv2d(int cin, int cout, int kernel, Rng& rng, bool with_bias, ops::Conv2dOptions options);

    Tensor forward(const Tensor& x) const { return ops::conv2d(x, weight, bias, opt); }
    void zero_init();
    int in_channels() const { return weight.shape().c; }
    int out_channels() const { return weight.shape().n; }
    void collect(ParamRegistry& reg, const std::string& prefix, const std::string& group);
};

struct BatchNorm2d {
    Tensor gamma;  // (1, C, 1, 1)
    Tensor beta;   // (1, C, 1, 1)
    ops::BatchNormStats stats;
    double momentum = 0.1;
    double eps = 1e-5;

    BatchNorm2d() = default;
    explicit BatchNorm2d(int channels);

    Tensor forward(const Tensor& x, bool training) {
        return ops::batch_norm(x, gamma, beta, stats, training, momentum, eps);
    }
    void collect(ParamRegistry& reg, const std::string& prefix, const std::string& group);
};

// Conv (no bias) -> BN -> optional ReLU.
struct ConvBn {
    Conv2d conv;
    BatchNorm2d bn;
    bool relu = true;

    ConvBn() = default;
    ConvBn(int cin, int cout, int kernel, Rng& rng, bool with_relu = true, int stride = 1, int dilation = 1);
    ConvBn(int cin, int cout, int kernel, Rng& rng, bool with_relu, ops::Conv2dOptions options);

    Tensor forward(const Tensor& x, bool training) {
        Tensor y = bn.forward(conv.forward(x), training);
        return relu ? ops::relu(y) : y;
    }
    void collect(ParamRegistry& reg, const std::string& prefix, const std::string& group);
};

}  // namespace polarcod::nn
