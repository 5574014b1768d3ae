#pragma once

#include <string>

#include "polarcod/model_config.hpp"
#include "polarcod/nn.hpp"

namespace polarcod {

// Bilinear resize to the target plane followed by a 1x1 convolution.
struct ResizeProj {
    nn::Conv2d conv;

    ResizeProj() = default;
    ResizeProj(int cin, int cout, Rng& rng, bool zero) : conv(cin, cout, 1, rng) {
        if (zero) conv.zero_init();
    }
    Tensor forward(const Tensor& x, int h, int w) const;
};

// Per-stage conditional modulation and enhancement of an RGB feature map.
class GuidanceEnhance {
   public:
    GuidanceEnhance() = default;
    GuidanceEnhance(int channels, int guidance_channels, GatePool pool, Rng& rng);

    // f * (scale(alpha) + 1) + shift(beta); both projections start at zero.
    Tensor modulate(const Tensor& f, const Tensor& alpha, const Tensor& beta) const;
    // aspp(x) * sigmoid(bn(conv1x1(pool(x))) + bn(conv1x1(x)))
    Tensor enhance(const Tensor& x, bool training);
    // Single 3x3 conv used in place of modulation and enhancement when both are removed.
    Tensor plain(const Tensor& x) const { return plain_.forward(x); }

    void collect(nn::ParamRegistry& reg, const std::string& prefix);

    ResizeProj scale;  // alpha -> per-channel multiplicative offset
    ResizeProj shift;  // beta -> per-channel additive offset
    std::array<nn::Conv2d, 3> aspp;  // dilations 1, 2, 4
    nn::Conv2d aspp_proj;
    nn::ConvBn gate_context;
    nn::ConvBn gate_local;
    GatePool pool = GatePool::global;

   private:
    nn::Conv2d plain_;
};

// Per-stage frequency refinement of the enhanced feature, with a second
// branch driven by the DoLP edge prior.
class FrequencyRefine {
   public:
    FrequencyRefine() = default;
    FrequencyRefine(int channels, int kernel, Rng& rng);

    // Amplitude refinement of one branch:
    //   (amp, phase) of fft2(x); amp' = refine(amp); x + x * ifft2(amp', phase)
    // With `identity_amplitude` the refinement convolutions are bypassed.
    Tensor branch(const Tensor& x, std::array<nn::ConvBn, 2>& refine, bool training) const;
    // Projects the edge prior (N, 1, H, W) to this stage's shape.
    Tensor edge_input(const Tensor& gamma, int h, int w) const { return edge_proj.forward(gamma, h, w); }
    // e + edge branch; `gamma` may be undefined, which drops the edge branch.
    Tensor forward(const Tensor& e, const Tensor& gamma, bool training);

    void collect(nn::ParamRegistry& reg, const std::string& prefix);

    std::array<nn::ConvBn, 2> amp_r;
    std::array<nn::ConvBn, 2> amp_p;
    ResizeProj edge_proj;
    bool identity_amplitude = false;
};

}  // namespace polarcod
