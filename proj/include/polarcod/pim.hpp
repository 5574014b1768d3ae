#pragma once

#include "polarcod/nn.hpp"
#include "polarcod/plane.hpp"

namespace polarcod {

// Normalized Sobel magnitude of every DoLP plane of an (N, 1, H, W) tensor.
// Not differentiable; the result carries no gradient.
Tensor edge_prior(const Tensor& rho_d);

struct PolarGuidance {
    Tensor rho_ad;  // (N, polar_channels, H, W)
    Tensor gamma;   // (N, 1, H, W) in [0, 1]
    Tensor alpha;   // (N, guidance_channels, H/4, W/4)
    Tensor beta;    // same shape as alpha
};

// Fuses AoLP with a DoLP-derived gate and turns the result into the
// modulation parameters alpha and beta.
class PolarIntegration {
   public:
    PolarIntegration() = default;
    PolarIntegration(int polar_channels, int guidance_channels, Rng& rng);

    // rho_a * (conv([avgpool3(rho_d), maxpool3(rho_d)]) + maxpool3(conv(rho_d)))
    Tensor integrate(const Tensor& rho_a, const Tensor& rho_d) const;
    // chunk2(proj(downsample(concat(conv(rho_ad), conv(rho_d + gamma)))))
    std::pair<Tensor, Tensor> guidance_params(const Tensor& rho_ad, const Tensor& rho_d, const Tensor& gamma,
                                              bool training);
    PolarGuidance forward(const Tensor& rho_a, const Tensor& rho_d, bool training);

    void collect(nn::ParamRegistry& reg);

    nn::Conv2d pooled_gate;  // 2 -> polar_channels, on [avg, max] pooled DoLP
    nn::Conv2d direct_gate;  // 1 -> polar_channels, max-pooled afterwards
    nn::Conv2d fused_proj;   // polar_channels -> guidance_channels
    nn::Conv2d edge_proj;    // 1 -> guidance_channels, on rho_d + gamma
    nn::ConvBn mix;          // 2*guidance_channels -> 2*guidance_channels at base resolution
    nn::Conv2d head;         // final 1x1 projection emitting alpha and beta

    static constexpr int kDownsample = 4;
};

}  // namespace polarcod
