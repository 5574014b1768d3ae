#pragma once

#include <array>

#include "polarcod/nn.hpp"

namespace polarcod {

struct DecodeResult {
    std::array<Tensor, 4> d;  // decoded stage features, finest first
    Tensor coarse;            // logits from the coarsest stage, at input size
    Tensor pred;              // logits from the finest stage, at input size
};

// Top-down aggregation: d4 = fuse4(e4), d_i = fuse_i(e_i + up2(lateral_i(d_{i+1}))).
class Decoder {
   public:
    Decoder() = default;
    Decoder(const std::array<int, 4>& channels, Rng& rng);

    DecodeResult forward(const std::array<Tensor, 4>& e, int out_h, int out_w, bool training);
    void collect(nn::ParamRegistry& reg);

    std::array<nn::ConvBn, 4> fuse;
    std::array<nn::Conv2d, 3> lateral;  // lateral[i]: channels[i+1] -> channels[i]
    nn::Conv2d coarse_head;             // 1x1 on d4
    nn::Conv2d pred_head;               // 3x3 on d1
};

}  // namespace polarcod
