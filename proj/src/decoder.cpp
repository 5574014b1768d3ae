#include "polarcod/decoder.hpp"

#include "polarcod/error.hpp"
#include "polarcod/model_config.hpp"

namespace polarcod {

Decoder::Decoder(const std::array<int, 4>& channels, Rng& rng)
    : coarse_head(channels[3], 1, 1, rng), pred_head(channels[0], 1, 3, rng) {
    for (int i = 0; i < 4; ++i) fuse[i] = nn::ConvBn(channels[i], channels[i], 3, rng);
    for (int i = 0; i < 3; ++i) lateral[i] = nn::Conv2d(channels[i + 1], channels[i], 1, rng);
}

DecodeResult Decoder::forward(const std::array<Tensor, 4>& e, int out_h, int out_w, bool training) {
    for (int i = 0; i < 4; ++i) {
        if (e[i].shape().c != fuse[i].conv.in_channels()) {
            throw DimensionError("decoder: stage " + std::to_string(i + 1) + " has shape " + e[i].shape().str() +
                                 ", expected " + std::to_string(fuse[i].conv.in_channels()) + " channels");
        }
    }
    for (int i = 0; i < 3; ++i) {
        const Shape& a = e[i].shape();
        const Shape& b = e[i + 1].shape();
        if (a.n != b.n || a.h != 2 * b.h || a.w != 2 * b.w) {
            throw DimensionError("decoder: stage " + std::to_string(i + 1) + " " + a.str() +
                                 " is not twice the size of stage " + std::to_string(i + 2) + " " + b.str());
        }
    }
    DecodeResult r;
    r.d[3] = fuse[3].forward(e[3], training);
    for (int i = 2; i >= 0; --i) {
        // The 1x1 projection commutes with bilinear upsampling; projecting first is cheaper.
        Tensor up = ops::upsample2x(lateral[i].forward(r.d[i + 1]));
        r.d[i] = fuse[i].forward(ops::add(e[i], up), training);
    }
    r.coarse = ops::resize_bilinear(coarse_head.forward(r.d[3]), out_h, out_w);
    r.pred = ops::resize_bilinear(pred_head.forward(r.d[0]), out_h, out_w);
    return r;
}

void Decoder::collect(nn::ParamRegistry& reg) {
    for (int i = 0; i < 4; ++i) fuse[i].collect(reg, "decoder.fuse" + std::to_string(i + 1), group::decoder);
    for (int i = 0; i < 3; ++i) lateral[i].collect(reg, "decoder.lateral" + std::to_string(i + 1), group::decoder);
    coarse_head.collect(reg, "decoder.coarse_head", group::decoder);
    pred_head.collect(reg, "decoder.pred_head", group::decoder);
}

}  // namespace polarcod
