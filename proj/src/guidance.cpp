#include "polarcod/guidance.hpp"

#include "polarcod/error.hpp"
#include "polarcod/fft.hpp"

namespace polarcod {

Tensor ResizeProj::forward(const Tensor& x, int h, int w) const {
    return conv.forward(ops::resize_bilinear(x, h, w));
}

GuidanceEnhance::GuidanceEnhance(int channels, int guidance_channels, GatePool pool_mode, Rng& rng)
    : scale(guidance_channels, channels, rng, true),
      shift(guidance_channels, channels, rng, true),
      aspp{nn::Conv2d(channels, channels, 3, rng, true, 1, 1), nn::Conv2d(channels, channels, 3, rng, true, 1, 2),
           nn::Conv2d(channels, channels, 3, rng, true, 1, 4)},
      aspp_proj(channels, channels, 1, rng),
      gate_context(channels, channels, 1, rng, false),
      gate_local(channels, channels, 1, rng, false),
      pool(pool_mode),
      plain_(channels, channels, 3, rng) {}

Tensor GuidanceEnhance::modulate(const Tensor& f, const Tensor& alpha, const Tensor& beta) const {
    const Shape& s = f.shape();
    if (alpha.shape().c != scale.conv.in_channels() || beta.shape().c != shift.conv.in_channels()) {
        throw ConfigError("modulate: guidance has " + std::to_string(alpha.shape().c) + " channels, projection expects " +
                          std::to_string(scale.conv.in_channels()));
    }
    if (scale.conv.out_channels() != s.c) {
        throw ConfigError("modulate: projection emits " + std::to_string(scale.conv.out_channels()) +
                          " channels for a " + std::to_string(s.c) + "-channel feature");
    }
    Tensor gain = ops::add_scalar(scale.forward(alpha, s.h, s.w), 1.0);
    return ops::add(ops::mul(f, gain), shift.forward(beta, s.h, s.w));
}

Tensor GuidanceEnhance::enhance(const Tensor& x, bool training) {
    Tensor multi = aspp[0].forward(x);
    for (int i = 1; i < 3; ++i) multi = ops::add(multi, aspp[i].forward(x));
    multi = aspp_proj.forward(multi);
    Tensor pooled = pool == GatePool::global ? ops::global_avg_pool(x) : ops::avg_pool2d(x, 3, 1, 1);
    Tensor gate = ops::add(gate_context.forward(pooled, training), gate_local.forward(x, training));
    return ops::mul(multi, ops::sigmoid(gate));
}

void GuidanceEnhance::collect(nn::ParamRegistry& reg, const std::string& prefix) {
    scale.conv.collect(reg, prefix + ".scale", group::pge_tau);
    shift.conv.collect(reg, prefix + ".shift", group::pge_tau);
    for (int i = 0; i < 3; ++i) aspp[i].collect(reg, prefix + ".aspp" + std::to_string(i), group::pge_enhance);
    aspp_proj.collect(reg, prefix + ".aspp_proj", group::pge_enhance);
    gate_context.collect(reg, prefix + ".gate_context", group::pge_enhance);
    gate_local.collect(reg, prefix + ".gate_local", group::pge_enhance);
    plain_.collect(reg, prefix + ".plain", group::pge_plain);
}

FrequencyRefine::FrequencyRefine(int channels, int kernel, Rng& rng)
    : amp_r{nn::ConvBn(channels, channels, kernel, rng), nn::ConvBn(channels, channels, kernel, rng)},
      amp_p{nn::ConvBn(channels, channels, kernel, rng), nn::ConvBn(channels, channels, kernel, rng)},
      edge_proj(1, channels, rng, false) {}

Tensor FrequencyRefine::branch(const Tensor& x, std::array<nn::ConvBn, 2>& refine, bool training) const {
    auto [amp, phase] = amp_phase(fft2(x));
    Tensor refined = amp;
    if (!identity_amplitude) {
        refined = refine[1].forward(refine[0].forward(amp, training), training);
        // Keeps the refined spectrum conjugate-symmetric so the inverse is real.
        refined = hermitian_symmetrize(refined);
    }
    Tensor back = ifft2(polar_recombine(refined, phase));
    return ops::add(x, ops::mul(x, back));
}

Tensor FrequencyRefine::forward(const Tensor& e, const Tensor& gamma, bool training) {
    Tensor out = branch(e, amp_r, training);
    if (gamma.defined()) {
        const Shape& s = e.shape();
        out = ops::add(out, branch(edge_input(gamma, s.h, s.w), amp_p, training));
    }
    return out;
}

void FrequencyRefine::collect(nn::ParamRegistry& reg, const std::string& prefix) {
    for (int i = 0; i < 2; ++i) {
        amp_r[i].collect(reg, prefix + ".amp_r" + std::to_string(i), group::efm_amp_r);
        amp_p[i].collect(reg, prefix + ".amp_p" + std::to_string(i), group::efm_amp_p);
    }
    edge_proj.conv.collect(reg, prefix + ".edge_proj", group::efm_edge_proj);
}

}  // namespace polarcod
