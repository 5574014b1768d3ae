#include "polarcod/pim.hpp"

#include <tuple>

#include "polarcod/error.hpp"
#include "polarcod/model_config.hpp"
#include "polarcod/polarization.hpp"

namespace polarcod {

Tensor edge_prior(const Tensor& rho_d) {
    const Shape& s = rho_d.shape();
    if (s.c != 1) throw DimensionError("edge_prior: expected a single-channel DoLP tensor, got " + s.str());
    std::vector<double> out;
    out.reserve(s.numel());
    for (int n = 0; n < s.n; ++n) {
        Plane g = normalized_sobel(plane_of(rho_d, n, 0));
        out.insert(out.end(), g.values.begin(), g.values.end());
    }
    return Tensor::from(s, std::move(out));
}

PolarIntegration::PolarIntegration(int polar_channels, int guidance_channels, Rng& rng)
    : pooled_gate(2, polar_channels, 3, rng),
      direct_gate(1, polar_channels, 3, rng),
      fused_proj(polar_channels, guidance_channels, 3, rng),
      edge_proj(1, guidance_channels, 3, rng),
      mix(2 * guidance_channels, 2 * guidance_channels, 3, rng),
      head(2 * guidance_channels, 2 * guidance_channels, 1, rng) {}

Tensor PolarIntegration::integrate(const Tensor& rho_a, const Tensor& rho_d) const {
    if (!(rho_a.shape() == rho_d.shape()) || rho_a.shape().c != 1) {
        throw DimensionError("integrate: AoLP " + rho_a.shape().str() + " and DoLP " + rho_d.shape().str() +
                             " must be equal single-channel shapes");
    }
    Tensor pooled = ops::concat({ops::avg_pool2d(rho_d, 3, 1, 1), ops::max_pool2d(rho_d, 3, 1, 1)});
    Tensor gate = ops::add(pooled_gate.forward(pooled), ops::max_pool2d(direct_gate.forward(rho_d), 3, 1, 1));
    return ops::mul(rho_a, gate);
}

std::pair<Tensor, Tensor> PolarIntegration::guidance_params(const Tensor& rho_ad, const Tensor& rho_d,
                                                            const Tensor& gamma, bool training) {
    const Shape& s = rho_d.shape();
    if (!(gamma.shape() == s) || rho_ad.shape().h != s.h || rho_ad.shape().w != s.w) {
        throw DimensionError("guidance_params: inputs must share spatial shape");
    }
    Tensor both = ops::concat({fused_proj.forward(rho_ad), edge_proj.forward(ops::add(rho_d, gamma))});
    Tensor base = ops::avg_pool2d(both, kDownsample, kDownsample, 0);
    return ops::chunk2(head.forward(mix.forward(base, training)));
}

PolarGuidance PolarIntegration::forward(const Tensor& rho_a, const Tensor& rho_d, bool training) {
    PolarGuidance g;
    g.gamma = edge_prior(rho_d);
    g.rho_ad = integrate(rho_a, rho_d);
    std::tie(g.alpha, g.beta) = guidance_params(g.rho_ad, rho_d, g.gamma, training);
    return g;
}

void PolarIntegration::collect(nn::ParamRegistry& reg) {
    pooled_gate.collect(reg, "pim.pooled_gate", group::pim_integrate);
    direct_gate.collect(reg, "pim.direct_gate", group::pim_integrate);
    fused_proj.collect(reg, "pim.fused_proj", group::pim_guidance);
    edge_proj.collect(reg, "pim.edge_proj", group::pim_guidance);
    mix.collect(reg, "pim.mix", group::pim_guidance);
    head.collect(reg, "pim.head", group::pim_guidance);
}

}  // namespace polarcod
