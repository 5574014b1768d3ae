#include "polarcod/model_gradcheck.hpp"

#include "polarcod/loss.hpp"
#include "polarcod/model.hpp"

namespace polarcod::gradcheck {

ModelConfig narrow_config() {
    ModelConfig cfg;
    cfg.channels = {2, 2, 2, 2};
    cfg.polar_channels = 2;
    cfg.guidance_channels = 2;
    return cfg;
}

Result end_to_end(std::uint64_t seed, const Ablation& ablation, Options opt) {
    ModelConfig cfg = narrow_config();
    cfg.ablation = ablation;
    PolarCodNet net(cfg, seed);
    Rng rng(seed + 1);
    for (const auto& p : net.params()) {
        const bool zero_init = p.group == group::decoder_feedback || p.group == group::pge_tau;
        const bool bn_scale = p.name.ends_with(".bn.gamma");
        const bool bn_shift = p.name.ends_with(".bn.beta");
        if (!zero_init && !bn_scale && !bn_shift) continue;
        for (double& v : p.tensor->mutable_data()) v = (bn_scale ? 1.0 : 0.0) + rng.uniform(-0.2, 0.2);
    }
    auto plane = [&](int c, bool binary) {
        std::vector<double> v(static_cast<std::size_t>(c) * 32 * 32);
        for (double& x : v) x = binary ? (rng.uniform() < 0.35 ? 1.0 : 0.0) : rng.uniform();
        return Tensor::from({1, c, 32, 32}, std::move(v));
    };
    ModelInput in{plane(3, false), plane(1, false), plane(1, false)};
    const Tensor gt = plane(1, true);
    std::vector<Tensor> params;
    for (const auto& p : net.active_params()) params.push_back(*p.tensor);
    opt.seed = seed;
    return check_scalar(
        "end-to-end model",
        [&] {
            auto out = net.forward(in, true);
            return total_loss(out.preds, out.coarse, gt, cfg.effective_iterations());
        },
        params, opt);
}

}  // namespace polarcod::gradcheck
