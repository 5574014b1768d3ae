#include "polarcod/model.hpp"

#include "polarcod/error.hpp"

namespace polarcod {

PolarCodNet::PolarCodNet(const ModelConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
    cfg_.validate();
    Rng rng(seed);
    encoder = Encoder(cfg_.channels, rng);
    pim = PolarIntegration(cfg_.polar_channels, cfg_.guidance_channels, rng);
    for (int i = 0; i < 4; ++i) {
        pge[i] = GuidanceEnhance(cfg_.channels[i], cfg_.guidance_channels, cfg_.gate_pool, rng);
        efm[i] = FrequencyRefine(cfg_.channels[i], cfg_.amp_kernel, rng);
        feedback[i] = ResizeProj(1, cfg_.channels[i], rng, true);
    }
    decoder = Decoder(cfg_.channels, rng);

    encoder.collect(registry_);
    pim.collect(registry_);
    for (int i = 0; i < 4; ++i) {
        const std::string s = std::to_string(i + 1);
        pge[i].collect(registry_, "pge" + s);
        efm[i].collect(registry_, "efm" + s);
        feedback[i].conv.collect(registry_, "feedback" + s, group::decoder_feedback);
    }
    decoder.collect(registry_);
}

void PolarCodNet::set_ablation(const Ablation& a) {
    ModelConfig next = cfg_;
    next.ablation = a;
    next.validate();
    cfg_ = next;
}

std::vector<nn::NamedParam> PolarCodNet::active_params() const {
    const auto off = disabled_groups(cfg_);
    std::vector<nn::NamedParam> out;
    for (const auto& p : registry_.params())
        if (!off.count(p.group)) out.push_back(p);
    return out;
}

std::size_t PolarCodNet::parameter_count() const {
    std::size_t n = 0;
    for (const auto& p : registry_.params()) n += p.tensor->numel();
    return n;
}

std::size_t PolarCodNet::active_parameter_count() const {
    std::size_t n = 0;
    for (const auto& p : active_params()) n += p.tensor->numel();
    return n;
}

void PolarCodNet::zero_grad() {
    for (const auto& p : registry_.params()) p.tensor->zero_grad();
}

ModelOutput PolarCodNet::forward(const ModelInput& in, bool training) {
    const Ablation& ab = cfg_.ablation;
    const Shape& s = in.rgb.shape();
    const bool use_polar = !ab.rgb_only;
    Tensor dolp = in.dolp;
    Tensor aolp = in.aolp;
    if (use_polar) {
        const Shape cue{s.n, 1, s.h, s.w};
        if (!dolp.defined() || !aolp.defined()) throw DataError("model input lacks DoLP/AoLP planes");
        if (!(dolp.shape() == cue) || !(aolp.shape() == cue)) {
            throw DimensionError("model input: cue planes must be " + cue.str() + ", got " + dolp.shape().str() +
                                 " and " + aolp.shape().str());
        }
        if (ab.aolp_only) dolp = Tensor::zeros(cue);
        if (ab.dolp_only) aolp = Tensor::full(cue, 0.5);
    }

    ModelOutput out;
    out.features = encoder.forward(in.rgb, training);
    out.modulated = out.features;

    const bool modulate = use_polar && !ab.no_pge && !ab.pge_no_affine;
    if (modulate) {
        PolarGuidance g = pim.forward(aolp, dolp, training);
        out.gamma = g.gamma;
        out.alpha = g.alpha;
        out.beta = g.beta;
        for (int i = 0; i < 4; ++i) out.modulated[i] = pge[i].modulate(out.features[i], g.alpha, g.beta);
    } else if (use_polar) {
        out.gamma = edge_prior(dolp);
    }
    const bool edge_branch = use_polar && !ab.aolp_only && !ab.efm_no_polar;
    const Tensor edge = edge_branch ? out.gamma : Tensor{};

    Tensor prob;
    for (int t = 0; t < cfg_.effective_iterations(); ++t) {
        std::array<Tensor, 4> refined;
        for (int i = 0; i < 4; ++i) {
            Tensor x = out.modulated[i];
            if (t > 0 && cfg_.feedback_stages[i]) {
                const Shape& fs = x.shape();
                x = ops::add(x, feedback[i].forward(prob, fs.h, fs.w));
            }
            Tensor e;
            if (ab.no_pge) {
                e = pge[i].plain(x);
            } else if (ab.pge_no_enhance) {
                e = x;
            } else {
                e = pge[i].enhance(x, training);
            }
            refined[i] = ab.no_efm ? e : efm[i].forward(e, edge, training);
        }
        DecodeResult d = decoder.forward(refined, s.h, s.w, training);
        if (t == 0) out.coarse = d.coarse;
        prob = ops::sigmoid(d.pred);
        out.preds.push_back(d.pred);
    }
    return out;
}

}  // namespace polarcod
