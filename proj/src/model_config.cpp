#include "polarcod/model_config.hpp"

#include <vector>

#include "polarcod/error.hpp"

namespace polarcod {

namespace {

std::vector<std::pair<const char*, bool>> flags(const Ablation& a) {
    return {{"rgb_only", a.rgb_only},     {"aolp_only", a.aolp_only},       {"dolp_only", a.dolp_only},
            {"no_pge", a.no_pge},         {"pge_no_affine", a.pge_no_affine}, {"pge_no_enhance", a.pge_no_enhance},
            {"no_efm", a.no_efm},         {"efm_no_polar", a.efm_no_polar}, {"no_iter", a.no_iter}};
}

}  // namespace

bool Ablation::any() const {
    for (auto [name, on] : flags(*this))
        if (on) return true;
    return false;
}

std::string Ablation::label() const {
    std::string out;
    for (auto [name, on] : flags(*this)) {
        if (!on) continue;
        if (!out.empty()) out += "+";
        out += name;
    }
    return out.empty() ? "full" : out;
}

void ModelConfig::validate() const {
    for (int c : channels)
        if (c < 1) throw ConfigError("model.channels entries must be positive");
    if (polar_channels < 1) throw ConfigError("model.polar_channels must be positive");
    if (guidance_channels < 1) throw ConfigError("model.guidance_channels must be positive");
    if (iterations < 1) throw ConfigError("model.iterations must be at least 1");
    if (amp_kernel < 1 || amp_kernel % 2 == 0) throw ConfigError("model.amp_kernel must be a positive odd number");
    if (ablation.rgb_only && (ablation.aolp_only || ablation.dolp_only)) {
        throw ConfigError("rgb_only cannot be combined with aolp_only or dolp_only");
    }
    if (ablation.aolp_only && ablation.dolp_only) throw ConfigError("aolp_only and dolp_only are exclusive");
}

std::set<std::string> disabled_groups(const ModelConfig& cfg) {
    const Ablation& a = cfg.ablation;
    std::set<std::string> off;
    if (!a.no_pge) off.insert(group::pge_plain);
    if (a.rgb_only) off.insert({group::pim_integrate, group::pim_guidance, group::pge_tau, group::efm_amp_p,
                                group::efm_edge_proj});
    if (a.aolp_only || a.efm_no_polar) off.insert({group::efm_amp_p, group::efm_edge_proj});
    if (a.no_pge) off.insert({group::pge_tau, group::pge_enhance, group::pim_integrate, group::pim_guidance});
    if (a.pge_no_affine) off.insert({group::pge_tau, group::pim_integrate, group::pim_guidance});
    if (a.pge_no_enhance) off.insert(group::pge_enhance);
    if (a.no_efm) off.insert({group::efm_amp_r, group::efm_amp_p, group::efm_edge_proj});
    if (cfg.effective_iterations() < 2) off.insert(group::decoder_feedback);
    bool any_feedback = false;
    for (bool b : cfg.feedback_stages) any_feedback = any_feedback || b;
    if (!any_feedback) off.insert(group::decoder_feedback);
    return off;
}

const std::vector<AblationVariant>& ablation_variants() {
    static const std::vector<AblationVariant> rows = [] {
        auto with = [](auto set) {
            Ablation a;
            set(a);
            return a;
        };
        return std::vector<AblationVariant>{
            {"A", "RGB only", with([](Ablation& a) { a.rgb_only = true; })},
            {"B", "RGB+AoLP", with([](Ablation& a) { a.aolp_only = true; })},
            {"C", "RGB+DoLP", with([](Ablation& a) { a.dolp_only = true; })},
            {"D", "w/o PGE", with([](Ablation& a) { a.no_pge = true; })},
            {"E", "PGE w/o alpha,beta", with([](Ablation& a) { a.pge_no_affine = true; })},
            {"F", "PGE w/o Enhance", with([](Ablation& a) { a.pge_no_enhance = true; })},
            {"G", "w/o EFM", with([](Ablation& a) { a.no_efm = true; })},
            {"H", "EFM w/o Polar", with([](Ablation& a) { a.efm_no_polar = true; })},
            {"I", "w/o Iter", with([](Ablation& a) { a.no_iter = true; })},
            {"Ours", "full model", Ablation{}},
        };
    }();
    return rows;
}

}  // namespace polarcod
