#pragma once

#include <array>
#include <set>
#include <string>
#include <vector>

namespace polarcod {

// Removal switches; several may be combined.
struct Ablation {
    bool rgb_only = false;        // no polarization input at all
    bool aolp_only = false;       // DoLP and its edge prior replaced by zeros
    bool dolp_only = false;       // AoLP replaced by the neutral 0.5 plane
    bool no_pge = false;          // plain 3x3 conv instead of modulation + enhancement
    bool pge_no_affine = false;   // modulation skipped, F' = F
    bool pge_no_enhance = false;  // enhancement skipped, E = F'
    bool no_efm = false;          // frequency refinement skipped, e_re = E
    bool efm_no_polar = false;    // edge-prior branch of the frequency refinement removed
    bool no_iter = false;         // single decoding pass

    bool any() const;
    // Short label, "full" when nothing is removed.
    std::string label() const;
};

// One row of the removal study: A-I, then the full model.
struct AblationVariant {
    std::string row;    // "A".."I", "Ours"
    std::string label;  // e.g. "RGB only", "w/o PGE"
    Ablation ablation;
};
const std::vector<AblationVariant>& ablation_variants();

enum class GatePool { global, window3 };

// Parameter groups; every parameter belongs to exactly one.
namespace group {
inline constexpr const char* encoder = "encoder";
inline constexpr const char* pim_integrate = "pim.integrate";
inline constexpr const char* pim_guidance = "pim.guidance";
inline constexpr const char* pge_tau = "pge.tau";
inline constexpr const char* pge_enhance = "pge.enhance";
inline constexpr const char* pge_plain = "pge.plain";
inline constexpr const char* efm_amp_r = "efm.amp_r";
inline constexpr const char* efm_amp_p = "efm.amp_p";
inline constexpr const char* efm_edge_proj = "efm.edge_proj";
inline constexpr const char* decoder = "decoder";
inline constexpr const char* decoder_feedback = "decoder.feedback";
}  // namespace group

struct ModelConfig {
    std::array<int, 4> channels{16, 32, 64, 128};
    int polar_channels = 8;      // width of the fused AoLP/DoLP representation
    int guidance_channels = 16;  // width of each of alpha and beta
    int iterations = 2;
    std::array<bool, 4> feedback_stages{true, true, true, true};
    GatePool gate_pool = GatePool::global;
    int amp_kernel = 3;  // kernel of the amplitude-refinement convolutions
    Ablation ablation;

    // Throws ConfigError.
    void validate() const;
    // Iterations actually run after ablation.
    int effective_iterations() const { return ablation.no_iter ? 1 : iterations; }
};

// Groups whose parameters cannot influence the output under `cfg`.
std::set<std::string> disabled_groups(const ModelConfig& cfg);

}  // namespace polarcod
