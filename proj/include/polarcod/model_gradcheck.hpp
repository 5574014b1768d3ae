#pragma once

#include <cstdint>

#include "polarcod/gradcheck.hpp"
#include "polarcod/model_config.hpp"

namespace polarcod::gradcheck {

// Narrow network on one 3x32x32 image with random cues and mask. BN affine,
// modulation and feedback weights are randomized first so no ReLU sits on its
// kink and every active group carries gradient. Checks every active parameter
// entry unless opt.max_entries is set. The relative-error floor defaults to
// 1e-5: at h = 1e-5 the loss roundoff alone is near 1e-10 per derivative.
Result end_to_end(std::uint64_t seed, const Ablation& ablation = {}, Options opt = {.floor = 1e-5});

ModelConfig narrow_config();

}  // namespace polarcod::gradcheck
