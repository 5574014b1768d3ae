#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "polarcod/decoder.hpp"
#include "polarcod/encoder.hpp"
#include "polarcod/guidance.hpp"
#include "polarcod/model_config.hpp"
#include "polarcod/pim.hpp"

namespace polarcod {

// One batch of network input. dolp and aolp are (N, 1, H, W) in [0, 1] and may
// be left undefined when the model runs RGB-only.
struct ModelInput {
    Tensor rgb;
    Tensor dolp;
    Tensor aolp;
};

struct ModelOutput {
    std::vector<Tensor> preds;  // per-iteration logits at input size
    Tensor coarse;              // coarsest-stage logits at input size, first pass
    FeaturePyramid features;    // encoder output
    FeaturePyramid modulated;   // after conditional modulation
    Tensor gamma;               // edge prior, undefined when unused
    Tensor alpha;               // undefined when modulation is off
    Tensor beta;
};

class PolarCodNet {
   public:
    PolarCodNet(const ModelConfig& cfg, std::uint64_t seed);
    PolarCodNet(const PolarCodNet&) = delete;
    PolarCodNet& operator=(const PolarCodNet&) = delete;

    ModelOutput forward(const ModelInput& in, bool training);

    const ModelConfig& config() const { return cfg_; }
    // Changing the ablation keeps every parameter; only routing changes.
    void set_ablation(const Ablation& a);

    const std::vector<nn::NamedParam>& params() const { return registry_.params(); }
    const std::vector<nn::NamedBuffer>& buffers() const { return registry_.buffers(); }
    // Parameters that can influence the output under the current ablation.
    std::vector<nn::NamedParam> active_params() const;
    std::size_t parameter_count() const;
    std::size_t active_parameter_count() const;
    void zero_grad();

    Encoder encoder;
    PolarIntegration pim;
    std::array<GuidanceEnhance, 4> pge;
    std::array<FrequencyRefine, 4> efm;
    std::array<ResizeProj, 4> feedback;  // prediction probability -> stage feature offset
    Decoder decoder;

   private:
    ModelConfig cfg_;
    nn::ParamRegistry registry_;
};

}  // namespace polarcod
