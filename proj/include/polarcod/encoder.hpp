#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "polarcod/nn.hpp"

namespace polarcod {

// Four feature maps at strides 4, 8, 16 and 32.
using FeaturePyramid = std::array<Tensor, 4>;

// Small convolutional stand-in for a hierarchical backbone. Stage 1 is a
// stride-4 patch convolution; later stages halve the resolution. Every stage
// is two Conv-BN-ReLU blocks.
class Encoder {
   public:
    Encoder() = default;
    Encoder(const std::array<int, 4>& channels, Rng& rng);

    FeaturePyramid forward(const Tensor& rgb, bool training);

    // Replaces the computed pyramid on subsequent forward calls. Shapes are
    // checked against the input at forward time. Pass nullopt to clear.
    void inject(std::optional<FeaturePyramid> features) { injected_ = std::move(features); }
    bool has_injection() const { return injected_.has_value(); }

    void collect(nn::ParamRegistry& reg);
    const std::array<int, 4>& channels() const { return channels_; }

    // Expected stage shapes for an (n, 3, h, w) input.
    std::array<Shape, 4> stage_shapes(int n, int h, int w) const;

    static constexpr int kStride = 32;

   private:
    std::array<int, 4> channels_{};
    std::array<nn::ConvBn, 4> down_;
    std::array<nn::ConvBn, 4> refine_;
    std::optional<FeaturePyramid> injected_;
};

// Stage-feature binary file: 16-byte little-endian header
//   bytes 0-3   magic "PCFT"
//   bytes 4-5   dtype (1 = float32, 2 = float64)
//   bytes 6-13  N, C, H, W as uint16
//   bytes 14-15 reserved, zero
// followed by N*C*H*W row-major scalars.
enum class FeatureDtype : std::uint16_t { f32 = 1, f64 = 2 };

void write_feature_file(const std::filesystem::path& path, const Tensor& t, FeatureDtype dtype = FeatureDtype::f64);
// Throws DataError on a malformed file.
Tensor read_feature_file(const std::filesystem::path& path);

// Reads <stem>_stage1.pcft .. <stem>_stage4.pcft.
FeaturePyramid read_feature_pyramid(const std::filesystem::path& dir, const std::string& stem);
void write_feature_pyramid(const std::filesystem::path& dir, const std::string& stem, const FeaturePyramid& f,
                           FeatureDtype dtype = FeatureDtype::f64);

}  // namespace polarcod
