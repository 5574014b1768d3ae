#pragma once

#include <filesystem>
#include <vector>

#include "polarcod/plane.hpp"

namespace polarcod {

// Lossless PNG, one (gray) or three (RGB) channels. Values are clamped to
// [0, 1] and quantized to bit_depth (8 or 16) bits.
void write_png(const std::filesystem::path& path, const std::vector<const Plane*>& channels, int bit_depth = 16);

// Gray or RGB planes in [0, 1]; palette images are expanded and alpha is
// dropped. Throws DataError on unreadable or malformed files.
std::vector<Plane> read_png(const std::filesystem::path& path);

}  // namespace polarcod
