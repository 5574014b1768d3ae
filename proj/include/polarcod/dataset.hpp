#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "polarcod/config.hpp"
#include "polarcod/model.hpp"
#include "polarcod/synth.hpp"

namespace polarcod {

struct Dataset {
    std::vector<SceneSample> train;
    std::vector<SceneSample> test;
};

using WarningSink = std::function<void(const std::string&)>;
// Writes "warning: <message>" to stderr.
void warn_stderr(const std::string& message);

// Sample k of the train split uses seed base + k and id scene_<k>; the test
// split uses base + 1000000 + k. Scenes are generated in parallel.
Dataset generate_dataset(const GenConfig& gen);

// One sample directory: rgb.png, capture_000/045/090/135.png, dolp.png,
// aolp.png, gt.png and scene.json. Creates the directory.
void write_sample(const std::filesystem::path& dir, const SceneSample& s);
// Throws DataError when a file is missing or corrupt. The noise-free fields
// (s0, dolp, angle) are not stored and come back empty.
SceneSample read_sample(const std::filesystem::path& dir);

// root/train/<id>/ and root/test/<id>/.
void write_dataset(const std::filesystem::path& root, const Dataset& data);
// Samples sorted by id. Directories with missing files are skipped with a
// warning; a missing or empty root gives an empty dataset; corrupt files throw.
Dataset read_dataset(const std::filesystem::path& root, const WarningSink& warn = warn_stderr);
std::vector<SceneSample> read_split(const std::filesystem::path& dir, const WarningSink& warn = warn_stderr);

struct Batch {
    ModelInput input;
    Tensor gt;  // (N, 1, size, size), binary
};

// Stacks the selected samples, resampling to size x size (bilinear for images
// and cues, bilinear then threshold 0.5 for the mask) when they differ.
Batch make_batch(const std::vector<SceneSample>& samples, const std::vector<std::size_t>& indices, int size);

}  // namespace polarcod
