#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "polarcod/model_config.hpp"
#include "polarcod/synth.hpp"
#include "polarcod/tensor.hpp"

namespace polarcod {

inline constexpr int kConfigVersion = 1;

struct TrainConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_eps = 1e-8;
    double lr_decay = 0.1;  // multiplied into lr every decay_period epochs
    int decay_period = 50;
    int epochs = 30;
    int batch_size = 4;
    int input_size = 64;  // square, divisible by 32
    int checkpoint_every = 1;
    std::uint64_t seed = 0;
    Precision precision = Precision::f64;
};

struct GenConfig {
    SceneSpec scene;  // seed is the base; sample k of a split uses base + offset + k
    int train_count = 200;
    int test_count = 50;
};

struct RunConfig {
    int version = kConfigVersion;
    ModelConfig model;
    TrainConfig train;
    GenConfig data;

    // Throws ConfigError.
    void validate() const;
};

// lr 1e-4, batch 4, 704 x 704 input, decay by 10 every 50 epochs.
RunConfig full_scale_profile();

// Full JSON dump, every field present.
std::string to_json_text(const RunConfig& cfg);
// Missing fields keep their defaults; unknown fields, wrong types and other
// versions throw ConfigError.
RunConfig parse_run_config(const std::string& text);
RunConfig load_run_config(const std::filesystem::path& path);

std::string scene_spec_json(const SceneSpec& spec);
SceneSpec parse_scene_spec(const std::string& text);

}  // namespace polarcod
