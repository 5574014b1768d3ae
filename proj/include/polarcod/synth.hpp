#pragma once

#include <array>
#include <cstdint>
#include <string>

#include "polarcod/plane.hpp"
#include "polarcod/polarization.hpp"
#include "polarcod/rng.hpp"
#include "polarcod/tensor.hpp"

namespace polarcod {

struct SceneSpec {
    int height = 64;
    int width = 64;
    int objects = 1;
    double min_area = 0.06;  // union of object masks, as a fraction of the image
    double max_area = 0.22;
    // Band-limited texture: a sum of plane waves with frequencies (cycles per
    // pixel) drawn uniformly from [texture_low, texture_high].
    int texture_waves = 24;
    double texture_low = 0.04;
    double texture_high = 0.2;
    double texture_amplitude = 0.12;  // standard deviation of each channel's texture
    double rgb_contrast = 0.0;        // 0: object and background share the RGB statistics
    double dolp_contrast = 0.5;
    double aolp_contrast = 0.5;  // radians
    double noise = 0.01;         // sensor noise standard deviation
    std::uint64_t seed = 0;

    // Throws ConfigError.
    void validate() const;
};

struct SceneSample {
    std::string id;
    SceneSpec spec;
    Tensor rgb;  // (1, 3, H, W) in [0, 1]
    PolarCapture capture;
    PolarizationCues cues;
    Plane gt;
    // Noise-free fields the capture was rendered from.
    Plane s0;
    Plane dolp;
    Plane angle;  // radians in (-pi/2, pi/2]
};

// Throws ConfigError when no mask within the area range turns up in 100 attempts.
SceneSample generate_scene(const SceneSpec& spec, const std::string& id = "scene");

// Union of `objects` smooth closed contours (8-harmonic radius functions)
// covering a fraction of the image within [min_area, max_area].
Plane generate_mask(const SceneSpec& spec, Rng& rng);

}  // namespace polarcod
