#include "polarcod/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "polarcod/error.hpp"

namespace polarcod {

namespace {

constexpr int kHarmonics = 8;
constexpr int kMaskAttempts = 100;
constexpr double kPi = std::numbers::pi;

double wrap_half_turn(double a) {
    // Into (-pi/2, pi/2].
    a = std::fmod(a + kPi / 2, kPi);
    if (a <= 0) a += kPi;
    return a - kPi / 2;
}

// Zero-mean field with unit-ish variance built from random plane waves.
Plane texture(const SceneSpec& spec, Rng& rng, double low, double high) {
    Plane p(spec.height, spec.width);
    const int waves = std::max(spec.texture_waves, 1);
    for (int k = 0; k < waves; ++k) {
        const double f = rng.uniform(low, high);
        const double dir = rng.uniform(0, 2 * kPi);
        const double phase = rng.uniform(0, 2 * kPi);
        const double fx = f * std::cos(dir), fy = f * std::sin(dir);
        for (int y = 0; y < p.height; ++y)
            for (int x = 0; x < p.width; ++x) p.at(y, x) += std::cos(2 * kPi * (fx * x + fy * y) + phase);
    }
    const double scale = std::sqrt(2.0 / waves);
    for (double& v : p.values) v *= scale;
    return p;
}

double region_mean(const Plane& p, const Plane& mask, bool inside) {
    double s = 0, n = 0;
    for (std::size_t i = 0; i < p.size(); ++i)
        if ((mask.values[i] == 1.0) == inside) {
            s += p.values[i];
            n += 1;
        }
    return n > 0 ? s / n : 0.0;
}

// Shifts the object region so both regions keep the same mean, then adds `offset`
// inside the object.
void equalize(Plane& p, const Plane& mask, double offset) {
    const double shift = region_mean(p, mask, false) - region_mean(p, mask, true) + offset;
    for (std::size_t i = 0; i < p.size(); ++i)
        if (mask.values[i] == 1.0) p.values[i] += shift;
}

}  // namespace

void SceneSpec::validate() const {
    if (height < 4 || width < 4) throw ConfigError("scene size must be at least 4x4");
    if (objects < 1) throw ConfigError("scene needs at least one object");
    if (!(min_area > 0 && max_area < 0.5 && min_area <= max_area)) {
        throw ConfigError("object area range must satisfy 0 < min <= max < 0.5");
    }
    if (texture_waves < 1 || !(texture_low > 0 && texture_low <= texture_high && texture_high <= 0.5)) {
        throw ConfigError("texture band must satisfy 0 < low <= high <= 0.5 with at least one wave");
    }
    if (texture_amplitude < 0) throw ConfigError("texture amplitude must be non-negative");
    if (rgb_contrast < 0 || rgb_contrast > 1) throw ConfigError("rgb_contrast must lie in [0, 1]");
    if (dolp_contrast < 0 || dolp_contrast > 1) throw ConfigError("dolp_contrast must lie in [0, 1]");
    if (std::abs(aolp_contrast) > kPi / 2) throw ConfigError("aolp_contrast must lie in [-pi/2, pi/2]");
    if (noise < 0) throw ConfigError("noise must be non-negative");
}

Plane generate_mask(const SceneSpec& spec, Rng& rng) {
    const double image_area = static_cast<double>(spec.height) * spec.width;
    for (int attempt = 0; attempt < kMaskAttempts; ++attempt) {
        Plane mask(spec.height, spec.width);
        const double target = rng.uniform(spec.min_area, spec.max_area) / spec.objects;
        for (int o = 0; o < spec.objects; ++o) {
            const double r0 = std::sqrt(target * image_area / kPi);
            const double cy = rng.uniform(0.25, 0.75) * spec.height;
            const double cx = rng.uniform(0.25, 0.75) * spec.width;
            std::array<double, kHarmonics> ca{}, sa{};
            for (int k = 0; k < kHarmonics; ++k) {
                ca[k] = rng.uniform(-1, 1) * 0.3 / (k + 1);
                sa[k] = rng.uniform(-1, 1) * 0.3 / (k + 1);
            }
            for (int y = 0; y < spec.height; ++y)
                for (int x = 0; x < spec.width; ++x) {
                    const double dy = y + 0.5 - cy, dx = x + 0.5 - cx;
                    const double phi = std::atan2(dy, dx);
                    double r = 1.0;
                    for (int k = 0; k < kHarmonics; ++k) r += ca[k] * std::cos((k + 1) * phi) + sa[k] * std::sin((k + 1) * phi);
                    if (std::hypot(dy, dx) < r0 * std::max(r, 0.05)) mask.at(y, x) = 1.0;
                }
        }
        double covered = 0;
        for (double v : mask.values) covered += v;
        const double frac = covered / image_area;
        if (frac >= spec.min_area && frac <= spec.max_area) return mask;
    }
    throw ConfigError("no object mask with area fraction in [" + std::to_string(spec.min_area) + ", " +
                      std::to_string(spec.max_area) + "] after " + std::to_string(kMaskAttempts) + " attempts");
}

SceneSample generate_scene(const SceneSpec& spec, const std::string& id) {
    spec.validate();
    Rng rng(spec.seed);
    SceneSample s;
    s.id = id;
    s.spec = spec;
    s.gt = generate_mask(spec, rng);
    const int h = spec.height, w = spec.width;

    // RGB: one texture per channel over the whole image, object region
    // re-centered so its mean matches the background plus the contrast offset.
    std::array<Plane, 3> rgb;
    double norm = 0;
    std::array<double, 3> dir{};
    for (double& d : dir) {
        d = rng.uniform(-1, 1);
        norm += d * d;
    }
    norm = std::sqrt(std::max(norm, 1e-12));
    for (int c = 0; c < 3; ++c) {
        const double base = rng.uniform(0.4, 0.6);
        rgb[c] = texture(spec, rng, spec.texture_low, spec.texture_high);
        for (double& v : rgb[c].values) v = base + spec.texture_amplitude * v;
        equalize(rgb[c], s.gt, 0.5 * spec.rgb_contrast * dir[c] / norm);
    }
    s.s0 = Plane(h, w);
    for (std::size_t i = 0; i < s.s0.size(); ++i) {
        for (auto& p : rgb) p.values[i] = std::clamp(p.values[i], 0.0, 1.0);
        s.s0.values[i] = (rgb[0].values[i] + rgb[1].values[i] + rgb[2].values[i]) / 3.0;
    }

    // Polarization fields: slowly varying background, constant offsets inside the object.
    const double dolp_base = rng.uniform(0.05, 0.2);
    const double angle_base = rng.uniform(-kPi / 2, kPi / 2);
    Plane dvar = texture(spec, rng, 0.01, 0.05);
    Plane avar = texture(spec, rng, 0.01, 0.05);
    s.dolp = Plane(h, w);
    s.angle = Plane(h, w);
    for (std::size_t i = 0; i < s.dolp.size(); ++i) {
        const bool inside = s.gt.values[i] == 1.0;
        s.dolp.values[i] =
            std::clamp(dolp_base + 0.02 * dvar.values[i] + (inside ? spec.dolp_contrast : 0.0), 0.02, 1.0);
        s.angle.values[i] = wrap_half_turn(angle_base + 0.05 * avar.values[i] + (inside ? spec.aolp_contrast : 0.0));
    }

    PolarCapture clean = render_capture(s.s0, s.dolp, s.angle);
    auto noisy = [&](Plane p) {
        if (spec.noise > 0)
            for (double& v : p.values) v += spec.noise * rng.normal();
        return p;
    };
    s.capture = PolarCapture::ingest(noisy(clean.i0), noisy(clean.i45), noisy(clean.i90), noisy(clean.i135));
    for (auto& p : rgb) p = noisy(p);
    std::vector<double> values;
    values.reserve(3 * s.s0.size());
    for (const auto& p : rgb)
        for (double v : p.values) values.push_back(std::clamp(v, 0.0, 1.0));
    s.rgb = Tensor::from({1, 3, h, w}, std::move(values));
    s.cues = compute_cues(compute_stokes(s.capture));
    return s;
}

}  // namespace polarcod
