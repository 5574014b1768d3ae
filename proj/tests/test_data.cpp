#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>

#include "polarcod/config.hpp"
#include "polarcod/dataset.hpp"
#include "polarcod/error.hpp"
#include "polarcod/raster.hpp"
#include "polarcod/synth.hpp"

using namespace polarcod;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / ("polarcod_" + name)) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

double region_mean(const Plane& p, const Plane& mask, bool inside) {
    double s = 0, n = 0;
    for (std::size_t i = 0; i < p.size(); ++i)
        if ((mask.values[i] == 1.0) == inside) {
            s += p.values[i];
            n += 1;
        }
    return s / n;
}

double max_diff(const Plane& a, const Plane& b) {
    double m = 0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a.values[i] - b.values[i]));
    return m;
}

SceneSpec quiet_spec(std::uint64_t seed) {
    SceneSpec s;
    s.noise = 0.0;
    s.seed = seed;
    return s;
}

}  // namespace

TEST(Synth, CamouflagedRgbButSeparatedDolp) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        SceneSample s = generate_scene(quiet_spec(seed));
        for (int c = 0; c < 3; ++c) {
            Plane ch = plane_of(s.rgb, 0, c);
            EXPECT_LT(std::abs(region_mean(ch, s.gt, true) - region_mean(ch, s.gt, false)), 0.02) << seed;
        }
        const double dd = region_mean(s.cues.rho_d, s.gt, true) - region_mean(s.cues.rho_d, s.gt, false);
        EXPECT_GE(dd, 0.9 * s.spec.dolp_contrast) << seed;
    }
}

TEST(Synth, NoiseFreeCuesRecoverPlantedFields) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        SceneSample s = generate_scene(quiet_spec(seed));
        EXPECT_LE(max_diff(s.cues.rho_d, s.dolp), 1e-10);
        double worst = 0;
        for (std::size_t i = 0; i < s.angle.size(); ++i) {
            double d = std::abs(s.cues.rho_a.values[i] - angle_to_unit(s.angle.values[i]));
            worst = std::max(worst, std::min(d, 1.0 - d));
        }
        EXPECT_LE(worst, 1e-10);
    }
}

TEST(Synth, CuesFollowFromCapture) {
    SceneSpec spec;
    spec.seed = 3;
    SceneSample s = generate_scene(spec);
    PolarizationCues again = compute_cues(compute_stokes(s.capture));
    EXPECT_LE(max_diff(again.rho_d, s.cues.rho_d), 1e-10);
    EXPECT_LE(max_diff(again.rho_a, s.cues.rho_a), 1e-10);
}

TEST(Synth, SameSeedIsBitIdentical) {
    SceneSpec spec;
    spec.seed = 77;
    SceneSample a = generate_scene(spec), b = generate_scene(spec);
    EXPECT_EQ(a.gt.values, b.gt.values);
    EXPECT_EQ(a.capture.i45.values, b.capture.i45.values);
    EXPECT_EQ(a.cues.rho_a.values, b.cues.rho_a.values);
    EXPECT_TRUE(std::equal(a.rgb.data().begin(), a.rgb.data().end(), b.rgb.data().begin()));
    spec.seed = 78;
    EXPECT_NE(generate_scene(spec).gt.values, a.gt.values);
}

TEST(Synth, MaskAreaStaysInRange) {
    SceneSpec spec;
    spec.objects = 2;
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
        spec.seed = seed;
        SceneSample s = generate_scene(spec);
        double frac = 0;
        for (double v : s.gt.values) {
            EXPECT_TRUE(v == 0.0 || v == 1.0);
            frac += v / s.gt.size();
        }
        EXPECT_GE(frac, spec.min_area);
        EXPECT_LE(frac, spec.max_area);
    }
}

TEST(Synth, InfeasibleAreaRangeThrows) {
    SceneSpec spec;
    spec.height = 4;
    spec.width = 4;
    spec.min_area = 0.1;  // reachable fractions are multiples of 1/16
    spec.max_area = 0.11;
    EXPECT_THROW(generate_scene(spec), ConfigError);
}

TEST(Synth, InvalidSpecsThrow) {
    auto bad = [](auto edit) {
        SceneSpec s;
        edit(s);
        return s;
    };
    EXPECT_THROW(generate_scene(bad([](SceneSpec& s) { s.max_area = 0.5; })), ConfigError);
    EXPECT_THROW(generate_scene(bad([](SceneSpec& s) { s.min_area = 0.0; })), ConfigError);
    EXPECT_THROW(generate_scene(bad([](SceneSpec& s) { s.rgb_contrast = 1.5; })), ConfigError);
    EXPECT_THROW(generate_scene(bad([](SceneSpec& s) { s.dolp_contrast = -0.1; })), ConfigError);
    EXPECT_THROW(generate_scene(bad([](SceneSpec& s) { s.noise = -1; })), ConfigError);
}

TEST(Synth, SingleRgbChannelThresholdIsUninformative) {
    // Average IoU over 50 scenes for every channel, threshold and polarity.
    const int seeds = 50;
    double best = 0;
    for (int c = 0; c < 3; ++c)
        for (int t = 1; t < 20; ++t)
            for (bool above : {true, false}) {
                double total = 0;
                for (int seed = 0; seed < seeds; ++seed) {
                    SceneSpec spec;
                    spec.seed = static_cast<std::uint64_t>(seed);
                    static std::vector<SceneSample> cache;
                    if (cache.size() < static_cast<std::size_t>(seeds)) cache.push_back(generate_scene(spec));
                    const SceneSample& s = cache[seed];
                    Plane ch = plane_of(s.rgb, 0, c);
                    double inter = 0, uni = 0;
                    for (std::size_t i = 0; i < ch.size(); ++i) {
                        const bool p = above ? ch.values[i] >= t * 0.05 : ch.values[i] < t * 0.05;
                        const bool g = s.gt.values[i] == 1.0;
                        inter += p && g;
                        uni += p || g;
                    }
                    total += inter / uni;
                }
                best = std::max(best, total / seeds);
            }
    EXPECT_LE(best, 0.2);
}

TEST(Raster, SixteenBitRoundTripWithinQuantization) {
    TempDir dir("raster16");
    Rng rng(5);
    Plane a(7, 9), b(7, 9), c(7, 9);
    for (Plane* p : {&a, &b, &c})
        for (double& v : p->values) v = rng.uniform();
    write_png(dir.path / "gray.png", {&a});
    write_png(dir.path / "rgb.png", {&a, &b, &c});
    auto g = read_png(dir.path / "gray.png");
    ASSERT_EQ(g.size(), 1u);
    EXPECT_LE(max_diff(g[0], a), std::ldexp(1.0, -15));
    auto rgb = read_png(dir.path / "rgb.png");
    ASSERT_EQ(rgb.size(), 3u);
    EXPECT_LE(max_diff(rgb[1], b), std::ldexp(1.0, -15));
    EXPECT_LE(max_diff(rgb[2], c), std::ldexp(1.0, -15));
}

TEST(Raster, EightBitMaskIsExact) {
    TempDir dir("raster8");
    Plane m(5, 6);
    for (std::size_t i = 0; i < m.size(); i += 3) m.values[i] = 1.0;
    write_png(dir.path / "m.png", {&m}, 8);
    EXPECT_EQ(read_png(dir.path / "m.png")[0].values, m.values);
}

TEST(Raster, CorruptFilesThrowDataError) {
    TempDir dir("rastercorrupt");
    {
        std::ofstream(dir.path / "text.png") << "not an image";
    }
    EXPECT_THROW(read_png(dir.path / "text.png"), DataError);
    Plane p(16, 16, 0.5);
    write_png(dir.path / "ok.png", {&p});
    const auto size = fs::file_size(dir.path / "ok.png");
    fs::resize_file(dir.path / "ok.png", size / 2);
    EXPECT_THROW(read_png(dir.path / "ok.png"), DataError);
    EXPECT_THROW(read_png(dir.path / "absent.png"), DataError);
}

TEST(Dataset, SampleRoundTripWithinQuantization) {
    TempDir dir("sample");
    SceneSpec spec;
    spec.seed = 9;
    SceneSample s = generate_scene(spec, "scene_0009");
    write_sample(dir.path / s.id, s);
    SceneSample r = read_sample(dir.path / s.id);
    const double q = std::ldexp(1.0, -15);
    EXPECT_EQ(r.id, s.id);
    EXPECT_LE(max_diff(r.cues.rho_d, s.cues.rho_d), q);
    EXPECT_LE(max_diff(r.cues.rho_a, s.cues.rho_a), q);
    EXPECT_LE(max_diff(r.capture.i135, s.capture.i135), q);
    for (int c = 0; c < 3; ++c) EXPECT_LE(max_diff(plane_of(r.rgb, 0, c), plane_of(s.rgb, 0, c)), q);
    EXPECT_EQ(r.gt.values, s.gt.values);
    EXPECT_EQ(r.spec.seed, s.spec.seed);
    EXPECT_EQ(r.spec.dolp_contrast, s.spec.dolp_contrast);
}

TEST(Dataset, EmptyOrMissingRootIsEmpty) {
    TempDir dir("emptyroot");
    Dataset d = read_dataset(dir.path);
    EXPECT_TRUE(d.train.empty());
    EXPECT_TRUE(d.test.empty());
    EXPECT_TRUE(read_dataset(dir.path / "nothing").train.empty());
}

TEST(Dataset, SixteenSamplesRoundTrip) {
    TempDir dir("sixteen");
    Dataset d;
    SceneSpec spec;
    spec.height = 32;
    spec.width = 48;
    for (int i = 0; i < 16; ++i) {
        spec.seed = 100 + i;
        char id[16];
        std::snprintf(id, sizeof id, "scene_%04d", i);
        (i < 12 ? d.train : d.test).push_back(generate_scene(spec, id));
    }
    write_dataset(dir.path, d);
    Dataset r = read_dataset(dir.path);
    ASSERT_EQ(r.train.size(), 12u);
    ASSERT_EQ(r.test.size(), 4u);
    for (std::size_t i = 0; i < 12; ++i) {
        EXPECT_EQ(r.train[i].id, d.train[i].id);
        EXPECT_EQ(r.train[i].rgb.shape(), d.train[i].rgb.shape());
        EXPECT_EQ(r.train[i].gt.values, d.train[i].gt.values);
    }
    for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(r.test[i].gt.values, d.test[i].gt.values);
}

TEST(Dataset, MissingFilesSkipWithWarningAndCorruptFilesThrow) {
    TempDir dir("partial");
    SceneSpec spec;
    spec.height = 32;
    spec.width = 32;
    for (int i = 0; i < 3; ++i) {
        spec.seed = i;
        write_sample(dir.path / "train" / ("s" + std::to_string(i)), generate_scene(spec, "s" + std::to_string(i)));
    }
    fs::remove(dir.path / "train" / "s1" / "aolp.png");
    std::vector<std::string> warnings;
    auto split = read_split(dir.path / "train", [&](const std::string& m) { warnings.push_back(m); });
    ASSERT_EQ(split.size(), 2u);
    EXPECT_EQ(split[0].id, "s0");
    EXPECT_EQ(split[1].id, "s2");
    ASSERT_EQ(warnings.size(), 1u);
    EXPECT_NE(warnings[0].find("aolp.png"), std::string::npos);

    {
        std::ofstream(dir.path / "train" / "s2" / "gt.png") << "garbage";
    }
    EXPECT_THROW(read_split(dir.path / "train", [](const std::string&) {}), DataError);
    {
        std::ofstream(dir.path / "train" / "s0" / "scene.json") << "{ broken";
    }
    EXPECT_THROW(read_sample(dir.path / "train" / "s0"), DataError);
}

TEST(Dataset, BatchStacksAndResamples) {
    std::vector<SceneSample> samples;
    SceneSpec spec;
    spec.height = 48;
    spec.width = 40;
    for (int i = 0; i < 3; ++i) {
        spec.seed = i;
        samples.push_back(generate_scene(spec));
    }
    Batch b = make_batch(samples, {2, 0}, 32);
    EXPECT_EQ(b.input.rgb.shape(), (Shape{2, 3, 32, 32}));
    EXPECT_EQ(b.input.dolp.shape(), (Shape{2, 1, 32, 32}));
    EXPECT_EQ(b.gt.shape(), (Shape{2, 1, 32, 32}));
    for (double v : b.gt.data()) EXPECT_TRUE(v == 0.0 || v == 1.0);
    spec.height = spec.width = 32;
    spec.seed = 4;
    std::vector<SceneSample> same{generate_scene(spec)};
    Batch exact = make_batch(same, {0}, 32);
    EXPECT_EQ(std::vector<double>(exact.gt.data().begin(), exact.gt.data().end()), same[0].gt.values);
}

TEST(Config, DumpParsesBackToSameDump) {
    RunConfig cfg;
    cfg.train.lr = 3e-4;
    cfg.model.ablation.no_efm = true;
    cfg.model.gate_pool = GatePool::window3;
    cfg.train.precision = Precision::f32;
    cfg.data.scene.seed = 123456789012345ULL;
    const std::string text = to_json_text(cfg);
    RunConfig back = parse_run_config(text);
    EXPECT_EQ(to_json_text(back), text);
    EXPECT_TRUE(back.model.ablation.no_efm);
    EXPECT_EQ(back.data.scene.seed, 123456789012345ULL);
}

TEST(Config, PartialFileKeepsDefaults) {
    RunConfig cfg = parse_run_config(R"({"train": {"epochs": 3}, "model": {"ablation": {"no_pge": true}}})");
    EXPECT_EQ(cfg.train.epochs, 3);
    EXPECT_TRUE(cfg.model.ablation.no_pge);
    EXPECT_EQ(cfg.train.lr, RunConfig{}.train.lr);
}

TEST(Config, RejectsBadInput) {
    EXPECT_THROW(parse_run_config(R"({"train": {"epoch": 3}})"), ConfigError);
    EXPECT_THROW(parse_run_config(R"({"version": 2})"), ConfigError);
    EXPECT_THROW(parse_run_config(R"({"train": {"lr": "fast"}})"), ConfigError);
    EXPECT_THROW(parse_run_config(R"({"train": {"lr": -1}})"), ConfigError);
    EXPECT_THROW(parse_run_config(R"({"train": {"input_size": 70}})"), ConfigError);
    EXPECT_THROW(parse_run_config(R"({"model": {"ablation": {"rgb_only": true, "dolp_only": true}}})"), ConfigError);
    EXPECT_THROW(parse_run_config(R"({"model": {"gate_pool": "max"}})"), ConfigError);
    EXPECT_THROW(parse_run_config("{ nope"), ConfigError);
}

TEST(Config, FullScaleProfileIsAccepted) {
    RunConfig p = full_scale_profile();
    EXPECT_NO_THROW(p.validate());
    EXPECT_EQ(p.train.lr, 1e-4);
    EXPECT_EQ(p.train.batch_size, 4);
    EXPECT_EQ(p.train.input_size, 704);
}
