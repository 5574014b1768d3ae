#include <gtest/gtest.h>

#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "polarcod/checkpoint.hpp"
#include "polarcod/error.hpp"
#include "polarcod/model_gradcheck.hpp"
#include "polarcod/trainer.hpp"

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

RunConfig tiny_config() {
    RunConfig cfg;
    cfg.model = gradcheck::narrow_config();
    cfg.model.channels = {4, 4, 8, 8};
    cfg.train.batch_size = 2;
    cfg.train.input_size = 32;
    cfg.train.epochs = 4;
    cfg.train.decay_period = 2;
    cfg.train.lr = 3e-3;
    cfg.train.seed = 21;
    return cfg;
}

std::vector<SceneSample> tiny_scenes(int n) {
    std::vector<SceneSample> out;
    SceneSpec spec;
    spec.height = spec.width = 32;
    for (int i = 0; i < n; ++i) {
        spec.seed = 500 + i;
        out.push_back(generate_scene(spec, "s" + std::to_string(i)));
    }
    return out;
}

}  // namespace

TEST(Adam, MatchesScalarUpdateRule) {
    Tensor w = Tensor::from({1, 1, 1, 2}, {0.5, -1.0}, true);
    std::vector<nn::NamedParam> ps{{"w", "g", &w}};
    Adam adam(ps, 0.9, 0.999, 1e-8);
    double m[2] = {0, 0}, v[2] = {0, 0}, x[2] = {0.5, -1.0};
    for (int t = 1; t <= 3; ++t) {
        const double g[2] = {0.3 * t, -0.2};
        w.zero_grad();
        w.mutable_grad()[0] = g[0];
        w.mutable_grad()[1] = g[1];
        adam.step(0.01);
        for (int i = 0; i < 2; ++i) {
            m[i] = 0.9 * m[i] + 0.1 * g[i];
            v[i] = 0.999 * v[i] + 0.001 * g[i] * g[i];
            x[i] -= 0.01 * (m[i] / (1 - std::pow(0.9, t))) / (std::sqrt(v[i] / (1 - std::pow(0.999, t))) + 1e-8);
        }
        EXPECT_NEAR(w.data()[0], x[0], 1e-15);
        EXPECT_NEAR(w.data()[1], x[1], 1e-15);
    }
    EXPECT_EQ(adam.steps(), 3);
}

TEST(Adam, StepDecaySchedule) {
    EXPECT_DOUBLE_EQ(step_decay_lr(1e-4, 0.1, 50, 0), 1e-4);
    EXPECT_DOUBLE_EQ(step_decay_lr(1e-4, 0.1, 50, 49), 1e-4);
    EXPECT_DOUBLE_EQ(step_decay_lr(1e-4, 0.1, 50, 50), 1e-5);
    EXPECT_NEAR(step_decay_lr(1e-4, 0.1, 50, 120), 1e-6, 1e-20);
}

TEST(Checkpoint, HeaderAndRoundTrip) {
    TempDir dir("ckpt");
    std::vector<Blob> blobs{{"a", "xyz"}, {"param:w", encode_doubles({1.5, -0.0, 1e-300})}};
    write_checkpoint(dir.path / "c.bin", blobs);
    std::ifstream f(dir.path / "c.bin", std::ios::binary);
    char head[12];
    f.read(head, 12);
    EXPECT_EQ(std::string(head, 4), "PCKP");
    EXPECT_EQ(head[4], 1);  // version, little-endian
    EXPECT_EQ(head[8], 2);  // blob count
    auto back = read_checkpoint(dir.path / "c.bin");
    ASSERT_EQ(back.size(), 2u);
    EXPECT_EQ(back[0].bytes, "xyz");
    auto d = decode_doubles(find_blob(back, "param:w"));
    EXPECT_EQ(d[0], 1.5);
    EXPECT_TRUE(std::signbit(d[1]));
    EXPECT_EQ(d[2], 1e-300);
    EXPECT_THROW(find_blob(back, "missing"), DataError);
}

TEST(Checkpoint, VersionMismatchAndDamageAreReported) {
    TempDir dir("ckptbad");
    write_checkpoint(dir.path / "c.bin", {{"a", "payload"}});
    std::string bytes;
    {
        std::ifstream f(dir.path / "c.bin", std::ios::binary);
        bytes.assign(std::istreambuf_iterator<char>(f), {});
    }
    std::string other = bytes;
    other[4] = 7;
    std::ofstream(dir.path / "v7.bin", std::ios::binary) << other;
    EXPECT_THROW(read_checkpoint(dir.path / "v7.bin"), ConfigError);
    std::ofstream(dir.path / "short.bin", std::ios::binary) << bytes.substr(0, bytes.size() - 3);
    EXPECT_THROW(read_checkpoint(dir.path / "short.bin"), DataError);
    std::ofstream(dir.path / "long.bin", std::ios::binary) << bytes + "x";
    EXPECT_THROW(read_checkpoint(dir.path / "long.bin"), DataError);
    std::ofstream(dir.path / "junk.bin", std::ios::binary) << "hello world";
    EXPECT_THROW(read_checkpoint(dir.path / "junk.bin"), DataError);
}

TEST(Trainer, SameSeedSameLossSequence) {
    auto data = tiny_scenes(5);
    Trainer a(tiny_config(), data), b(tiny_config(), data);
    for (int i = 0; i < 4; ++i) EXPECT_EQ(a.step().total, b.step().total);
}

TEST(Trainer, ResumeReproducesUninterruptedRun) {
    TempDir dir("resume");
    auto data = tiny_scenes(5);  // 3 steps per epoch, the last one a single sample
    const RunConfig cfg = tiny_config();
    std::vector<double> straight;
    {
        Trainer t(cfg, data);
        while (!t.finished()) straight.push_back(t.step().total);
    }
    ASSERT_EQ(straight.size(), 12u);
    for (int cut : {3, 4, 8}) {
        SCOPED_TRACE(cut);
        std::vector<double> resumed;
        {
            Trainer t(cfg, data);
            for (int i = 0; i < cut; ++i) resumed.push_back(t.step().total);
            t.save(dir.path / "mid.ckpt");
        }
        auto t = Trainer::resume(dir.path / "mid.ckpt", data);
        EXPECT_EQ(t->global_step(), cut);
        while (!t->finished()) resumed.push_back(t->step().total);
        ASSERT_EQ(resumed.size(), straight.size());
        for (std::size_t i = 0; i < straight.size(); ++i) EXPECT_EQ(resumed[i], straight[i]) << i;
    }
}

TEST(Trainer, EpochStatsAverageSteps) {
    auto data = tiny_scenes(4);
    RunConfig cfg = tiny_config();
    Trainer t(cfg, data);
    Trainer u(cfg, data);
    EpochStats e = t.run_epoch();
    EXPECT_EQ(e.steps, 2);
    EXPECT_EQ(e.epoch, 0);
    const double s1 = u.step().total, s2 = u.step().total;
    EXPECT_NEAR(e.loss, 0.5 * (s1 + s2), 1e-15);
    ASSERT_EQ(e.terms.size(), 3u);
    EXPECT_NEAR(e.terms[0] + e.terms[1] + e.terms[2], e.loss, 1e-12);
    EXPECT_EQ(t.epoch(), 1);
    EXPECT_DOUBLE_EQ(t.current_lr(), cfg.train.lr);
    t.run_epoch();
    EXPECT_DOUBLE_EQ(t.current_lr(), cfg.train.lr * cfg.train.lr_decay);
    const std::string line = to_json_line(e);
    EXPECT_NE(line.find("\"loss_p2\""), std::string::npos);
    EXPECT_NE(line.find("\"loss_coarse\""), std::string::npos);
}

TEST(Trainer, LossDecreasesOnTinySet) {
    auto data = tiny_scenes(2);
    RunConfig cfg = tiny_config();
    cfg.train.epochs = 40;
    cfg.train.decay_period = 100;
    Trainer t(cfg, data);
    const double first = t.step().total;
    double last = first;
    while (!t.finished()) last = t.step().total;
    EXPECT_LT(last, 0.8 * first);
}

TEST(Trainer, SinglePrecisionModeRuns) {
    auto data = tiny_scenes(2);
    RunConfig cfg = tiny_config();
    Trainer f64(cfg, data);
    cfg.train.precision = Precision::f32;
    Trainer f32(cfg, data);
    const double a = f64.step().total, b = f32.step().total;
    EXPECT_TRUE(std::isfinite(b));
    EXPECT_NEAR(a, b, 1e-4);
    EXPECT_NE(a, b);
    EXPECT_EQ(precision_mode(), Precision::f64);
}

TEST(Trainer, RejectsEmptySetAndBadConfig) {
    std::vector<SceneSample> none;
    EXPECT_THROW(Trainer(tiny_config(), none), DataError);
    RunConfig bad = tiny_config();
    bad.model.ablation.aolp_only = true;
    bad.model.ablation.rgb_only = true;
    auto data = tiny_scenes(1);
    EXPECT_THROW(Trainer(bad, data), ConfigError);
}

TEST(Evaluation, PerfectPredictionsGivePerfectRow) {
    auto data = tiny_scenes(3);
    std::vector<Plane> preds;
    for (const auto& s : data) preds.push_back(s.gt);
    EvalResult r = evaluate_predictions(preds, data);
    ASSERT_EQ(r.per_image.size(), 3u);
    EXPECT_NEAR(r.mean.s_alpha, 1.0, 1e-12);
    EXPECT_EQ(r.mean.mae, 0.0);
}

TEST(Evaluation, LoadedCheckpointPredictsLikeTrainedModel) {
    TempDir dir("loadmodel");
    auto data = tiny_scenes(3);
    Trainer t(tiny_config(), data);
    t.run_epoch();
    t.save(dir.path / "m.ckpt");
    auto a = predict(t.model(), data, 32, 2);
    LoadedModel m = load_model(dir.path / "m.ckpt");
    auto b = predict(*m.net, data, 32, 2);
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i].values, b[i].values);
    for (double v : a[0].values) {
        EXPECT_GE(v, 0.0);
        EXPECT_LE(v, 1.0);
    }
}

TEST(Parallel, VisitsEveryIndexAndPropagatesErrors) {
    std::vector<std::atomic<int>> hits(100);
    parallel_for(hits.size(), [&](std::size_t i) { hits[i]++; });
    for (const auto& h : hits) EXPECT_EQ(h.load(), 1);
    EXPECT_THROW(parallel_for(10, [](std::size_t i) {
                     if (i == 7) throw DataError("boom");
                 }),
                 DataError);
}
