// Runs the polarcod binary as a subprocess.

#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "json.hpp"
#include "polarcod/config.hpp"
#include "polarcod/dataset.hpp"
#include "polarcod/raster.hpp"

namespace fs = std::filesystem;
using namespace polarcod;

namespace {

struct Outcome {
    int code = -1;
    std::string out;
};

class CliTest : public ::testing::Test {
   protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() /
               ("polarcod_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(dir_);
        fs::create_directories(dir_);
        // small enough that a full train/eval cycle takes well under a second
        std::ofstream(dir_ / "tiny.json") << R"({
            "model": {"channels": [4, 4, 8, 8]},
            "train": {"epochs": 3, "batch_size": 2, "input_size": 32, "decay_period": 2, "lr": 0.003},
            "data": {"train_count": 4, "test_count": 3, "scene": {"height": 32, "width": 32}}
        })";
    }
    void TearDown() override { fs::remove_all(dir_); }

    Outcome run(const std::string& args) const {
        const fs::path log = dir_ / "stdout.txt";
        const std::string cmd =
            "cd '" + dir_.string() + "' && '" + POLARCOD_CLI + "' " + args + " > '" + log.string() + "' 2>&1";
        const int status = std::system(cmd.c_str());
        Outcome r;
        r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
        r.out = slurp(log);
        return r;
    }
    static std::string slurp(const fs::path& p) {
        std::ifstream f(p);
        std::stringstream ss;
        ss << f.rdbuf();
        return ss.str();
    }

    fs::path dir_;
};

}  // namespace

TEST_F(CliTest, PrintConfigDumpsEveryDefault) {
    const Outcome r = run("train --print-config");
    ASSERT_EQ(r.code, 0) << r.out;
    EXPECT_EQ(r.out, to_json_text(RunConfig{}) + "\n");
    // and the dump parses back to the same config
    EXPECT_EQ(to_json_text(parse_run_config(r.out)), to_json_text(RunConfig{}));
}

TEST_F(CliTest, FlagsOverrideTheConfigFile) {
    const Outcome r = run("gen --config tiny.json --seed 77 --precision f32 --no-iter --print-config");
    ASSERT_EQ(r.code, 0) << r.out;
    const RunConfig cfg = parse_run_config(r.out);
    EXPECT_EQ(cfg.train.seed, 77u);
    EXPECT_EQ(cfg.data.scene.seed, 77u);
    EXPECT_EQ(cfg.train.precision, Precision::f32);
    EXPECT_TRUE(cfg.model.ablation.no_iter);
    EXPECT_EQ(cfg.train.epochs, 3);
}

TEST_F(CliTest, FullScaleProfileIsSelectable) {
    const Outcome r = run("train --profile full-scale --print-config");
    ASSERT_EQ(r.code, 0) << r.out;
    EXPECT_EQ(r.out, to_json_text(full_scale_profile()) + "\n");
    EXPECT_EQ(run("train --profile full-scale --config tiny.json --print-config").code, 2);
}

TEST_F(CliTest, ExitCodes) {
    EXPECT_EQ(run("").code, 2);
    EXPECT_EQ(run("train --bogus").code, 2);
    EXPECT_EQ(run("train --precision f16").code, 2);
    EXPECT_EQ(run("train --rgb-only --dolp-only --data x --out o").code, 2);
    EXPECT_EQ(run("train --config absent.json --data x --out o").code, 2);
    std::ofstream(dir_ / "v9.json") << R"({"version": 9})";
    const Outcome v = run("train --config v9.json --data x --out o");
    EXPECT_EQ(v.code, 2);
    EXPECT_NE(v.out.find("version"), std::string::npos) << v.out;
    EXPECT_EQ(run("train --data missing --out o").code, 3);
    EXPECT_EQ(run("eval --checkpoint none.pckp --data missing --out o").code, 3);
    EXPECT_EQ(run("--help").code, 0);
}

TEST_F(CliTest, InvalidFlagsFailBeforeAnyOutput) {
    EXPECT_EQ(run("gen --rgb-only --aolp-only --out made").code, 2);
    EXPECT_FALSE(fs::exists(dir_ / "made"));
}

TEST_F(CliTest, EvalOfGroundTruthMasksIsPerfect) {
    ASSERT_EQ(run("gen --config tiny.json --out ds").code, 0);
    const Dataset d = read_dataset(dir_ / "ds");
    ASSERT_EQ(d.test.size(), 3u);
    fs::create_directories(dir_ / "gt_preds");
    for (const auto& s : d.test) write_png(dir_ / "gt_preds" / (s.id + "_mask.png"), {&s.gt}, 8);

    const Outcome r = run("eval --predictions gt_preds --data ds --out ev");
    ASSERT_EQ(r.code, 0) << r.out;
    std::ifstream f(dir_ / "ev" / "metrics.jsonl");
    std::string line, last;
    int lines = 0;
    while (std::getline(f, line)) {
        last = line;
        ++lines;
    }
    EXPECT_EQ(lines, 4);  // three images and the mean
    const auto j = nlohmann::json::parse(last);
    EXPECT_EQ(j["id"], "mean");
    EXPECT_NEAR(j["s_alpha"].get<double>(), 1.0, 1e-12);
    EXPECT_DOUBLE_EQ(j["mae"].get<double>(), 0.0);
    EXPECT_NEAR(j["e_phi"].get<double>(), 1.0, 1e-12);
    EXPECT_NEAR(j["f_beta_w"].get<double>(), 1.0, 1e-12);
    EXPECT_TRUE(fs::exists(dir_ / "ev" / "curves.png"));
    EXPECT_TRUE(fs::exists(dir_ / "ev" / "summary.txt"));
}

TEST_F(CliTest, GenTrainEvalInferIsDeterministic) {
    ASSERT_EQ(run("gen --config tiny.json --out ds").code, 0);
    for (const char* tag : {"a", "b"}) {
        const std::string t = tag;
        ASSERT_EQ(run("train --config tiny.json --data ds --out run_" + t).code, 0);
        ASSERT_EQ(run("eval --checkpoint run_" + t + "/checkpoint.pckp --data ds --out ev_" + t).code, 0);
    }
    EXPECT_EQ(slurp(dir_ / "run_a" / "log.jsonl"), slurp(dir_ / "run_b" / "log.jsonl"));
    EXPECT_EQ(slurp(dir_ / "ev_a" / "metrics.jsonl"), slurp(dir_ / "ev_b" / "metrics.jsonl"));

    std::ifstream log(dir_ / "run_a" / "log.jsonl");
    std::string line;
    int epochs = 0;
    while (std::getline(log, line)) {
        const auto j = nlohmann::json::parse(line);
        EXPECT_EQ(j["epoch"], ++epochs);
        EXPECT_TRUE(j.contains("loss_p1") && j.contains("loss_p2") && j.contains("loss_coarse"));
    }
    EXPECT_EQ(epochs, 3);

    const Outcome inf = run("infer --checkpoint run_a/checkpoint.pckp ds/test/scene_00000 ds/test/scene_00001 --out masks");
    ASSERT_EQ(inf.code, 0) << inf.out;
    const auto mask = read_png(dir_ / "masks" / "scene_00000_mask.png");
    ASSERT_EQ(mask.size(), 1u);
    EXPECT_EQ(mask[0].height, 32);
    EXPECT_TRUE(fs::exists(dir_ / "masks" / "scene_00001_mask.png"));
}

TEST_F(CliTest, InterruptedTrainingResumesToTheSameLog) {
    ASSERT_EQ(run("gen --config tiny.json --out ds").code, 0);
    ASSERT_EQ(run("train --config tiny.json --data ds --out full").code, 0);
    ASSERT_EQ(run("train --config tiny.json --data ds --out cut --stop-after 1").code, 0);
    EXPECT_EQ(run("train --data ds --out cut --resume cut/checkpoint.pckp --seed 3").code, 2);
    const Outcome r = run("train --data ds --out cut --resume cut/checkpoint.pckp");
    ASSERT_EQ(r.code, 0) << r.out;
    EXPECT_EQ(slurp(dir_ / "full" / "log.jsonl"), slurp(dir_ / "cut" / "log.jsonl"));
}

TEST_F(CliTest, AblateEmitsAllRowsInTableOrder) {
    ASSERT_EQ(run("gen --config tiny.json --out ds").code, 0);
    const Outcome r = run("ablate --config tiny.json --data ds --epochs 1 --out ab");
    ASSERT_EQ(r.code, 0) << r.out;
    std::ifstream f(dir_ / "ab" / "ablation.jsonl");
    std::string line, rows;
    int n = 0;
    while (std::getline(f, line)) {
        rows += nlohmann::json::parse(line)["row"].get<std::string>() + " ";
        ++n;
    }
    EXPECT_EQ(n, 10);
    EXPECT_EQ(rows, "A B C D E F G H I Ours ");
    EXPECT_EQ(run("ablate --config tiny.json --data ds --out ab2 --rows A,Q").code, 2);
    EXPECT_EQ(run("ablate --config tiny.json --data ds --out ab3 --no-efm").code, 2);
}

TEST_F(CliTest, GradcheckPassesAndPrintsATable) {
    const Outcome r = run("gradcheck");
    ASSERT_EQ(r.code, 0) << r.out;
    EXPECT_NE(r.out.find("end-to-end model"), std::string::npos);
    EXPECT_NE(r.out.find("all checks passed"), std::string::npos);
    EXPECT_EQ(r.out.find("FAIL"), std::string::npos);
}
