// polarcod command line: gen, train, eval, infer, gradcheck, ablate.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "polarcod/config.hpp"
#include "polarcod/dataset.hpp"
#include "polarcod/error.hpp"
#include "polarcod/gradcheck.hpp"
#include "polarcod/model_gradcheck.hpp"
#include "polarcod/raster.hpp"
#include "polarcod/trainer.hpp"

namespace fs = std::filesystem;
using namespace polarcod;
using json = nlohmann::ordered_json;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitNumeric = 4;

// Flags shared by every subcommand.
struct Common {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out;
    std::string precision;
    std::string profile;
    bool print_config = false;
    Ablation ablation;
};

void add_common(CLI::App& app, Common& c) {
    app.add_option("--config", c.config, "JSON run config; missing fields keep their defaults");
    app.add_option("--seed", c.seed, "seed for model init, shuffling and scene generation");
    app.add_option("--out", c.out, "output directory");
    app.add_option("--precision", c.precision, "arithmetic precision")->check(CLI::IsMember({"f32", "f64"}));
    app.add_option("--profile", c.profile, "starting defaults when no --config is given")
        ->check(CLI::IsMember({"desk", "full-scale"}));
    app.add_flag("--print-config", c.print_config, "print the resolved config and exit");
    app.add_flag("--rgb-only", c.ablation.rgb_only, "drop the polarization input");
    app.add_flag("--aolp-only", c.ablation.aolp_only, "keep AoLP, replace DoLP with zeros");
    app.add_flag("--dolp-only", c.ablation.dolp_only, "keep DoLP, replace AoLP with 0.5");
    app.add_flag("--no-pge", c.ablation.no_pge, "plain conv instead of guided enhancement");
    app.add_flag("--pge-no-affine", c.ablation.pge_no_affine, "skip the feature modulation");
    app.add_flag("--pge-no-enhance", c.ablation.pge_no_enhance, "skip the gated enhancement");
    app.add_flag("--no-efm", c.ablation.no_efm, "skip frequency refinement");
    app.add_flag("--efm-no-polar", c.ablation.efm_no_polar, "drop the edge-prior branch of frequency refinement");
    app.add_flag("--no-iter", c.ablation.no_iter, "single decoding pass");
}

RunConfig resolve(const Common& c) {
    if (!c.config.empty() && !c.profile.empty()) throw ConfigError("--profile and --config are exclusive");
    RunConfig cfg = c.profile == "full-scale" ? full_scale_profile() : RunConfig{};
    if (!c.config.empty()) cfg = load_run_config(c.config);
    if (c.seed) {
        cfg.train.seed = *c.seed;
        cfg.data.scene.seed = *c.seed;
    }
    if (c.precision == "f32") cfg.train.precision = Precision::f32;
    if (c.precision == "f64") cfg.train.precision = Precision::f64;
    if (c.ablation.any()) cfg.model.ablation = c.ablation;
    cfg.validate();
    return cfg;
}

fs::path require_out(const Common& c) {
    if (c.out.empty()) throw ConfigError("--out is required");
    fs::create_directories(c.out);
    return c.out;
}

std::string fixed(double v, int digits = 4) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

json report_json(const MetricsReport& r) {
    return {{"s_alpha", r.s_alpha}, {"e_phi", r.e_phi}, {"mae", r.mae},   {"f_beta_w", r.f_beta_w},
            {"iou", r.iou},         {"ber", r.ber},     {"oa", r.oa},     {"f_beta", r.f_beta}};
}

// Sorted per-image curves of S_alpha (red), E_phi (green), F_beta^w (blue)
// and 1 - MAE (gray) on a white canvas, one column per image.
void plot_curves(const fs::path& path, const std::vector<MetricsReport>& rows) {
    const int h = 200, margin = 10;
    const int n = static_cast<int>(rows.size());
    const int w = std::max(2 * margin + 2, 2 * margin + std::min(n, 600) * std::max(1, 600 / std::max(n, 1)));
    std::vector<Plane> rgb(3, Plane(h, w, 1.0));
    auto put = [&](int y, int x, double r, double g, double b) {
        if (y < 0 || y >= h || x < 0 || x >= w) return;
        rgb[0].at(y, x) = r;
        rgb[1].at(y, x) = g;
        rgb[2].at(y, x) = b;
    };
    for (int x = margin; x < w - margin; ++x) {
        put(margin, x, 0.8, 0.8, 0.8);
        put(h - margin - 1, x, 0.8, 0.8, 0.8);
    }
    struct Curve {
        double (*get)(const MetricsReport&);
        double r, g, b;
    };
    const Curve curves[] = {
        {[](const MetricsReport& m) { return m.s_alpha; }, 0.85, 0.1, 0.1},
        {[](const MetricsReport& m) { return m.e_phi; }, 0.1, 0.6, 0.1},
        {[](const MetricsReport& m) { return m.f_beta_w; }, 0.1, 0.2, 0.85},
        {[](const MetricsReport& m) { return 1.0 - m.mae; }, 0.4, 0.4, 0.4},
    };
    if (n == 0) {
        write_png(path, {&rgb[0], &rgb[1], &rgb[2]}, 8);
        return;
    }
    const int span = w - 2 * margin - 1;
    const int rows_px = h - 2 * margin - 1;
    for (const auto& c : curves) {
        std::vector<double> v;
        for (const auto& r : rows) v.push_back(std::clamp(c.get(r), 0.0, 1.0));
        std::sort(v.begin(), v.end());
        for (int x = 0; x <= span; ++x) {
            // linear interpolation between sorted samples, then a short vertical
            // run to the next column so steep parts stay connected
            auto at = [&](int col) {
                const double t = n == 1 ? 0.0 : static_cast<double>(col) * (n - 1) / span;
                const int i = std::min(static_cast<int>(t), n - 1);
                const double f = t - i;
                const double val = i + 1 < n ? v[i] * (1 - f) + v[i + 1] * f : v[i];
                return margin + static_cast<int>(std::lround((1.0 - val) * rows_px));
            };
            const int y0 = at(x);
            const int y1 = at(std::min(x + 1, span));
            for (int y = std::min(y0, y1); y <= std::max(y0, y1); ++y) put(y, margin + x, c.r, c.g, c.b);
        }
    }
    write_png(path, {&rgb[0], &rgb[1], &rgb[2]}, 8);
}

std::string table_header() {
    char buf[160];
    std::snprintf(buf, sizeof buf, "%-5s %-20s %8s %8s %8s %8s", "row", "variant", "S_alpha", "E_phi", "MAE",
                  "F_w");
    return buf;
}

std::string table_row(const std::string& row, const std::string& label, const MetricsReport& r) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "%-5s %-20s %8.4f %8.4f %8.4f %8.4f", row.c_str(), label.c_str(), r.s_alpha,
                  r.e_phi, r.mae, r.f_beta_w);
    return buf;
}

Dataset load_or_generate(const std::string& data, const RunConfig& cfg) {
    if (!data.empty()) {
        if (!fs::is_directory(data)) throw DataError("dataset root not found: " + data);
        return read_dataset(data);
    }
    return generate_dataset(cfg.data);
}

int cmd_gen(const Common& c) {
    const RunConfig cfg = resolve(c);
    const fs::path out = require_out(c);
    const Dataset d = generate_dataset(cfg.data);
    write_dataset(out, d);
    std::ofstream(out / "config.json") << to_json_text(cfg) << '\n';
    std::cout << "wrote " << d.train.size() << " train and " << d.test.size() << " test scenes to " << out.string()
              << '\n';
    return 0;
}

int cmd_train(const Common& c, const std::string& data, const std::string& resume, std::optional<int> stop_after) {
    // every config problem surfaces before the dataset is touched
    std::optional<RunConfig> fresh;
    if (!resume.empty()) {
        if (!c.config.empty() || c.ablation.any() || c.seed || !c.precision.empty())
            throw ConfigError("--resume takes the config from the checkpoint; drop the other config flags");
    } else {
        fresh = resolve(c);
    }
    if (data.empty()) throw ConfigError("--data is required");
    if (c.out.empty()) throw ConfigError("--out is required");
    if (!fs::is_directory(data)) throw DataError("dataset root not found: " + data);
    const std::vector<SceneSample> train = read_split(fs::path(data) / "train");
    std::unique_ptr<Trainer> trainer =
        fresh ? std::make_unique<Trainer>(*fresh, train) : Trainer::resume(resume, train);
    const fs::path out = require_out(c);
    const RunConfig& cfg = trainer->config();
    std::ofstream(out / "config.json") << to_json_text(cfg) << '\n';
    std::ofstream log(out / "log.jsonl", resume.empty() ? std::ios::trunc : std::ios::app);
    const fs::path ckpt = out / "checkpoint.pckp";
    for (int done = 0; !trainer->finished() && (!stop_after || done < *stop_after); ++done) {
        const EpochStats e = trainer->run_epoch();
        const std::string line = to_json_line(e);
        log << line << '\n';
        log.flush();
        std::cout << line << '\n';
        if ((e.epoch + 1) % cfg.train.checkpoint_every == 0 || trainer->finished()) trainer->save(ckpt);
    }
    // an interrupted or empty session still leaves a resumable checkpoint
    trainer->save(ckpt);
    std::cout << "checkpoint: " << ckpt.string() << '\n';
    return 0;
}

// Masks written by infer (or any <id>_mask.png set) scored without a model.
std::vector<Plane> read_predictions(const fs::path& dir, const std::vector<SceneSample>& samples) {
    std::vector<Plane> preds;
    for (const auto& s : samples) {
        const fs::path p = dir / (s.id + "_mask.png");
        if (!fs::exists(p)) throw DataError("missing prediction " + p.string());
        auto planes = read_png(p);
        if (planes.size() != 1) throw DataError("prediction must be single-channel: " + p.string());
        if (!planes[0].same_shape(s.gt)) throw DataError("prediction size differs from the mask: " + p.string());
        preds.push_back(std::move(planes[0]));
    }
    return preds;
}

int cmd_eval(const Common& c, const std::string& checkpoint, const std::string& predictions, const std::string& data,
             const std::string& split) {
    if (data.empty()) throw ConfigError("--data is required");
    if (checkpoint.empty() == predictions.empty()) throw ConfigError("give exactly one of --checkpoint and --predictions");
    if (c.out.empty()) throw ConfigError("--out is required");
    const fs::path dir = fs::path(data) / split;
    if (!fs::is_directory(dir)) throw DataError("split directory not found: " + dir.string());
    const auto samples = read_split(dir);
    if (samples.empty()) throw DataError("no samples in " + dir.string());
    EvalResult r;
    std::string label = "predictions";
    if (!checkpoint.empty()) {
        LoadedModel m = load_model(checkpoint);
        if (c.ablation.any()) m.net->set_ablation(c.ablation);
        label = m.net->config().ablation.label();
        r = evaluate_model(*m.net, samples, m.config.train.input_size, m.config.train.batch_size);
    } else {
        r = evaluate_predictions(read_predictions(predictions, samples), samples);
    }
    const fs::path out = require_out(c);
    {
        std::ofstream f(out / "metrics.jsonl");
        for (std::size_t i = 0; i < samples.size(); ++i) f << to_json_line(samples[i].id, r.per_image[i]) << '\n';
        f << to_json_line("mean", r.mean) << '\n';
    }
    std::ostringstream summary;
    summary << table_header() << '\n' << table_row("-", label, r.mean) << '\n';
    summary << "images " << samples.size() << "  IoU " << fixed(r.mean.iou) << "  BER " << fixed(r.mean.ber, 2)
            << "%  OA " << fixed(r.mean.oa) << "  F_beta " << fixed(r.mean.f_beta) << '\n';
    std::ofstream(out / "summary.txt") << summary.str();
    plot_curves(out / "curves.png", r.per_image);
    std::cout << summary.str();
    return 0;
}

int cmd_infer(const Common& c, const std::string& checkpoint, const std::vector<std::string>& inputs) {
    if (checkpoint.empty()) throw ConfigError("--checkpoint is required");
    if (inputs.empty()) throw ConfigError("no sample directories given");
    const fs::path out = require_out(c);
    LoadedModel m = load_model(checkpoint);
    if (c.ablation.any()) m.net->set_ablation(c.ablation);
    std::vector<SceneSample> samples;
    for (const auto& in : inputs) samples.push_back(read_sample(in));
    const auto probs = predict(*m.net, samples, m.config.train.input_size, m.config.train.batch_size);
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const fs::path p = out / (samples[i].id + "_mask.png");
        write_png(p, {&probs[i]}, 8);
        std::cout << p.string() << '\n';
    }
    return 0;
}

int cmd_gradcheck(const Common& c, bool variants) {
    const RunConfig cfg = resolve(c);
    const std::uint64_t seed = cfg.train.seed;
    std::vector<gradcheck::Result> results = gradcheck::op_suite(seed);
    results.push_back(gradcheck::end_to_end(seed));
    if (variants) {
        for (const auto& v : ablation_variants()) {
            if (!v.ablation.any()) continue;
            auto r = gradcheck::end_to_end(seed, v.ablation);
            r.name = "model/" + v.ablation.label();
            results.push_back(r);
        }
    }
    bool ok = true;
    std::printf("%-28s %8s %12s  %s\n", "check", "entries", "max_rel_err", "status");
    for (const auto& r : results) {
        std::printf("%-28s %8zu %12.3e  %s\n", r.name.c_str(), r.entries, r.max_rel_error,
                    r.passed ? "PASS" : "FAIL");
        ok = ok && r.passed;
    }
    std::printf("%s\n", ok ? "all checks passed" : "gradient check FAILED");
    return ok ? 0 : kExitNumeric;
}

int cmd_ablate(const Common& c, const std::string& data, std::optional<int> epochs, const std::string& rows) {
    if (c.ablation.any()) throw ConfigError("ablate sets the ablation flags per row; drop the ablation flags");
    RunConfig cfg = resolve(c);
    if (epochs) cfg.train.epochs = *epochs;
    cfg.validate();
    const fs::path out = require_out(c);
    std::vector<std::string> keep;
    {
        std::stringstream ss(rows);
        std::string r;
        while (std::getline(ss, r, ','))
            if (!r.empty()) keep.push_back(r);
    }
    for (const auto& k : keep) {
        const auto& all = ablation_variants();
        if (std::none_of(all.begin(), all.end(), [&](const AblationVariant& v) { return v.row == k; }))
            throw ConfigError("unknown ablation row '" + k + "'");
    }
    const Dataset d = load_or_generate(data, cfg);
    if (d.train.empty() || d.test.empty()) throw DataError("ablate needs non-empty train and test splits");
    std::ofstream jl(out / "ablation.jsonl");
    std::ostringstream table;
    table << table_header() << '\n';
    std::cout << table_header() << '\n';
    for (const auto& v : ablation_variants()) {
        if (!keep.empty() && std::find(keep.begin(), keep.end(), v.row) == keep.end()) continue;
        RunConfig run = cfg;
        run.model.ablation = v.ablation;
        const EvalResult r = train_and_evaluate(run, d, [&](const EpochStats& e) {
            std::cerr << v.row << " epoch " << e.epoch + 1 << "/" << run.train.epochs << " loss " << fixed(e.loss)
                      << '\n';
        });
        json line = {{"row", v.row}, {"variant", v.label}, {"flags", v.ablation.label()}};
        line.update(report_json(r.mean));
        jl << line.dump() << '\n';
        jl.flush();
        const std::string row = table_row(v.row, v.label, r.mean);
        table << row << '\n';
        std::cout << row << '\n';
    }
    std::ofstream(out / "ablation.txt") << table.str();
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"polarization-guided camouflaged object detection"};
    app.require_subcommand(1);
    Common common;

    auto* gen = app.add_subcommand("gen", "generate a synthetic dataset into --out");
    add_common(*gen, common);

    std::string data, resume, checkpoint, predictions, split = "test", rows;
    std::vector<std::string> inputs;
    std::optional<int> epochs, stop_after;
    bool variants = false;

    auto* train = app.add_subcommand("train", "train on <data>/train, logging to --out");
    add_common(*train, common);
    train->add_option("--data", data, "dataset root");
    train->add_option("--resume", resume, "continue from a checkpoint");
    train->add_option("--stop-after", stop_after, "stop after this many epochs; --resume picks up later")
        ->check(CLI::PositiveNumber);

    auto* eval = app.add_subcommand("eval", "score a checkpoint on a dataset split");
    add_common(*eval, common);
    eval->add_option("--checkpoint", checkpoint, "checkpoint file");
    eval->add_option("--predictions", predictions, "directory of <id>_mask.png files to score instead");
    eval->add_option("--data", data, "dataset root");
    eval->add_option("--split", split, "train or test")->check(CLI::IsMember({"train", "test"}));

    auto* infer = app.add_subcommand("infer", "write probability masks for sample directories");
    add_common(*infer, common);
    infer->add_option("--checkpoint", checkpoint, "checkpoint file");
    infer->add_option("inputs", inputs, "sample directories");

    auto* grad = app.add_subcommand("gradcheck", "finite-difference check of every op family and the model");
    add_common(*grad, common);
    grad->add_flag("--variants", variants, "also check every ablated model");

    auto* ablate = app.add_subcommand("ablate", "train and score the removal-study variants");
    add_common(*ablate, common);
    ablate->add_option("--data", data, "dataset root; generated from the config when absent");
    ablate->add_option("--epochs", epochs, "override the epoch count")->check(CLI::PositiveNumber);
    ablate->add_option("--rows", rows, "comma-separated subset, e.g. A,D,Ours");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitConfig;
    }

    try {
        if (common.print_config) {
            std::cout << to_json_text(resolve(common)) << '\n';
            return 0;
        }
        if (gen->parsed()) return cmd_gen(common);
        if (train->parsed()) return cmd_train(common, data, resume, stop_after);
        if (eval->parsed()) return cmd_eval(common, checkpoint, predictions, data, split);
        if (infer->parsed()) return cmd_infer(common, checkpoint, inputs);
        if (grad->parsed()) return cmd_gradcheck(common, variants);
        if (ablate->parsed()) return cmd_ablate(common, data, epochs, rows);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return kExitData;
    } catch (const DimensionError& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return kExitData;
    } catch (const NumericError& e) {
        std::cerr << "numeric error: " << e.what() << '\n';
        return kExitNumeric;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
