#include "polarcod/dataset.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "json.hpp"
#include "polarcod/config.hpp"
#include "polarcod/error.hpp"
#include "polarcod/parallel.hpp"
#include "polarcod/ops.hpp"
#include "polarcod/raster.hpp"

namespace polarcod {

namespace fs = std::filesystem;

namespace {

const char* const kFiles[] = {"rgb.png",      "capture_000.png", "capture_045.png", "capture_090.png",
                              "capture_135.png", "dolp.png",     "aolp.png",        "gt.png",
                              "scene.json"};

Plane read_gray(const fs::path& p) {
    auto planes = read_png(p);
    if (planes.size() != 1) throw DataError(p.string() + ": expected a grayscale image");
    return std::move(planes[0]);
}

}  // namespace

void warn_stderr(const std::string& message) { std::cerr << "warning: " << message << '\n'; }

void write_sample(const fs::path& dir, const SceneSample& s) {
    fs::create_directories(dir);
    const Shape& rs = s.rgb.shape();
    if (rs.n != 1 || rs.c != 3) throw DimensionError("write_sample: rgb must be (1, 3, H, W)");
    std::array<Plane, 3> rgb{plane_of(s.rgb, 0, 0), plane_of(s.rgb, 0, 1), plane_of(s.rgb, 0, 2)};
    write_png(dir / "rgb.png", {&rgb[0], &rgb[1], &rgb[2]});
    write_png(dir / "capture_000.png", {&s.capture.i0});
    write_png(dir / "capture_045.png", {&s.capture.i45});
    write_png(dir / "capture_090.png", {&s.capture.i90});
    write_png(dir / "capture_135.png", {&s.capture.i135});
    write_png(dir / "dolp.png", {&s.cues.rho_d});
    write_png(dir / "aolp.png", {&s.cues.rho_a});
    write_png(dir / "gt.png", {&s.gt}, 8);
    nlohmann::ordered_json j;
    j["id"] = s.id;
    j["spec"] = nlohmann::ordered_json::parse(scene_spec_json(s.spec));
    std::ofstream out(dir / "scene.json");
    out << j.dump(2) << '\n';
    if (!out) throw DataError("cannot write " + (dir / "scene.json").string());
}

SceneSample read_sample(const fs::path& dir) {
    for (const char* f : kFiles)
        if (!fs::exists(dir / f)) throw DataError((dir / f).string() + " is missing");
    SceneSample s;
    {
        std::ifstream in(dir / "scene.json");
        std::stringstream ss;
        ss << in.rdbuf();
        try {
            const auto j = nlohmann::json::parse(ss.str());
            s.id = j.at("id").get<std::string>();
            s.spec = parse_scene_spec(j.at("spec").dump());
        } catch (const std::exception& e) {
            throw DataError((dir / "scene.json").string() + ": " + e.what());
        }
    }
    auto rgb = read_png(dir / "rgb.png");
    if (rgb.size() != 3) throw DataError((dir / "rgb.png").string() + ": expected an RGB image");
    const int h = rgb[0].height, w = rgb[0].width;
    std::vector<double> values;
    for (const auto& p : rgb) values.insert(values.end(), p.values.begin(), p.values.end());
    s.rgb = Tensor::from({1, 3, h, w}, std::move(values));
    s.capture = PolarCapture::ingest(read_gray(dir / "capture_000.png"), read_gray(dir / "capture_045.png"),
                                     read_gray(dir / "capture_090.png"), read_gray(dir / "capture_135.png"));
    s.cues = {read_gray(dir / "dolp.png"), read_gray(dir / "aolp.png")};
    s.gt = read_gray(dir / "gt.png");
    for (double& v : s.gt.values) v = v >= 0.5 ? 1.0 : 0.0;
    for (const Plane* p : {&s.capture.i0, &s.cues.rho_d, &s.cues.rho_a, &s.gt})
        if (p->height != h || p->width != w) throw DataError(dir.string() + ": rasters differ in size");
    return s;
}

void write_dataset(const fs::path& root, const Dataset& data) {
    for (const auto& s : data.train) write_sample(root / "train" / s.id, s);
    for (const auto& s : data.test) write_sample(root / "test" / s.id, s);
}

std::vector<SceneSample> read_split(const fs::path& dir, const WarningSink& warn) {
    std::vector<SceneSample> out;
    if (!fs::is_directory(dir)) return out;
    std::vector<fs::path> dirs;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.is_directory()) dirs.push_back(e.path());
    std::sort(dirs.begin(), dirs.end());
    for (const auto& d : dirs) {
        std::string missing;
        for (const char* f : kFiles)
            if (!fs::exists(d / f)) missing += std::string(missing.empty() ? "" : ", ") + f;
        if (!missing.empty()) {
            warn("skipping " + d.string() + ": missing " + missing);
            continue;
        }
        out.push_back(read_sample(d));
    }
    return out;
}

Dataset read_dataset(const fs::path& root, const WarningSink& warn) {
    return {read_split(root / "train", warn), read_split(root / "test", warn)};
}

Batch make_batch(const std::vector<SceneSample>& samples, const std::vector<std::size_t>& indices, int size) {
    if (indices.empty()) throw DimensionError("make_batch: empty batch");
    std::vector<double> rgb, dolp, aolp, gt;
    const std::size_t plane = static_cast<std::size_t>(size) * size;
    rgb.reserve(indices.size() * 3 * plane);
    auto append = [&](std::vector<double>& dst, const Tensor& t) {
        Tensor r = t.shape().h == size && t.shape().w == size ? t : ops::resize_bilinear(t, size, size);
        dst.insert(dst.end(), r.data().begin(), r.data().end());
    };
    NoGradGuard ng;
    for (std::size_t i : indices) {
        const SceneSample& s = samples.at(i);
        append(rgb, s.rgb);
        append(dolp, stack_planes({&s.cues.rho_d}));
        append(aolp, stack_planes({&s.cues.rho_a}));
        const std::size_t before = gt.size();
        append(gt, stack_planes({&s.gt}));
        for (std::size_t k = before; k < gt.size(); ++k) gt[k] = gt[k] >= 0.5 ? 1.0 : 0.0;
    }
    const int n = static_cast<int>(indices.size());
    return {{Tensor::from({n, 3, size, size}, std::move(rgb)), Tensor::from({n, 1, size, size}, std::move(dolp)),
             Tensor::from({n, 1, size, size}, std::move(aolp))},
            Tensor::from({n, 1, size, size}, std::move(gt))};
}

Dataset generate_dataset(const GenConfig& gen) {
    gen.scene.validate();
    if (gen.train_count < 0 || gen.test_count < 0) throw ConfigError("sample counts must be non-negative");
    auto split = [&](int count, std::uint64_t offset) {
        std::vector<SceneSample> out(static_cast<std::size_t>(count));
        parallel_for(out.size(), [&](std::size_t k) {
            SceneSpec spec = gen.scene;
            spec.seed = gen.scene.seed + offset + k;
            char id[32];
            std::snprintf(id, sizeof id, "scene_%05zu", k);
            out[k] = generate_scene(spec, id);
        });
        return out;
    };
    return {split(gen.train_count, 0), split(gen.test_count, 1000000)};
}

}  // namespace polarcod
