#include "polarcod/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "polarcod/error.hpp"

namespace polarcod {

namespace {

using Json = nlohmann::ordered_json;

// Each visit() lists a struct's fields once; Writer and Reader walk that list.
template <class V>
void visit(SceneSpec& s, V&& v) {
    v("height", s.height);
    v("width", s.width);
    v("objects", s.objects);
    v("min_area", s.min_area);
    v("max_area", s.max_area);
    v("texture_waves", s.texture_waves);
    v("texture_low", s.texture_low);
    v("texture_high", s.texture_high);
    v("texture_amplitude", s.texture_amplitude);
    v("rgb_contrast", s.rgb_contrast);
    v("dolp_contrast", s.dolp_contrast);
    v("aolp_contrast", s.aolp_contrast);
    v("noise", s.noise);
    v("seed", s.seed);
}

template <class V>
void visit(Ablation& a, V&& v) {
    v("rgb_only", a.rgb_only);
    v("aolp_only", a.aolp_only);
    v("dolp_only", a.dolp_only);
    v("no_pge", a.no_pge);
    v("pge_no_affine", a.pge_no_affine);
    v("pge_no_enhance", a.pge_no_enhance);
    v("no_efm", a.no_efm);
    v("efm_no_polar", a.efm_no_polar);
    v("no_iter", a.no_iter);
}

template <class V>
void visit(ModelConfig& m, V&& v) {
    v("channels", m.channels);
    v("polar_channels", m.polar_channels);
    v("guidance_channels", m.guidance_channels);
    v("iterations", m.iterations);
    v("feedback_stages", m.feedback_stages);
    v("gate_pool", m.gate_pool);
    v("amp_kernel", m.amp_kernel);
    v("ablation", m.ablation);
}

template <class V>
void visit(TrainConfig& t, V&& v) {
    v("lr", t.lr);
    v("beta1", t.beta1);
    v("beta2", t.beta2);
    v("adam_eps", t.adam_eps);
    v("lr_decay", t.lr_decay);
    v("decay_period", t.decay_period);
    v("epochs", t.epochs);
    v("batch_size", t.batch_size);
    v("input_size", t.input_size);
    v("checkpoint_every", t.checkpoint_every);
    v("seed", t.seed);
    v("precision", t.precision);
}

template <class V>
void visit(GenConfig& g, V&& v) {
    v("scene", g.scene);
    v("train_count", g.train_count);
    v("test_count", g.test_count);
}

template <class V>
void visit(RunConfig& r, V&& v) {
    v("version", r.version);
    v("model", r.model);
    v("train", r.train);
    v("data", r.data);
}

template <class T>
concept Visitable = requires(T& t) { visit(t, [](const char*, auto&) {}); };

struct Writer {
    Json& out;
    template <class T>
    void operator()(const char* key, T& value) {
        if constexpr (Visitable<T>) {
            Json sub = Json::object();
            visit(value, Writer{sub});
            out[key] = std::move(sub);
        } else if constexpr (std::is_same_v<T, GatePool>) {
            out[key] = value == GatePool::global ? "global" : "window3";
        } else if constexpr (std::is_same_v<T, Precision>) {
            out[key] = to_string(value);
        } else {
            out[key] = value;
        }
    }
};

struct Reader {
    const Json& in;
    std::string path;
    template <class T>
    void operator()(const char* key, T& value) {
        const std::string where = path.empty() ? key : path + "." + key;
        if (!in.contains(key)) return;
        const Json& j = in.at(key);
        try {
            if constexpr (Visitable<T>) {
                if (!j.is_object()) throw ConfigError("'" + where + "' must be an object");
                read_object(j, value, where);
            } else if constexpr (std::is_same_v<T, GatePool>) {
                const auto s = j.get<std::string>();
                if (s == "global") {
                    value = GatePool::global;
                } else if (s == "window3") {
                    value = GatePool::window3;
                } else {
                    throw ConfigError("'" + where + "' must be \"global\" or \"window3\"");
                }
            } else if constexpr (std::is_same_v<T, Precision>) {
                value = parse_precision(j.get<std::string>());
            } else if constexpr (std::is_same_v<T, bool>) {
                if (!j.is_boolean()) throw ConfigError("'" + where + "' must be true or false");
                value = j.get<bool>();
            } else if constexpr (std::is_integral_v<T>) {
                if (!j.is_number_integer()) throw ConfigError("'" + where + "' must be an integer");
                value = j.get<T>();
            } else if constexpr (std::is_floating_point_v<T>) {
                if (!j.is_number()) throw ConfigError("'" + where + "' must be a number");
                value = j.get<T>();
            } else {
                value = j.get<T>();
            }
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError("'" + where + "': " + e.what());
        }
    }

    template <class T>
    static void read_object(const Json& j, T& value, const std::string& where) {
        std::set<std::string> known;
        visit(value, [&](const char* k, auto&) { known.insert(k); });
        for (const auto& [k, unused] : j.items()) {
            if (!known.count(k)) throw ConfigError("unknown config field '" + (where.empty() ? k : where + "." + k) + "'");
        }
        visit(value, Reader{j, where});
    }
};

Json parse_json(const std::string& text) {
    try {
        return Json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(std::string("malformed JSON: ") + e.what());
    }
}

}  // namespace

void RunConfig::validate() const {
    if (version != kConfigVersion) {
        throw ConfigError("config version " + std::to_string(version) + " is not supported; this build reads version " +
                          std::to_string(kConfigVersion));
    }
    model.validate();
    data.scene.validate();
    if (!(train.lr > 0)) throw ConfigError("lr must be positive");
    if (!(train.beta1 >= 0 && train.beta1 < 1 && train.beta2 >= 0 && train.beta2 < 1)) {
        throw ConfigError("Adam betas must lie in [0, 1)");
    }
    if (!(train.adam_eps > 0)) throw ConfigError("adam_eps must be positive");
    if (!(train.lr_decay > 0 && train.lr_decay <= 1)) throw ConfigError("lr_decay must lie in (0, 1]");
    if (train.decay_period < 1) throw ConfigError("decay_period must be at least 1 epoch");
    if (train.epochs < 0) throw ConfigError("epochs must be non-negative");
    if (train.batch_size < 1) throw ConfigError("batch_size must be at least 1");
    if (train.input_size < 32 || train.input_size % 32 != 0) {
        throw ConfigError("input_size must be a positive multiple of 32, got " + std::to_string(train.input_size));
    }
    if (train.checkpoint_every < 1) throw ConfigError("checkpoint_every must be at least 1");
    if (data.train_count < 0 || data.test_count < 0) throw ConfigError("sample counts must be non-negative");
}

RunConfig full_scale_profile() {
    RunConfig cfg;
    cfg.train.lr = 1e-4;
    cfg.train.batch_size = 4;
    cfg.train.input_size = 704;
    cfg.train.lr_decay = 0.1;
    cfg.train.decay_period = 50;
    cfg.data.scene.height = 704;
    cfg.data.scene.width = 704;
    return cfg;
}

std::string to_json_text(const RunConfig& cfg) {
    Json j = Json::object();
    RunConfig copy = cfg;
    visit(copy, Writer{j});
    return j.dump(2);
}

RunConfig parse_run_config(const std::string& text) {
    const Json j = parse_json(text);
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    RunConfig cfg;
    Reader::read_object(j, cfg, "");
    cfg.validate();
    return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_run_config(ss.str());
}

std::string scene_spec_json(const SceneSpec& spec) {
    Json j = Json::object();
    SceneSpec copy = spec;
    visit(copy, Writer{j});
    return j.dump(2);
}

SceneSpec parse_scene_spec(const std::string& text) {
    const Json j = parse_json(text);
    if (!j.is_object()) throw ConfigError("scene spec must be a JSON object");
    SceneSpec spec;
    Reader::read_object(j, spec, "");
    return spec;
}

}  // namespace polarcod
