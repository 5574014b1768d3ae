#include "polarcod/trainer.hpp"

#include <algorithm>

#include "json.hpp"
#include "polarcod/checkpoint.hpp"
#include "polarcod/error.hpp"
#include "polarcod/loss.hpp"
#include "polarcod/ops.hpp"

namespace polarcod {

namespace {

class PrecisionScope {
   public:
    explicit PrecisionScope(Precision p) : previous_(precision_mode()) { set_precision_mode(p); }
    ~PrecisionScope() { set_precision_mode(previous_); }
    PrecisionScope(const PrecisionScope&) = delete;
    PrecisionScope& operator=(const PrecisionScope&) = delete;

   private:
    Precision previous_;
};

std::vector<double> tensor_values(const Tensor& t) { return {t.data().begin(), t.data().end()}; }

void restore_weights(PolarCodNet& net, const std::vector<Blob>& blobs) {
    for (const auto& p : net.params()) {
        auto v = decode_doubles(find_blob(blobs, "param:" + p.name));
        if (v.size() != p.tensor->numel()) throw DataError("checkpoint parameter '" + p.name + "' has the wrong size");
        std::copy(v.begin(), v.end(), p.tensor->mutable_data().begin());
    }
    for (const auto& b : net.buffers()) {
        auto v = decode_doubles(find_blob(blobs, "buffer:" + b.name));
        if (v.size() != b.values->size()) throw DataError("checkpoint buffer '" + b.name + "' has the wrong size");
        *b.values = std::move(v);
    }
}

RunConfig config_of(const std::vector<Blob>& blobs) {
    return parse_run_config(find_blob(blobs, "config"));
}

}  // namespace

std::string to_json_line(const EpochStats& e) {
    nlohmann::ordered_json j;
    j["epoch"] = e.epoch + 1;
    j["steps"] = e.steps;
    j["lr"] = e.lr;
    j["loss"] = e.loss;
    for (std::size_t t = 0; t < e.terms.size(); ++t) {
        const bool coarse = t + 1 == e.terms.size();
        j[coarse ? std::string("loss_coarse") : "loss_p" + std::to_string(t + 1)] = e.terms[t];
    }
    j["train_mae"] = e.mae;
    return j.dump();
}

Trainer::Trainer(const RunConfig& cfg, const std::vector<SceneSample>& train)
    : cfg_(cfg), train_(&train), rng_(cfg.train.seed ^ 0x5eed5eedULL) {
    cfg_.validate();
    if (train.empty()) throw DataError("training set is empty");
    net_ = std::make_unique<PolarCodNet>(cfg_.model, cfg_.train.seed);
    adam_ = Adam(net_->params(), cfg_.train.beta1, cfg_.train.beta2, cfg_.train.adam_eps);
}

int Trainer::steps_per_epoch() const {
    const auto n = train_->size();
    const auto b = static_cast<std::size_t>(cfg_.train.batch_size);
    return static_cast<int>((n + b - 1) / b);
}

double Trainer::current_lr() const {
    return step_decay_lr(cfg_.train.lr, cfg_.train.lr_decay, cfg_.train.decay_period, epoch_);
}

void Trainer::begin_epoch() {
    order_.resize(train_->size());
    for (std::size_t i = 0; i < order_.size(); ++i) order_[i] = i;
    for (std::size_t i = order_.size(); i > 1; --i) std::swap(order_[i - 1], order_[rng_.below(i)]);
    pos_ = 0;
    in_epoch_ = true;
    acc_ = EpochStats{};
    acc_.epoch = epoch_;
    acc_.lr = current_lr();
}

StepStats Trainer::step() {
    if (finished()) throw ConfigError("training already finished");
    if (!in_epoch_) begin_epoch();
    PrecisionScope precision(cfg_.train.precision);
    const std::size_t end = std::min(order_.size(), pos_ + static_cast<std::size_t>(cfg_.train.batch_size));
    std::vector<std::size_t> idx(order_.begin() + static_cast<std::ptrdiff_t>(pos_),
                                 order_.begin() + static_cast<std::ptrdiff_t>(end));
    Batch batch = make_batch(*train_, idx, cfg_.train.input_size);

    net_->zero_grad();
    ModelOutput out = net_->forward(batch.input, true);
    auto terms = loss_terms(out.preds, out.coarse, batch.gt, cfg_.model.effective_iterations());
    Tensor total = terms.front();
    for (std::size_t t = 1; t < terms.size(); ++t) total = ops::add(total, terms[t]);
    total.backward();
    adam_.step(current_lr());

    StepStats s;
    s.total = total.item();
    for (const auto& t : terms) s.terms.push_back(t.item());
    {
        Tensor prob = ops::sigmoid(out.preds.back().detach());
        double err = 0.0;
        for (std::size_t i = 0; i < prob.numel(); ++i) err += std::abs(prob.data()[i] - batch.gt.data()[i]);
        s.mae = err / static_cast<double>(prob.numel());
    }
    ++step_;
    pos_ = end;
    acc_.steps += 1;
    acc_.loss += s.total;
    acc_.mae += s.mae;
    if (acc_.terms.empty()) acc_.terms.assign(s.terms.size(), 0.0);
    for (std::size_t t = 0; t < s.terms.size(); ++t) acc_.terms[t] += s.terms[t];
    if (pos_ >= order_.size()) {
        in_epoch_ = false;
        ++epoch_;
    }
    return s;
}

EpochStats Trainer::run_epoch() {
    do {
        step();
    } while (in_epoch_);
    EpochStats e = acc_;
    const double n = std::max(e.steps, 1);
    e.loss /= n;
    e.mae /= n;
    for (double& t : e.terms) t /= n;
    return e;
}

void Trainer::save(const std::filesystem::path& path) const {
    std::vector<Blob> blobs;
    blobs.push_back({"config", to_json_text(cfg_)});
    nlohmann::ordered_json meta;
    meta["epoch"] = epoch_;
    meta["global_step"] = step_;
    meta["adam_steps"] = adam_.steps();
    meta["in_epoch"] = in_epoch_;
    meta["position"] = pos_;
    meta["order"] = order_;
    meta["rng"] = rng_.state();
    meta["train_size"] = train_->size();
    blobs.push_back({"meta", meta.dump()});
    blobs.push_back({"epoch_accumulator", encode_doubles([&] {
                         std::vector<double> v{static_cast<double>(acc_.steps), acc_.lr, acc_.loss, acc_.mae};
                         v.insert(v.end(), acc_.terms.begin(), acc_.terms.end());
                         return v;
                     }())});
    const auto& params = adam_.params();
    for (std::size_t k = 0; k < params.size(); ++k) {
        blobs.push_back({"param:" + params[k].name, encode_doubles(tensor_values(*params[k].tensor))});
        blobs.push_back({"adam.m:" + params[k].name, encode_doubles(adam_.first_moments()[k])});
        blobs.push_back({"adam.v:" + params[k].name, encode_doubles(adam_.second_moments()[k])});
    }
    for (const auto& b : net_->buffers()) blobs.push_back({"buffer:" + b.name, encode_doubles(*b.values)});
    write_checkpoint(path, blobs);
}

std::unique_ptr<Trainer> Trainer::resume(const std::filesystem::path& checkpoint,
                                         const std::vector<SceneSample>& train) {
    const auto blobs = read_checkpoint(checkpoint);
    const RunConfig cfg = config_of(blobs);
    auto t = std::make_unique<Trainer>(cfg, train);
    restore_weights(*t->net_, blobs);
    nlohmann::json meta;
    try {
        meta = nlohmann::json::parse(find_blob(blobs, "meta"));
        if (meta.at("train_size").get<std::size_t>() != train.size()) {
            throw DataError("checkpoint was trained on " + std::to_string(meta.at("train_size").get<std::size_t>()) +
                            " samples, dataset has " + std::to_string(train.size()));
        }
        t->epoch_ = meta.at("epoch").get<int>();
        t->step_ = meta.at("global_step").get<long long>();
        t->adam_.set_steps(meta.at("adam_steps").get<long long>());
        t->in_epoch_ = meta.at("in_epoch").get<bool>();
        t->pos_ = meta.at("position").get<std::size_t>();
        t->order_ = meta.at("order").get<std::vector<std::size_t>>();
        t->rng_.set_state(meta.at("rng").get<std::string>());
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("checkpoint metadata is damaged: ") + e.what());
    }
    const auto acc = decode_doubles(find_blob(blobs, "epoch_accumulator"));
    if (acc.size() < 4) throw DataError("checkpoint epoch accumulator is damaged");
    t->acc_.epoch = t->epoch_;
    t->acc_.steps = static_cast<int>(acc[0]);
    t->acc_.lr = acc[1];
    t->acc_.loss = acc[2];
    t->acc_.mae = acc[3];
    t->acc_.terms.assign(acc.begin() + 4, acc.end());
    const auto& params = t->adam_.params();
    for (std::size_t k = 0; k < params.size(); ++k) {
        t->adam_.first_moments()[k] = decode_doubles(find_blob(blobs, "adam.m:" + params[k].name));
        t->adam_.second_moments()[k] = decode_doubles(find_blob(blobs, "adam.v:" + params[k].name));
        if (t->adam_.first_moments()[k].size() != params[k].tensor->numel() ||
            t->adam_.second_moments()[k].size() != params[k].tensor->numel()) {
            throw DataError("checkpoint optimizer state for '" + params[k].name + "' has the wrong size");
        }
    }
    return t;
}

LoadedModel load_model(const std::filesystem::path& checkpoint) {
    const auto blobs = read_checkpoint(checkpoint);
    LoadedModel m;
    m.config = config_of(blobs);
    m.net = std::make_unique<PolarCodNet>(m.config.model, m.config.train.seed);
    restore_weights(*m.net, blobs);
    return m;
}

std::vector<Plane> predict(PolarCodNet& net, const std::vector<SceneSample>& samples, int input_size, int batch_size) {
    NoGradGuard ng;
    std::vector<Plane> out;
    out.reserve(samples.size());
    for (std::size_t start = 0; start < samples.size(); start += static_cast<std::size_t>(batch_size)) {
        std::vector<std::size_t> idx;
        for (std::size_t i = start; i < std::min(samples.size(), start + static_cast<std::size_t>(batch_size)); ++i)
            idx.push_back(i);
        Batch b = make_batch(samples, idx, input_size);
        Tensor prob = ops::sigmoid(net.forward(b.input, false).preds.back());
        for (std::size_t k = 0; k < idx.size(); ++k) {
            const SceneSample& s = samples[idx[k]];
            Plane p = plane_of(prob, static_cast<int>(k), 0);
            if (p.height != s.gt.height || p.width != s.gt.width) {
                Tensor r = ops::resize_bilinear(stack_planes({&p}), s.gt.height, s.gt.width);
                p = plane_of(r, 0, 0);
                for (double& v : p.values) v = std::clamp(v, 0.0, 1.0);
            }
            out.push_back(std::move(p));
        }
    }
    return out;
}

EvalResult evaluate_predictions(const std::vector<Plane>& preds, const std::vector<SceneSample>& samples) {
    if (preds.size() != samples.size()) throw DimensionError("evaluate: prediction count differs from sample count");
    EvalResult r;
    r.per_image.resize(samples.size());
    parallel_for(samples.size(), [&](std::size_t i) { r.per_image[i] = evaluate(preds[i], samples[i].gt); });
    r.mean = mean_report(r.per_image);
    return r;
}

EvalResult evaluate_model(PolarCodNet& net, const std::vector<SceneSample>& samples, int input_size, int batch_size) {
    return evaluate_predictions(predict(net, samples, input_size, batch_size), samples);
}

EvalResult train_and_evaluate(const RunConfig& cfg, const Dataset& data,
                              const std::function<void(const EpochStats&)>& on_epoch) {
    Trainer t(cfg, data.train);
    while (!t.finished()) {
        EpochStats e = t.run_epoch();
        if (on_epoch) on_epoch(e);
    }
    return evaluate_model(t.model(), data.test, cfg.train.input_size, cfg.train.batch_size);
}

}  // namespace polarcod
