#pragma once

#include <filesystem>
#include <memory>
#include <vector>

#include "polarcod/config.hpp"
#include "polarcod/dataset.hpp"
#include "polarcod/metrics.hpp"
#include "polarcod/model.hpp"
#include "polarcod/optim.hpp"
#include "polarcod/parallel.hpp"

namespace polarcod {

struct StepStats {
    double total = 0.0;
    std::vector<double> terms;  // per-iteration structure losses, then the coarse one
    double mae = 0.0;           // of the final prediction against the batch masks
};

struct EpochStats {
    int epoch = 0;  // zero-based
    int steps = 0;
    double lr = 0.0;
    double loss = 0.0;  // mean over steps
    std::vector<double> terms;
    double mae = 0.0;
};

std::string to_json_line(const EpochStats& e);

// Mini-batch Adam training. Sample order is reshuffled at the start of every
// epoch from a seeded generator whose state is part of the checkpoint, so a
// resumed run repeats the uninterrupted one exactly.
class Trainer {
   public:
    // Throws ConfigError for an invalid config and DataError for an empty set.
    Trainer(const RunConfig& cfg, const std::vector<SceneSample>& train);
    static std::unique_ptr<Trainer> resume(const std::filesystem::path& checkpoint,
                                           const std::vector<SceneSample>& train);

    bool finished() const { return epoch_ >= cfg_.train.epochs; }
    // Next batch of the current epoch.
    StepStats step();
    // Runs to the end of the current epoch (or the whole epoch if none started).
    EpochStats run_epoch();
    void save(const std::filesystem::path& path) const;

    int epoch() const { return epoch_; }
    long long global_step() const { return step_; }
    int steps_per_epoch() const;
    double current_lr() const;
    PolarCodNet& model() { return *net_; }
    const RunConfig& config() const { return cfg_; }

   private:
    void begin_epoch();

    RunConfig cfg_;
    const std::vector<SceneSample>* train_;
    std::unique_ptr<PolarCodNet> net_;
    Adam adam_;
    Rng rng_;
    std::vector<std::size_t> order_;
    std::size_t pos_ = 0;
    int epoch_ = 0;
    long long step_ = 0;
    bool in_epoch_ = false;
    EpochStats acc_;
};

struct LoadedModel {
    RunConfig config;
    std::unique_ptr<PolarCodNet> net;
};
// Model weights and running statistics from a checkpoint.
LoadedModel load_model(const std::filesystem::path& checkpoint);

// Probability maps at each sample's own resolution (inference-mode BN).
std::vector<Plane> predict(PolarCodNet& net, const std::vector<SceneSample>& samples, int input_size, int batch_size);

struct EvalResult {
    std::vector<MetricsReport> per_image;  // in sample order
    MetricsReport mean;
};
// Metric computation fans out over worker_count() threads; the mean is
// reduced in sample order.
EvalResult evaluate_predictions(const std::vector<Plane>& preds, const std::vector<SceneSample>& samples);
EvalResult evaluate_model(PolarCodNet& net, const std::vector<SceneSample>& samples, int input_size, int batch_size);

// Trains from scratch on data.train, reporting each epoch, then evaluates on data.test.
EvalResult train_and_evaluate(const RunConfig& cfg, const Dataset& data,
                              const std::function<void(const EpochStats&)>& on_epoch = {});

}  // namespace polarcod
