#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "asnet/config.hpp"
#include "asnet/data_io.hpp"
#include "asnet/metrics.hpp"
#include "asnet/netspec.hpp"
#include "asnet/objective.hpp"
#include "asnet/optim.hpp"

namespace asnet {

/// Generator plus global (D1) and local (D2) discriminators.
template <typename T>
struct Model {
    Generator<T> g;
    Discriminator<T> d1;
    Discriminator<T> d2;

    explicit Model(const TrainConfig& cfg);
    /// Deterministic initialisation from `seed`.
    void init(InitScheme scheme, std::uint64_t seed);
};

template <typename T>
struct SourceBatch {
    Tensor<T> images;   // (N, 3, H, W)
    Tensor<T> density;  // (N, 1, H/stride, W/stride), scaled by density_scale
};

/// Fraction of entries equal to 1 at each score level over a batch.
struct ScoreStats {
    double img = 0.0;
    double patch = 0.0;
    double pix = 0.0;
    double ppx = 0.0;
};

ScoreStats score_stats(const std::vector<ScoreSet>& scores);

struct StepReport {
    long step = 0;
    LossReport loss;
    std::optional<double> d1_loss;  // absent in noadapt mode
    std::optional<double> d2_loss;
    std::optional<ScoreStats> scores;  // fine mode only
    double g_grad_norm = 0.0;          // before clipping
    double wall_ms = 0.0;
};

nlohmann::json to_json(const StepReport& r);

/// Raised when a loss goes non-finite; the message carries a snapshot of
/// the step, the component, and tensor extrema.
class TrainingDiverged : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class Phase { d1_update, d2_update, g_update };

template <typename T>
using PhaseObserver = std::function<void(Phase, const Model<T>&)>;

/// Significance scores for a source batch from its discriminator outputs.
/// o1: (N,1,h1,w1); o2: (N*S^2,1,h2,w2) in local_views order.
template <typename T>
std::vector<ScoreSet> scores_from_outputs(const Tensor<T>& o1, const Tensor<T>& o2, int density_h,
                                          int density_w, const TrainConfig& cfg);

/// Generator loss L_All and its gradient w.r.t. the predicted density maps.
/// Discriminators are used frozen (their parameter gradients are cleared on
/// return). In fine mode with `scores` null the scores are recomputed from
/// the current discriminators on `pred_source`.
template <typename T>
LossReport generator_objective(Model<T>& model, const Tensor<T>& pred_source, const Tensor<T>& gt,
                               const Tensor<T>* pred_target, const std::vector<ScoreSet>* scores,
                               const TrainConfig& cfg, Tensor<T>* grad_source, Tensor<T>* grad_target);

/// Alternating optimisation of G, D1 and D2.
template <typename T>
class Trainer {
public:
    explicit Trainer(TrainConfig cfg);

    /// One minibatch: update D1 on L_d1, D2 on lambda3 * L_d2, then G on
    /// L_All. Scores come from the discriminator outputs computed before the
    /// discriminator updates. In noadapt mode only the supervised G update runs.
    StepReport train_step(const SourceBatch<T>& source, const Tensor<T>& target_images,
                          const PhaseObserver<T>& observer = {});

    Model<T>& model() { return model_; }
    [[nodiscard]] const Model<T>& model() const { return model_; }
    [[nodiscard]] const TrainConfig& config() const { return cfg_; }
    [[nodiscard]] long step() const { return step_; }

private:
    TrainConfig cfg_;
    Model<T> model_;
    Sgd<T> g_opt_;
    Adam<T> d1_opt_;
    Adam<T> d2_opt_;
    long step_ = 0;
};

// ---- evaluation -------------------------------------------------------------

struct EvalOptions {
    int pad_multiple = 16;  // images are reflect-padded to a multiple of this
    KernelSpec kernel{};
    double density_scale = 1.0;
    std::optional<BinaryMap> roi;  // overrides per-sample ROI when set
};

EvalOptions eval_options(const TrainConfig& cfg);

/// Full-resolution count-preserving density prediction for one image.
template <typename T>
DensityMap predict_density(Generator<T>& g, const Image& image, int pad_multiple, double density_scale);

template <typename T>
MetricsRecord evaluate(Generator<T>& g, const Dataset& dataset, const EvalOptions& opt);

// ---- full training run ----------------------------------------------------

struct TrainResult {
    long steps = 0;
    std::optional<MetricsRecord> final_metrics;
    std::vector<StepReport> history;  // only when keep_history is set
};

struct TrainRunOptions {
    std::optional<std::filesystem::path> out_dir;  // checkpoints + train_log.jsonl
    const Dataset* eval_set = nullptr;              // labelled target split
    bool keep_history = false;
};

TrainResult train(const TrainConfig& cfg, const Dataset& source, const Dataset& target,
                  const TrainRunOptions& opt = {});

// ---- checkpoints ------------------------------------------------------------

/// Writes meta.json, config.json and generator/d1/d2 weight files.
template <typename T>
void save_checkpoint(const std::filesystem::path& dir, const Model<T>& model, const TrainConfig& cfg,
                     long step);

template <typename T>
struct LoadedCheckpoint {
    TrainConfig config;
    Model<T> model;
    long step = 0;
};

template <typename T>
LoadedCheckpoint<T> load_checkpoint(const std::filesystem::path& dir);

void write_weights(const std::filesystem::path& path, const std::vector<double>& values);
std::vector<double> read_weights(const std::filesystem::path& path);

}  // namespace asnet
