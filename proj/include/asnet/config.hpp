#pragma once

#include <cstdint>
#include <string>

#include <json.hpp>

#include "asnet/densitygen.hpp"
#include "asnet/fine_scoring.hpp"
#include "asnet/netspec.hpp"

namespace asnet {

enum class Mode { noadapt, coarse, fine };

Mode parse_mode(const std::string& name);
std::string to_string(Mode m);

/// All training hyperparameters. Serialized as a flat JSON object whose keys
/// are the CLI flag names (e.g. "tau-img", "lambda1").
struct TrainConfig {
    double lambda1 = 1e-3;
    double lambda2 = 1e-4;
    double lambda3 = 1e-1;

    double g_lr = 1e-6;  // SGD
    double g_momentum = 0.0;
    double d_lr = 1e-4;  // Adam
    double d_beta1 = 0.9;
    double d_beta2 = 0.999;
    double clip_norm = 0.0;  // 0 disables generator gradient clipping

    int s = 4;
    double tau_img = 0.5;
    double pix_threshold = -1.0;  // < 0: soft threshold at the map mean
    PatchRule patch_rule = PatchRule::fixed;
    bool residual = true;

    int input_size = 512;
    int epochs = 1;
    int batch = 4;
    int max_steps = 0;  // 0: run all epochs
    std::uint64_t seed = 0;
    Backbone backbone = Backbone::vgg16;
    Mode mode = Mode::fine;
    int disc_width = 64;
    InitScheme init = InitScheme::normal;

    double sigma = 4.0;
    KernelMode kernel = KernelMode::fixed;
    bool flip = true;
    double density_scale = 1.0;  // training targets are multiplied by this

    int checkpoint_every = 0;  // steps; 0: final checkpoint only
    int log_every = 1;

    [[nodiscard]] ScoreRules score_rules() const;
    [[nodiscard]] KernelSpec kernel_spec() const;
    [[nodiscard]] int output_stride() const;

    /// Throws std::invalid_argument on inconsistent values.
    void validate() const;

    /// Desk-scale preset: toy backbone, 64 px inputs, narrow discriminators.
    static TrainConfig toy();
};

nlohmann::json to_json(const TrainConfig& c);

/// Applies the keys of a flat JSON object on top of `base`; unknown keys are rejected.
TrainConfig apply_json(TrainConfig base, const nlohmann::json& j);

TrainConfig load_config(const std::string& path, TrainConfig base = {});

/// Stable 64-bit FNV-1a hash of the canonical JSON dump, as 16 hex digits.
std::string config_hash(const TrainConfig& c);

}  // namespace asnet
