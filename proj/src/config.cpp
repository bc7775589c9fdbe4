#include "asnet/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace asnet {

Mode parse_mode(const std::string& name) {
    if (name == "noadapt") return Mode::noadapt;
    if (name == "coarse") return Mode::coarse;
    if (name == "fine") return Mode::fine;
    throw std::invalid_argument("unknown mode '" + name + "' (expected noadapt, coarse or fine)");
}

std::string to_string(Mode m) {
    switch (m) {
        case Mode::noadapt: return "noadapt";
        case Mode::coarse: return "coarse";
        case Mode::fine: return "fine";
    }
    return "fine";
}

namespace {

std::string to_string(InitScheme s) { return s == InitScheme::kaiming ? "kaiming" : "normal"; }

InitScheme parse_init(const std::string& name) {
    if (name == "normal") return InitScheme::normal;
    if (name == "kaiming") return InitScheme::kaiming;
    throw std::invalid_argument("unknown init '" + name + "' (expected normal or kaiming)");
}

std::string to_string(KernelMode k) { return k == KernelMode::fixed ? "fixed" : "adaptive"; }

KernelMode parse_kernel(const std::string& name) {
    if (name == "fixed") return KernelMode::fixed;
    if (name == "adaptive") return KernelMode::geometry_adaptive;
    throw std::invalid_argument("unknown kernel '" + name + "' (expected fixed or adaptive)");
}

}  // namespace

ScoreRules TrainConfig::score_rules() const {
    ScoreRules r;
    r.tau_img = tau_img;
    if (pix_threshold >= 0.0) r.pixel_hard_threshold = pix_threshold;
    r.patch_rule = patch_rule;
    return r;
}

KernelSpec TrainConfig::kernel_spec() const {
    KernelSpec k;
    k.mode = kernel;
    k.sigma = sigma;
    return k;
}

int TrainConfig::output_stride() const { return asnet::output_stride(generator_layers(backbone)); }

void TrainConfig::validate() const {
    const auto require = [](bool ok, const std::string& what) {
        if (!ok) throw std::invalid_argument("config: " + what);
    };
    require(lambda1 >= 0 && lambda2 >= 0 && lambda3 >= 0, "lambda values must be >= 0");
    require(std::isfinite(lambda1) && std::isfinite(lambda2) && std::isfinite(lambda3), "lambda values must be finite");
    require(g_lr >= 0 && d_lr >= 0, "learning rates must be >= 0");
    require(g_momentum >= 0 && g_momentum < 1, "g-momentum must be in [0, 1)");
    require(d_beta1 >= 0 && d_beta1 < 1 && d_beta2 >= 0 && d_beta2 < 1, "Adam betas must be in [0, 1)");
    require(clip_norm >= 0, "clip-norm must be >= 0");
    require(s >= 1, "s must be >= 1");
    require(tau_img > 0 && tau_img < 1, "tau-img must be in (0, 1)");
    require(epochs >= 0, "epochs must be >= 0");
    require(batch >= 1, "batch must be >= 1");
    require(max_steps >= 0, "max-steps must be >= 0");
    require(disc_width >= 1, "disc-width must be >= 1");
    require(sigma > 0, "sigma must be > 0");
    require(density_scale > 0, "density-scale must be > 0");
    require(checkpoint_every >= 0 && log_every >= 1, "checkpoint-every must be >= 0 and log-every >= 1");
    const int stride = output_stride();
    require(input_size >= 1 && input_size % (stride * s) == 0,
            "input-size " + std::to_string(input_size) + " must be divisible by output stride * s = " +
                std::to_string(stride * s));
}

TrainConfig TrainConfig::toy() {
    TrainConfig c;
    c.backbone = Backbone::toy;
    c.input_size = 64;
    c.batch = 16;
    c.disc_width = 8;
    c.g_lr = 1.5e-5;
    c.init = InitScheme::kaiming;
    return c;
}

nlohmann::json to_json(const TrainConfig& c) {
    return {
        {"lambda1", c.lambda1},
        {"lambda2", c.lambda2},
        {"lambda3", c.lambda3},
        {"g-lr", c.g_lr},
        {"g-momentum", c.g_momentum},
        {"d-lr", c.d_lr},
        {"d-beta1", c.d_beta1},
        {"d-beta2", c.d_beta2},
        {"clip-norm", c.clip_norm},
        {"s", c.s},
        {"tau-img", c.tau_img},
        {"pix-threshold", c.pix_threshold},
        {"patch-rule", to_string(c.patch_rule)},
        {"residual", c.residual},
        {"input-size", c.input_size},
        {"epochs", c.epochs},
        {"batch", c.batch},
        {"max-steps", c.max_steps},
        {"seed", c.seed},
        {"backbone", to_string(c.backbone)},
        {"mode", to_string(c.mode)},
        {"disc-width", c.disc_width},
        {"init", to_string(c.init)},
        {"sigma", c.sigma},
        {"kernel", to_string(c.kernel)},
        {"flip", c.flip},
        {"density-scale", c.density_scale},
        {"checkpoint-every", c.checkpoint_every},
        {"log-every", c.log_every},
    };
}

TrainConfig apply_json(TrainConfig c, const nlohmann::json& j) {
    if (!j.is_object()) throw std::invalid_argument("config: expected a flat JSON object");
    for (const auto& [key, v] : j.items()) {
        try {
            if (key == "lambda1") c.lambda1 = v.get<double>();
            else if (key == "lambda2") c.lambda2 = v.get<double>();
            else if (key == "lambda3") c.lambda3 = v.get<double>();
            else if (key == "g-lr") c.g_lr = v.get<double>();
            else if (key == "g-momentum") c.g_momentum = v.get<double>();
            else if (key == "d-lr") c.d_lr = v.get<double>();
            else if (key == "d-beta1") c.d_beta1 = v.get<double>();
            else if (key == "d-beta2") c.d_beta2 = v.get<double>();
            else if (key == "clip-norm") c.clip_norm = v.get<double>();
            else if (key == "s") c.s = v.get<int>();
            else if (key == "tau-img") c.tau_img = v.get<double>();
            else if (key == "pix-threshold") c.pix_threshold = v.get<double>();
            else if (key == "patch-rule") c.patch_rule = parse_patch_rule(v.get<std::string>());
            else if (key == "residual") c.residual = v.get<bool>();
            else if (key == "input-size") c.input_size = v.get<int>();
            else if (key == "epochs") c.epochs = v.get<int>();
            else if (key == "batch") c.batch = v.get<int>();
            else if (key == "max-steps") c.max_steps = v.get<int>();
            else if (key == "seed") c.seed = v.get<std::uint64_t>();
            else if (key == "backbone") c.backbone = parse_backbone(v.get<std::string>());
            else if (key == "mode") c.mode = parse_mode(v.get<std::string>());
            else if (key == "disc-width") c.disc_width = v.get<int>();
            else if (key == "init") c.init = parse_init(v.get<std::string>());
            else if (key == "sigma") c.sigma = v.get<double>();
            else if (key == "kernel") c.kernel = parse_kernel(v.get<std::string>());
            else if (key == "flip") c.flip = v.get<bool>();
            else if (key == "density-scale") c.density_scale = v.get<double>();
            else if (key == "checkpoint-every") c.checkpoint_every = v.get<int>();
            else if (key == "log-every") c.log_every = v.get<int>();
            else throw std::invalid_argument("config: unknown key '" + key + "'");
        } catch (const nlohmann::json::exception& e) {
            throw std::invalid_argument("config: bad value for '" + key + "': " + e.what());
        }
    }
    return c;
}

TrainConfig load_config(const std::string& path, TrainConfig base) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config " + path);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument("config " + path + ": " + e.what());
    }
    return apply_json(std::move(base), j);
}

std::string config_hash(const TrainConfig& c) {
    const std::string s = to_json(c).dump();
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char ch : s) {
        h ^= ch;
        h *= 1099511628211ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace asnet
