#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "asnet/coarse_losses.hpp"
#include "asnet/trainer.hpp"

namespace fs = std::filesystem;
using namespace asnet;

namespace {

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// One string option per TrainConfig key; values are converted using the
/// JSON type of the default so that flags and config files share one parser.
struct ConfigFlags {
    std::string preset = "paper";
    std::string config_path;
    std::map<std::string, std::string> values;

    void attach(CLI::App* cmd) {
        cmd->add_option("--preset", preset, "Base defaults before --config and flags")
            ->check(CLI::IsMember({"paper", "toy"}));
        cmd->add_option("--config", config_path, "Flat JSON config file");
        const nlohmann::json keys = to_json(TrainConfig{});
        for (const auto& [key, _] : keys.items()) {
            cmd->add_option("--" + key, values[key], "config key '" + key + "'");
        }
    }

    [[nodiscard]] TrainConfig resolve(const CLI::App* cmd) const {
        TrainConfig cfg = preset == "toy" ? TrainConfig::toy() : TrainConfig{};
        try {
            if (!config_path.empty()) cfg = load_config(config_path, cfg);
            const nlohmann::json defaults = to_json(cfg);
            nlohmann::json overrides = nlohmann::json::object();
            for (const auto& [key, text] : values) {
                if (cmd->count("--" + key) == 0) continue;
                const auto& d = defaults.at(key);
                if (d.is_string()) {
                    overrides[key] = text;
                } else if (d.is_boolean()) {
                    if (text != "true" && text != "false") throw std::invalid_argument("--" + key + " expects true or false");
                    overrides[key] = text == "true";
                } else {
                    nlohmann::json v = nlohmann::json::parse(text, nullptr, false);
                    if (!v.is_number()) throw std::invalid_argument("--" + key + " expects a number, got '" + text + "'");
                    overrides[key] = v;
                }
            }
            cfg = apply_json(cfg, overrides);
            cfg.validate();
        } catch (const std::invalid_argument& e) {
            throw UsageError(e.what());
        }
        return cfg;
    }
};

void echo_config(const TrainConfig& cfg) { std::cerr << "effective config: " << to_json(cfg).dump() << "\n"; }

void setup_logging() {
    auto logger = spdlog::stderr_color_mt("asnet");
    spdlog::set_default_logger(logger);
    spdlog::set_level(spdlog::level::info);
    if (const char* env = std::getenv("ASNET_LOG")) {
        const auto level = spdlog::level::from_str(env);
        if (level == spdlog::level::off && std::string(env) != "off") {
            spdlog::warn("ASNET_LOG='{}' not recognised; using info", env);
        } else {
            spdlog::set_level(level);
        }
    }
}

std::vector<fs::path> list_images(const fs::path& p) {
    if (!fs::is_directory(p)) return {p};
    std::vector<fs::path> out;
    for (const auto& e : fs::directory_iterator(p)) {
        const std::string ext = e.path().extension().string();
        if (ext == ".png" || ext == ".jpg" || ext == ".jpeg") out.push_back(e.path());
    }
    std::sort(out.begin(), out.end());
    return out;
}

// ---- commands ---------------------------------------------------------------

int cmd_synth(const SynthSpec& spec, const fs::path& out, int n_source, int n_target, int n_test) {
    spec.validate();
    synth_dataset(spec, n_source, Domain::source, out / "source" / "train");
    SynthSpec other = spec;
    other.seed = spec.seed + 1;
    synth_dataset(other, n_target, Domain::target, out / "target" / "train");
    other.seed = spec.seed + 2;
    if (n_test > 0) synth_dataset(other, n_test, Domain::target, out / "target" / "test");
    std::cout << nlohmann::json{{"source", n_source}, {"target", n_target}, {"test", n_test}, {"root", out.string()}}.dump()
              << "\n";
    return 0;
}

int cmd_density(const fs::path& in, const fs::path& out, const KernelSpec& kernel, int stride) {
    std::vector<fs::path> files;
    if (fs::is_directory(in)) {
        for (const auto& e : fs::directory_iterator(in))
            if (e.path().extension() == ".json") files.push_back(e.path());
        std::sort(files.begin(), files.end());
    } else {
        files.push_back(in);
    }
    fs::create_directories(out);
    for (const auto& f : files) {
        const PointAnnotation ann = read_annotation(f.string());
        DensityMap d = points_to_density(ann, kernel);
        if (stride > 1) d = downsample_count_preserving(d, stride);
        write_density(out / (f.stem().string() + ".asdm"), d);
        spdlog::debug("{}: {} points, mass {:.6f}", f.stem().string(), ann.points.size(), d.sum());
    }
    std::cout << nlohmann::json{{"converted", files.size()}, {"out", out.string()}}.dump() << "\n";
    return 0;
}

int cmd_train(const TrainConfig& cfg, const fs::path& source, const fs::path& target, const fs::path& out) {
    const Dataset src = Dataset::open(source, "train", true);
    const Dataset tgt = Dataset::open(target, "train", false);
    Dataset test;
    if (fs::exists(target / "test" / "images")) test = Dataset::open(target, "test", true);
    TrainRunOptions opt;
    opt.out_dir = out;
    opt.eval_set = test.empty() ? nullptr : &test;
    const TrainResult r = train(cfg, src, tgt, opt);
    nlohmann::json line = {{"steps", r.steps}, {"checkpoint", (out / "checkpoint").string()}};
    if (r.final_metrics) line["metrics"] = to_json(*r.final_metrics);
    std::cout << line.dump() << "\n";
    return 0;
}

int cmd_eval(const fs::path& checkpoint, const fs::path& data, const std::string& split, const std::string& roi) {
    auto ck = load_checkpoint<float>(checkpoint);
    echo_config(ck.config);
    const Dataset ds = Dataset::open(data, split, true);
    EvalOptions opt = eval_options(ck.config);
    if (!roi.empty()) opt.roi = read_roi(roi);
    std::cout << to_json(evaluate(ck.model.g, ds, opt)).dump() << "\n";
    return 0;
}

Field2D as_field(const BinaryMap& m) {
    Field2D f(m.height, m.width);
    for (std::size_t i = 0; i < m.values.size(); ++i) f.values()[i] = m.values[i];
    return f;
}

int cmd_scores(const fs::path& checkpoint, const fs::path& images, const fs::path& out) {
    auto ck = load_checkpoint<float>(checkpoint);
    echo_config(ck.config);
    const TrainConfig& cfg = ck.config;
    Model<float>& model = ck.model;
    const int multiple = cfg.output_stride() * cfg.s;
    fs::create_directories(out);
    int written = 0;
    for (const fs::path& p : list_images(images)) {
        Image img = read_image(p);
        // Scores are defined on the training geometry, so pad up to it.
        const int h = (img.height + multiple - 1) / multiple * multiple;
        const int w = (img.width + multiple - 1) / multiple * multiple;
        Tensor<float> x(1, 3, h, w);
        for (int c = 0; c < 3; ++c)
            for (int y = 0; y < h; ++y)
                for (int xx = 0; xx < w; ++xx) x(0, c, y, xx) = img.at(c, std::min(y, img.height - 1), std::min(xx, img.width - 1));
        const Tensor<float> pred = model.g.forward(x);
        const LocalViewLayout layout = local_view_layout(pred.h(), pred.w(), cfg.s, model.d2.min_extent());
        const Tensor<float> o1 = model.d1.forward(pred);
        const Tensor<float> o2 = model.d2.forward(local_views(pred, layout));
        const ScoreSet sc = scores_from_outputs(o1, o2, pred.h(), pred.w(), cfg).front();

        const std::string stem = p.stem().string();
        write_gray(out / (stem + "_img.png"), Field2D(pred.h(), pred.w(), static_cast<double>(sc.s_img)));
        Field2D patch(pred.h(), pred.w());
        for (int y = 0; y < pred.h(); ++y)
            for (int xx = 0; xx < pred.w(); ++xx)
                patch.at(y, xx) = sc.s_patch[(y / layout.patch_h) * cfg.s + xx / layout.patch_w];
        write_gray(out / (stem + "_patch.png"), patch);
        write_gray(out / (stem + "_pix.png"), as_field(sc.s_pix));
        write_gray(out / (stem + "_ppx.png"), as_field(sc.s_ppx));
        ++written;
    }
    std::cout << nlohmann::json{{"images", written}, {"out", out.string()}}.dump() << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    setup_logging();
    CLI::App app{"Adversarial scoring network for cross-domain density estimation"};
    app.require_subcommand(1);

    SynthSpec synth;
    fs::path synth_out;
    int n_source = 200, n_target = 200, n_test = 50;
    std::uint64_t synth_seed = synth.seed;
    auto* c_synth = app.add_subcommand("synth", "Write a synthetic two-domain dataset");
    c_synth->add_option("--out", synth_out, "Output root")->required();
    c_synth->add_option("--n-source", n_source, "Labelled source images");
    c_synth->add_option("--n-target", n_target, "Target training images");
    c_synth->add_option("--n-test", n_test, "Labelled target test images");
    c_synth->add_option("--seed", synth_seed, "Base seed");
    c_synth->add_option("--height", synth.height);
    c_synth->add_option("--width", synth.width);
    c_synth->add_option("--min-count", synth.min_count);
    c_synth->add_option("--max-count", synth.max_count);

    fs::path dens_in, dens_out;
    double dens_sigma = 4.0;
    std::string dens_kernel = "fixed";
    int dens_stride = 1;
    auto* c_density = app.add_subcommand("density", "Convert point annotations to density binaries");
    c_density->add_option("--annotations", dens_in, "Annotation file or directory")->required();
    c_density->add_option("--out", dens_out, "Output directory")->required();
    c_density->add_option("--sigma", dens_sigma);
    c_density->add_option("--kernel", dens_kernel)->check(CLI::IsMember({"fixed", "adaptive"}));
    c_density->add_option("--stride", dens_stride, "Block-sum factor");

    ConfigFlags train_flags;
    fs::path src_dir, tgt_dir, train_out;
    auto* c_train = app.add_subcommand("train", "Train a model");
    train_flags.attach(c_train);
    c_train->add_option("--source", src_dir, "Source root (uses <source>/train)")->required();
    c_train->add_option("--target", tgt_dir, "Target root (uses <target>/train, evaluates on <target>/test)")->required();
    c_train->add_option("--out", train_out, "Run directory")->required();

    fs::path ck_dir, eval_data, roi_path;
    std::string eval_split = "test";
    auto* c_eval = app.add_subcommand("eval", "Evaluate a checkpoint");
    c_eval->add_option("--checkpoint", ck_dir)->required();
    c_eval->add_option("--data", eval_data, "Dataset root")->required();
    c_eval->add_option("--split", eval_split);
    c_eval->add_option("--roi", roi_path, "ROI mask image");

    fs::path sc_ck, sc_images, sc_out;
    auto* c_scores = app.add_subcommand("scores", "Write significance score maps");
    c_scores->add_option("--checkpoint", sc_ck)->required();
    c_scores->add_option("--images", sc_images, "Image file or directory")->required();
    c_scores->add_option("--out", sc_out)->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        if (c_synth->parsed()) {
            synth.seed = synth_seed;
            try {
                synth.validate();
            } catch (const std::invalid_argument& e) {
                throw UsageError(e.what());
            }
            return cmd_synth(synth, synth_out, n_source, n_target, n_test);
        }
        if (c_density->parsed()) {
            KernelSpec k;
            k.sigma = dens_sigma;
            k.mode = dens_kernel == "fixed" ? KernelMode::fixed : KernelMode::geometry_adaptive;
            try {
                k.validate();
                if (dens_stride < 1) throw std::invalid_argument("--stride must be >= 1");
            } catch (const std::invalid_argument& e) {
                throw UsageError(e.what());
            }
            return cmd_density(dens_in, dens_out, k, dens_stride);
        }
        if (c_train->parsed()) {
            const TrainConfig cfg = train_flags.resolve(c_train);
            echo_config(cfg);
            return cmd_train(cfg, src_dir, tgt_dir, train_out);
        }
        if (c_eval->parsed()) return cmd_eval(ck_dir, eval_data, eval_split, roi_path.string());
        if (c_scores->parsed()) return cmd_scores(sc_ck, sc_images, sc_out);
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
