#include "asnet/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include <spdlog/spdlog.h>

#include "asnet/coarse_losses.hpp"

namespace fs = std::filesystem;

namespace asnet {

template <typename T>
Model<T>::Model(const TrainConfig& cfg) : g(cfg.backbone), d1(cfg.disc_width), d2(cfg.disc_width) {}

template <typename T>
void Model<T>::init(InitScheme scheme, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    g.net().init(scheme, rng);
    // Discriminators always start from the small-normal scheme; kaiming is a
    // generator-only option for shallow backbones.
    d1.net().init(InitScheme::normal, rng);
    d2.net().init(InitScheme::normal, rng);
}

ScoreStats score_stats(const std::vector<ScoreSet>& scores) {
    ScoreStats st;
    if (scores.empty()) return st;
    double patches = 0.0;
    double pixels = 0.0;
    for (const ScoreSet& s : scores) {
        st.img += s.s_img;
        for (auto v : s.s_patch) st.patch += v;
        for (auto v : s.s_pix.values) st.pix += v;
        for (auto v : s.s_ppx.values) st.ppx += v;
        patches += static_cast<double>(s.s_patch.size());
        pixels += static_cast<double>(s.s_pix.values.size());
    }
    st.img /= static_cast<double>(scores.size());
    st.patch /= patches;
    st.pix /= pixels;
    st.ppx /= pixels;
    return st;
}

nlohmann::json to_json(const StepReport& r) {
    nlohmann::json j = {{"step", r.step}};
    j.update(to_json(r.loss));
    j["d1_loss"] = r.d1_loss ? nlohmann::json(*r.d1_loss) : nlohmann::json(nullptr);
    j["d2_loss"] = r.d2_loss ? nlohmann::json(*r.d2_loss) : nlohmann::json(nullptr);
    if (r.scores) {
        j["score_img"] = r.scores->img;
        j["score_patch"] = r.scores->patch;
        j["score_pix"] = r.scores->pix;
        j["score_ppx"] = r.scores->ppx;
    }
    j["g_grad_norm"] = r.g_grad_norm;
    j["wall_ms"] = r.wall_ms;
    return j;
}

namespace {

template <typename T>
std::string extrema(const Tensor<T>& t) {
    if (t.empty()) return "[]";
    T lo = std::numeric_limits<T>::infinity();
    T hi = -std::numeric_limits<T>::infinity();
    std::size_t bad = 0;
    for (T v : t.span()) {
        if (!std::isfinite(v)) {
            ++bad;
            continue;
        }
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    std::ostringstream os;
    os << "[" << lo << ", " << hi << "]";
    if (bad) os << " (" << bad << " non-finite)";
    return os.str();
}

template <typename T>
Tensor<T> scaled(Tensor<T> t, double factor) {
    const T f = static_cast<T>(factor);
    for (T& v : t.span()) v *= f;
    return t;
}

template <typename T>
void add_into(Tensor<T>& dst, const Tensor<T>& src, double factor) {
    const T f = static_cast<T>(factor);
    for (std::size_t i = 0; i < dst.size(); ++i) dst.data()[i] += f * src.data()[i];
}

}  // namespace

template <typename T>
std::vector<ScoreSet> scores_from_outputs(const Tensor<T>& o1, const Tensor<T>& o2, int density_h,
                                          int density_w, const TrainConfig& cfg) {
    const int patches = cfg.s * cfg.s;
    if (o2.n() != o1.n() * patches) {
        throw std::invalid_argument("scores_from_outputs: local outputs do not match S^2 per image");
    }
    const auto global = to_fields(o1);
    const auto local = to_fields(o2);
    const ScoreRules rules = cfg.score_rules();
    std::vector<ScoreSet> out;
    out.reserve(global.size());
    for (std::size_t i = 0; i < global.size(); ++i) {
        std::vector<DiscriminationMap> mine(local.begin() + i * patches, local.begin() + (i + 1) * patches);
        out.push_back(compute_scores(global[i], mine, density_h, density_w, cfg.s, rules));
    }
    return out;
}

template <typename T>
LossReport generator_objective(Model<T>& model, const Tensor<T>& pred_source, const Tensor<T>& gt,
                               const Tensor<T>* pred_target, const std::vector<ScoreSet>* scores,
                               const TrainConfig& cfg, Tensor<T>* grad_source, Tensor<T>* grad_target) {
    LossReport r;
    const int nb = pred_source.n();
    r.l_den = density_loss(pred_source, gt);

    std::vector<ScoreSet> recomputed;
    const bool fine = cfg.mode == Mode::fine;
    const LocalViewLayout layout =
        local_view_layout(pred_source.h(), pred_source.w(), cfg.s, model.d2.min_extent());
    if (fine && scores == nullptr) {
        const Tensor<T> o1 = model.d1.forward(pred_source);
        const Tensor<T> o2 = model.d2.forward(local_views(pred_source, layout));
        recomputed = scores_from_outputs(o1, o2, pred_source.h(), pred_source.w(), cfg);
        scores = &recomputed;
    }
    if (fine) {
        r.l_dens = weighted_density_loss(pred_source, gt, *scores, cfg.s, cfg.residual);
        if (grad_source) *grad_source = weighted_density_loss_grad(pred_source, gt, *scores, cfg.s, cfg.residual);
    } else {
        r.l_dens = r.l_den;
        if (grad_source) *grad_source = density_loss_grad(pred_source, gt);
    }

    if (cfg.mode != Mode::noadapt) {
        if (pred_target == nullptr) throw std::invalid_argument("generator_objective: adaptation needs a target batch");
        // N_b is the source batch size; train_step keeps both batches equal.
        const auto adv1 = adversarial_loss_grad(model.d1.forward(*pred_target), nb);
        r.l_adv1 = adv1.value;
        Tensor<T> g_t = model.d1.backward_input(scaled(adv1.grad, cfg.lambda1));

        const auto adv2 = adversarial_loss_grad(model.d2.forward(local_views(*pred_target, layout)), nb);
        r.l_adv2 = adv2.value;
        const Tensor<T> g_views = model.d2.backward_input(scaled(adv2.grad, cfg.lambda2));
        add_into(g_t, local_views_backward(g_views, layout), 1.0);
        model.d1.net().zero_grad();
        model.d2.net().zero_grad();
        if (grad_target) *grad_target = std::move(g_t);
    }
    r.l_total = total_generator_loss(r.l_dens, r.l_adv1, r.l_adv2,
                                     cfg.mode == Mode::noadapt ? 0.0 : cfg.lambda1,
                                     cfg.mode == Mode::noadapt ? 0.0 : cfg.lambda2);
    return r;
}

template <typename T>
Trainer<T>::Trainer(TrainConfig cfg)
    : cfg_(std::move(cfg)), model_(cfg_), g_opt_(cfg_.g_lr, cfg_.g_momentum),
      d1_opt_(cfg_.d_lr, cfg_.d_beta1, cfg_.d_beta2), d2_opt_(cfg_.d_lr, cfg_.d_beta1, cfg_.d_beta2) {
    cfg_.validate();
    model_.init(cfg_.init, cfg_.seed);
}

template <typename T>
StepReport Trainer<T>::train_step(const SourceBatch<T>& source, const Tensor<T>& target_images,
                                  const PhaseObserver<T>& observer) {
    const auto t0 = std::chrono::steady_clock::now();
    StepReport rep;
    rep.step = step_;
    const int ns = source.images.n();
    if (ns < 1) throw std::invalid_argument("train_step: empty source batch");
    const bool adapt = cfg_.mode != Mode::noadapt;
    if (adapt && target_images.n() != ns) {
        throw std::invalid_argument("train_step: source and target batches must have equal size");
    }

    const auto diverged = [&](const std::string& component, const std::string& detail) {
        std::ostringstream os;
        os << "training diverged at step " << step_ << ": " << component << " is non-finite; " << detail;
        return TrainingDiverged(os.str());
    };

    Generator<T>& g = model_.g;
    if (!adapt) {
        const Tensor<T> pred = g.forward(source.images);
        Tensor<T> grad;
        try {
            rep.loss = generator_objective<T>(model_, pred, source.density, nullptr, nullptr, cfg_, &grad, nullptr);
        } catch (const NonFiniteLoss& e) {
            throw diverged(e.component(), "prediction range " + extrema(pred));
        }
        g.net().zero_grad();
        g.backward(grad);
        rep.g_grad_norm = clip_grad_norm(g.net(), cfg_.clip_norm);
        g_opt_.step(g.net());
        if (observer) observer(Phase::g_update, model_);
    } else {
        // (1) density maps for both domains; G is not updated until (4).
        const Tensor<T> pred = g.forward(concat_batch(source.images, target_images));
        const Tensor<T> pred_s = slice_batch(pred, 0, ns);
        const Tensor<T> pred_t = slice_batch(pred, ns, ns);
        const bool fine = cfg_.mode == Mode::fine;
        for (T v : pred.span()) {
            if (!std::isfinite(v)) throw diverged("density prediction", "range " + extrema(pred));
        }

        // (2) global discriminator.
        const Tensor<T> o1 = model_.d1.forward(pred);
        const Tensor<T> o1_s = slice_batch(o1, 0, ns);
        const auto d1 = discriminator_loss_grad(o1_s, slice_batch(o1, ns, ns), ns);
        if (!std::isfinite(d1.value)) throw diverged("d1_loss", "global map range " + extrema(o1));
        rep.d1_loss = d1.value;
        model_.d1.net().zero_grad();
        model_.d1.backward_params(concat_batch(d1.grad_source, d1.grad_target));
        d1_opt_.step(model_.d1.net());
        model_.d1.net().zero_grad();
        if (observer) observer(Phase::d1_update, model_);

        // (3) local discriminator on S^2 patches per map.
        const LocalViewLayout layout = local_view_layout(pred.h(), pred.w(), cfg_.s, model_.d2.min_extent());
        const Tensor<T> o2 = model_.d2.forward(local_views(pred, layout));
        const int np = ns * layout.patches();
        const Tensor<T> o2_s = slice_batch(o2, 0, np);
        const auto d2 = discriminator_loss_grad(o2_s, slice_batch(o2, np, np), ns);
        if (!std::isfinite(d2.value)) throw diverged("d2_loss", "local map range " + extrema(o2));
        rep.d2_loss = d2.value;
        model_.d2.net().zero_grad();
        model_.d2.backward_params(scaled(concat_batch(d2.grad_source, d2.grad_target), cfg_.lambda3));
        d2_opt_.step(model_.d2.net());
        model_.d2.net().zero_grad();
        if (observer) observer(Phase::d2_update, model_);

        // Scores from the pre-update discriminator outputs of (2) and (3).
        std::vector<ScoreSet> scores;
        if (fine) {
            scores = scores_from_outputs(o1_s, o2_s, pred.h(), pred.w(), cfg_);
            rep.scores = score_stats(scores);
        }

        // (4) generator against the frozen discriminators.
        Tensor<T> grad_s;
        Tensor<T> grad_t;
        try {
            rep.loss = generator_objective<T>(model_, pred_s, source.density, &pred_t, fine ? &scores : nullptr,
                                           cfg_, &grad_s, &grad_t);
        } catch (const NonFiniteLoss& e) {
            throw diverged(e.component(), "source prediction range " + extrema(pred_s) +
                                              ", target prediction range " + extrema(pred_t));
        }
        g.net().zero_grad();
        g.backward(concat_batch(grad_s, grad_t));
        rep.g_grad_norm = clip_grad_norm(g.net(), cfg_.clip_norm);
        g_opt_.step(g.net());
        if (observer) observer(Phase::g_update, model_);
    }
    ++step_;
    rep.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    return rep;
}

// ---- evaluation -------------------------------------------------------------

EvalOptions eval_options(const TrainConfig& cfg) {
    EvalOptions o;
    o.pad_multiple = cfg.output_stride() * cfg.s;
    o.kernel = cfg.kernel_spec();
    o.density_scale = cfg.density_scale;
    return o;
}

namespace {

int reflect_index(int i, int n) {
    if (n == 1) return 0;
    const int period = 2 * (n - 1);
    i %= period;
    if (i < 0) i += period;
    return i < n ? i : period - i;
}

}  // namespace

template <typename T>
DensityMap predict_density(Generator<T>& g, const Image& image, int pad_multiple, double density_scale) {
    const int stride = g.stride();
    const int m = std::lcm(std::max(1, pad_multiple), stride);
    const int ph = (image.height + m - 1) / m * m;
    const int pw = (image.width + m - 1) / m * m;
    Tensor<T> x(1, 3, ph, pw);
    for (int c = 0; c < 3; ++c)
        for (int y = 0; y < ph; ++y)
            for (int xx = 0; xx < pw; ++xx)
                x(0, c, y, xx) = static_cast<T>(
                    image.at(c, reflect_index(y, image.height), reflect_index(xx, image.width)));
    const Tensor<T> pred = g.forward(x);
    DensityMap low(pred.h(), pred.w());
    for (int y = 0; y < pred.h(); ++y)
        for (int xx = 0; xx < pred.w(); ++xx) low.at(y, xx) = static_cast<double>(pred(0, 0, y, xx)) / density_scale;
    const DensityMap full = upsample_count_preserving(low, stride);
    if (full.height() == image.height && full.width() == image.width) return full;
    DensityMap cropped(image.height, image.width);
    for (int y = 0; y < image.height; ++y)
        for (int xx = 0; xx < image.width; ++xx) cropped.at(y, xx) = full.at(y, xx);
    return cropped;
}

template <typename T>
MetricsRecord evaluate(Generator<T>& g, const Dataset& dataset, const EvalOptions& opt) {
    if (dataset.empty()) throw std::invalid_argument("evaluate: empty dataset");
    MetricsAccumulator acc;
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        const Sample s = dataset.get(i);
        if (!s.annotation) throw std::invalid_argument("evaluate: sample '" + s.stem + "' has no annotation");
        DensityMap pred = predict_density(g, s.image, opt.pad_multiple, opt.density_scale);
        DensityMap gt = points_to_density(*s.annotation, opt.kernel);
        const std::optional<BinaryMap>& roi = opt.roi ? opt.roi : s.roi;
        if (roi) {
            pred = apply_roi(pred, *roi);
            gt = apply_roi(gt, *roi);
        }
        acc.add(pred, gt);
    }
    return acc.finish();
}

// ---- full training run ----------------------------------------------------

namespace {

/// Reshuffling index stream over a dataset.
class IndexStream {
public:
    IndexStream(std::size_t n, std::uint64_t seed) : order_(n), rng_(seed) {
        std::iota(order_.begin(), order_.end(), 0);
        reshuffle();
    }
    void reshuffle() {
        std::shuffle(order_.begin(), order_.end(), rng_);
        pos_ = 0;
    }
    [[nodiscard]] bool has(std::size_t k) const { return pos_ + k <= order_.size(); }
    std::size_t next() {
        if (pos_ >= order_.size()) reshuffle();
        return order_[pos_++];
    }

private:
    std::vector<std::size_t> order_;
    std::size_t pos_ = 0;
    std::mt19937_64 rng_;
};

}  // namespace

TrainResult train(const TrainConfig& cfg, const Dataset& source, const Dataset& target,
                  const TrainRunOptions& opt) {
    cfg.validate();
    const bool adapt = cfg.mode != Mode::noadapt;
    if (source.empty()) throw std::invalid_argument("train: source dataset is empty");
    if (adapt && target.empty()) throw std::invalid_argument("train: target dataset is empty");
    if (source.size() < static_cast<std::size_t>(cfg.batch)) {
        throw std::invalid_argument("train: source dataset smaller than one batch");
    }
    {
        const Sample probe = source.get(0);
        if (!probe.annotation) throw std::invalid_argument("train: source sample '" + probe.stem + "' is unlabelled");
    }

    Trainer<float> trainer(cfg);
    PreprocessOptions pre;
    pre.input_size = cfg.input_size;
    pre.stride = cfg.output_stride();
    pre.kernel = cfg.kernel_spec();
    pre.random_flip = cfg.flip;

    std::ofstream log;
    if (opt.out_dir) {
        fs::create_directories(*opt.out_dir);
        log.open(*opt.out_dir / "train_log.jsonl");
        if (!log) throw std::runtime_error("cannot write training log in " + opt.out_dir->string());
    }

    std::mt19937_64 aug_rng(cfg.seed ^ 0x5eed0a06ULL);
    IndexStream src_stream(source.size(), cfg.seed ^ 0x50757263ULL);
    IndexStream tgt_stream(adapt ? target.size() : 1, cfg.seed ^ 0x74677430ULL);
    const int stride = pre.stride;
    const int dh = cfg.input_size / stride;
    const std::size_t batches_per_epoch = source.size() / cfg.batch;

    TrainResult result;
    bool done = cfg.max_steps > 0 && trainer.step() >= cfg.max_steps;
    for (int epoch = 0; epoch < cfg.epochs && !done; ++epoch) {
        src_stream.reshuffle();
        for (std::size_t b = 0; b < batches_per_epoch && !done; ++b) {
            SourceBatch<float> sb{Tensor<float>(cfg.batch, 3, cfg.input_size, cfg.input_size),
                                  Tensor<float>(cfg.batch, 1, dh, dh)};
            Tensor<float> tb(adapt ? cfg.batch : 0, 3, cfg.input_size, cfg.input_size);
            for (int i = 0; i < cfg.batch; ++i) {
                const TrainingPair p = preprocess(source.get(src_stream.next()), pre, &aug_rng);
                std::copy(p.image.data(), p.image.data() + p.image.size(), sb.images.sample(i).begin());
                auto dst = sb.density.sample(i);
                for (std::size_t k = 0; k < dst.size(); ++k)
                    dst[k] = static_cast<float>(p.target.values()[k] * cfg.density_scale);
            }
            if (adapt) {
                for (int i = 0; i < cfg.batch; ++i) {
                    Image img = resize_image(target.get(tgt_stream.next()).image, cfg.input_size, cfg.input_size);
                    if (cfg.flip && std::bernoulli_distribution(0.5)(aug_rng)) img = flip_horizontal(img);
                    std::copy(img.data.begin(), img.data.end(), tb.sample(i).begin());
                }
            }
            StepReport rep = trainer.train_step(sb, tb);
            if (log && rep.step % cfg.log_every == 0) log << to_json(rep).dump() << '\n';
            if (rep.step % 100 == 0) {
                spdlog::info("step {} epoch {} l_total {:.6g} l_den {:.6g}", rep.step, epoch, rep.loss.l_total,
                             rep.loss.l_den);
            }
            spdlog::debug("{}", to_json(rep).dump());
            if (opt.keep_history) result.history.push_back(rep);
            if (opt.out_dir && cfg.checkpoint_every > 0 && trainer.step() % cfg.checkpoint_every == 0) {
                save_checkpoint(*opt.out_dir / ("step_" + std::to_string(trainer.step())), trainer.model(), cfg,
                                trainer.step());
            }
            done = cfg.max_steps > 0 && trainer.step() >= cfg.max_steps;
        }
    }
    result.steps = trainer.step();
    if (opt.out_dir) save_checkpoint(*opt.out_dir / "checkpoint", trainer.model(), cfg, trainer.step());
    if (opt.eval_set != nullptr && !opt.eval_set->empty()) {
        result.final_metrics = evaluate(trainer.model().g, *opt.eval_set, eval_options(cfg));
        if (log) log << nlohmann::json{{"final_eval", to_json(*result.final_metrics)}}.dump() << '\n';
    }
    return result;
}

// ---- checkpoints ------------------------------------------------------------

namespace {

constexpr char kWeightsMagic[4] = {'A', 'S', 'N', 'W'};

}  // namespace

void write_weights(const fs::path& path, const std::vector<double>& values) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out.write(kWeightsMagic, 4);
    const std::uint64_t n = values.size();
    out.write(reinterpret_cast<const char*>(&n), sizeof n);
    out.write(reinterpret_cast<const char*>(values.data()), static_cast<std::streamsize>(n * sizeof(double)));
}

std::vector<double> read_weights(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    char magic[4];
    std::uint64_t n = 0;
    in.read(magic, 4);
    in.read(reinterpret_cast<char*>(&n), sizeof n);
    if (!in || std::memcmp(magic, kWeightsMagic, 4) != 0) throw std::runtime_error("bad weights file " + path.string());
    std::vector<double> values(n);
    in.read(reinterpret_cast<char*>(values.data()), static_cast<std::streamsize>(n * sizeof(double)));
    if (!in) throw std::runtime_error("truncated weights file " + path.string());
    return values;
}

namespace {

template <typename T>
std::vector<double> widen(const std::vector<T>& v) {
    return std::vector<double>(v.begin(), v.end());
}

template <typename T>
void load_into(Network<T>& net, const fs::path& path) {
    const std::vector<double> w = read_weights(path);
    const std::vector<T> narrowed(w.begin(), w.end());
    net.set_flat_params(narrowed);
}

}  // namespace

template <typename T>
void save_checkpoint(const fs::path& dir, const Model<T>& model, const TrainConfig& cfg, long step) {
    fs::create_directories(dir);
    write_weights(dir / "generator.bin", widen(model.g.net().flat_params()));
    write_weights(dir / "d1.bin", widen(model.d1.net().flat_params()));
    write_weights(dir / "d2.bin", widen(model.d2.net().flat_params()));
    std::ofstream(dir / "config.json") << to_json(cfg).dump(2) << '\n';
    const nlohmann::json meta = {{"step", step},
                                 {"config-hash", config_hash(cfg)},
                                 {"backbone", to_string(cfg.backbone)},
                                 {"stride", cfg.output_stride()}};
    std::ofstream(dir / "meta.json") << meta.dump(2) << '\n';
}

template <typename T>
LoadedCheckpoint<T> load_checkpoint(const fs::path& dir) {
    if (!fs::exists(dir / "meta.json")) throw std::runtime_error("no checkpoint in " + dir.string());
    TrainConfig cfg = load_config((dir / "config.json").string());
    nlohmann::json meta;
    {
        std::ifstream in(dir / "meta.json");
        meta = nlohmann::json::parse(in);
    }
    if (meta.at("config-hash").get<std::string>() != config_hash(cfg)) {
        throw std::runtime_error("checkpoint " + dir.string() + ": config hash mismatch");
    }
    LoadedCheckpoint<T> ck{cfg, Model<T>(cfg), meta.at("step").get<long>()};
    load_into(ck.model.g.net(), dir / "generator.bin");
    load_into(ck.model.d1.net(), dir / "d1.bin");
    load_into(ck.model.d2.net(), dir / "d2.bin");
    return ck;
}

#define ASNET_INSTANTIATE(T)                                                                              \
    template struct Model<T>;                                                                             \
    template class Trainer<T>;                                                                            \
    template std::vector<ScoreSet> scores_from_outputs(const Tensor<T>&, const Tensor<T>&, int, int,      \
                                                       const TrainConfig&);                               \
    template LossReport generator_objective(Model<T>&, const Tensor<T>&, const Tensor<T>&, const Tensor<T>*, \
                                            const std::vector<ScoreSet>*, const TrainConfig&, Tensor<T>*,  \
                                            Tensor<T>*);                                                   \
    template DensityMap predict_density(Generator<T>&, const Image&, int, double);                        \
    template MetricsRecord evaluate(Generator<T>&, const Dataset&, const EvalOptions&);                   \
    template void save_checkpoint(const fs::path&, const Model<T>&, const TrainConfig&, long);            \
    template LoadedCheckpoint<T> load_checkpoint(const fs::path&);

ASNET_INSTANTIATE(float)
ASNET_INSTANTIATE(double)
#undef ASNET_INSTANTIATE

}  // namespace asnet
