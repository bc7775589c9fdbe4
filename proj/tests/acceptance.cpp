// Acceptance suite: one PASS/FAIL line per criterion on stdout, details on stderr.
#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <limits>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "asnet/coarse_losses.hpp"
#include "asnet/data_io.hpp"
#include "asnet/densitygen.hpp"
#include "asnet/fine_scoring.hpp"
#include "asnet/metrics.hpp"
#include "asnet/objective.hpp"
#include "asnet/trainer.hpp"
#include "oracles.hpp"

using namespace asnet;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;
};

// Collects failures with a short description of the first few.
class Check {
public:
    void expect(bool ok, const std::string& what) {
        ++total_;
        if (ok) return;
        ++failed_;
        if (failed_ <= 5) std::cerr << "    failed: " << what << "\n";
    }
    [[nodiscard]] bool ok() const { return failed_ == 0; }
    [[nodiscard]] std::string summary() const {
        return std::to_string(total_ - failed_) + "/" + std::to_string(total_) + " checks";
    }

private:
    long total_ = 0;
    long failed_ = 0;
};

std::string num(double v, int precision = 4) {
    std::ostringstream os;
    os.precision(precision);
    os << v;
    return os.str();
}

bool rel_close(double a, double b, double tol) { return std::fabs(a - b) <= tol * std::max(std::fabs(a), std::fabs(b)); }

Tensor<double> random_tensor(std::mt19937_64& rng, int n, int h, int w, double lo, double hi) {
    std::uniform_real_distribution<double> u(lo, hi);
    Tensor<double> t(n, 1, h, w);
    for (double& v : t.span()) v = u(rng);
    return t;
}

ScoreSet uniform_scores(int h, int w, int s, std::uint8_t v) {
    ScoreSet sc;
    sc.s_img = v;
    sc.s_patch.assign(static_cast<std::size_t>(s) * s, v);
    sc.s_pix = BinaryMap(h, w, v);
    sc.s_ppx = BinaryMap(h, w, v);
    return sc;
}

ScoreSet random_scores(std::mt19937_64& rng, int h, int w, int s) {
    std::bernoulli_distribution b(0.5);
    ScoreSet sc = uniform_scores(h, w, s, 0);
    sc.s_img = b(rng);
    for (auto& v : sc.s_patch) v = b(rng);
    for (auto& v : sc.s_pix.values) v = b(rng);
    for (auto& v : sc.s_ppx.values) v = b(rng);
    return sc;
}

oracle::Grid image_grid(const Tensor<double>& t, int n) {
    oracle::Grid g(t.h(), std::vector<double>(t.w()));
    for (int y = 0; y < t.h(); ++y)
        for (int x = 0; x < t.w(); ++x) g[y][x] = t(n, 0, y, x);
    return g;
}

// ---- 1 ----------------------------------------------------------------------

Outcome loss_identities() {
    Check c;
    std::mt19937_64 rng(101);
    std::uniform_int_distribution<int> sdist(1, 4);
    std::uniform_int_distribution<int> ndist(1, 3);
    for (int t = 0; t < 500; ++t) {
        const int s = sdist(rng);
        const int n = ndist(rng);
        const int h = s * (1 + t % 3);
        const int w = s * (2 + t % 2);
        const Tensor<double> p = random_tensor(rng, n, h, w, 0.0, 0.2);
        const Tensor<double> g = random_tensor(rng, n, h, w, 0.0, 0.2);
        const double plain = density_loss(p, g);
        const std::vector<ScoreSet> zeros(n, uniform_scores(h, w, s, 0));
        const std::vector<ScoreSet> ones(n, uniform_scores(h, w, s, 1));
        c.expect(rel_close(weighted_density_loss(p, g, zeros, s), plain, 1e-12), "zero scores, case " + std::to_string(t));
        c.expect(rel_close(weighted_density_loss(p, g, ones, s), 16 * plain, 1e-12), "unit scores, case " + std::to_string(t));

        // Flip one score of one image in each of the four levels, both ways.
        std::vector<ScoreSet> sc;
        for (int i = 0; i < n; ++i) sc.push_back(random_scores(rng, h, w, s));
        const double base = weighted_density_loss(p, g, sc, s);
        const int i = std::uniform_int_distribution<int>(0, n - 1)(rng);
        const int px = std::uniform_int_distribution<int>(0, h * w - 1)(rng);
        const int j = std::uniform_int_distribution<int>(0, s * s - 1)(rng);
        for (int level = 0; level < 4; ++level) {
            auto flipped = sc;
            std::uint8_t* v = nullptr;
            switch (level) {
                case 0: v = &flipped[i].s_img; break;
                case 1: v = &flipped[i].s_patch[j]; break;
                case 2: v = &flipped[i].s_pix.values[px]; break;
                default: v = &flipped[i].s_ppx.values[px]; break;
            }
            const bool up = *v == 0;
            *v = up ? 1 : 0;
            const double after = weighted_density_loss(p, g, flipped, s);
            c.expect(up ? after >= base : after <= base, "monotone flip, case " + std::to_string(t));
        }
    }
    return {c.ok(), c.summary()};
}

// ---- 2 ----------------------------------------------------------------------

Outcome score_oracles() {
    Check c;
    std::mt19937_64 rng(102);
    std::uniform_int_distribution<int> sdist(1, 4);
    int uniform = 0;
    for (int t = 0; t < 200; ++t) {
        const int s = sdist(rng);
        const int h = 8 * s;
        const int w = 4 * s * (1 + t % 2);
        const Field2D o1 = oracle::random_disc_map(rng, 2 + t % 3, 2 + t % 2);
        std::vector<Field2D> o2;
        for (int j = 0; j < s * s; ++j) o2.push_back(oracle::random_disc_map(rng, 2, 2));
        const ScoreSet sc = compute_scores(o1, o2, h, w, s);

        const oracle::Grid g1 = oracle::grid(o1);
        std::vector<oracle::Grid> g2;
        for (const auto& m : o2) g2.push_back(oracle::grid(m));
        const auto& v = o1.values();
        if (std::all_of(v.begin(), v.end(), [&](double x) { return x == v[0]; })) ++uniform;

        const std::string id = " (case " + std::to_string(t) + ")";
        c.expect(sc.s_img == oracle::image_score(g1, 0.5), "image score" + id);
        c.expect(std::vector<int>(sc.s_patch.begin(), sc.s_patch.end()) == oracle::patch_score(g2, 0.5), "patch score" + id);
        c.expect(oracle::bits(sc.s_pix) == oracle::pixel_score(g1, h, w), "pixel score" + id);
        c.expect(oracle::bits(sc.s_ppx) == oracle::patch_pixel_score(g2, h, w, s), "patch-pixel score" + id);
    }
    // Exact ties with the threshold score 0.
    const ScoreSet tie = compute_scores(Field2D(2, 2, {0.5, 0.5, 0.25, 0.75}), {Field2D(2, 2, 0.5)}, 4, 4, 1);
    c.expect(tie.s_img == 0 && tie.s_patch[0] == 0, "threshold ties");
    c.expect(tie.s_pix.at(0, 0) == 0 && tie.s_pix.at(2, 0) == 1 && tie.s_pix.at(2, 2) == 0, "mean ties");
    c.expect(uniform > 0, "uniform maps present");
    return {c.ok(), c.summary() + ", " + std::to_string(uniform) + " uniform maps"};
}

// ---- 3 ----------------------------------------------------------------------

Outcome worked_example() {
    Tensor<double> pred(1, 1, 2, 2);
    Tensor<double> gt(1, 1, 2, 2, 1.0);
    for (int i = 0; i < 4; ++i) pred.data()[i] = i + 1;
    ScoreSet sc;
    sc.s_img = 1;
    sc.s_patch = {1, 0, 0, 1};
    sc.s_pix = BinaryMap(2, 2);
    sc.s_pix.values = {0, 1, 0, 1};
    sc.s_ppx = BinaryMap(2, 2);
    sc.s_ppx.values = {1, 1, 0, 0};
    const double lib = weighted_density_loss(pred, gt, {sc}, 2);
    const double ref = oracle::weighted_image_loss(image_grid(pred, 0), image_grid(gt, 0), 1, {1, 0, 0, 1},
                                                   {{0, 1}, {0, 1}}, {{1, 1}, {0, 0}}, 2);
    return {lib == 88.0 && ref == 88.0, "library " + num(lib, 17) + ", oracle " + num(ref, 17)};
}

// ---- 4 ----------------------------------------------------------------------

TrainConfig gradient_config(Mode mode) {
    TrainConfig c = TrainConfig::toy();
    c.mode = mode;
    c.batch = 1;
    c.lambda1 = 0.5;
    c.lambda2 = 0.1;
    return c;
}

Tensor<double> random_images(std::mt19937_64& rng, int n, int size) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Tensor<double> t(n, 3, size, size);
    for (double& v : t.span()) v = u(rng);
    return t;
}

Outcome gradient_check() {
    Check c;
    const TrainConfig cfg = gradient_config(Mode::fine);
    Model<double> m(cfg);
    m.init(InitScheme::kaiming, 5);
    std::mt19937_64 rng(104);
    const int n = cfg.batch;
    const Tensor<double> xs = random_images(rng, n, 64);
    const Tensor<double> xt = random_images(rng, n, 64);
    const Tensor<double> x = concat_batch(xs, xt);
    const Tensor<double> gt = random_tensor(rng, n, 16, 16, 0.0, 0.1);

    const auto split = [&](const Tensor<double>& pred) {
        return std::pair{slice_batch(pred, 0, n), slice_batch(pred, n, n)};
    };
    auto [ps0, pt0] = split(m.g.forward(x));
    const LocalViewLayout l = local_view_layout(ps0.h(), ps0.w(), cfg.s, m.d2.min_extent());
    const std::vector<ScoreSet> scores =
        scores_from_outputs(m.d1.forward(ps0), m.d2.forward(local_views(ps0, l)), ps0.h(), ps0.w(), cfg);

    // Stop-gradient contract: frozen scores and scores recomputed from the same
    // discriminators give the same generator gradient.
    Tensor<double> gs_frozen, gt_frozen, gs_live, gt_live;
    const LossReport r0 = generator_objective<double>(m, ps0, gt, &pt0, &scores, cfg, &gs_frozen, &gt_frozen);
    (void)generator_objective<double>(m, ps0, gt, &pt0, nullptr, cfg, &gs_live, &gt_live);
    bool same = true;
    for (std::size_t i = 0; i < gs_frozen.size(); ++i) same = same && gs_frozen.data()[i] == gs_live.data()[i];
    for (std::size_t i = 0; i < gt_frozen.size(); ++i) same = same && gt_frozen.data()[i] == gt_live.data()[i];
    c.expect(same, "frozen and recomputed scores give the same gradient");

    (void)m.g.forward(x);
    m.g.net().zero_grad();
    m.g.backward(concat_batch(gs_frozen, gt_frozen));
    const std::vector<double> analytic = m.g.net().flat_grads();

    // Loss plus the linear piece (ReLU signs, pool winners) every network ran on.
    const auto loss = [&](const std::vector<double>& theta) {
        m.g.net().set_flat_params(theta);
        auto [ps, pt] = split(m.g.forward(x));
        const double v = generator_objective<double>(m, ps, gt, &pt, &scores, cfg, nullptr, nullptr).l_total;
        const std::array<std::uint64_t, 3> piece{m.g.net().activation_pattern(), m.d1.net().activation_pattern(),
                                                 m.d2.net().activation_pattern()};
        return std::pair{v, piece};
    };
    std::vector<double> theta = m.g.net().flat_params();
    const auto base_piece = loss(theta).second;
    double max_rel = 0.0;
    double max_abs_grad = 0.0;
    for (double g : analytic) max_abs_grad = std::max(max_abs_grad, std::fabs(g));
    // Entries far below the gradient scale are measured against 1e-6 of it:
    // their finite differences are dominated by rounding of the loss.
    const double floor = 1e-6 * max_abs_grad;
    std::size_t worst = 0;
    double worst_fd = 0.0;
    int kinked = 0;
    int unresolved = 0;
    for (std::size_t i = 0; i < theta.size(); ++i) {
        const double w0 = theta[i];
        // Central differences are only meaningful when both probes stay on the
        // linear piece of theta; near a kink the step shrinks until they do.
        double h = 1e-5;
        double fd = 0.0;
        bool smooth = false;
        for (int k = 0; k < 4 && !smooth; ++k, h /= 10) {
            theta[i] = w0 + h;
            const auto up = loss(theta);
            theta[i] = w0 - h;
            const auto down = loss(theta);
            fd = (up.first - down.first) / (2 * h);
            smooth = up.second == base_piece && down.second == base_piece;
            if (k == 0 && !smooth) ++kinked;
        }
        theta[i] = w0;
        if (!smooth) ++unresolved;
        const double rel = std::fabs(fd - analytic[i]) / std::max({std::fabs(fd), std::fabs(analytic[i]), floor});
        if (rel > max_rel) {
            max_rel = rel;
            worst = i;
            worst_fd = fd;
        }
    }
    m.g.net().set_flat_params(theta);
    c.expect(max_rel < 1e-4, "max relative error " + num(max_rel) + " at parameter " + std::to_string(worst) +
                                 " (finite difference " + num(worst_fd, 10) + ", analytic " + num(analytic[worst], 10) +
                                 ", largest gradient " + num(max_abs_grad) + ")");
    c.expect(unresolved == 0, std::to_string(unresolved) + " parameters never left a kink");
    c.expect(r0.l_adv1 > 0 && r0.l_adv2 > 0, "adversarial terms present");
    return {c.ok(), std::to_string(theta.size()) + " parameters, max relative error " + num(max_rel) + ", " +
                        std::to_string(kinked) + " straddled a kink at step 1e-5 and used a smaller step, " +
                        c.summary()};
}

// ---- 5 ----------------------------------------------------------------------

Outcome metric_properties() {
    Check c;
    std::mt19937_64 rng(105);
    std::uniform_int_distribution<int> dim(4, 48);
    std::uniform_real_distribution<double> u(0.0, 0.2);
    std::vector<CountRecord> records;
    for (int t = 0; t < 100; ++t) {
        const int h = dim(rng);
        const int w = dim(rng);
        Field2D p(h, w);
        Field2D g(h, w);
        for (double& v : p.values()) v = u(rng);
        for (double& v : g.values()) v = u(rng);
        MetricsAccumulator acc;
        acc.add(p, g);
        const CountRecord r = acc.records().front();
        records.push_back(r);
        c.expect(game(p, g, 0) == std::fabs(acc.errors().front()), "GAME(0) equals the MAE summand");
        c.expect(acc.finish().mae == game(p, g, 0), "single-image MAE equals GAME(0)");
        double prev = game(p, g, 0);
        for (int level = 1; level <= 3; ++level) {
            const double v = game(p, g, level);
            c.expect(v >= prev, "GAME monotone at level " + std::to_string(level));
            c.expect(rel_close(v, oracle::game(oracle::grid(p), oracle::grid(g), level), 1e-12), "GAME oracle");
            prev = v;
        }
    }
    double abs_sum = 0.0;
    double sq_sum = 0.0;
    for (const auto& r : records) {
        abs_sum += std::fabs(r.predicted - r.ground_truth);
        sq_sum += (r.predicted - r.ground_truth) * (r.predicted - r.ground_truth);
    }
    const CountErrors e = mae_mse(records);
    c.expect(rel_close(e.mae, abs_sum / 100, 1e-12), "MAE oracle");
    c.expect(rel_close(e.mse, std::sqrt(sq_sum / 100), 1e-12), "MSE oracle");
    return {c.ok(), c.summary()};
}

// ---- 6 ----------------------------------------------------------------------

Outcome density_pipeline() {
    Check c;
    std::mt19937_64 rng(106);
    std::uniform_int_distribution<int> count(0, 60);
    std::uniform_int_distribution<int> dim(16, 96);
    double worst = 0.0;
    for (int t = 0; t < 100; ++t) {
        PointAnnotation ann{{}, dim(rng), dim(rng)};
        const int n = count(rng);
        const bool corner = t % 3 == 0;
        std::uniform_real_distribution<double> ux(0.0, corner ? 2.5 : ann.width - 1e-9);
        std::uniform_real_distribution<double> uy(0.0, corner ? 2.5 : ann.height - 1e-9);
        for (int i = 0; i < n; ++i) {
            Point p{ux(rng), uy(rng)};
            if (corner && i % 2 == 1) p = {ann.width - 1e-9 - p.x, ann.height - 1e-9 - p.y};
            ann.points.push_back(p);
        }
        KernelSpec spec;
        spec.mode = t % 2 == 0 ? KernelMode::fixed : KernelMode::geometry_adaptive;
        const DensityMap d = points_to_density(ann, spec);
        const double err = std::fabs(d.sum() - n);
        worst = std::max(worst, n > 0 ? err / n : err);
        c.expect(err <= 1e-3 * n, "count preservation, case " + std::to_string(t));

        // Block sums, exact against the loop oracle.
        for (int f : {2, 4, 8}) {
            const int bh = d.height() / f * f;
            const int bw = d.width() / f * f;
            Field2D cropped(bh, bw);
            for (int y = 0; y < bh; ++y)
                for (int x = 0; x < bw; ++x) cropped.at(y, x) = d.at(y, x);
            const DensityMap small = downsample_count_preserving(cropped, f);
            c.expect(oracle::grid(small) == oracle::block_sum(oracle::grid(cropped), f), "block sums");
            c.expect(rel_close(small.sum(), cropped.sum(), 1e-12) || cropped.sum() == 0.0, "downsampled mass");
        }

        // Binary round trip through a file.
        const fs::path path = fs::temp_directory_path() / "asnet_acceptance.asdm";
        Field2D single(d.height(), d.width());
        for (std::size_t i = 0; i < d.size(); ++i) single.values()[i] = static_cast<float>(d.values()[i]);
        write_density(path, single);
        c.expect(read_density(path) == single, "binary round trip");
        c.expect(fs::file_size(path) == kDensityHeaderBytes + 4 * single.size(), "binary size");
        fs::remove(path);
    }
    return {c.ok(), c.summary() + ", worst relative count error " + num(worst)};
}

// ---- 7 ----------------------------------------------------------------------

struct Hashes {
    std::uint64_t g, d1, d2;
    template <typename T>
    explicit Hashes(const Model<T>& m)
        : g(m.g.net().param_hash()), d1(m.d1.net().param_hash()), d2(m.d2.net().param_hash()) {}
};

SourceBatch<double> random_source(std::mt19937_64& rng, int n) {
    SourceBatch<double> b{random_images(rng, n, 64), random_tensor(rng, n, 16, 16, 0.0, 0.2)};
    return b;
}

Outcome protocol() {
    Check c;
    std::mt19937_64 rng(107);
    TrainConfig base = TrainConfig::toy();
    base.batch = 2;
    base.g_lr = 1e-3;
    base.d_lr = 1e-3;

    for (Mode mode : {Mode::coarse, Mode::fine}) {
        TrainConfig cfg = base;
        cfg.mode = mode;
        Trainer<double> tr(cfg);
        Hashes last(tr.model());
        std::vector<Phase> order;
        (void)tr.train_step(random_source(rng, 2), random_images(rng, 2, 64), [&](Phase p, const Model<double>& m) {
            const Hashes now(m);
            order.push_back(p);
            c.expect((now.g != last.g) == (p == Phase::g_update), "generator changes only in its phase");
            c.expect((now.d1 != last.d1) == (p == Phase::d1_update), "D1 changes only in its phase");
            c.expect((now.d2 != last.d2) == (p == Phase::d2_update), "D2 changes only in its phase");
            last = now;
        });
        c.expect(order == std::vector<Phase>{Phase::d1_update, Phase::d2_update, Phase::g_update}, "phase order");
    }

    {
        TrainConfig cfg = base;
        cfg.mode = Mode::fine;
        Model<double> m(cfg);
        m.init(InitScheme::kaiming, 3);
        const Tensor<double> pt = m.g.forward(random_images(rng, 2, 64));
        const SourceBatch<double> a = random_source(rng, 2);
        const SourceBatch<double> b = random_source(rng, 2);
        Tensor<double> ga, gb;
        const LossReport ra = generator_objective<double>(m, m.g.forward(a.images), a.density, &pt, nullptr, cfg, nullptr, &ga);
        const LossReport rb = generator_objective<double>(m, m.g.forward(b.images), b.density, &pt, nullptr, cfg, nullptr, &gb);
        c.expect(ra.l_adv1 == rb.l_adv1 && ra.l_adv2 == rb.l_adv2, "adversarial losses ignore the source batch");
        bool same = true;
        for (std::size_t i = 0; i < ga.size(); ++i) same = same && ga.data()[i] == gb.data()[i];
        c.expect(same, "target gradient ignores the source batch");
    }

    for (Mode mode : {Mode::noadapt, Mode::coarse, Mode::fine}) {
        TrainConfig cfg = base;
        cfg.mode = mode;
        cfg.g_lr = 0.0;
        cfg.d_lr = 0.0;
        Trainer<double> tr(cfg);
        const Hashes before(tr.model());
        (void)tr.train_step(random_source(rng, 2), random_images(rng, 2, 64));
        const Hashes after(tr.model());
        c.expect(before.g == after.g && before.d1 == after.d1 && before.d2 == after.d2,
                 "zero learning rate is an identity (" + to_string(mode) + ")");
    }

    {
        TrainConfig cfg = base;
        cfg.mode = Mode::noadapt;
        Trainer<double> tr(cfg);
        Model<double> shadow(cfg);
        shadow.init(cfg.init, cfg.seed);
        c.expect(Hashes(shadow).g == Hashes(tr.model()).g, "shared seed gives the same initial generator");
        const SourceBatch<double> b = random_source(rng, 2);
        (void)tr.train_step(b, Tensor<double>());

        // Supervised-only step: gradient of sum (p - g)^2 / N by hand, plain SGD.
        const Tensor<double> pred = shadow.g.forward(b.images);
        const double nb = pred.n();
        Tensor<double> grad(pred.shape());
        for (std::size_t i = 0; i < pred.size(); ++i) grad.data()[i] = 2.0 * (pred.data()[i] - b.density.data()[i]) / nb;
        shadow.g.net().zero_grad();
        shadow.g.backward(grad);
        std::vector<double> w = shadow.g.net().flat_params();
        const std::vector<double> g = shadow.g.net().flat_grads();
        for (std::size_t i = 0; i < w.size(); ++i) w[i] -= cfg.g_lr * g[i];
        const std::vector<double> got = tr.model().g.net().flat_params();
        double worst = 0.0;
        for (std::size_t i = 0; i < w.size(); ++i) worst = std::max(worst, std::fabs(got[i] - w[i]));
        c.expect(worst <= 1e-14, "noadapt step equals the oracle step (max diff " + num(worst) + ")");
        c.expect(Hashes(shadow).d1 == Hashes(tr.model()).d1, "noadapt leaves D1 alone");
    }
    return {c.ok(), c.summary()};
}

// ---- 8 and 9 ----------------------------------------------------------------

struct ExperimentOptions {
    int steps = 2000;
    std::vector<std::uint64_t> seeds{0, 1, 2};
    int n_train = 256;
    int n_test = 64;
};

struct Variant {
    std::string name;
    Mode mode;
    bool residual;
};

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

struct ExperimentResult {
    std::map<std::string, std::vector<double>> mae;  // per variant, per seed
    double seconds = 0.0;
};

ExperimentResult run_experiment(const ExperimentOptions& opt) {
    SynthSpec spec;  // 64x64, counts 5-30
    spec.seed = 1;
    const Dataset source = Dataset::from_samples(synth_samples(spec, opt.n_train, Domain::source));
    spec.seed = 2;
    const Dataset target = Dataset::from_samples(synth_samples(spec, opt.n_train, Domain::target));
    spec.seed = 3;
    const Dataset test = Dataset::from_samples(synth_samples(spec, opt.n_test, Domain::target));

    const std::vector<Variant> variants{{"noadapt", Mode::noadapt, true},
                                        {"coarse", Mode::coarse, true},
                                        {"fine", Mode::fine, true},
                                        {"fine_nonresidual", Mode::fine, false}};
    ExperimentResult res;
    const auto t0 = std::chrono::steady_clock::now();
    for (std::uint64_t seed : opt.seeds) {
        for (const Variant& v : variants) {
            TrainConfig cfg = TrainConfig::toy();
            cfg.mode = v.mode;
            cfg.residual = v.residual;
            cfg.seed = seed;
            cfg.max_steps = opt.steps;
            cfg.epochs = std::numeric_limits<int>::max();
            TrainRunOptions run;
            run.eval_set = &test;
            const auto s0 = std::chrono::steady_clock::now();
            double mae = std::numeric_limits<double>::infinity();
            try {
                mae = train(cfg, source, target, run).final_metrics->mae;
            } catch (const TrainingDiverged& e) {
                std::cerr << "    " << v.name << " seed " << seed << " diverged: " << e.what() << "\n";
            }
            const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - s0).count();
            std::cerr << "    " << v.name << " seed " << seed << ": target MAE " << num(mae) << " (" << num(secs, 3)
                      << " s)\n";
            res.mae[v.name].push_back(mae);
        }
    }
    res.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return res;
}

Outcome adaptation_ordering(const ExperimentResult& r) {
    const double fine = median(r.mae.at("fine"));
    const double coarse = median(r.mae.at("coarse"));
    const double none = median(r.mae.at("noadapt"));
    const double margin = 1.0 - fine / none;
    const bool ordered = fine < coarse && coarse < none;
    const bool in_budget = r.seconds < 45 * 60;
    std::string level = "FAIL";
    bool pass = false;
    if (ordered && margin >= 0.2) {
        level = "full";
        pass = true;
    } else {
        bool every_seed = true;
        for (std::size_t i = 0; i < r.mae.at("fine").size(); ++i)
            every_seed = every_seed && r.mae.at("fine")[i] < r.mae.at("coarse")[i] &&
                         r.mae.at("coarse")[i] < r.mae.at("noadapt")[i];
        if (every_seed) {
            level = "trend";
            pass = true;
        }
    }
    pass = pass && in_budget;
    return {pass, "median MAE fine " + num(fine) + " < coarse " + num(coarse) + " < noadapt " + num(none) +
                      ", fine " + num(100 * margin, 3) + "% below noadapt, level " + level + ", runtime " +
                      num(r.seconds / 60, 3) + " min"};
}

Outcome ablation_directions(const ExperimentResult& r) {
    const double coarse = median(r.mae.at("coarse"));
    const double none = median(r.mae.at("noadapt"));
    const double fine = median(r.mae.at("fine"));
    const double nonres = median(r.mae.at("fine_nonresidual"));
    const bool a = coarse < none;
    const bool b = nonres >= fine;
    return {a && b, std::string("(a) coarse ") + num(coarse) + (a ? " < " : " >= ") + "noadapt " + num(none) +
                        "; (b) non-residual " + num(nonres) + (b ? " >= " : " < ") + "residual " + num(fine)};
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Acceptance suite"};
    std::vector<int> only;
    ExperimentOptions exp;
    app.add_option("--only", only, "Run only these criteria (1-9)");
    app.add_option("--steps", exp.steps, "Training steps per run in criteria 8 and 9");
    app.add_option("--seeds", exp.seeds, "Seeds for criteria 8 and 9");
    app.add_option("--n-train", exp.n_train, "Images per training domain");
    CLI11_PARSE(app, argc, argv);
    spdlog::set_level(spdlog::level::warn);

    const auto wanted = [&](int k) { return only.empty() || std::find(only.begin(), only.end(), k) != only.end(); };
    const std::vector<std::pair<std::string, std::function<Outcome()>>> quick{
        {"loss identities", loss_identities},   {"score oracles", score_oracles},
        {"worked example", worked_example},     {"gradient check", gradient_check},
        {"metric properties", metric_properties}, {"density pipeline", density_pipeline},
        {"training protocol", protocol},
    };

    bool all = true;
    const auto report = [&](int k, const std::string& name, const Outcome& o, double secs) {
        all = all && o.pass;
        std::cout << "criterion " << k << " " << (o.pass ? "PASS" : "FAIL") << "  " << name << ": " << o.detail << " ["
                  << num(secs, 3) << " s]" << std::endl;
    };
    for (std::size_t i = 0; i < quick.size(); ++i) {
        const int k = static_cast<int>(i) + 1;
        if (!wanted(k)) continue;
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = quick[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        report(k, quick[i].first, o, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    }
    if (wanted(8) || wanted(9)) {
        std::cerr << "adaptation experiment: " << exp.steps << " steps, " << exp.seeds.size() << " seeds\n";
        const ExperimentResult r = run_experiment(exp);
        if (wanted(8)) report(8, "adaptation ordering", adaptation_ordering(r), r.seconds);
        if (wanted(9)) report(9, "ablation directions", ablation_directions(r), 0.0);
    }
    return all ? 0 : 1;
}
