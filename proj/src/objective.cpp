#include "asnet/objective.hpp"

#include <cmath>
#include <sstream>

namespace asnet {

namespace {

std::string non_finite_message(const std::string& component, double value) {
    std::ostringstream os;
    os << "non-finite loss component " << component << " = " << value;
    return os.str();
}

template <typename T>
void check_pair(const Tensor<T>& pred, const Tensor<T>& gt) {
    if (!(pred.shape() == gt.shape())) {
        throw std::invalid_argument("density loss: shape mismatch " + pred.shape().str() + " vs " +
                                    gt.shape().str());
    }
    if (pred.n() < 1) throw std::invalid_argument("density loss: empty batch");
    if (pred.c() != 1) throw std::invalid_argument("density loss: expected single-channel maps");
}

void check_scores(const std::vector<ScoreSet>& scores, int n, int h, int w, int s) {
    if (scores.size() != static_cast<std::size_t>(n)) {
        throw std::invalid_argument("weighted density loss: " + std::to_string(scores.size()) +
                                    " score sets for " + std::to_string(n) + " images");
    }
    if (s < 1 || h % s != 0 || w % s != 0) {
        throw std::invalid_argument("weighted density loss: map not divisible by S=" + std::to_string(s));
    }
}

}  // namespace

NonFiniteLoss::NonFiniteLoss(std::string component, double value)
    : std::runtime_error(non_finite_message(component, value)), component_(std::move(component)) {}

bool LossReport::all_finite() const {
    return std::isfinite(l_den) && std::isfinite(l_dens) && std::isfinite(l_adv1) &&
           std::isfinite(l_adv2) && std::isfinite(l_total);
}

nlohmann::json to_json(const LossReport& r) {
    return {{"l_den", r.l_den}, {"l_dens", r.l_dens}, {"l_adv1", r.l_adv1}, {"l_adv2", r.l_adv2},
            {"l_total", r.l_total}};
}

template <typename T>
double density_loss(const Tensor<T>& pred, const Tensor<T>& gt) {
    check_pair(pred, gt);
    double s = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double d = static_cast<double>(pred.data()[i]) - static_cast<double>(gt.data()[i]);
        s += d * d;
    }
    return s / pred.n();
}

template <typename T>
Tensor<T> density_loss_grad(const Tensor<T>& pred, const Tensor<T>& gt) {
    check_pair(pred, gt);
    Tensor<T> g(pred.shape());
    const double scale = 2.0 / pred.n();
    for (std::size_t i = 0; i < pred.size(); ++i) {
        g.data()[i] = static_cast<T>(scale * (static_cast<double>(pred.data()[i]) - gt.data()[i]));
    }
    return g;
}

std::vector<double> pixel_weights(const ScoreSet& sc, int h, int w, int s, bool residual) {
    if (sc.s_patch.size() != static_cast<std::size_t>(s) * s) {
        throw std::invalid_argument("pixel_weights: expected S*S patch scores");
    }
    if (sc.s_pix.height != h || sc.s_pix.width != w || sc.s_ppx.height != h || sc.s_ppx.width != w) {
        throw std::invalid_argument("pixel_weights: pixel score maps must match the density map shape");
    }
    const double r = residual ? 1.0 : 0.0;
    const int ph = h / s;
    const int pw = w / s;
    std::vector<double> out(static_cast<std::size_t>(h) * w);
    const double wi = r + sc.s_img;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const int j = (y / ph) * s + x / pw;
            out[static_cast<std::size_t>(y) * w + x] =
                wi * (r + sc.s_patch[j]) * (r + sc.s_pix.at(y, x)) * (r + sc.s_ppx.at(y, x));
        }
    }
    return out;
}

template <typename T>
double weighted_density_loss(const Tensor<T>& pred, const Tensor<T>& gt,
                             const std::vector<ScoreSet>& scores, int s, bool residual) {
    check_pair(pred, gt);
    check_scores(scores, pred.n(), pred.h(), pred.w(), s);
    const double r = residual ? 1.0 : 0.0;
    const int h = pred.h();
    const int w = pred.w();
    const int ph = h / s;
    const int pw = w / s;
    double total = 0.0;
    // Nested exactly as the loss is written: image, patch, pixel-in-patch.
    for (int i = 0; i < pred.n(); ++i) {
        const ScoreSet& sc = scores[i];
        if (sc.s_patch.size() != static_cast<std::size_t>(s) * s || sc.s_pix.height != h ||
            sc.s_pix.width != w || sc.s_ppx.height != h || sc.s_ppx.width != w) {
            throw std::invalid_argument("weighted density loss: score shapes do not match the map");
        }
        double image_sum = 0.0;
        for (int j = 0; j < s * s; ++j) {
            const int oy = (j / s) * ph;
            const int ox = (j % s) * pw;
            double patch_sum = 0.0;
            for (int y = oy; y < oy + ph; ++y) {
                for (int x = ox; x < ox + pw; ++x) {
                    const double d = static_cast<double>(pred(i, 0, y, x)) - gt(i, 0, y, x);
                    patch_sum += (r + sc.s_pix.at(y, x)) * (r + sc.s_ppx.at(y, x)) * d * d;
                }
            }
            image_sum += (r + sc.s_patch[j]) * patch_sum;
        }
        total += (r + sc.s_img) * image_sum;
    }
    return total / pred.n();
}

template <typename T>
Tensor<T> weighted_density_loss_grad(const Tensor<T>& pred, const Tensor<T>& gt,
                                     const std::vector<ScoreSet>& scores, int s, bool residual) {
    check_pair(pred, gt);
    check_scores(scores, pred.n(), pred.h(), pred.w(), s);
    Tensor<T> g(pred.shape());
    const double scale = 2.0 / pred.n();
    for (int i = 0; i < pred.n(); ++i) {
        const std::vector<double> wts = pixel_weights(scores[i], pred.h(), pred.w(), s, residual);
        auto gp = g.sample(i);
        auto pp = pred.sample(i);
        auto gg = gt.sample(i);
        for (std::size_t k = 0; k < wts.size(); ++k) {
            gp[k] = static_cast<T>(scale * wts[k] * (static_cast<double>(pp[k]) - gg[k]));
        }
    }
    return g;
}

double total_generator_loss(double l_dens, double l_adv1, double l_adv2, double lambda1, double lambda2) {
    if (!std::isfinite(l_dens)) throw NonFiniteLoss("l_dens", l_dens);
    if (!std::isfinite(l_adv1)) throw NonFiniteLoss("l_adv1", l_adv1);
    if (!std::isfinite(l_adv2)) throw NonFiniteLoss("l_adv2", l_adv2);
    if (!std::isfinite(lambda1) || lambda1 < 0.0) throw std::invalid_argument("lambda1 must be finite and >= 0");
    if (!std::isfinite(lambda2) || lambda2 < 0.0) throw std::invalid_argument("lambda2 must be finite and >= 0");
    return l_dens + lambda1 * l_adv1 + lambda2 * l_adv2;
}

#define ASNET_INSTANTIATE(T)                                                                          \
    template double density_loss(const Tensor<T>&, const Tensor<T>&);                                 \
    template Tensor<T> density_loss_grad(const Tensor<T>&, const Tensor<T>&);                         \
    template double weighted_density_loss(const Tensor<T>&, const Tensor<T>&,                         \
                                          const std::vector<ScoreSet>&, int, bool);                   \
    template Tensor<T> weighted_density_loss_grad(const Tensor<T>&, const Tensor<T>&,                 \
                                                  const std::vector<ScoreSet>&, int, bool);

ASNET_INSTANTIATE(float)
ASNET_INSTANTIATE(double)
#undef ASNET_INSTANTIATE

}  // namespace asnet
