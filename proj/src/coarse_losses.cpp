#include "asnet/coarse_losses.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace asnet {

namespace {

template <typename T>
void check_probabilities(const Tensor<T>& o, const char* what) {
    if (o.empty()) throw std::invalid_argument(std::string(what) + ": empty discrimination batch");
    for (const T& v : o.span()) {
        if (!(v >= T(0) && v <= T(1))) {
            throw std::invalid_argument(std::string(what) + ": discrimination value " +
                                        std::to_string(static_cast<double>(v)) + " outside [0,1]");
        }
    }
}

void check_batch(int batch_images) {
    if (batch_images < 1) throw std::invalid_argument("loss: batch size must be >= 1");
}

double safe_log(double v) { return std::log(std::max(v, kLogFloor)); }

// d/dv log(max(v, floor)); zero on the clamped side.
double safe_log_grad(double v) { return v >= kLogFloor ? 1.0 / v : 0.0; }

}  // namespace

template <typename T>
double discriminator_loss(const Tensor<T>& o_source, const Tensor<T>& o_target, int batch_images) {
    check_batch(batch_images);
    check_probabilities(o_source, "discriminator_loss");
    check_probabilities(o_target, "discriminator_loss");
    if (o_source.c() != o_target.c() || o_source.h() != o_target.h() || o_source.w() != o_target.w()) {
        throw std::invalid_argument("discriminator_loss: source maps " + o_source.shape().str() +
                                    " and target maps " + o_target.shape().str() + " differ in shape");
    }
    double s = 0.0;
    for (const T& v : o_source.span()) s += safe_log(static_cast<double>(v));
    for (const T& v : o_target.span()) s += safe_log(1.0 - static_cast<double>(v));
    return -s / batch_images;
}

template <typename T>
double adversarial_loss(const Tensor<T>& o_target, int batch_images) {
    check_batch(batch_images);
    check_probabilities(o_target, "adversarial_loss");
    double s = 0.0;
    for (const T& v : o_target.span()) s += safe_log(static_cast<double>(v));
    return -s / batch_images;
}

template <typename T>
DiscriminatorLossGrad<T> discriminator_loss_grad(const Tensor<T>& o_source, const Tensor<T>& o_target,
                                                 int batch_images) {
    DiscriminatorLossGrad<T> r;
    r.value = discriminator_loss(o_source, o_target, batch_images);
    const double inv = 1.0 / batch_images;
    r.grad_source = Tensor<T>(o_source.shape());
    r.grad_target = Tensor<T>(o_target.shape());
    for (std::size_t i = 0; i < o_source.size(); ++i) {
        r.grad_source.data()[i] = static_cast<T>(-inv * safe_log_grad(o_source.data()[i]));
    }
    for (std::size_t i = 0; i < o_target.size(); ++i) {
        r.grad_target.data()[i] = static_cast<T>(inv * safe_log_grad(1.0 - o_target.data()[i]));
    }
    return r;
}

template <typename T>
AdversarialLossGrad<T> adversarial_loss_grad(const Tensor<T>& o_target, int batch_images) {
    AdversarialLossGrad<T> r;
    r.value = adversarial_loss(o_target, batch_images);
    const double inv = 1.0 / batch_images;
    r.grad = Tensor<T>(o_target.shape());
    for (std::size_t i = 0; i < o_target.size(); ++i) {
        r.grad.data()[i] = static_cast<T>(-inv * safe_log_grad(o_target.data()[i]));
    }
    return r;
}

double discriminator_loss(const std::vector<DiscriminationMap>& o_source,
                          const std::vector<DiscriminationMap>& o_target, int batch_images) {
    if (o_source.empty() || o_target.empty()) {
        throw std::invalid_argument("discriminator_loss: empty discrimination batch");
    }
    const int nb = batch_images > 0 ? batch_images : static_cast<int>(o_source.size());
    return discriminator_loss(from_fields<double>(o_source), from_fields<double>(o_target), nb);
}

double adversarial_loss(const std::vector<DiscriminationMap>& o_target, int batch_images) {
    if (o_target.empty()) throw std::invalid_argument("adversarial_loss: empty discrimination batch");
    const int nb = batch_images > 0 ? batch_images : static_cast<int>(o_target.size());
    return adversarial_loss(from_fields<double>(o_target), nb);
}

LocalViewLayout local_view_layout(int h, int w, int s, int min_extent) {
    if (s < 1) throw std::invalid_argument("local views: S must be >= 1");
    if (h % s != 0 || w % s != 0) {
        throw std::invalid_argument("local views: " + std::to_string(h) + "x" + std::to_string(w) +
                                    " not divisible by S=" + std::to_string(s));
    }
    LocalViewLayout l;
    l.s = s;
    l.patch_h = h / s;
    l.patch_w = w / s;
    const int need = std::max((min_extent + l.patch_h - 1) / l.patch_h,
                              (min_extent + l.patch_w - 1) / l.patch_w);
    l.upscale = std::max(1, need);
    return l;
}

template <typename T>
Tensor<T> local_views(const Tensor<T>& density, const LocalViewLayout& l) {
    if (density.c() != 1 || density.h() != l.patch_h * l.s || density.w() != l.patch_w * l.s) {
        throw std::invalid_argument("local_views: density " + density.shape().str() +
                                    " does not match layout");
    }
    const int u = l.upscale;
    Tensor<T> out(density.n() * l.patches(), 1, l.view_h(), l.view_w());
    for (int i = 0; i < density.n(); ++i) {
        for (int j = 0; j < l.patches(); ++j) {
            const int oy = (j / l.s) * l.patch_h;
            const int ox = (j % l.s) * l.patch_w;
            const int v = i * l.patches() + j;
            for (int y = 0; y < l.view_h(); ++y)
                for (int x = 0; x < l.view_w(); ++x) out(v, 0, y, x) = density(i, 0, oy + y / u, ox + x / u);
        }
    }
    return out;
}

template <typename T>
Tensor<T> local_views_backward(const Tensor<T>& grad_views, const LocalViewLayout& l) {
    if (grad_views.n() % l.patches() != 0) {
        throw std::invalid_argument("local_views_backward: batch not a multiple of S^2");
    }
    const int n = grad_views.n() / l.patches();
    const int u = l.upscale;
    Tensor<T> g(n, 1, l.patch_h * l.s, l.patch_w * l.s);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < l.patches(); ++j) {
            const int oy = (j / l.s) * l.patch_h;
            const int ox = (j % l.s) * l.patch_w;
            const int v = i * l.patches() + j;
            for (int y = 0; y < l.view_h(); ++y)
                for (int x = 0; x < l.view_w(); ++x) g(i, 0, oy + y / u, ox + x / u) += grad_views(v, 0, y, x);
        }
    }
    return g;
}

template <typename T>
std::vector<Field2D> to_fields(const Tensor<T>& t) {
    if (t.c() != 1) throw std::invalid_argument("to_fields: expected a single-channel batch");
    std::vector<Field2D> out;
    out.reserve(t.n());
    for (int i = 0; i < t.n(); ++i) {
        auto s = t.sample(i);
        out.emplace_back(t.h(), t.w(), std::vector<double>(s.begin(), s.end()));
    }
    return out;
}

template <typename T>
Tensor<T> from_fields(const std::vector<Field2D>& fields) {
    if (fields.empty()) return {};
    const int h = fields[0].height();
    const int w = fields[0].width();
    Tensor<T> t(static_cast<int>(fields.size()), 1, h, w);
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (fields[i].height() != h || fields[i].width() != w) {
            throw std::invalid_argument("from_fields: maps in a batch must share a shape");
        }
        std::transform(fields[i].values().begin(), fields[i].values().end(), t.sample(i).begin(),
                       [](double v) { return static_cast<T>(v); });
    }
    return t;
}

#define ASNET_INSTANTIATE(T)                                                                         \
    template double discriminator_loss(const Tensor<T>&, const Tensor<T>&, int);                   \
    template double adversarial_loss(const Tensor<T>&, int);                                       \
    template DiscriminatorLossGrad<T> discriminator_loss_grad(const Tensor<T>&, const Tensor<T>&, int); \
    template AdversarialLossGrad<T> adversarial_loss_grad(const Tensor<T>&, int);                  \
    template Tensor<T> local_views(const Tensor<T>&, const LocalViewLayout&);                       \
    template Tensor<T> local_views_backward(const Tensor<T>&, const LocalViewLayout&);              \
    template std::vector<Field2D> to_fields(const Tensor<T>&);                                       \
    template Tensor<T> from_fields(const std::vector<Field2D>&);

ASNET_INSTANTIATE(float)
ASNET_INSTANTIATE(double)
#undef ASNET_INSTANTIATE

}  // namespace asnet
