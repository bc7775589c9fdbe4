#pragma once

#include <vector>

#include "asnet/field.hpp"
#include "asnet/tensor.hpp"

namespace asnet {

/// Lower clamp applied to log arguments.
inline constexpr double kLogFloor = 1e-7;

// Discrimination maps come as (N, 1, h, w) batches. `batch_images` is the
// N_b normaliser: the image count, which for local maps is N / S^2.
// Values must lie in [0, 1]; a saturated float sigmoid can reach either end.

/// Binary cross-entropy with source labelled 1 and target labelled 0:
/// -(sum log O_s + sum log(1 - O_t)) / N_b.
template <typename T>
double discriminator_loss(const Tensor<T>& o_source, const Tensor<T>& o_target, int batch_images);

/// -(sum log O_t) / N_b, computed on target maps only.
template <typename T>
double adversarial_loss(const Tensor<T>& o_target, int batch_images);

template <typename T>
struct DiscriminatorLossGrad {
    double value = 0.0;
    Tensor<T> grad_source;
    Tensor<T> grad_target;
};

template <typename T>
DiscriminatorLossGrad<T> discriminator_loss_grad(const Tensor<T>& o_source, const Tensor<T>& o_target,
                                                 int batch_images);

template <typename T>
struct AdversarialLossGrad {
    double value = 0.0;
    Tensor<T> grad;
};

template <typename T>
AdversarialLossGrad<T> adversarial_loss_grad(const Tensor<T>& o_target, int batch_images);

// Field2D conveniences; N_b defaults to the number of maps.
double discriminator_loss(const std::vector<DiscriminationMap>& o_source,
                          const std::vector<DiscriminationMap>& o_target, int batch_images = 0);
double adversarial_loss(const std::vector<DiscriminationMap>& o_target, int batch_images = 0);

/// How a density batch is cut into local-discriminator inputs. Patches smaller
/// than the discriminator's minimum input are nearest-upsampled by `upscale`.
struct LocalViewLayout {
    int s = 1;
    int patch_h = 0;
    int patch_w = 0;
    int upscale = 1;

    [[nodiscard]] int view_h() const { return patch_h * upscale; }
    [[nodiscard]] int view_w() const { return patch_w * upscale; }
    [[nodiscard]] int patches() const { return s * s; }
};

LocalViewLayout local_view_layout(int h, int w, int s, int min_extent);

/// (N,1,h,w) -> (N*S^2, 1, view_h, view_w); view i*S^2 + j is patch j of image i.
template <typename T>
Tensor<T> local_views(const Tensor<T>& density, const LocalViewLayout& layout);

/// Adjoint of local_views: scatters view gradients back to (N,1,h,w).
template <typename T>
Tensor<T> local_views_backward(const Tensor<T>& grad_views, const LocalViewLayout& layout);

/// Converts an (N,1,h,w) batch to per-sample fields.
template <typename T>
std::vector<Field2D> to_fields(const Tensor<T>& t);

template <typename T>
Tensor<T> from_fields(const std::vector<Field2D>& fields);

}  // namespace asnet
