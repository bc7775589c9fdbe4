#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "asnet/fine_scoring.hpp"
#include "asnet/tensor.hpp"

namespace asnet {

/// Raised when a loss component is NaN or infinite.
class NonFiniteLoss : public std::runtime_error {
public:
    NonFiniteLoss(std::string component, double value);
    [[nodiscard]] const std::string& component() const { return component_; }

private:
    std::string component_;
};

struct LossReport {
    double l_den = 0.0;
    double l_dens = 0.0;
    double l_adv1 = 0.0;
    double l_adv2 = 0.0;
    double l_total = 0.0;

    [[nodiscard]] bool all_finite() const;
};

nlohmann::json to_json(const LossReport& r);

// Prediction and ground truth are (N, 1, h, w) batches. N_b = N.

/// sum over images and pixels of (pred - gt)^2, divided by N_b.
template <typename T>
double density_loss(const Tensor<T>& pred, const Tensor<T>& gt);

/// d density_loss / d pred.
template <typename T>
Tensor<T> density_loss_grad(const Tensor<T>& pred, const Tensor<T>& gt);

/// Per-pixel weight (1+W1)(1+W2_j)(1+W3_k)(1+W4_k) of one image, or the
/// bare product W1*W2_j*W3_k*W4_k when residual is false.
std::vector<double> pixel_weights(const ScoreSet& scores, int h, int w, int s, bool residual = true);

/// Score-weighted squared error. Scores enter as constants.
template <typename T>
double weighted_density_loss(const Tensor<T>& pred, const Tensor<T>& gt,
                             const std::vector<ScoreSet>& scores, int s, bool residual = true);

template <typename T>
Tensor<T> weighted_density_loss_grad(const Tensor<T>& pred, const Tensor<T>& gt,
                                     const std::vector<ScoreSet>& scores, int s, bool residual = true);

/// l_dens + lambda1 * l_adv1 + lambda2 * l_adv2. Throws NonFiniteLoss naming
/// the first non-finite component.
double total_generator_loss(double l_dens, double l_adv1, double l_adv2, double lambda1, double lambda2);

}  // namespace asnet
