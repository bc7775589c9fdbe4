#pragma once

#include <cstdint>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "asnet/tensor.hpp"

namespace asnet {

enum class LayerKind { conv, maxpool, upsample_nearest };
enum class Activation { none, relu, leaky_relu, sigmoid };

inline constexpr double kLeakySlope = 0.2;

/// Declarative description of one layer. For maxpool, kernel and stride
/// describe the pooling window; for upsample_nearest, stride is the factor.
struct LayerSpec {
    LayerKind kind = LayerKind::conv;
    int kernel_h = 3;
    int kernel_w = 3;
    int out_channels = 0;
    int stride = 1;
    int padding = 0;
    int dilation = 1;
    Activation activation = Activation::none;

    static LayerSpec conv(int k, int out_channels, int stride, int padding, int dilation,
                          Activation act) {
        return {LayerKind::conv, k, k, out_channels, stride, padding, dilation, act};
    }
    static LayerSpec maxpool(int k = 2) {
        return {LayerKind::maxpool, k, k, 0, k, 0, 1, Activation::none};
    }
    static LayerSpec upsample(int factor) {
        return {LayerKind::upsample_nearest, 1, 1, 0, factor, 0, 1, Activation::none};
    }

    void validate() const;
};

/// Spatial size after one layer; <= 0 means the input is too small.
int layer_output_extent(const LayerSpec& spec, int extent);

/// Closed-form trainable parameter count of a layer stack.
std::size_t parameter_count(const std::vector<LayerSpec>& specs, int in_channels);

enum class InitScheme {
    normal,   // N(0, 0.01^2) weights, zero bias
    kaiming,  // N(0, 2/fan_in) weights, zero bias
};

template <typename T>
struct ParamRef {
    std::string name;
    std::span<T> value;
    std::span<T> grad;
};

template <typename T>
class Op;

/// Feed-forward stack built from LayerSpecs. forward() caches what backward()
/// needs, so each backward() must follow the forward() it differentiates.
/// Parameter gradients accumulate until zero_grad().
template <typename T>
class Network {
public:
    Network(std::vector<LayerSpec> specs, int in_channels);
    ~Network();
    Network(const Network& other);
    Network& operator=(const Network& other);
    Network(Network&&) noexcept;
    Network& operator=(Network&&) noexcept;

    Tensor<T> forward(const Tensor<T>& x);
    /// With input_grad false the first layer skips its input gradient and an
    /// empty tensor is returned; with param_grad false nothing accumulates.
    Tensor<T> backward(const Tensor<T>& grad_out, bool input_grad = true, bool param_grad = true);
    void zero_grad();

    void init(InitScheme scheme, std::mt19937_64& rng);

    [[nodiscard]] const std::vector<LayerSpec>& specs() const { return specs_; }
    [[nodiscard]] int in_channels() const { return in_channels_; }
    [[nodiscard]] std::size_t num_params() const;
    [[nodiscard]] std::pair<int, int> output_size(int h, int w) const;
    [[nodiscard]] int out_channels() const;

    std::vector<ParamRef<T>> parameters();
    [[nodiscard]] std::vector<T> flat_params() const;
    void set_flat_params(std::span<const T> values);
    [[nodiscard]] std::vector<T> flat_grads() const;

    /// FNV-1a over the raw parameter bytes.
    [[nodiscard]] std::uint64_t param_hash() const;
    /// Hash of the ReLU signs and max-pool winners of the last forward; equal
    /// patterns mean the two forwards ran on the same linear piece.
    [[nodiscard]] std::uint64_t activation_pattern() const;

private:
    std::vector<LayerSpec> specs_;
    int in_channels_;
    std::vector<std::unique_ptr<Op<T>>> ops_;
};

}  // namespace asnet
