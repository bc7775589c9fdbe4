#pragma once

#include <string>
#include <vector>

#include "asnet/field.hpp"
#include "asnet/nn.hpp"

namespace asnet {

enum class Backbone {
    vgg16,  // VGG-16 frontend, two dilated layers, 1-channel head; stride 16
    toy,    // 3 conv layers (16, 32, 1 channels), 2 pools; stride 4. Desk-scale only.
};

Backbone parse_backbone(const std::string& name);
std::string to_string(Backbone b);

std::vector<LayerSpec> generator_layers(Backbone backbone);

/// Five 4x4 convs with channels (w, 2w, 4w, 8w, 1), strides (2,2,2,2,1),
/// paddings (1,1,1,1,2), leaky ReLU between and a final sigmoid.
/// base_channels = 64 is the full-size discriminator.
std::vector<LayerSpec> discriminator_layers(int base_channels = 64);

/// Product of all stride factors in the stack.
int output_stride(const std::vector<LayerSpec>& specs);

/// Smallest square input extent for which every layer yields >= 1 output cell.
int minimum_input_extent(const std::vector<LayerSpec>& specs);

/// Generator: image (N,3,H,W) in [0,1] -> density (N,1,H/stride,W/stride).
template <typename T>
class Generator {
public:
    explicit Generator(Backbone backbone);

    Tensor<T> forward(const Tensor<T>& images);
    /// Accumulates parameter gradients; no image gradient is produced.
    void backward(const Tensor<T>& grad) { net_.backward(grad, false); }

    [[nodiscard]] Backbone backbone() const { return backbone_; }
    [[nodiscard]] int stride() const { return stride_; }
    Network<T>& net() { return net_; }
    [[nodiscard]] const Network<T>& net() const { return net_; }

private:
    Backbone backbone_;
    Network<T> net_;
    int stride_;
};

/// Discriminator: density (N,1,h,w) -> discrimination map in (0,1).
template <typename T>
class Discriminator {
public:
    explicit Discriminator(int base_channels = 64);

    Tensor<T> forward(const Tensor<T>& density);
    Tensor<T> backward(const Tensor<T>& grad) { return net_.backward(grad); }
    /// Parameter gradients only (discriminator update).
    void backward_params(const Tensor<T>& grad) { net_.backward(grad, false, true); }
    /// Input gradient only; parameters are treated as constants.
    Tensor<T> backward_input(const Tensor<T>& grad) { return net_.backward(grad, true, false); }

    [[nodiscard]] int base_channels() const { return base_channels_; }
    [[nodiscard]] int min_extent() const { return min_extent_; }
    Network<T>& net() { return net_; }
    [[nodiscard]] const Network<T>& net() const { return net_; }

private:
    int base_channels_;
    Network<T> net_;
    int min_extent_;
};

/// S*S equal patches in row-major order (top-left to bottom-right).
std::vector<Field2D> split_patches(const Field2D& map, int s);

/// Inverse of split_patches.
Field2D reassemble_patches(const std::vector<Field2D>& patches, int s);

}  // namespace asnet
