#include "asnet/netspec.hpp"

#include <stdexcept>

namespace asnet {

Backbone parse_backbone(const std::string& name) {
    if (name == "vgg16") return Backbone::vgg16;
    if (name == "toy") return Backbone::toy;
    throw std::invalid_argument("unknown backbone '" + name + "' (expected vgg16 or toy)");
}

std::string to_string(Backbone b) { return b == Backbone::vgg16 ? "vgg16" : "toy"; }

std::vector<LayerSpec> generator_layers(Backbone backbone) {
    const auto conv = [](int c) { return LayerSpec::conv(3, c, 1, 1, 1, Activation::relu); };
    std::vector<LayerSpec> l;
    if (backbone == Backbone::toy) {
        l = {conv(16), LayerSpec::maxpool(), conv(32), LayerSpec::maxpool(),
             LayerSpec::conv(3, 1, 1, 1, 1, Activation::none)};
        return l;
    }
    const int blocks[5][2] = {{2, 64}, {2, 128}, {3, 256}, {3, 512}, {3, 512}};
    for (int b = 0; b < 5; ++b) {
        for (int i = 0; i < blocks[b][0]; ++i) l.push_back(conv(blocks[b][1]));
        if (b < 4) l.push_back(LayerSpec::maxpool());
    }
    l.push_back(LayerSpec::conv(3, 256, 1, 4, 4, Activation::relu));
    l.push_back(LayerSpec::conv(3, 64, 1, 4, 4, Activation::relu));
    l.push_back(LayerSpec::conv(3, 1, 1, 1, 1, Activation::none));
    return l;
}

std::vector<LayerSpec> discriminator_layers(int base_channels) {
    if (base_channels < 1) throw std::invalid_argument("discriminator: base_channels must be >= 1");
    const int w = base_channels;
    return {
        LayerSpec::conv(4, w, 2, 1, 1, Activation::leaky_relu),
        LayerSpec::conv(4, 2 * w, 2, 1, 1, Activation::leaky_relu),
        LayerSpec::conv(4, 4 * w, 2, 1, 1, Activation::leaky_relu),
        LayerSpec::conv(4, 8 * w, 2, 1, 1, Activation::leaky_relu),
        LayerSpec::conv(4, 1, 1, 2, 1, Activation::sigmoid),
    };
}

int output_stride(const std::vector<LayerSpec>& specs) {
    int s = 1;
    for (const LayerSpec& l : specs)
        if (l.kind != LayerKind::upsample_nearest) s *= l.stride;
    return s;
}

int minimum_input_extent(const std::vector<LayerSpec>& specs) {
    for (int n = 1; n < 1 << 16; ++n) {
        int e = n;
        bool ok = true;
        for (const LayerSpec& l : specs) {
            e = layer_output_extent(l, e);
            if (e < 1) {
                ok = false;
                break;
            }
        }
        if (ok) return n;
    }
    throw std::invalid_argument("minimum_input_extent: no feasible input size");
}

template <typename T>
Generator<T>::Generator(Backbone backbone)
    : backbone_(backbone), net_(generator_layers(backbone), 3), stride_(output_stride(net_.specs())) {}

template <typename T>
Tensor<T> Generator<T>::forward(const Tensor<T>& images) {
    if (images.c() != 3) throw std::invalid_argument("generator: expected 3-channel images");
    if (images.h() % stride_ != 0 || images.w() % stride_ != 0) {
        throw std::invalid_argument("generator: input " + std::to_string(images.h()) + "x" +
                                    std::to_string(images.w()) + " not divisible by stride " +
                                    std::to_string(stride_));
    }
    return net_.forward(images);
}

template <typename T>
Discriminator<T>::Discriminator(int base_channels)
    : base_channels_(base_channels), net_(discriminator_layers(base_channels), 1),
      min_extent_(minimum_input_extent(net_.specs())) {}

template <typename T>
Tensor<T> Discriminator<T>::forward(const Tensor<T>& density) {
    if (density.c() != 1) throw std::invalid_argument("discriminator: expected 1-channel density");
    if (density.h() < min_extent_ || density.w() < min_extent_) {
        throw std::invalid_argument("discriminator: input " + std::to_string(density.h()) + "x" +
                                    std::to_string(density.w()) + " smaller than minimum " +
                                    std::to_string(min_extent_));
    }
    return net_.forward(density);
}

std::vector<Field2D> split_patches(const Field2D& map, int s) {
    if (s < 1) throw std::invalid_argument("split_patches: S must be >= 1");
    if (map.height() % s != 0 || map.width() % s != 0) {
        throw std::invalid_argument("split_patches: " + std::to_string(map.height()) + "x" +
                                    std::to_string(map.width()) + " not divisible by S=" +
                                    std::to_string(s));
    }
    const int ph = map.height() / s;
    const int pw = map.width() / s;
    std::vector<Field2D> out;
    out.reserve(static_cast<std::size_t>(s) * s);
    for (int py = 0; py < s; ++py) {
        for (int px = 0; px < s; ++px) {
            Field2D p(ph, pw);
            for (int y = 0; y < ph; ++y)
                for (int x = 0; x < pw; ++x) p.at(y, x) = map.at(py * ph + y, px * pw + x);
            out.push_back(std::move(p));
        }
    }
    return out;
}

Field2D reassemble_patches(const std::vector<Field2D>& patches, int s) {
    if (s < 1 || patches.size() != static_cast<std::size_t>(s) * s) {
        throw std::invalid_argument("reassemble_patches: expected S*S patches");
    }
    const int ph = patches[0].height();
    const int pw = patches[0].width();
    Field2D out(ph * s, pw * s);
    for (int j = 0; j < s * s; ++j) {
        if (patches[j].height() != ph || patches[j].width() != pw) {
            throw std::invalid_argument("reassemble_patches: patch shapes differ");
        }
        const int oy = (j / s) * ph;
        const int ox = (j % s) * pw;
        for (int y = 0; y < ph; ++y)
            for (int x = 0; x < pw; ++x) out.at(oy + y, ox + x) = patches[j].at(y, x);
    }
    return out;
}

template class Generator<float>;
template class Generator<double>;
template class Discriminator<float>;
template class Discriminator<double>;

}  // namespace asnet
