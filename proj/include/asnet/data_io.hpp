#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "asnet/densitygen.hpp"
#include "asnet/field.hpp"
#include "asnet/tensor.hpp"

namespace asnet {

/// Planar RGB image with channel values in [0, 1].
struct Image {
    int height = 0;
    int width = 0;
    std::vector<float> data;  // 3 planes of height*width

    Image() = default;
    Image(int h, int w, float fill = 0.0f)
        : height(h), width(w), data(static_cast<std::size_t>(3) * h * w, fill) {}

    float& at(int c, int y, int x) {
        return data[(static_cast<std::size_t>(c) * height + y) * width + x];
    }
    [[nodiscard]] float at(int c, int y, int x) const {
        return data[(static_cast<std::size_t>(c) * height + y) * width + x];
    }
};

Image read_image(const std::filesystem::path& path);
void write_image(const std::filesystem::path& path, const Image& img);
/// Writes a [0,1] map as an 8-bit grayscale image.
void write_gray(const std::filesystem::path& path, const Field2D& map);
/// Nonzero pixels of a (grayscale) mask image become 1.
BinaryMap read_roi(const std::filesystem::path& path);

struct Sample {
    std::string stem;
    Image image;
    std::optional<PointAnnotation> annotation;
    std::optional<BinaryMap> roi;
};

/// Directory layout: <root>/<split>/images/*.png|jpg, <root>/<split>/annotations/<stem>.json,
/// optional <root>/<split>/roi.png. Images are decoded on access; order is by file name.
class Dataset {
public:
    Dataset() = default;
    static Dataset open(const std::filesystem::path& root, const std::string& split,
                        bool require_annotations);
    static Dataset from_samples(std::vector<Sample> samples);

    [[nodiscard]] std::size_t size() const;
    [[nodiscard]] bool empty() const { return size() == 0; }
    [[nodiscard]] Sample get(std::size_t i) const;
    [[nodiscard]] std::string stem(std::size_t i) const;

private:
    struct Entry {
        std::string stem;
        std::filesystem::path image;
        std::optional<std::filesystem::path> annotation;
    };
    std::vector<Entry> entries_;
    std::optional<BinaryMap> roi_;
    std::vector<Sample> memory_;
    bool in_memory_ = false;
};

void save_samples(const std::filesystem::path& dir, const std::vector<Sample>& samples);

// ---- synthetic two-domain data -------------------------------------------

enum class Domain { source, target };

std::string to_string(Domain d);
Domain parse_domain(const std::string& name);

/// Background model of one domain.
struct DomainStyle {
    float brightness = 0.7f;     // mean gray level
    float noise = 0.02f;         // per-pixel Gaussian noise std
    float texture_freq = 0.0f;   // cycles per pixel of the oriented grating
    float texture_amp = 0.0f;    // grating amplitude
    int clutter = 0;             // non-object bright spots per image
};

struct SynthSpec {
    int height = 64;
    int width = 64;
    int min_count = 5;
    int max_count = 30;
    float min_radius = 1.5f;
    float max_radius = 2.5f;
    DomainStyle source{0.70f, 0.02f, 0.0f, 0.0f, 0};
    DomainStyle target{0.25f, 0.04f, 0.18f, 0.12f, 6};
    std::uint64_t seed = 1;

    void validate() const;
};

/// Objects are opaque coloured discs with a soft rim composited over the
/// domain background. For a given seed the object layout does not depend on
/// the domain; only the background does.
std::vector<Sample> synth_samples(const SynthSpec& spec, int n_images, Domain domain);
void synth_dataset(const SynthSpec& spec, int n_images, Domain domain,
                   const std::filesystem::path& dir);

// ---- preprocessing --------------------------------------------------------

struct PreprocessOptions {
    int input_size = 512;
    int stride = 16;
    KernelSpec kernel{};
    bool random_flip = false;
};

struct TrainingPair {
    Tensor<float> image;  // (1, 3, input_size, input_size)
    DensityMap target;    // (input_size/stride)^2, sums to the point count
    PointAnnotation points;
};

/// Maps pixel column p to width-1-p and keeps the sub-pixel offset, so that
/// applying it twice is the identity.
PointAnnotation flip_horizontal(const PointAnnotation& ann);
Image flip_horizontal(const Image& img);
Image resize_image(const Image& img, int height, int width);

/// Resize to input_size^2, optionally flip, then regenerate the density
/// target from the transformed points and block-sum it to the output stride.
TrainingPair preprocess(const Sample& sample, const PreprocessOptions& opt, std::mt19937_64* rng);

/// Image as a (1, 3, h, w) tensor.
template <typename T>
Tensor<T> image_tensor(const Image& img);

// ---- density binary format ------------------------------------------------

enum class DensityFormatErrc { bad_magic, bad_version, truncated, trailing_bytes };

class DensityFormatError : public std::runtime_error {
public:
    DensityFormatError(DensityFormatErrc code, const std::string& what)
        : std::runtime_error(what), code_(code) {}
    [[nodiscard]] DensityFormatErrc code() const { return code_; }

private:
    DensityFormatErrc code_;
};

inline constexpr std::size_t kDensityHeaderBytes = 16;

/// "ASDM", u8 version 1, 3 reserved bytes, u32 height, u32 width (LE), then
/// height*width float32 LE values in row-major order.
std::vector<std::uint8_t> encode_density(const DensityMap& map);
DensityMap decode_density(std::span<const std::uint8_t> bytes);
void write_density(const std::filesystem::path& path, const DensityMap& map);
DensityMap read_density(const std::filesystem::path& path);

}  // namespace asnet
