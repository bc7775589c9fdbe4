#pragma once

#include <cstdint>
#include <vector>

namespace asnet {

/// Row-major 2-D field of reals. Used for density maps (persons per pixel)
/// and discrimination maps (per-location source probability).
class Field2D {
public:
    Field2D() = default;
    Field2D(int height, int width, double fill = 0.0);
    Field2D(int height, int width, std::vector<double> values);

    [[nodiscard]] int height() const { return height_; }
    [[nodiscard]] int width() const { return width_; }
    [[nodiscard]] std::size_t size() const { return values_.size(); }
    [[nodiscard]] bool empty() const { return values_.empty(); }

    double& at(int y, int x) { return values_[static_cast<std::size_t>(y) * width_ + x]; }
    [[nodiscard]] double at(int y, int x) const {
        return values_[static_cast<std::size_t>(y) * width_ + x];
    }

    [[nodiscard]] const std::vector<double>& values() const { return values_; }
    std::vector<double>& values() { return values_; }

    [[nodiscard]] double sum() const;
    [[nodiscard]] double mean() const;

    bool operator==(const Field2D&) const = default;

private:
    int height_ = 0;
    int width_ = 0;
    std::vector<double> values_;
};

using DensityMap = Field2D;
using DiscriminationMap = Field2D;

/// Row-major binary map; entries are 0 or 1.
struct BinaryMap {
    int height = 0;
    int width = 0;
    std::vector<std::uint8_t> values;

    BinaryMap() = default;
    BinaryMap(int h, int w, std::uint8_t fill = 0)
        : height(h), width(w), values(static_cast<std::size_t>(h) * w, fill) {}

    std::uint8_t& at(int y, int x) { return values[static_cast<std::size_t>(y) * width + x]; }
    [[nodiscard]] std::uint8_t at(int y, int x) const {
        return values[static_cast<std::size_t>(y) * width + x];
    }
    bool operator==(const BinaryMap&) const = default;
};

}  // namespace asnet
