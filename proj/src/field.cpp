#include "asnet/field.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>
#include <string>

namespace asnet {

Field2D::Field2D(int height, int width, double fill) : height_(height), width_(width) {
    if (height < 0 || width < 0) throw std::invalid_argument("Field2D: negative dimension");
    values_.assign(static_cast<std::size_t>(height) * width, fill);
}

Field2D::Field2D(int height, int width, std::vector<double> values)
    : height_(height), width_(width), values_(std::move(values)) {
    if (height < 0 || width < 0) throw std::invalid_argument("Field2D: negative dimension");
    if (values_.size() != static_cast<std::size_t>(height) * width) {
        throw std::invalid_argument("Field2D: expected " + std::to_string(height * width) +
                                    " values, got " + std::to_string(values_.size()));
    }
}

double Field2D::sum() const { return std::accumulate(values_.begin(), values_.end(), 0.0); }

double Field2D::mean() const {
    if (values_.empty()) throw std::invalid_argument("Field2D::mean of empty field");
    const double m = sum() / static_cast<double>(values_.size());
    // Rounding can push the mean of a constant field off its value.
    const auto [lo, hi] = std::minmax_element(values_.begin(), values_.end());
    return std::clamp(m, *lo, *hi);
}

}  // namespace asnet
