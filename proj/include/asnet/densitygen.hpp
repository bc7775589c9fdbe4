#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "asnet/field.hpp"

namespace asnet {

/// Pixel coordinates, origin top-left, x rightward and y downward.
struct Point {
    double x = 0.0;
    double y = 0.0;
    bool operator==(const Point&) const = default;
};

struct PointAnnotation {
    std::vector<Point> points;
    int height = 0;
    int width = 0;

    [[nodiscard]] std::size_t count() const { return points.size(); }
};

/// Raised when an annotation point lies outside [0, width) x [0, height).
class PointOutOfBounds : public std::invalid_argument {
public:
    PointOutOfBounds(std::size_t index, Point p);
    [[nodiscard]] std::size_t index() const { return index_; }

private:
    std::size_t index_;
};

enum class KernelMode { fixed, geometry_adaptive };

struct KernelSpec {
    KernelMode mode = KernelMode::fixed;
    double sigma = 4.0;         // pixels; fixed mode, and fallback for isolated points
    int k_neighbors = 3;        // adaptive mode
    double beta = 0.3;          // adaptive mode: sigma = beta * mean kNN distance
    double truncation = 4.0;    // kernel half-width in multiples of sigma

    void validate() const;
};

/// Normalized square Gaussian of side 2*ceil(truncation*sigma)+1.
Field2D gaussian_kernel(double sigma, double truncation);

/// Throws PointOutOfBounds naming the first offending point.
void validate_annotation(const PointAnnotation& ann);

/// Each point contributes mass exactly 1: the kernel is clipped at the image
/// border and the clipped part renormalized. Points are accumulated in a
/// canonical (y, x) order so the output does not depend on list order.
DensityMap points_to_density(const PointAnnotation& ann, const KernelSpec& spec = {});

/// Block-sum by `factor` in both dimensions; total mass is preserved.
DensityMap downsample_count_preserving(const DensityMap& map, int factor);

/// Inverse spread of downsample_count_preserving: each cell's mass is split
/// evenly over its factor x factor block.
DensityMap upsample_count_preserving(const DensityMap& map, int factor);

/// Per-point kernel widths used in geometry-adaptive mode (exposed for tests).
std::vector<double> adaptive_sigmas(const std::vector<Point>& points, const KernelSpec& spec);

// Annotation file: {"points": [[x, y], ...], "height": H, "width": W}
PointAnnotation annotation_from_json(const nlohmann::json& j);
nlohmann::json annotation_to_json(const PointAnnotation& ann);
PointAnnotation read_annotation(const std::string& path);
void write_annotation(const std::string& path, const PointAnnotation& ann);

}  // namespace asnet
