#include "asnet/densitygen.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

namespace asnet {

namespace {

std::string describe(std::size_t index, Point p) {
    std::ostringstream os;
    os << "annotation point " << index << " (" << p.x << ", " << p.y << ") lies outside the image";
    return os.str();
}

int kernel_half_width(double sigma, double truncation) {
    return static_cast<int>(std::ceil(truncation * sigma));
}

// Adds one unit of mass centred on pixel (cx, cy), clipped to the map.
void splat(DensityMap& map, int cx, int cy, double sigma, double truncation) {
    const int r = kernel_half_width(sigma, truncation);
    const int y0 = std::max(0, cy - r);
    const int y1 = std::min(map.height() - 1, cy + r);
    const int x0 = std::max(0, cx - r);
    const int x1 = std::min(map.width() - 1, cx + r);
    const double inv = 1.0 / (2.0 * sigma * sigma);

    std::vector<double> gy(y1 - y0 + 1);
    std::vector<double> gx(x1 - x0 + 1);
    for (int y = y0; y <= y1; ++y) gy[y - y0] = std::exp(-(y - cy) * (y - cy) * inv);
    for (int x = x0; x <= x1; ++x) gx[x - x0] = std::exp(-(x - cx) * (x - cx) * inv);
    // Separable kernel: the clipped mass is the product of the clipped 1-D sums.
    const double mass = std::accumulate(gy.begin(), gy.end(), 0.0) *
                        std::accumulate(gx.begin(), gx.end(), 0.0);
    for (int y = y0; y <= y1; ++y) {
        const double wy = gy[y - y0] / mass;
        for (int x = x0; x <= x1; ++x) map.at(y, x) += wy * gx[x - x0];
    }
}

}  // namespace

PointOutOfBounds::PointOutOfBounds(std::size_t index, Point p)
    : std::invalid_argument(describe(index, p)), index_(index) {}

void KernelSpec::validate() const {
    if (!(sigma > 0.0)) throw std::invalid_argument("KernelSpec: sigma must be positive");
    if (!(truncation >= 2.0)) throw std::invalid_argument("KernelSpec: truncation must be >= 2");
    if (mode == KernelMode::geometry_adaptive) {
        if (k_neighbors < 1) throw std::invalid_argument("KernelSpec: k_neighbors must be >= 1");
        if (!(beta > 0.0)) throw std::invalid_argument("KernelSpec: beta must be positive");
    }
}

Field2D gaussian_kernel(double sigma, double truncation) {
    if (!(sigma > 0.0)) throw std::invalid_argument("gaussian_kernel: sigma must be positive");
    if (!(truncation > 0.0)) throw std::invalid_argument("gaussian_kernel: truncation must be positive");
    const int r = kernel_half_width(sigma, truncation);
    const int side = 2 * r + 1;
    Field2D k(side, side);
    const double inv = 1.0 / (2.0 * sigma * sigma);
    for (int y = 0; y < side; ++y) {
        for (int x = 0; x < side; ++x) {
            const double dy = y - r;
            const double dx = x - r;
            k.at(y, x) = std::exp(-(dx * dx + dy * dy) * inv);
        }
    }
    const double total = k.sum();
    for (double& v : k.values()) v /= total;
    return k;
}

void validate_annotation(const PointAnnotation& ann) {
    if (ann.height <= 0 || ann.width <= 0) {
        throw std::invalid_argument("annotation: image size must be positive");
    }
    for (std::size_t i = 0; i < ann.points.size(); ++i) {
        const Point& p = ann.points[i];
        if (!(p.x >= 0.0 && p.x < ann.width && p.y >= 0.0 && p.y < ann.height)) {
            throw PointOutOfBounds(i, p);
        }
    }
}

std::vector<double> adaptive_sigmas(const std::vector<Point>& points, const KernelSpec& spec) {
    std::vector<double> sigmas(points.size(), spec.sigma);
    if (points.size() < 2) return sigmas;
    std::vector<double> dists;
    for (std::size_t i = 0; i < points.size(); ++i) {
        dists.clear();
        for (std::size_t j = 0; j < points.size(); ++j) {
            if (i == j) continue;
            dists.push_back(std::hypot(points[i].x - points[j].x, points[i].y - points[j].y));
        }
        const std::size_t k = std::min<std::size_t>(spec.k_neighbors, dists.size());
        std::partial_sort(dists.begin(), dists.begin() + k, dists.end());
        const double mean = std::accumulate(dists.begin(), dists.begin() + k, 0.0) / k;
        // Coincident points would give a zero width; fall back to the fixed sigma.
        sigmas[i] = mean > 0.0 ? spec.beta * mean : spec.sigma;
    }
    return sigmas;
}

DensityMap points_to_density(const PointAnnotation& ann, const KernelSpec& spec) {
    spec.validate();
    validate_annotation(ann);
    DensityMap map(ann.height, ann.width);
    if (ann.points.empty()) return map;

    std::vector<double> sigmas = spec.mode == KernelMode::geometry_adaptive
                                     ? adaptive_sigmas(ann.points, spec)
                                     : std::vector<double>(ann.points.size(), spec.sigma);

    std::vector<std::size_t> order(ann.points.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const Point& pa = ann.points[a];
        const Point& pb = ann.points[b];
        if (pa.y != pb.y) return pa.y < pb.y;
        if (pa.x != pb.x) return pa.x < pb.x;
        return sigmas[a] < sigmas[b];
    });

    for (std::size_t i : order) {
        const Point& p = ann.points[i];
        splat(map, static_cast<int>(std::floor(p.x)), static_cast<int>(std::floor(p.y)), sigmas[i],
              spec.truncation);
    }
    return map;
}

DensityMap downsample_count_preserving(const DensityMap& map, int factor) {
    if (factor < 1) throw std::invalid_argument("downsample: factor must be >= 1");
    if (map.height() % factor != 0 || map.width() % factor != 0) {
        throw std::invalid_argument("downsample: map " + std::to_string(map.height()) + "x" +
                                    std::to_string(map.width()) + " not divisible by " +
                                    std::to_string(factor));
    }
    if (factor == 1) return map;
    DensityMap out(map.height() / factor, map.width() / factor);
    for (int y = 0; y < map.height(); ++y) {
        for (int x = 0; x < map.width(); ++x) out.at(y / factor, x / factor) += map.at(y, x);
    }
    return out;
}

DensityMap upsample_count_preserving(const DensityMap& map, int factor) {
    if (factor < 1) throw std::invalid_argument("upsample: factor must be >= 1");
    if (factor == 1) return map;
    DensityMap out(map.height() * factor, map.width() * factor);
    const double share = 1.0 / (static_cast<double>(factor) * factor);
    for (int y = 0; y < out.height(); ++y) {
        for (int x = 0; x < out.width(); ++x) out.at(y, x) = map.at(y / factor, x / factor) * share;
    }
    return out;
}

PointAnnotation annotation_from_json(const nlohmann::json& j) {
    PointAnnotation ann;
    ann.height = j.at("height").get<int>();
    ann.width = j.at("width").get<int>();
    for (const auto& p : j.at("points")) {
        if (!p.is_array() || p.size() != 2) {
            throw std::invalid_argument("annotation: each point must be [x, y]");
        }
        ann.points.push_back({p[0].get<double>(), p[1].get<double>()});
    }
    return ann;
}

nlohmann::json annotation_to_json(const PointAnnotation& ann) {
    nlohmann::json pts = nlohmann::json::array();
    for (const Point& p : ann.points) pts.push_back({p.x, p.y});
    return {{"points", pts}, {"height", ann.height}, {"width", ann.width}};
}

PointAnnotation read_annotation(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open annotation " + path);
    try {
        return annotation_from_json(nlohmann::json::parse(in));
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error("malformed annotation " + path + ": " + e.what());
    }
}

void write_annotation(const std::string& path, const PointAnnotation& ann) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write annotation " + path);
    out << annotation_to_json(ann).dump() << '\n';
}

}  // namespace asnet
