#include "asnet/metrics.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "asnet/exact_sum.hpp"

namespace asnet {

CountErrors mae_mse(const std::vector<CountRecord>& records) {
    if (records.empty()) throw std::invalid_argument("mae_mse: no records");
    double abs_sum = 0.0;
    double sq_sum = 0.0;
    for (const CountRecord& r : records) {
        const double d = r.predicted - r.ground_truth;
        abs_sum += std::abs(d);
        sq_sum += d * d;
    }
    const double n = static_cast<double>(records.size());
    return {abs_sum / n, std::sqrt(sq_sum / n)};
}

namespace {

ExactSum exact_difference(const DensityMap& pred, const DensityMap& gt) {
    ExactSum d;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        d.add(pred.values()[i]);
        d.add(-gt.values()[i]);
    }
    return d;
}

double exact_total(const DensityMap& map) {
    ExactSum s;
    for (double v : map.values()) s.add(v);
    return s.value();
}

}  // namespace

// Region differences are kept exact and the total is rounded once, so the
// level-0 value is the rounded |C - C_gt| and levels are monotone in L.
double game(const DensityMap& pred, const DensityMap& gt, int level) {
    if (level < 0) throw std::invalid_argument("game: level must be >= 0");
    if (level > 15) throw std::invalid_argument("game: level must be <= 15");
    if (pred.height() != gt.height() || pred.width() != gt.width()) {
        throw std::invalid_argument("game: map shapes differ");
    }
    const int cells = 1 << level;
    const int h = pred.height();
    const int w = pred.width();
    std::vector<ExactSum> diff(static_cast<std::size_t>(cells) * cells);
    std::vector<int> row_of(h);
    std::vector<int> col_of(w);
    // Region r covers [floor(r*dim/cells), floor((r+1)*dim/cells)).
    for (int r = 0; r < cells; ++r) {
        const int y0 = static_cast<int>(static_cast<long long>(r) * h / cells);
        const int y1 = static_cast<int>(static_cast<long long>(r + 1) * h / cells);
        for (int y = y0; y < y1; ++y) row_of[y] = r;
        const int x0 = static_cast<int>(static_cast<long long>(r) * w / cells);
        const int x1 = static_cast<int>(static_cast<long long>(r + 1) * w / cells);
        for (int x = x0; x < x1; ++x) col_of[x] = r;
    }
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            ExactSum& d = diff[static_cast<std::size_t>(row_of[y]) * cells + col_of[x]];
            d.add(pred.at(y, x));
            d.add(-gt.at(y, x));
        }
    }
    ExactSum total;
    for (const ExactSum& d : diff) total.add(d, d.sign() < 0);
    return total.value();
}

DensityMap apply_roi(const DensityMap& map, const BinaryMap& roi) {
    if (roi.height != map.height() || roi.width != map.width()) {
        throw std::invalid_argument("apply_roi: mask " + std::to_string(roi.height) + "x" +
                                    std::to_string(roi.width) + " does not match map " +
                                    std::to_string(map.height()) + "x" + std::to_string(map.width()));
    }
    DensityMap out = map;
    for (std::size_t i = 0; i < out.size(); ++i) out.values()[i] *= roi.values[i] ? 1.0 : 0.0;
    return out;
}

nlohmann::json to_json(const MetricsRecord& m) {
    return {{"mae", m.mae},         {"mse", m.mse},         {"game0", m.game[0]},
            {"game1", m.game[1]},   {"game2", m.game[2]},   {"game3", m.game[3]},
            {"n_images", m.n_images}};
}

void MetricsAccumulator::add(const DensityMap& pred, const DensityMap& gt) {
    if (pred.height() != gt.height() || pred.width() != gt.width()) {
        throw std::invalid_argument("MetricsAccumulator: map shapes differ");
    }
    records_.push_back({exact_total(pred), exact_total(gt)});
    errors_.push_back(exact_difference(pred, gt).value());
    for (int l = 0; l < 4; ++l) game_sum_[l] += game(pred, gt, l);
}

MetricsRecord MetricsAccumulator::finish() const {
    if (errors_.empty()) throw std::invalid_argument("MetricsAccumulator: no images");
    double abs_sum = 0.0;
    double sq_sum = 0.0;
    for (double d : errors_) {
        abs_sum += std::abs(d);
        sq_sum += d * d;
    }
    MetricsRecord m;
    m.n_images = static_cast<int>(errors_.size());
    m.mae = abs_sum / m.n_images;
    m.mse = std::sqrt(sq_sum / m.n_images);
    for (int l = 0; l < 4; ++l) m.game[l] = game_sum_[l] / m.n_images;
    return m;
}

}  // namespace asnet
