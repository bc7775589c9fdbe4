#pragma once

#include <vector>

#include <json.hpp>

#include "asnet/field.hpp"

namespace asnet {

struct CountRecord {
    double predicted = 0.0;
    double ground_truth = 0.0;
};

struct CountErrors {
    double mae = 0.0;
    double mse = 0.0;  // root mean squared error
};

CountErrors mae_mse(const std::vector<CountRecord>& records);

/// Sum over the 2^L x 2^L grid of |region count difference|. Region edges sit
/// at floor(i * dim / 2^L), so remainder pixels land in the last row/column.
/// Computed exactly and rounded once.
double game(const DensityMap& pred, const DensityMap& gt, int level);

/// Zeroes density outside the mask.
DensityMap apply_roi(const DensityMap& map, const BinaryMap& roi);

struct MetricsRecord {
    double mae = 0.0;
    double mse = 0.0;
    double game[4] = {0.0, 0.0, 0.0, 0.0};
    int n_images = 0;
};

nlohmann::json to_json(const MetricsRecord& m);

/// Dataset-level accumulator for per-image prediction/ground-truth maps.
class MetricsAccumulator {
public:
    void add(const DensityMap& pred, const DensityMap& gt);
    [[nodiscard]] MetricsRecord finish() const;
    [[nodiscard]] const std::vector<CountRecord>& records() const { return records_; }
    /// Per-image count error C - C_gt, exact then rounded; MAE and MSE use these.
    [[nodiscard]] const std::vector<double>& errors() const { return errors_; }

private:
    std::vector<CountRecord> records_;
    std::vector<double> errors_;
    double game_sum_[4] = {0.0, 0.0, 0.0, 0.0};
};

}  // namespace asnet
