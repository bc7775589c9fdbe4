#pragma once

#include <cmath>
#include <utility>
#include <vector>

namespace asnet {

/// Exact floating-point accumulator (Shewchuk expansion). The running sum is
/// held as non-overlapping partials of increasing magnitude; value() rounds
/// the exact total once, to nearest.
class ExactSum {
public:
    void add(double x) {
        if (!std::isfinite(x)) {
            special_ += x;
            return;
        }
        std::size_t i = 0;
        for (double y : partials_) {
            if (std::fabs(x) < std::fabs(y)) std::swap(x, y);
            const double hi = x + y;
            const double lo = y - (hi - x);
            if (lo != 0.0) partials_[i++] = lo;
            x = hi;
        }
        partials_.resize(i);
        partials_.push_back(x);
    }

    /// Adds another exact sum, negated when `negate` is set.
    void add(const ExactSum& other, bool negate = false) {
        for (double p : other.partials_) add(negate ? -p : p);
        special_ += negate ? -other.special_ : other.special_;
    }

    /// Sign of the exact total: -1, 0 or 1.
    [[nodiscard]] int sign() const {
        if (special_ != 0.0 || std::isnan(special_)) return special_ > 0 ? 1 : -1;
        // The largest nonzero partial dominates the rest.
        for (auto it = partials_.rbegin(); it != partials_.rend(); ++it) {
            if (*it != 0.0) return *it > 0 ? 1 : -1;
        }
        return 0;
    }

    [[nodiscard]] double value() const {
        if (special_ != 0.0 || std::isnan(special_)) return special_;
        std::size_t n = partials_.size();
        if (n == 0) return 0.0;
        double hi = partials_[--n];
        double lo = 0.0;
        while (n > 0) {
            const double x = hi;
            const double y = partials_[--n];
            hi = x + y;
            lo = y - (hi - x);
            if (lo != 0.0) break;
        }
        // Round half to even across the remaining partials.
        if (n > 0 && ((lo < 0 && partials_[n - 1] < 0) || (lo > 0 && partials_[n - 1] > 0))) {
            const double y = lo * 2;
            const double x = hi + y;
            if (y == x - hi) hi = x;
        }
        return hi;
    }

private:
    std::vector<double> partials_;
    double special_ = 0.0;  // accumulated infinities and NaNs
};

}  // namespace asnet
