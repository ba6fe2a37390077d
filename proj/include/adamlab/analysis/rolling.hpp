#pragma once

#include <algorithm>
#include <cstddef>
#include <set>
#include <span>
#include <vector>

#include "adamlab/errors.hpp"

namespace adamlab {

namespace detail {

// Running median of a multiset that supports removal.
class SlidingMedian {
   public:
    void insert(double x) {
        if (low_.empty() || x <= *low_.rbegin())
            low_.insert(x);
        else
            high_.insert(x);
        rebalance();
    }

    void erase(double x) {
        if (!low_.empty() && x <= *low_.rbegin()) {
            low_.erase(low_.find(x));
        } else {
            high_.erase(high_.find(x));
        }
        rebalance();
    }

    double median() const {
        if (low_.size() > high_.size()) return *low_.rbegin();
        return 0.5 * (*low_.rbegin() + *high_.begin());
    }

   private:
    // low_ holds the smaller half and is never smaller than high_.
    void rebalance() {
        if (low_.size() > high_.size() + 1) {
            auto it = std::prev(low_.end());
            high_.insert(*it);
            low_.erase(it);
        } else if (high_.size() > low_.size()) {
            auto it = high_.begin();
            low_.insert(*it);
            high_.erase(it);
        }
    }

    std::multiset<double> low_;
    std::multiset<double> high_;
};

}  // namespace detail

/// Centered rolling median with an odd window. Near the edges the window
/// shrinks symmetrically (point i uses [i-h, i+h], h = min(half, i, n-1-i)),
/// so a monotone series is its own rolling median. Input must not contain NaN.
inline std::vector<double> rolling_median(std::span<const double> series, std::size_t window) {
    if (window == 0 || window % 2 == 0) throw InvalidArgument("rolling median window must be odd");
    const std::size_t n = series.size();
    const std::size_t half = window / 2;
    std::vector<double> out(n);

    detail::SlidingMedian med;
    std::size_t lo = 0, hi = 0;  // current window is [lo, hi)
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t h = std::min({half, i, n - 1 - i});
        // Both bounds are nondecreasing in i.
        while (hi < i + h + 1) med.insert(series[hi++]);
        while (lo < i - h) med.erase(series[lo++]);
        out[i] = med.median();
    }
    return out;
}

/// Centered rolling mean whose half-width shrinks symmetrically near the edges
/// (point i averages [i-h, i+h] with h = min(half, i, n-1-i)). A linear series
/// is its own rolling mean under this rule.
inline std::vector<double> symmetric_rolling_mean(std::span<const double> series, std::size_t window) {
    if (window == 0 || window % 2 == 0) throw InvalidArgument("rolling mean window must be odd");
    const std::size_t n = series.size();
    std::vector<double> prefix(n + 1, 0.0);
    for (std::size_t i = 0; i < n; ++i) prefix[i + 1] = prefix[i] + series[i];
    std::vector<double> out(n);
    const std::size_t half = window / 2;
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t h = std::min({half, i, n - 1 - i});
        out[i] = (prefix[i + h + 1] - prefix[i - h]) / static_cast<double>(2 * h + 1);
    }
    return out;
}

/// Median of a copy of values (mean of the middle pair for even counts).
inline double median_of(std::vector<double> values) {
    if (values.empty()) throw InsufficientData("median of an empty set");
    const std::size_t mid = values.size() / 2;
    std::nth_element(values.begin(), values.begin() + mid, values.end());
    const double upper = values[mid];
    if (values.size() % 2 == 1) return upper;
    const double lower = *std::max_element(values.begin(), values.begin() + mid);
    return 0.5 * (lower + upper);
}

}  // namespace adamlab
