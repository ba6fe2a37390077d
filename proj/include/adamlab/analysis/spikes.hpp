#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "adamlab/analysis/regression.hpp"
#include "adamlab/analysis/rolling.hpp"
#include "adamlab/errors.hpp"

namespace adamlab {

struct SpikeEvent {
    std::uint64_t peak_epoch = 0;
    double peak_loss = 0.0;
    double baseline_loss = 0.0;  // rolling median at the peak
    double magnitude = 0.0;      // log10(peak_loss / baseline_loss)
    std::uint64_t onset_epoch = 0;
    std::uint64_t settle_epoch = 0;
};

struct SpikeTrain {
    std::vector<SpikeEvent> events;
    std::vector<std::uint64_t> intervals;  // peak-to-next-peak distances

    std::size_t size() const { return events.size(); }
    bool empty() const { return events.empty(); }
};

struct SpikeDetectorOptions {
    std::size_t window = 501;
    double threshold_ratio = 10.0;
    std::size_t min_separation = 50;

    void validate() const {
        if (window < 3 || window % 2 == 0) throw InvalidArgument("spike window must be odd and >= 3");
        if (!(threshold_ratio > 1.0)) throw InvalidArgument("threshold_ratio must exceed 1");
        if (min_separation < 1) throw InvalidArgument("min_separation must be >= 1");
    }
};

/// Length of the leading run of finite values.
inline std::size_t finite_prefix(std::span<const double> series) {
    const auto it = std::find_if(series.begin(), series.end(), [](double v) { return !std::isfinite(v); });
    return static_cast<std::size_t>(it - series.begin());
}

/// Loss explosions relative to a centered rolling median baseline. Only the
/// finite prefix of the series is inspected.
inline SpikeTrain detect_spikes(std::span<const double> loss, const SpikeDetectorOptions& opts = {}) {
    opts.validate();
    if (loss.size() < 3) throw InvalidArgument("spike detection needs at least 3 samples");
    const auto series = loss.first(finite_prefix(loss));
    const std::size_t n = series.size();
    SpikeTrain train;
    if (n == 0) return train;

    const std::vector<double> baseline = rolling_median(series, opts.window);
    auto is_candidate = [&](std::size_t i) {
        return baseline[i] > 0.0 && series[i] > opts.threshold_ratio * baseline[i];
    };

    // Runs of consecutive candidates, merged when the gap is below min_separation.
    struct Group {
        std::size_t first, last;
    };
    std::vector<Group> groups;
    for (std::size_t i = 0; i < n; ++i) {
        if (!is_candidate(i)) continue;
        if (!groups.empty() && (i - groups.back().last == 1 || i - groups.back().last < opts.min_separation)) {
            groups.back().last = i;
        } else {
            groups.push_back({i, i});
        }
    }

    for (const auto& g : groups) {
        std::size_t peak = g.first;
        for (std::size_t i = g.first; i <= g.last; ++i)
            if (series[i] > series[peak]) peak = i;
        SpikeEvent ev;
        ev.peak_epoch = peak;
        ev.peak_loss = series[peak];
        ev.baseline_loss = baseline[peak];
        ev.magnitude = std::log10(ev.peak_loss / ev.baseline_loss);
        ev.onset_epoch = g.first > 0 ? g.first - 1 : 0;
        ev.settle_epoch = std::min(g.last + 1, n - 1);
        train.events.push_back(ev);
    }
    for (std::size_t i = 1; i < train.events.size(); ++i)
        train.intervals.push_back(train.events[i].peak_epoch - train.events[i - 1].peak_epoch);
    return train;
}

/// Interval after each spike against that spike's log-magnitude.
inline RegressionFit fit_interval_vs_logmag(const SpikeTrain& train) {
    if (train.events.size() < 3)
        throw InsufficientData("interval/magnitude regression needs at least 3 spikes");
    std::vector<double> x, y;
    for (std::size_t i = 0; i + 1 < train.events.size(); ++i) {
        x.push_back(train.events[i].magnitude);
        y.push_back(static_cast<double>(train.intervals[i]));
    }
    return ordinary_least_squares(x, y);
}

struct Beta2Fit {
    double beta2 = 0.0;
    RegressionFit fit;
};

/// Regression of interval/magnitude slopes against 1/(1 - beta2).
inline RegressionFit fit_coefficient_vs_beta2(std::span<const Beta2Fit> fits) {
    std::vector<double> betas;
    for (const auto& f : fits) {
        if (!(f.beta2 >= 0.0 && f.beta2 < 1.0)) throw InvalidArgument("beta2 must lie in [0, 1)");
        betas.push_back(f.beta2);
    }
    std::sort(betas.begin(), betas.end());
    if (std::unique(betas.begin(), betas.end()) - betas.begin() < 3)
        throw InsufficientData("coefficient regression needs at least 3 distinct beta2 values");
    std::vector<double> x, y;
    for (const auto& f : fits) {
        x.push_back(1.0 / (1.0 - f.beta2));
        y.push_back(f.fit.slope);
    }
    return ordinary_least_squares(x, y);
}

struct SpikePrediction {
    std::uint64_t predicted_epoch = 0;
    double confidence = 0.0;
    std::string method;  // "interval-law", "median-interval" or "beta2-formula"
};

/// Where the next spike is expected, given the spikes recorded so far.
inline SpikePrediction predict_next_spike(const SpikeTrain& train, double beta2, std::uint64_t current_epoch) {
    if (!(beta2 >= 0.0 && beta2 < 1.0)) throw InvalidArgument("beta2 must lie in [0, 1)");
    if (!train.empty() && current_epoch < train.events.back().peak_epoch)
        throw InvalidArgument("current_epoch precedes the last recorded spike");
    const auto formula_period = static_cast<std::uint64_t>(std::llround(1.0 / (1.0 - beta2)));

    SpikePrediction out;
    if (train.events.size() < 3) {
        const std::uint64_t from = train.empty() ? current_epoch : train.events.back().peak_epoch;
        out.predicted_epoch = from + formula_period;
        out.confidence = 0.25;
        out.method = "beta2-formula";
        return out;
    }

    const std::uint64_t last_peak = train.events.back().peak_epoch;
    std::vector<double> intervals(train.intervals.begin(), train.intervals.end());
    const double median_interval = median_of(intervals);
    try {
        const RegressionFit fit = fit_interval_vs_logmag(train);
        const double r2 = std::clamp(fit.r_squared, 0.0, 1.0);
        double interval = median_interval;
        out.method = "median-interval";
        if (r2 >= 0.5) {
            interval = fit.predict(train.events.back().magnitude);
            out.method = "interval-law";
        }
        out.predicted_epoch = last_peak + static_cast<std::uint64_t>(std::max<long long>(1, std::llround(interval)));
        out.confidence = r2;
    } catch (const DegenerateRegression&) {
        out.predicted_epoch = last_peak + static_cast<std::uint64_t>(std::max<long long>(1, std::llround(median_interval)));
        out.confidence = 0.25;
        out.method = "median-interval";
    }
    return out;
}

}  // namespace adamlab
