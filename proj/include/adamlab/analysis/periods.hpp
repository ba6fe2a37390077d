#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "adamlab/analysis/rolling.hpp"
#include "adamlab/analysis/spikes.hpp"
#include "adamlab/errors.hpp"

namespace adamlab {

enum class PeriodMethod { spike_intervals, autocorrelation };

inline std::string to_string(PeriodMethod m) {
    return m == PeriodMethod::spike_intervals ? "spike-intervals" : "autocorrelation";
}

struct PeriodEstimate {
    double period_epochs = 0.0;
    PeriodMethod method = PeriodMethod::spike_intervals;
    double expected_from_beta = 0.0;  // 1/(1 - beta)
    double ratio = 0.0;               // period_epochs / expected_from_beta
    std::size_t support = 0;          // intervals used, or correlation window length
};

/// Median spike-to-spike interval compared with 1/(1 - beta2).
inline PeriodEstimate estimate_slow_period(const SpikeTrain& train, double beta2) {
    if (!(beta2 >= 0.0 && beta2 < 1.0)) throw InvalidArgument("beta2 must lie in [0, 1)");
    if (train.events.size() < 2) throw InsufficientData("slow period needs at least 2 spikes");
    PeriodEstimate est;
    est.method = PeriodMethod::spike_intervals;
    est.period_epochs = median_of(std::vector<double>(train.intervals.begin(), train.intervals.end()));
    est.expected_from_beta = 1.0 / (1.0 - beta2);
    est.ratio = est.period_epochs / est.expected_from_beta;
    est.support = train.intervals.size();
    return est;
}

namespace detail {

// Pearson correlation between series[0, n-lag) and series[lag, n).
inline double lagged_correlation(std::span<const double> d, std::size_t lag) {
    const std::size_t n = d.size() - lag;
    double cross = 0.0, head = 0.0, tail = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        cross += d[i] * d[i + lag];
        head += d[i] * d[i];
        tail += d[i + lag] * d[i + lag];
    }
    if (!(head > 0.0 && tail > 0.0)) return 0.0;
    return cross / std::sqrt(head * tail);
}

}  // namespace detail

inline constexpr double min_autocorrelation_peak = 0.1;

/// Fast-oscillation period of a stride-1 window by autocorrelation after
/// removing the rolling-mean trend (window round(3/(1 - beta1)), forced odd).
/// Returns nullopt when no autocorrelation peak exceeds 0.1.
inline std::optional<PeriodEstimate> estimate_fast_period(std::span<const double> series, double beta1) {
    if (!(beta1 >= 0.0 && beta1 < 1.0)) throw InvalidArgument("beta1 must lie in [0, 1)");
    const double expected = 1.0 / (1.0 - beta1);
    if (static_cast<double>(series.size()) < 4.0 * expected)
        throw InsufficientData("fast period needs a series of at least 4/(1 - beta1) samples");
    for (double v : series)
        if (!std::isfinite(v)) throw InvalidArgument("fast period input must be finite");

    auto window = static_cast<std::size_t>(std::llround(3.0 * expected));
    if (window % 2 == 0) ++window;
    const std::vector<double> trend = symmetric_rolling_mean(series, window);
    std::vector<double> detrended(series.size());
    double energy_in = 0.0, energy_out = 0.0;
    for (std::size_t i = 0; i < series.size(); ++i) {
        detrended[i] = series[i] - trend[i];
        energy_in += series[i] * series[i];
        energy_out += detrended[i] * detrended[i];
    }
    // Residual at rounding level: nothing oscillates.
    if (!(energy_out > 1e-18 * energy_in) || energy_out == 0.0) return std::nullopt;

    const std::size_t max_lag = series.size() / 2;
    if (max_lag < 3) return std::nullopt;
    double prev = detail::lagged_correlation(detrended, 1);
    double cur = detail::lagged_correlation(detrended, 2);
    for (std::size_t lag = 2; lag < max_lag; ++lag) {
        const double next = detail::lagged_correlation(detrended, lag + 1);
        if (cur > prev && cur >= next && cur > min_autocorrelation_peak) {
            double offset = 0.0;
            const double curvature = prev - 2.0 * cur + next;
            if (curvature < 0.0) offset = 0.5 * (prev - next) / curvature;
            PeriodEstimate est;
            est.method = PeriodMethod::autocorrelation;
            est.period_epochs = static_cast<double>(lag) + offset;
            est.expected_from_beta = expected;
            est.ratio = est.period_epochs / expected;
            est.support = series.size();
            return est;
        }
        prev = cur;
        cur = next;
    }
    return std::nullopt;
}

}  // namespace adamlab
