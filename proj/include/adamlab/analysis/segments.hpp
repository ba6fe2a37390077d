#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "adamlab/analysis/rolling.hpp"
#include "adamlab/analysis/spikes.hpp"

namespace adamlab {

enum class SegmentKind { smooth_monotone, oscillatory, spiking, diverged };

inline std::string to_string(SegmentKind kind) {
    switch (kind) {
        case SegmentKind::smooth_monotone:
            return "smooth-monotone";
        case SegmentKind::oscillatory:
            return "oscillatory";
        case SegmentKind::spiking:
            return "spiking";
        case SegmentKind::diverged:
            return "diverged";
    }
    return "?";
}

struct SegmentLabel {
    std::uint64_t start = 0;  // inclusive
    std::uint64_t end = 0;    // inclusive
    SegmentKind kind = SegmentKind::smooth_monotone;

    friend bool operator==(const SegmentLabel&, const SegmentLabel&) = default;
};

struct SegmentOptions {
    std::size_t median_window = 51;
    double violation_fraction = 0.01;
};

namespace detail {

// Monotone (either direction) up to a fraction of adjacent-pair violations.
inline bool nearly_monotone(std::span<const double> values, double violation_fraction) {
    if (values.size() < 2) return true;
    std::size_t rises = 0, falls = 0;
    for (std::size_t i = 1; i < values.size(); ++i) {
        if (values[i] > values[i - 1]) ++rises;
        if (values[i] < values[i - 1]) ++falls;
    }
    const auto allowed = static_cast<std::size_t>(violation_fraction * static_cast<double>(values.size() - 1));
    return std::min(rises, falls) <= allowed;
}

}  // namespace detail

/// Partition a run into spiking windows, a trailing diverged range, and the
/// quiet ranges between them (smooth-monotone or oscillatory).
inline std::vector<SegmentLabel> classify_segments(std::span<const double> loss, const SpikeTrain& spikes,
                                                   const SegmentOptions& opts = {}) {
    std::vector<SegmentLabel> out;
    const std::size_t n = loss.size();
    if (n == 0) return out;
    const std::size_t finite = finite_prefix(loss);

    // Merged spiking windows inside the finite prefix.
    std::vector<SegmentLabel> spiking;
    for (const auto& ev : spikes.events) {
        if (ev.onset_epoch >= finite) continue;
        const std::uint64_t lo = ev.onset_epoch;
        const std::uint64_t hi = std::min<std::uint64_t>(ev.settle_epoch, finite - 1);
        if (!spiking.empty() && lo <= spiking.back().end + 1)
            spiking.back().end = std::max(spiking.back().end, hi);
        else
            spiking.push_back({lo, hi, SegmentKind::spiking});
    }

    auto quiet = [&](std::uint64_t lo, std::uint64_t hi) {
        const auto range = loss.subspan(lo, hi - lo + 1);
        const std::size_t w = std::min(opts.median_window, range.size() % 2 == 1 ? range.size() : range.size() - 1);
        const auto smooth = rolling_median(range, std::max<std::size_t>(w, 1));
        const bool mono = detail::nearly_monotone(smooth, opts.violation_fraction);
        out.push_back({lo, hi, mono ? SegmentKind::smooth_monotone : SegmentKind::oscillatory});
    };

    std::uint64_t cursor = 0;
    for (const auto& s : spiking) {
        if (s.start > cursor) quiet(cursor, s.start - 1);
        out.push_back(s);
        cursor = s.end + 1;
    }
    if (cursor < finite) quiet(cursor, finite - 1);
    if (finite < n) out.push_back({finite, n - 1, SegmentKind::diverged});
    return out;
}

}  // namespace adamlab
