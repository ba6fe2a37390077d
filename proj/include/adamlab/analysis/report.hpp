#pragma once

// Whole-trajectory analysis and its JSON form.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "adamlab/analysis/periods.hpp"
#include "adamlab/analysis/segments.hpp"
#include "adamlab/analysis/spikes.hpp"
#include "adamlab/analysis/spiral.hpp"
#include "adamlab/optim.hpp"
#include "adamlab/trainer.hpp"

namespace adamlab {

struct AnalysisOptions {
    SpikeDetectorOptions detector{};
    SegmentOptions segments{};
    // Fast oscillations are measured on log10(loss) from each peak over at
    // least this many multiples of 1/(1 - beta1) epochs.
    double fast_window_periods = 8.0;
    std::optional<std::array<std::size_t, 3>> spiral_triple;
    EpochWindow spiral_window{};
};

struct AnalysisResult {
    ConvergenceCheck convergence;
    SpikeTrain spikes;
    std::optional<PeriodEstimate> slow_period;
    std::optional<PeriodEstimate> fast_period;  // median over spike tails
    std::size_t fast_windows = 0;               // tails with a detected period
    std::optional<RegressionFit> interval_fit;
    std::vector<SegmentLabel> segments;
    SpikePrediction prediction;
    std::optional<double> final_loss;  // last finite loss
    std::optional<std::uint64_t> diverged_at;
    std::optional<SpiralPair> spiral;
};

/// Fast-period estimates on the relaxation tail of every spike.
inline std::vector<PeriodEstimate> fast_periods_after_spikes(std::span<const double> loss, const SpikeTrain& spikes,
                                                             double beta1, double window_periods = 8.0) {
    std::vector<PeriodEstimate> out;
    const double expected = 1.0 / (1.0 - beta1);
    const auto min_len = static_cast<std::uint64_t>(std::ceil(window_periods * expected));
    const std::uint64_t finite = finite_prefix(loss);
    for (std::size_t i = 0; i < spikes.events.size(); ++i) {
        const auto& ev = spikes.events[i];
        std::uint64_t end = std::max(ev.settle_epoch, ev.peak_epoch + min_len);
        if (i + 1 < spikes.events.size()) end = std::min(end, spikes.events[i + 1].onset_epoch);
        end = std::min(end, finite);
        if (end <= ev.peak_epoch) continue;
        std::vector<double> tail;
        bool positive = true;
        for (std::uint64_t e = ev.peak_epoch; e < end; ++e) {
            if (!(loss[e] > 0.0)) positive = false;
            tail.push_back(std::log10(loss[e]));
        }
        if (!positive || static_cast<double>(tail.size()) < 4.0 * expected) continue;
        if (auto est = estimate_fast_period(tail, beta1)) out.push_back(*est);
    }
    return out;
}

inline AnalysisResult analyze_trajectory(const Trajectory& traj, const AnalysisOptions& opts = {}) {
    const AdamConfig& adam = traj.config.adam;
    AnalysisResult res;
    res.convergence = check_convergence_condition(adam);
    res.diverged_at = traj.diverged_at;
    const std::size_t finite = finite_prefix(traj.loss);
    if (finite > 0) res.final_loss = traj.loss[finite - 1];

    if (traj.loss.size() >= 3) res.spikes = detect_spikes(traj.loss, opts.detector);
    if (res.spikes.size() >= 2) res.slow_period = estimate_slow_period(res.spikes, adam.beta2);
    if (res.spikes.size() >= 3) {
        try {
            res.interval_fit = fit_interval_vs_logmag(res.spikes);
        } catch (const DegenerateRegression&) {
        }
    }

    const auto fast = fast_periods_after_spikes(traj.loss, res.spikes, adam.beta1, opts.fast_window_periods);
    res.fast_windows = fast.size();
    if (!fast.empty()) {
        std::vector<double> periods;
        for (const auto& f : fast) periods.push_back(f.period_epochs);
        PeriodEstimate agg = fast.front();
        agg.period_epochs = median_of(periods);
        agg.ratio = agg.period_epochs / agg.expected_from_beta;
        agg.support = 0;
        for (const auto& f : fast) agg.support += f.support;
        res.fast_period = agg;
    }

    res.segments = classify_segments(traj.loss, res.spikes, opts.segments);
    const std::uint64_t current = traj.loss.empty() ? 0 : traj.loss.size() - 1;
    res.prediction = predict_next_spike(res.spikes, adam.beta2, current);

    if (opts.spiral_triple) {
        try {
            res.spiral = detect_spiral_pair(std::span<const Snapshot>(traj.snapshots), *opts.spiral_triple,
                                            opts.spiral_window);
        } catch (const InsufficientData&) {
        } catch (const DegenerateGeometry&) {
        }
    }
    return res;
}

// ---------------------------------------------------------------------------
// JSON

inline nlohmann::json number_or_null(double v) {
    return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
}

inline nlohmann::json to_json(const RunConfig& c) {
    return {
        {"input_dim", c.shape.input_dim},
        {"hidden_width", c.shape.hidden_width},
        {"output_dim", c.shape.output_dim},
        {"activation", std::string(to_string(c.shape.activation))},
        {"dataset_index", c.dataset_index},
        {"n_points", c.n_points},
        {"init_seed", c.init_seed},
        {"alpha", c.adam.alpha},
        {"beta1", c.adam.beta1},
        {"beta2", c.adam.beta2},
        {"epsilon", c.adam.epsilon},
        {"precision", c.precision.to_string()},
        {"epochs", c.epochs},
        {"snapshot_stride", c.snapshot_stride},
    };
}

inline nlohmann::json to_json(const RegressionFit& f) {
    return {{"slope", f.slope}, {"intercept", f.intercept}, {"r_squared", f.r_squared}, {"n", f.n}};
}

inline nlohmann::json to_json(const PeriodEstimate& p) {
    return {{"period_epochs", p.period_epochs},
            {"method", to_string(p.method)},
            {"expected_from_beta", p.expected_from_beta},
            {"ratio", p.ratio},
            {"support", p.support}};
}

inline nlohmann::json to_json(const SpiralFit& s) {
    return {{"centroid", s.centroid},
            {"plane_basis", s.plane_basis},
            {"axis", s.axis},
            {"winding_number", s.winding_number},
            {"residual_rms", s.residual_rms},
            {"window", {s.window.start, s.window.end}},
            {"n_points", s.n_points}};
}

inline nlohmann::json to_json(const SpikeTrain& t) {
    nlohmann::json events = nlohmann::json::array();
    for (const auto& e : t.events) {
        events.push_back({{"peak_epoch", e.peak_epoch},
                          {"peak_loss", e.peak_loss},
                          {"baseline_loss", e.baseline_loss},
                          {"magnitude", e.magnitude},
                          {"onset_epoch", e.onset_epoch},
                          {"settle_epoch", e.settle_epoch}});
    }
    return {{"count", t.events.size()}, {"events", events}, {"intervals", t.intervals}};
}

template <class T>
nlohmann::json optional_json(const std::optional<T>& v) {
    return v ? to_json(*v) : nlohmann::json(nullptr);
}

inline nlohmann::json to_json(const AnalysisResult& r, const RunConfig& config) {
    nlohmann::json segments = nlohmann::json::array();
    for (const auto& s : r.segments) segments.push_back({{"start", s.start}, {"end", s.end}, {"kind", to_string(s.kind)}});
    nlohmann::json spiral = nullptr;
    if (r.spiral) {
        spiral = {{"one_lobe", r.spiral->one_lobe},
                  {"opposite_orientation", r.spiral->opposite_orientation},
                  {"first", to_json(r.spiral->first)},
                  {"second", optional_json(r.spiral->second)}};
    }
    return {
        {"schema", "adamlab.analysis/1"},
        {"config", to_json(config)},
        {"convergence_condition", {{"satisfied", r.convergence.satisfied}, {"report", r.convergence.report}}},
        {"final_loss", r.final_loss ? number_or_null(*r.final_loss) : nlohmann::json(nullptr)},
        {"diverged_at", r.diverged_at ? nlohmann::json(*r.diverged_at) : nlohmann::json(nullptr)},
        {"spikes", to_json(r.spikes)},
        {"slow_period", optional_json(r.slow_period)},
        {"fast_period", optional_json(r.fast_period)},
        {"fast_windows", r.fast_windows},
        {"interval_logmag_fit", optional_json(r.interval_fit)},
        {"segments", segments},
        {"prediction",
         {{"predicted_epoch", r.prediction.predicted_epoch},
          {"confidence", r.prediction.confidence},
          {"method", r.prediction.method}}},
        {"spiral", spiral},
    };
}

/// The analysis report file: pretty-printed JSON with a trailing newline.
inline std::string analysis_document(const AnalysisResult& r, const RunConfig& config) {
    return to_json(r, config).dump(2) + "\n";
}

}  // namespace adamlab
