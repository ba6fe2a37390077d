#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "json.hpp"

#include "adamlab/analysis/report.hpp"
#include "adamlab/harness/config.hpp"

namespace adamlab {

/// Per-run scorecard.
struct RunSummary {
    RunId run_id;
    std::optional<double> final_loss;
    bool diverged = false;
    std::optional<std::uint64_t> diverged_at;
    std::size_t spike_count = 0;
    std::optional<double> median_interval;
    std::optional<double> slow_ratio;  // present iff spike_count >= 2
    std::optional<double> fast_ratio;
    std::optional<RegressionFit> interval_logmag_fit;
    std::optional<std::string> error;  // set when the run failed

    friend bool operator==(const RunSummary&, const RunSummary&) = default;
};

inline RunSummary summarize(const RunId& id, const AnalysisResult& a) {
    RunSummary s;
    s.run_id = id;
    s.final_loss = a.final_loss;
    s.diverged = a.diverged_at.has_value();
    s.diverged_at = a.diverged_at;
    s.spike_count = a.spikes.size();
    if (a.slow_period) {
        s.median_interval = a.slow_period->period_epochs;
        s.slow_ratio = a.slow_period->ratio;
    }
    if (a.fast_period) s.fast_ratio = a.fast_period->ratio;
    s.interval_logmag_fit = a.interval_fit;
    return s;
}

inline nlohmann::json to_json(const RunSummary& s) {
    auto opt = [](const std::optional<double>& v) { return v ? number_or_null(*v) : nlohmann::json(nullptr); };
    return {{"run_id",
             {{"name", s.run_id.name()},
              {"width", s.run_id.width},
              {"dataset_index", s.run_id.dataset_index},
              {"beta2", opt(s.run_id.beta2)}}},
            {"final_loss", opt(s.final_loss)},
            {"diverged", s.diverged},
            {"diverged_at", s.diverged_at ? nlohmann::json(*s.diverged_at) : nlohmann::json(nullptr)},
            {"spike_count", s.spike_count},
            {"median_interval", opt(s.median_interval)},
            {"slow_ratio", opt(s.slow_ratio)},
            {"fast_ratio", opt(s.fast_ratio)},
            {"interval_logmag_fit", optional_json(s.interval_logmag_fit)},
            {"error", s.error ? nlohmann::json(*s.error) : nlohmann::json(nullptr)}};
}

inline RunSummary summary_from_json(const nlohmann::json& j) {
    auto opt = [&](const nlohmann::json& v) -> std::optional<double> {
        if (v.is_null()) return std::nullopt;
        return v.get<double>();
    };
    try {
        RunSummary s;
        const auto& id = j.at("run_id");
        s.run_id.width = id.at("width").get<int>();
        s.run_id.dataset_index = id.at("dataset_index").get<std::uint64_t>();
        s.run_id.beta2 = opt(id.at("beta2"));
        s.final_loss = opt(j.at("final_loss"));
        s.diverged = j.at("diverged").get<bool>();
        if (!j.at("diverged_at").is_null()) s.diverged_at = j.at("diverged_at").get<std::uint64_t>();
        s.spike_count = j.at("spike_count").get<std::size_t>();
        s.median_interval = opt(j.at("median_interval"));
        s.slow_ratio = opt(j.at("slow_ratio"));
        s.fast_ratio = opt(j.at("fast_ratio"));
        if (const auto& f = j.at("interval_logmag_fit"); !f.is_null()) {
            RegressionFit fit;
            fit.slope = f.at("slope").get<double>();
            fit.intercept = f.at("intercept").get<double>();
            fit.r_squared = f.at("r_squared").get<double>();
            fit.n = f.at("n").get<std::size_t>();
            s.interval_logmag_fit = fit;
        }
        if (!j.at("error").is_null()) s.error = j.at("error").get<std::string>();
        return s;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("malformed run summary: ") + e.what());
    }
}

}  // namespace adamlab
