#pragma once

// Aggregate report over the summaries of a sweep.

#include <algorithm>
#include <cstdio>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "adamlab/analysis/rolling.hpp"
#include "adamlab/analysis/spikes.hpp"
#include "adamlab/harness/summary.hpp"

namespace adamlab {

struct ReportDocument {
    nlohmann::json json;
    std::string text;
};

struct Distribution {
    std::size_t count = 0;
    double median = 0.0, min = 0.0, max = 0.0;
};

inline std::optional<Distribution> distribution_of(const std::vector<double>& values) {
    if (values.empty()) return std::nullopt;
    Distribution d;
    d.count = values.size();
    d.median = median_of(values);
    d.min = *std::min_element(values.begin(), values.end());
    d.max = *std::max_element(values.begin(), values.end());
    return d;
}

inline nlohmann::json to_json(const Distribution& d) {
    return {{"count", d.count}, {"median", d.median}, {"min", d.min}, {"max", d.max}};
}

/// Runs with at least this many spikes take part in the slow-period check.
inline constexpr std::size_t period_check_min_spikes = 5;

namespace detail {

inline std::string fmt(const std::optional<double>& v, const char* spec = "%.4g") {
    if (!v) return "-";
    char buf[64];
    std::snprintf(buf, sizeof buf, spec, *v);
    return buf;
}

inline std::string pad(std::string s, std::size_t w) {
    if (s.size() < w) s.append(w - s.size(), ' ');
    return s;
}

}  // namespace detail

/// Aggregate scorecards. `provenance` (the sweep configuration) is embedded
/// verbatim so a negative result can be traced to exact settings.
inline ReportDocument build_report(const std::vector<RunSummary>& summaries,
                                   const nlohmann::json& provenance = nullptr) {
    if (summaries.empty()) throw InvalidArgument("report needs at least one run summary");

    std::size_t failed = 0, diverged = 0, spiking = 0, quiet = 0;
    std::vector<double> slow, fast;
    std::size_t checked = 0, within = 0;
    std::map<double, std::vector<double>> slopes_by_beta2;
    for (const auto& s : summaries) {
        if (s.error)
            ++failed;
        else if (s.diverged)
            ++diverged;
        else if (s.spike_count > 0)
            ++spiking;
        else
            ++quiet;
        if (s.slow_ratio) slow.push_back(*s.slow_ratio);
        if (s.fast_ratio) fast.push_back(*s.fast_ratio);
        if (s.spike_count >= period_check_min_spikes && s.slow_ratio) {
            ++checked;
            within += *s.slow_ratio >= 0.5 && *s.slow_ratio <= 2.0;
        }
        if (s.run_id.beta2 && s.interval_logmag_fit) slopes_by_beta2[*s.run_id.beta2].push_back(s.interval_logmag_fit->slope);
    }
    const std::size_t completed = summaries.size() - failed;
    const double spiking_fraction =
        completed ? static_cast<double>(spiking) / static_cast<double>(completed) : 0.0;

    nlohmann::json cross = nullptr;
    std::string cross_note;
    if (!slopes_by_beta2.empty()) {
        std::vector<Beta2Fit> fits;
        nlohmann::json per_beta = nlohmann::json::array();
        for (const auto& [b, slopes] : slopes_by_beta2) {
            Beta2Fit f;
            f.beta2 = b;
            f.fit.slope = median_of(slopes);
            f.fit.n = slopes.size();
            fits.push_back(f);
            per_beta.push_back({{"beta2", b}, {"median_slope", f.fit.slope}, {"runs", slopes.size()}});
        }
        cross = {{"per_beta2", per_beta}, {"fit", nullptr}};
        try {
            cross["fit"] = to_json(fit_coefficient_vs_beta2(fits));
        } catch (const std::exception& e) {
            cross_note = e.what();
            cross["note"] = cross_note;
        }
    }

    nlohmann::json runs = nlohmann::json::array();
    for (const auto& s : summaries) runs.push_back(to_json(s));

    auto dist_json = [](const std::vector<double>& v) {
        const auto d = distribution_of(v);
        return d ? to_json(*d) : nlohmann::json(nullptr);
    };

    nlohmann::json doc = {
        {"schema", "adamlab.report/1"},
        {"provenance", provenance},
        {"counts",
         {{"runs", summaries.size()},
          {"failed", failed},
          {"diverged", diverged},
          {"spiking", spiking},
          {"quiet", quiet}}},
        {"spiking_fraction", spiking_fraction},
        {"slow_ratio", dist_json(slow)},
        {"fast_ratio", dist_json(fast)},
        {"slow_period_check",
         {{"min_spikes", period_check_min_spikes},
          {"runs_checked", checked},
          {"within_factor_2", within}}},
        {"cross_beta2", cross},
        {"negative_result", nullptr},
        {"runs", runs},
    };
    if (spiking == 0) {
        doc["negative_result"] = {
            {"statement", "no completed run produced a detected spike; slow and fast ratios are absent"},
            {"provenance", provenance}};
    }

    std::ostringstream t;
    t << "adamlab sweep report\n";
    t << "runs " << summaries.size() << "  failed " << failed << "  diverged " << diverged << "  spiking " << spiking
      << "  quiet " << quiet << "\n";
    t << "spiking fraction " << detail::fmt(spiking_fraction) << "\n";
    t << "slow ratio median " << detail::fmt(slow.empty() ? std::nullopt : std::optional(median_of(slow)))
      << " over " << slow.size() << " runs\n";
    t << "fast ratio median " << detail::fmt(fast.empty() ? std::nullopt : std::optional(median_of(fast)))
      << " over " << fast.size() << " runs\n";
    t << "slow period within x2 of 1/(1-beta2): " << within << " of " << checked << " runs with >= "
      << period_check_min_spikes << " spikes\n";
    if (!cross.is_null()) {
        if (!cross["fit"].is_null())
            t << "slope vs 1/(1-beta2): slope " << detail::fmt(cross["fit"]["slope"].get<double>()) << "  r2 "
              << detail::fmt(cross["fit"]["r_squared"].get<double>()) << "\n";
        else
            t << "slope vs 1/(1-beta2): " << cross_note << "\n";
    }
    if (spiking == 0) t << "NEGATIVE RESULT: no completed run produced a detected spike\n";
    t << "\n";
    t << detail::pad("run", 22) << detail::pad("final_loss", 12) << detail::pad("diverged", 10)
      << detail::pad("spikes", 8) << detail::pad("median_int", 12) << detail::pad("slow_ratio", 12)
      << detail::pad("fast_ratio", 12) << "\n";
    for (const auto& s : summaries) {
        t << detail::pad(s.run_id.name(), 22);
        if (s.error) {
            t << "FAILED: " << *s.error << "\n";
            continue;
        }
        t << detail::pad(detail::fmt(s.final_loss), 12)
          << detail::pad(s.diverged ? std::to_string(*s.diverged_at) : "no", 10)
          << detail::pad(std::to_string(s.spike_count), 8) << detail::pad(detail::fmt(s.median_interval, "%.1f"), 12)
          << detail::pad(detail::fmt(s.slow_ratio), 12) << detail::pad(detail::fmt(s.fast_ratio), 12) << "\n";
    }
    return {doc, t.str()};
}

}  // namespace adamlab
