#pragma once

// Sweep execution with a content-hashed manifest.
//
// Layout of output_dir:
//   manifest.json             schema, sweep config + hash, per-run status and files
//   runs/<id>.atrj            trajectory
//   runs/<id>.analysis.json   analysis report
//   runs/<id>.summary.json    RunSummary
//   report.json, report.txt   aggregate report (written once every run is done)
//
// Manifest paths are relative to output_dir with '/' separators.

#include <atomic>
#include <filesystem>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"

#include "adamlab/analysis/report.hpp"
#include "adamlab/harness/config.hpp"
#include "adamlab/harness/hash.hpp"
#include "adamlab/harness/report.hpp"
#include "adamlab/harness/summary.hpp"
#include "adamlab/trainer.hpp"
#include "adamlab/trajectory_io.hpp"

namespace adamlab {

inline constexpr const char* manifest_name = "manifest.json";

struct SweepResult {
    std::vector<RunSummary> summaries;  // grid order
    std::size_t trained = 0;            // runs executed by this call
    std::size_t reused = 0;             // runs satisfied by the manifest
    std::size_t failed = 0;
    bool complete = false;              // every run has a manifest entry
};

namespace detail {

inline nlohmann::json file_entry(const std::filesystem::path& root, const std::string& rel) {
    const std::string bytes = read_file(root / rel);
    return {{"sha256", sha256_hex(bytes)}, {"bytes", bytes.size()}};
}

// A manifest entry is reusable when it succeeded for the same run config and
// every listed file still hashes to its recorded value.
inline bool entry_reusable(const nlohmann::json& entry, const std::string& run_hash, const std::filesystem::path& root) {
    if (!entry.is_object() || entry.value("status", "") != "done" || entry.value("run_config_hash", "") != run_hash)
        return false;
    if (!entry.contains("files")) return false;
    for (const auto& [rel, info] : entry["files"].items()) {
        std::error_code ec;
        if (!std::filesystem::is_regular_file(root / rel, ec)) return false;
        if (sha256_file(root / rel) != info.value("sha256", "")) return false;
    }
    return true;
}

inline void ensure_writable(const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir / "runs", ec);
    if (ec) throw IoError("cannot create " + (dir / "runs").string() + ": " + ec.message());
    const auto probe = dir / ".write-probe";
    write_file(probe, "ok");
    std::filesystem::remove(probe, ec);
}

}  // namespace detail

inline nlohmann::json new_manifest(const SweepConfig& cfg) {
    return {{"schema", "adamlab.manifest/1"},
            {"config_hash", config_hash(cfg)},
            {"config", to_json(cfg)},
            {"runs", nlohmann::json::object()},
            {"aggregate", nullptr}};
}

/// Train and analyze every run of the grid, resuming from an existing
/// manifest. Throws InvalidArgument for a bad config or a directory that
/// holds a different sweep, IoError when output_dir is not writable.
inline SweepResult run_sweep(const SweepConfig& cfg) {
    namespace fs = std::filesystem;
    cfg.validate();
    const fs::path root = cfg.output_dir;
    detail::ensure_writable(root);

    nlohmann::json manifest = new_manifest(cfg);
    if (fs::exists(root / manifest_name)) {
        nlohmann::json old = load_json_file(root / manifest_name);
        if (old.value("config_hash", "") != manifest["config_hash"])
            throw InvalidArgument(root.string() + " holds a different sweep (config hash mismatch)");
        if (old.contains("runs") && old["runs"].is_object()) manifest["runs"] = old["runs"];
    }

    const auto runs = cfg.runs();
    SweepResult result;
    result.summaries.resize(runs.size());
    std::vector<std::size_t> todo;
    for (std::size_t i = 0; i < runs.size(); ++i) {
        const auto& [id, run_cfg] = runs[i];
        const std::string name = id.name();
        auto& entries = manifest["runs"];
        if (entries.contains(name) && detail::entry_reusable(entries[name], config_hash(run_cfg), root)) {
            result.summaries[i] = summary_from_json(load_json_file(root / "runs" / (name + ".summary.json")));
            ++result.reused;
        } else {
            entries.erase(name);
            todo.push_back(i);
        }
    }
    manifest["aggregate"] = nullptr;
    write_file_atomic(root / manifest_name, manifest.dump(2) + "\n");

    std::mutex manifest_mutex;
    std::atomic<std::size_t> next{0}, started{0}, trained{0}, failed{0};
    const std::size_t budget = cfg.stop_after.value_or(todo.size());

    auto worker = [&] {
        for (;;) {
            const std::size_t k = next.fetch_add(1);
            if (k >= todo.size() || started.fetch_add(1) >= budget) return;
            const std::size_t i = todo[k];
            const auto& [id, run_cfg] = runs[i];
            const std::string name = id.name();
            nlohmann::json entry = {{"run_config_hash", config_hash(run_cfg)}};
            RunSummary summary;
            summary.run_id = id;
            try {
                const Trajectory traj = train(run_cfg);
                const AnalysisResult analysis = analyze_trajectory(traj);
                summary = summarize(id, analysis);
                const std::string base = "runs/" + name;
                write_file_atomic(root / (base + ".atrj"), encode_trajectory(traj));
                write_file_atomic(root / (base + ".analysis.json"), analysis_document(analysis, run_cfg));
                write_file_atomic(root / (base + ".summary.json"), to_json(summary).dump(2) + "\n");
                nlohmann::json files = nlohmann::json::object();
                for (const char* ext : {".atrj", ".analysis.json", ".summary.json"})
                    files[base + ext] = detail::file_entry(root, base + ext);
                entry["status"] = "done";
                entry["files"] = files;
                entry["error"] = nullptr;
            } catch (const std::exception& e) {
                summary.error = e.what();
                entry["status"] = "failed";
                entry["files"] = nlohmann::json::object();
                entry["error"] = e.what();
                ++failed;
            }
            result.summaries[i] = summary;
            ++trained;
            std::lock_guard lock(manifest_mutex);
            manifest["runs"][name] = entry;
            write_file_atomic(root / manifest_name, manifest.dump(2) + "\n");
        }
    };
    {
        std::vector<std::jthread> pool;
        const unsigned n = std::min<std::size_t>(cfg.parallelism, std::max<std::size_t>(todo.size(), 1));
        for (unsigned t = 0; t < n; ++t) pool.emplace_back(worker);
    }

    result.trained = trained;
    result.failed = failed;
    result.complete = manifest["runs"].size() == runs.size();
    if (result.complete) {
        nlohmann::json provenance = {{"sweep", to_json(cfg)}, {"config_hash", config_hash(cfg)}};
        const ReportDocument report = build_report(result.summaries, provenance);
        write_file_atomic(root / "report.json", report.json.dump(2) + "\n");
        write_file_atomic(root / "report.txt", report.text);
        manifest["aggregate"] = {{"files",
                                  {{"report.json", detail::file_entry(root, "report.json")},
                                   {"report.txt", detail::file_entry(root, "report.txt")}}}};
        write_file_atomic(root / manifest_name, manifest.dump(2) + "\n");
    } else {
        // Trim summaries to runs that actually have results.
        std::vector<RunSummary> done;
        for (std::size_t i = 0; i < runs.size(); ++i)
            if (manifest["runs"].contains(runs[i].first.name())) done.push_back(result.summaries[i]);
        result.summaries = std::move(done);
    }
    return result;
}

/// Summaries recorded in a sweep directory, in grid order.
inline std::vector<RunSummary> load_summaries(const std::filesystem::path& dir) {
    const nlohmann::json manifest = load_json_file(dir / manifest_name);
    if (manifest.value("schema", "") != "adamlab.manifest/1") throw FormatError(dir.string() + ": not a sweep manifest");
    SweepConfig cfg;
    try {
        cfg = sweep_config_from_json(manifest.at("config"));
    } catch (const std::exception& e) {
        throw FormatError(std::string("manifest config: ") + e.what());
    }
    std::vector<RunSummary> out;
    for (const auto& [id, run_cfg] : cfg.runs()) {
        const std::string name = id.name();
        const auto& runs = manifest.at("runs");
        if (!runs.contains(name)) continue;
        if (runs[name].value("status", "") == "done") {
            out.push_back(summary_from_json(load_json_file(dir / "runs" / (name + ".summary.json"))));
        } else {
            RunSummary s;
            s.run_id = id;
            s.error = runs[name].value("error", "failed");
            out.push_back(s);
        }
    }
    return out;
}

struct VerifyReport {
    std::size_t files_checked = 0;
    std::vector<std::string> problems;
    bool ok() const { return problems.empty(); }
};

/// Re-hash every file listed in the manifest and flag files the manifest
/// does not list.
inline VerifyReport verify_sweep(const std::filesystem::path& dir) {
    namespace fs = std::filesystem;
    const nlohmann::json manifest = load_json_file(dir / manifest_name);
    VerifyReport rep;
    std::set<std::string> listed;
    auto check = [&](const std::string& rel, const nlohmann::json& info) {
        listed.insert(rel);
        ++rep.files_checked;
        std::error_code ec;
        if (!fs::is_regular_file(dir / rel, ec)) {
            rep.problems.push_back("missing: " + rel);
            return;
        }
        if (sha256_file(dir / rel) != info.value("sha256", "")) rep.problems.push_back("hash mismatch: " + rel);
    };
    if (manifest.contains("runs"))
        for (const auto& [name, entry] : manifest["runs"].items())
            if (entry.contains("files"))
                for (const auto& [rel, info] : entry["files"].items()) check(rel, info);
    if (manifest.contains("aggregate") && manifest["aggregate"].is_object())
        for (const auto& [rel, info] : manifest["aggregate"]["files"].items()) check(rel, info);

    for (const auto& e : fs::recursive_directory_iterator(dir)) {
        if (!e.is_regular_file()) continue;
        const std::string rel = fs::relative(e.path(), dir).generic_string();
        if (rel != manifest_name && !listed.contains(rel)) rep.problems.push_back("unlisted: " + rel);
    }
    return rep;
}

}  // namespace adamlab
