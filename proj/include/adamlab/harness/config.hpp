#pragma once

// JSON configuration for single runs and sweeps. Keys mirror the CLI flags.
//
// Run keys: input_dim, hidden_width, output_dim, activation, dataset_index,
// n_points, init_seed, alpha, beta1, beta2, epsilon, precision, epochs,
// snapshot_stride.
//
// Sweep keys: preset ("desk" | "full"), widths, dataset_indices, base (an
// object of run keys), beta2_grid, parallelism, output_dir, stop_after.
// A preset fills widths and dataset_indices; explicit keys override it.

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "adamlab/analysis/report.hpp"
#include "adamlab/errors.hpp"
#include "adamlab/harness/hash.hpp"
#include "adamlab/trainer.hpp"
#include "adamlab/trajectory_io.hpp"

namespace adamlab {

inline constexpr const char* output_dir_env = "ADAMLAB_OUTPUT_DIR";

/// $ADAMLAB_OUTPUT_DIR when set and nonempty, otherwise ./adamlab-out.
inline std::filesystem::path default_output_dir() {
    const char* env = std::getenv(output_dir_env);
    if (env && *env) return env;
    return "adamlab-out";
}

namespace detail {

template <class T>
T json_get(const nlohmann::json& j, const std::string& key) {
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception& e) {
        throw InvalidArgument("config key '" + key + "': " + e.what());
    }
}

inline void reject_unknown_keys(const nlohmann::json& j, std::initializer_list<const char*> known, const char* what) {
    if (!j.is_object()) throw InvalidArgument(std::string(what) + " must be a JSON object");
    for (const auto& [key, _] : j.items()) {
        bool ok = false;
        for (const char* k : known) ok = ok || key == k;
        if (!ok) throw InvalidArgument(std::string("unknown ") + what + " key '" + key + "'");
    }
}

}  // namespace detail

/// Overlay the keys present in `j` on `base`.
inline RunConfig run_config_from_json(const nlohmann::json& j, RunConfig cfg = {}) {
    using detail::json_get;
    detail::reject_unknown_keys(j,
                                {"input_dim", "hidden_width", "output_dim", "activation", "dataset_index", "n_points",
                                 "init_seed", "alpha", "beta1", "beta2", "epsilon", "precision", "epochs",
                                 "snapshot_stride"},
                                "run config");
    if (j.contains("input_dim")) cfg.shape.input_dim = json_get<int>(j, "input_dim");
    if (j.contains("hidden_width")) cfg.shape.hidden_width = json_get<int>(j, "hidden_width");
    if (j.contains("output_dim")) cfg.shape.output_dim = json_get<int>(j, "output_dim");
    if (j.contains("activation")) cfg.shape.activation = parse_activation(json_get<std::string>(j, "activation"));
    if (j.contains("dataset_index")) cfg.dataset_index = json_get<std::uint64_t>(j, "dataset_index");
    if (j.contains("n_points")) cfg.n_points = json_get<std::uint64_t>(j, "n_points");
    if (j.contains("init_seed")) cfg.init_seed = json_get<std::uint64_t>(j, "init_seed");
    if (j.contains("alpha")) cfg.adam.alpha = json_get<double>(j, "alpha");
    if (j.contains("beta1")) cfg.adam.beta1 = json_get<double>(j, "beta1");
    if (j.contains("beta2")) cfg.adam.beta2 = json_get<double>(j, "beta2");
    if (j.contains("epsilon")) cfg.adam.epsilon = json_get<double>(j, "epsilon");
    if (j.contains("precision")) cfg.precision = PrecisionMode::parse(json_get<std::string>(j, "precision"));
    if (j.contains("epochs")) cfg.epochs = json_get<std::uint64_t>(j, "epochs");
    if (j.contains("snapshot_stride")) cfg.snapshot_stride = json_get<std::uint64_t>(j, "snapshot_stride");
    return cfg;
}

/// Canonical hash of a run configuration.
inline std::string config_hash(const RunConfig& cfg) { return sha256_hex(to_json(cfg).dump()); }

struct RunId {
    int width = 0;
    std::uint64_t dataset_index = 0;
    std::optional<double> beta2;  // set only when the sweep has a beta2 grid

    std::string name() const {
        std::string s = "w" + std::to_string(width) + "_d" + std::to_string(dataset_index);
        if (beta2) s += "_b" + detail::format_double(*beta2);
        return s;
    }
    friend bool operator==(const RunId&, const RunId&) = default;
};

struct SweepConfig {
    std::vector<int> widths;
    std::vector<std::uint64_t> dataset_indices;
    RunConfig base{};
    std::vector<double> beta2_grid;  // empty: the base beta2 only
    unsigned parallelism = 1;
    std::filesystem::path output_dir = default_output_dir();
    // Stop after this many newly trained runs (simulated interruption).
    std::optional<std::size_t> stop_after;

    void validate() const {
        if (widths.empty()) throw InvalidArgument("sweep needs at least one width");
        if (dataset_indices.empty()) throw InvalidArgument("sweep needs at least one dataset index");
        for (int w : widths)
            if (w < 1) throw InvalidArgument("sweep widths must be positive");
        if (parallelism < 1) throw InvalidArgument("parallelism must be >= 1");
        base.validate();
        for (double b : beta2_grid)
            if (!(b >= 0.0 && b < 1.0)) throw InvalidArgument("beta2_grid values must lie in [0, 1)");
        auto sorted_unique = [](auto v) {
            std::sort(v.begin(), v.end());
            return std::adjacent_find(v.begin(), v.end()) == v.end();
        };
        if (!sorted_unique(widths) || !sorted_unique(dataset_indices) || !sorted_unique(beta2_grid))
            throw InvalidArgument("sweep grid values must be unique");
    }

    /// Runs in grid order: beta2 (outermost), width, dataset index.
    std::vector<std::pair<RunId, RunConfig>> runs() const {
        std::vector<std::pair<RunId, RunConfig>> out;
        std::vector<std::optional<double>> betas;
        if (beta2_grid.empty())
            betas.push_back(std::nullopt);
        else
            betas.assign(beta2_grid.begin(), beta2_grid.end());
        for (const auto& b : betas)
            for (int w : widths)
                for (std::uint64_t d : dataset_indices) {
                    RunConfig cfg = base;
                    cfg.shape.hidden_width = w;
                    cfg.dataset_index = d;
                    if (b) cfg.adam.beta2 = *b;
                    out.push_back({RunId{w, d, b}, cfg});
                }
        return out;
    }
};

inline std::vector<int> width_range(int lo, int hi) {
    std::vector<int> v(static_cast<std::size_t>(hi - lo + 1));
    std::iota(v.begin(), v.end(), lo);
    return v;
}

inline std::vector<std::uint64_t> index_range(std::uint64_t lo, std::uint64_t hi) {
    std::vector<std::uint64_t> v(hi - lo + 1);
    std::iota(v.begin(), v.end(), lo);
    return v;
}

/// 8 widths x 8 datasets.
inline SweepConfig desk_sweep() {
    SweepConfig s;
    s.widths = {12, 16, 17, 20, 21, 26, 27, 34};
    s.dataset_indices = index_range(0, 7);
    return s;
}

/// 40 widths (5..44) x 40 datasets = 1600 runs. The grid is inferred, not documented.
inline SweepConfig full_sweep() {
    SweepConfig s;
    s.widths = width_range(5, 44);
    s.dataset_indices = index_range(0, 39);
    return s;
}

inline SweepConfig sweep_preset(const std::string& name) {
    if (name == "desk") return desk_sweep();
    if (name == "full") return full_sweep();
    throw InvalidArgument("unknown sweep preset '" + name + "' (expected desk or full)");
}

inline SweepConfig sweep_config_from_json(const nlohmann::json& j, SweepConfig cfg = {}) {
    using detail::json_get;
    detail::reject_unknown_keys(j,
                                {"preset", "widths", "dataset_indices", "base", "beta2_grid", "parallelism",
                                 "output_dir", "stop_after"},
                                "sweep config");
    if (j.contains("preset")) {
        const SweepConfig p = sweep_preset(json_get<std::string>(j, "preset"));
        cfg.widths = p.widths;
        cfg.dataset_indices = p.dataset_indices;
    }
    if (j.contains("widths")) cfg.widths = json_get<std::vector<int>>(j, "widths");
    if (j.contains("dataset_indices")) cfg.dataset_indices = json_get<std::vector<std::uint64_t>>(j, "dataset_indices");
    if (j.contains("base")) cfg.base = run_config_from_json(j.at("base"), cfg.base);
    if (j.contains("beta2_grid")) cfg.beta2_grid = json_get<std::vector<double>>(j, "beta2_grid");
    if (j.contains("parallelism")) cfg.parallelism = json_get<unsigned>(j, "parallelism");
    if (j.contains("output_dir")) cfg.output_dir = json_get<std::string>(j, "output_dir");
    if (j.contains("stop_after")) cfg.stop_after = json_get<std::size_t>(j, "stop_after");
    return cfg;
}

/// The result-determining part of a sweep; parallelism, output_dir and
/// stop_after are left out.
inline nlohmann::json to_json(const SweepConfig& s) {
    return {{"widths", s.widths},
            {"dataset_indices", s.dataset_indices},
            {"base", to_json(s.base)},
            {"beta2_grid", s.beta2_grid}};
}

inline std::string config_hash(const SweepConfig& s) { return sha256_hex(to_json(s).dump()); }

inline nlohmann::json load_json_file(const std::filesystem::path& path) {
    const std::string text = detail::read_file(path);
    try {
        return nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
}

}  // namespace adamlab
