// adamlab command-line interface.
//
// Every option `--some-key` has the config-file equivalent "some_key"; flags
// given on the command line override the file passed with --config.
//
// Exit codes: 0 success, 1 usage error, 2 I/O or format error.

#include <filesystem>
#include <functional>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "adamlab/analysis/report.hpp"
#include "adamlab/harness/config.hpp"
#include "adamlab/harness/report.hpp"
#include "adamlab/harness/svg.hpp"
#include "adamlab/harness/sweep.hpp"
#include "adamlab/trainer.hpp"
#include "adamlab/trajectory_io.hpp"

using namespace adamlab;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

enum Exit { ok = 0, usage = 1, io = 2 };

// Flags that mirror JSON keys. apply() copies every flag given on the command
// line into the target object.
class KeyFlags {
   public:
    template <class T>
    void add(CLI::App* app, const std::string& key, const std::string& help) {
        auto value = std::make_shared<T>();
        std::string name = "--" + key;
        std::replace(name.begin(), name.end(), '_', '-');
        CLI::Option* opt = app->add_option(name, *value, help + " [" + key + "]");
        setters_.push_back([opt, value, key](json& target) {
            if (opt->count() > 0) target[key] = *value;
        });
    }

    void add_switch(CLI::App* app, const std::string& key, const std::string& help) {
        std::string name = "--" + key;
        std::replace(name.begin(), name.end(), '_', '-');
        const std::string desc = help + " [" + key + "]";
        CLI::Option* opt = app->add_flag(name, desc);
        setters_.push_back([opt, key](json& target) {
            if (opt->count() > 0) target[key] = true;
        });
    }

    void apply(json& target) const {
        for (const auto& s : setters_) s(target);
    }

   private:
    std::vector<std::function<void(json&)>> setters_;
};

void add_run_flags(CLI::App* app, KeyFlags& f) {
    f.add<int>(app, "input_dim", "network input dimension");
    f.add<int>(app, "hidden_width", "hidden layer width");
    f.add<int>(app, "output_dim", "network output dimension");
    f.add<std::string>(app, "activation", "tanh | sigmoid | relu");
    f.add<std::uint64_t>(app, "dataset_index", "synthetic dataset index");
    f.add<std::uint64_t>(app, "n_points", "dataset size");
    f.add<std::uint64_t>(app, "init_seed", "initialization seed");
    f.add<double>(app, "alpha", "Adam learning rate");
    f.add<double>(app, "beta1", "Adam first-moment decay");
    f.add<double>(app, "beta2", "Adam second-moment decay");
    f.add<double>(app, "epsilon", "Adam epsilon");
    f.add<std::string>(app, "precision", "native64 | native32 | emulated(E,M)");
    f.add<std::uint64_t>(app, "epochs", "training epochs");
    f.add<std::uint64_t>(app, "snapshot_stride", "epochs between parameter snapshots");
}

void add_detector_flags(CLI::App* app, KeyFlags& f) {
    f.add<std::size_t>(app, "window", "spike baseline rolling-median window (odd)");
    f.add<double>(app, "threshold_ratio", "spike threshold over baseline");
    f.add<std::size_t>(app, "min_separation", "merge radius for spike candidates");
}

json load_config(const std::string& path) {
    if (path.empty()) return json::object();
    json j = load_json_file(path);
    if (!j.is_object()) throw InvalidArgument(path + ": config must be a JSON object");
    return j;
}

// Remove and return a key from a config object.
template <class T>
std::optional<T> take(json& j, const std::string& key) {
    if (!j.contains(key)) return std::nullopt;
    json v = j[key];
    j.erase(key);
    try {
        return v.get<T>();
    } catch (const json::exception& e) {
        throw InvalidArgument("config key '" + key + "': " + e.what());
    }
}

SpikeDetectorOptions detector_from(json& j) {
    SpikeDetectorOptions d;
    if (auto v = take<std::size_t>(j, "window")) d.window = *v;
    if (auto v = take<double>(j, "threshold_ratio")) d.threshold_ratio = *v;
    if (auto v = take<std::size_t>(j, "min_separation")) d.min_separation = *v;
    return d;
}

void expect_consumed(const json& j, const char* what) {
    for (const auto& [key, _] : j.items()) throw InvalidArgument(std::string("unknown ") + what + " key '" + key + "'");
}

void write_output(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-") {
        std::cout << text;
        return;
    }
    const fs::path p(path);
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    detail::write_file(p, text);
}

// Loss and beta overrides for trajectories whose config is not stored (CSV).
void apply_beta_overrides(json& j, Trajectory& traj) {
    if (auto v = take<double>(j, "beta1")) traj.config.adam.beta1 = *v;
    if (auto v = take<double>(j, "beta2")) traj.config.adam.beta2 = *v;
}

int cmd_train(json j) {
    const auto out = take<std::string>(j, "out");
    const auto format = take<std::string>(j, "format").value_or("atrj");
    if (format != "atrj" && format != "csv") throw InvalidArgument("format must be atrj or csv");
    const RunConfig cfg = run_config_from_json(j);
    cfg.validate();
    const fs::path path = out ? fs::path(*out)
                              : default_output_dir() / ("w" + std::to_string(cfg.shape.hidden_width) + "_d" +
                                                        std::to_string(cfg.dataset_index) + "." + format);
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    const Trajectory traj = train(cfg);
    if (format == "csv")
        write_trajectory_csv(traj, path);
    else
        write_trajectory(traj, path);
    std::cerr << "trained " << traj.loss.size() << " epochs";
    if (traj.diverged_at) std::cerr << " (diverged at " << *traj.diverged_at << ")";
    std::cerr << " -> " << path.string() << "\n";
    return ok;
}

int cmd_sweep(json j) {
    SweepConfig cfg;
    cfg = sweep_config_from_json(j, cfg);
    const SweepResult res = run_sweep(cfg);
    std::cerr << "sweep " << cfg.output_dir.string() << ": " << res.trained << " trained, " << res.reused
              << " reused, " << res.failed << " failed" << (res.complete ? "" : " (incomplete)") << "\n";
    return ok;
}

int cmd_analyze(const std::string& input, json j) {
    Trajectory traj = read_trajectory(input);
    apply_beta_overrides(j, traj);
    AnalysisOptions opts;
    opts.detector = detector_from(j);
    if (auto v = take<double>(j, "fast_window_periods")) opts.fast_window_periods = *v;
    if (auto v = take<std::vector<std::size_t>>(j, "spiral_triple")) {
        if (v->size() != 3) throw InvalidArgument("spiral_triple needs 3 parameter indices");
        opts.spiral_triple = std::array<std::size_t, 3>{(*v)[0], (*v)[1], (*v)[2]};
    }
    if (auto v = take<std::vector<std::uint64_t>>(j, "spiral_window")) {
        if (v->size() != 2) throw InvalidArgument("spiral_window needs start and end epochs");
        opts.spiral_window = {(*v)[0], (*v)[1]};
    }
    const auto out = take<std::string>(j, "out").value_or("-");
    expect_consumed(j, "analyze");
    write_output(out, analysis_document(analyze_trajectory(traj, opts), traj.config));
    return ok;
}

int cmd_plot(const std::string& input, json j) {
    const Trajectory traj = read_trajectory(input);
    const auto kind = take<std::string>(j, "kind").value_or("loss");
    const auto out = take<std::string>(j, "out").value_or(fs::path(input).replace_extension(".svg").string());
    const auto window = take<std::vector<std::uint64_t>>(j, "plot_window");
    if (window && window->size() != 2) throw InvalidArgument("plot_window needs start and end epochs");
    const EpochWindow win = window ? EpochWindow{(*window)[0], (*window)[1]} : EpochWindow{};

    SeriesPlotOptions sopts;
    if (auto v = take<bool>(j, "log")) sopts.log_y = *v;
    if (auto v = take<std::size_t>(j, "max_points")) sopts.max_points = *v;
    if (auto v = take<std::string>(j, "title")) sopts.title = *v;
    const bool mark_spikes = take<bool>(j, "spikes").value_or(false);
    const auto param = take<std::size_t>(j, "param");
    const auto triple = take<std::vector<std::size_t>>(j, "triple");
    const SpikeDetectorOptions det = detector_from(j);
    expect_consumed(j, "plot");

    std::string svg_text;
    if (kind == "loss") {
        SpikeTrain spikes;
        if (mark_spikes && traj.loss.size() >= 3) {
            spikes = detect_spikes(traj.loss, det);
            sopts.spikes = &spikes;
        }
        svg_text = series_svg(traj.loss, sopts);
    } else if (kind == "param") {
        if (!param) throw InvalidArgument("plot kind 'param' needs --param");
        std::vector<double> series;
        for (const auto& s : traj.snapshots) {
            if (*param >= s.params.size()) throw InvalidArgument("parameter index out of range");
            if (s.epoch >= win.start && s.epoch <= win.end) series.push_back(s.params[*param]);
        }
        if (series.empty()) throw InvalidArgument("no snapshots inside the plot window");
        if (sopts.title == "loss") sopts.title = "parameter p" + std::to_string(*param) + " (per snapshot)";
        sopts.y_label = "p" + std::to_string(*param);
        svg_text = series_svg(series, sopts);
    } else if (kind == "scatter3") {
        if (!triple || triple->size() != 3) throw InvalidArgument("plot kind 'scatter3' needs --triple i j k");
        const std::array<std::size_t, 3> t{(*triple)[0], (*triple)[1], (*triple)[2]};
        const auto points = extract_triple(traj.snapshots, t);
        svg_text = scatter3_svg(points, t, win);
    } else {
        throw InvalidArgument("unknown plot kind '" + kind + "' (loss, param, scatter3)");
    }
    write_output(out, svg_text);
    return ok;
}

int cmd_report(const std::string& dir, json j) {
    const auto json_out = take<std::string>(j, "json_out");
    const auto text_out = take<std::string>(j, "out").value_or("-");
    expect_consumed(j, "report");
    const auto summaries = load_summaries(dir);
    if (summaries.empty()) throw FormatError(dir + ": sweep has no completed runs");
    const json manifest = load_json_file(fs::path(dir) / manifest_name);
    const json provenance = {{"sweep", manifest.at("config")}, {"config_hash", manifest.at("config_hash")}};
    const ReportDocument rep = build_report(summaries, provenance);
    if (json_out) write_output(*json_out, rep.json.dump(2) + "\n");
    write_output(text_out, rep.text);
    return ok;
}

int cmd_predict(const std::string& input, json j) {
    Trajectory traj = read_trajectory(input);
    apply_beta_overrides(j, traj);
    const auto prefix = take<std::uint64_t>(j, "prefix");
    const SpikeDetectorOptions det = detector_from(j);
    const auto out = take<std::string>(j, "out").value_or("-");
    expect_consumed(j, "predict");

    std::vector<double> loss = traj.loss;
    if (prefix) {
        if (*prefix < 3 || *prefix > loss.size()) throw InvalidArgument("prefix must lie in [3, epochs]");
        loss.resize(*prefix);
    }
    if (loss.size() < 3) throw InvalidArgument("trajectory needs at least 3 epochs");
    const SpikeTrain spikes = detect_spikes(loss, det);
    const SpikePrediction p = predict_next_spike(spikes, traj.config.adam.beta2, loss.size() - 1);
    const json doc = {{"current_epoch", loss.size() - 1},
                      {"spikes_seen", spikes.size()},
                      {"predicted_epoch", p.predicted_epoch},
                      {"confidence", p.confidence},
                      {"method", p.method}};
    write_output(out, doc.dump(2) + "\n");
    return ok;
}

int cmd_verify(const std::string& dir) {
    const VerifyReport rep = verify_sweep(dir);
    for (const auto& p : rep.problems) std::cerr << p << "\n";
    std::cout << rep.files_checked << " files checked, " << rep.problems.size() << " problems\n";
    return rep.ok() ? ok : io;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"adamlab: Adam training-dynamics laboratory"};
    app.require_subcommand(1);
    app.set_version_flag("--version", "adamlab 0.1.0");

    std::string config_path, input;

    auto* train_cmd = app.add_subcommand("train", "train one network and write its trajectory");
    KeyFlags train_flags;
    train_cmd->add_option("--config", config_path, "JSON run config");
    add_run_flags(train_cmd, train_flags);
    train_flags.add<std::string>(train_cmd, "out", "output trajectory path");
    train_flags.add<std::string>(train_cmd, "format", "atrj | csv");

    auto* sweep_cmd = app.add_subcommand("sweep", "train and analyze a grid of runs");
    KeyFlags sweep_flags, sweep_base_flags;
    sweep_cmd->add_option("--config", config_path, "JSON sweep config");
    sweep_flags.add<std::string>(sweep_cmd, "preset", "desk | full");
    sweep_flags.add<std::vector<int>>(sweep_cmd, "widths", "hidden widths");
    sweep_flags.add<std::vector<std::uint64_t>>(sweep_cmd, "dataset_indices", "dataset indices");
    sweep_flags.add<std::vector<double>>(sweep_cmd, "beta2_grid", "beta2 values (multiplies the grid)");
    sweep_flags.add<unsigned>(sweep_cmd, "parallelism", "concurrent runs");
    sweep_flags.add<std::string>(sweep_cmd, "output_dir", "sweep directory (default $ADAMLAB_OUTPUT_DIR)");
    sweep_flags.add<std::size_t>(sweep_cmd, "stop_after", "stop after this many new runs");
    add_run_flags(sweep_cmd, sweep_base_flags);

    auto* analyze_cmd = app.add_subcommand("analyze", "analyze a trajectory file");
    KeyFlags analyze_flags;
    analyze_cmd->add_option("trajectory", input, "trajectory (.atrj or .csv)")->required();
    analyze_cmd->add_option("--config", config_path, "JSON analysis options");
    add_detector_flags(analyze_cmd, analyze_flags);
    analyze_flags.add<double>(analyze_cmd, "fast_window_periods", "fast-oscillation window in 1/(1-beta1) units");
    analyze_flags.add<std::vector<std::size_t>>(analyze_cmd, "spiral_triple", "three parameter indices");
    analyze_flags.add<std::vector<std::uint64_t>>(analyze_cmd, "spiral_window", "start and end epoch");
    analyze_flags.add<double>(analyze_cmd, "beta1", "override beta1 (CSV input)");
    analyze_flags.add<double>(analyze_cmd, "beta2", "override beta2 (CSV input)");
    analyze_flags.add<std::string>(analyze_cmd, "out", "report path (default stdout)");

    auto* plot_cmd = app.add_subcommand("plot", "render a trajectory as SVG");
    KeyFlags plot_flags;
    plot_cmd->add_option("trajectory", input, "trajectory (.atrj or .csv)")->required();
    plot_cmd->add_option("--config", config_path, "JSON plot spec");
    plot_flags.add<std::string>(plot_cmd, "kind", "loss | param | scatter3");
    plot_flags.add<std::size_t>(plot_cmd, "param", "parameter index for kind=param");
    plot_flags.add<std::vector<std::size_t>>(plot_cmd, "triple", "three parameter indices for kind=scatter3");
    plot_flags.add<std::vector<std::uint64_t>>(plot_cmd, "plot_window", "start and end epoch");
    plot_flags.add_switch(plot_cmd, "log", "log-scale y axis");
    plot_flags.add_switch(plot_cmd, "spikes", "mark detected spikes");
    plot_flags.add<std::size_t>(plot_cmd, "max_points", "polyline point budget");
    plot_flags.add<std::string>(plot_cmd, "title", "plot title");
    add_detector_flags(plot_cmd, plot_flags);
    plot_flags.add<std::string>(plot_cmd, "out", "SVG path (default: trajectory with .svg)");

    auto* report_cmd = app.add_subcommand("report", "aggregate report for a sweep directory");
    KeyFlags report_flags;
    report_cmd->add_option("sweep_dir", input, "sweep directory")->required();
    report_cmd->add_option("--config", config_path, "JSON report options");
    report_flags.add<std::string>(report_cmd, "out", "text report path (default stdout)");
    report_flags.add<std::string>(report_cmd, "json_out", "JSON report path");

    auto* predict_cmd = app.add_subcommand("predict", "predict the next spike from a trajectory prefix");
    KeyFlags predict_flags;
    predict_cmd->add_option("trajectory", input, "trajectory (.atrj or .csv)")->required();
    predict_cmd->add_option("--config", config_path, "JSON predict options");
    predict_flags.add<std::uint64_t>(predict_cmd, "prefix", "use only the first N epochs");
    add_detector_flags(predict_cmd, predict_flags);
    predict_flags.add<double>(predict_cmd, "beta1", "override beta1 (CSV input)");
    predict_flags.add<double>(predict_cmd, "beta2", "override beta2 (CSV input)");
    predict_flags.add<std::string>(predict_cmd, "out", "output path (default stdout)");

    auto* verify_cmd = app.add_subcommand("verify", "re-hash every file listed in a sweep manifest");
    verify_cmd->add_option("sweep_dir", input, "sweep directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return usage;
    }

    try {
        json cfg = load_config(config_path);
        if (train_cmd->parsed()) {
            train_flags.apply(cfg);
            return cmd_train(cfg);
        }
        if (sweep_cmd->parsed()) {
            sweep_flags.apply(cfg);
            if (!cfg.contains("base")) cfg["base"] = json::object();
            sweep_base_flags.apply(cfg["base"]);
            return cmd_sweep(cfg);
        }
        if (analyze_cmd->parsed()) {
            analyze_flags.apply(cfg);
            return cmd_analyze(input, cfg);
        }
        if (plot_cmd->parsed()) {
            plot_flags.apply(cfg);
            return cmd_plot(input, cfg);
        }
        if (report_cmd->parsed()) {
            report_flags.apply(cfg);
            return cmd_report(input, cfg);
        }
        if (predict_cmd->parsed()) {
            predict_flags.apply(cfg);
            return cmd_predict(input, cfg);
        }
        if (verify_cmd->parsed()) return cmd_verify(input);
    } catch (const InvalidArgument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return usage;
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return io;
    } catch (const FormatError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return io;
    } catch (const fs::filesystem_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return io;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return io;
    }
    return usage;
}
