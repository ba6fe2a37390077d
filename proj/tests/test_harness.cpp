#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>

#include "adamlab/harness/config.hpp"
#include "adamlab/harness/report.hpp"
#include "adamlab/harness/sweep.hpp"

using namespace adamlab;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
    const auto dir = fs::temp_directory_path() / "adamlab_test_harness" / name;
    fs::remove_all(dir);
    return dir;
}

SweepConfig tiny_sweep(const fs::path& dir, std::vector<int> widths = {3}, std::vector<std::uint64_t> idx = {0}) {
    SweepConfig s;
    s.widths = std::move(widths);
    s.dataset_indices = std::move(idx);
    s.base.epochs = 100;
    s.base.n_points = 16;
    s.output_dir = dir;
    return s;
}

std::string slurp(const fs::path& p) { return detail::read_file(p); }

std::map<std::string, std::string> dir_contents(const fs::path& dir) {
    std::map<std::string, std::string> out;
    for (const auto& e : fs::recursive_directory_iterator(dir))
        if (e.is_regular_file()) out[fs::relative(e.path(), dir).generic_string()] = slurp(e.path());
    return out;
}

RunSummary summary_with(int width, std::optional<double> slow, std::size_t spikes) {
    RunSummary s;
    s.run_id = {width, 0, std::nullopt};
    s.final_loss = 0.01;
    s.spike_count = spikes;
    s.slow_ratio = slow;
    if (slow) s.median_interval = *slow * 1000.0;
    return s;
}

}  // namespace

TEST(Sha256, KnownVectors) {
    EXPECT_EQ(sha256_hex(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(RunConfigJson, RoundTripThroughJson) {
    RunConfig cfg;
    cfg.shape = {2, 17, 3, Activation::sigmoid};
    cfg.dataset_index = 9;
    cfg.n_points = 33;
    cfg.init_seed = 123456789012345ull;
    cfg.adam = {0.003, 0.85, 0.995, 1e-7};
    cfg.precision = PrecisionMode::emulated(5, 10);
    cfg.epochs = 777;
    cfg.snapshot_stride = 3;
    EXPECT_EQ(run_config_from_json(nlohmann::json::parse(to_json(cfg).dump())), cfg);
}

TEST(RunConfigJson, PartialOverlayAndErrors) {
    const auto cfg = run_config_from_json(nlohmann::json{{"hidden_width", 5}, {"precision", "native64"}});
    EXPECT_EQ(cfg.shape.hidden_width, 5);
    EXPECT_EQ(cfg.precision, PrecisionMode::native64());
    EXPECT_EQ(cfg.epochs, RunConfig{}.epochs);
    EXPECT_THROW(run_config_from_json(nlohmann::json{{"hiden_width", 5}}), InvalidArgument);
    EXPECT_THROW(run_config_from_json(nlohmann::json{{"epochs", "many"}}), InvalidArgument);
    EXPECT_THROW(run_config_from_json(nlohmann::json{{"activation", "gelu"}}), InvalidArgument);
    EXPECT_THROW(run_config_from_json(nlohmann::json::array()), InvalidArgument);
}

TEST(SweepConfigJson, PresetsAndOverrides) {
    const auto desk = sweep_config_from_json(nlohmann::json{{"preset", "desk"}});
    EXPECT_EQ(desk.runs().size(), 64u);
    const auto full = sweep_config_from_json(nlohmann::json{{"preset", "full"}});
    EXPECT_EQ(full.runs().size(), 1600u);
    const auto s = sweep_config_from_json(nlohmann::json{
        {"preset", "desk"}, {"widths", {4, 5}}, {"base", {{"epochs", 10}}}, {"beta2_grid", {0.99, 0.999}}, {"parallelism", 3}});
    EXPECT_EQ(s.widths, (std::vector<int>{4, 5}));
    EXPECT_EQ(s.base.epochs, 10u);
    EXPECT_EQ(s.parallelism, 3u);
    EXPECT_EQ(s.runs().size(), 2u * 8u * 2u);
    EXPECT_EQ(s.runs().front().second.adam.beta2, 0.99);
    EXPECT_THROW(sweep_config_from_json(nlohmann::json{{"preset", "huge"}}), InvalidArgument);
}

TEST(SweepConfigJson, HashIgnoresExecutionSettings) {
    auto a = tiny_sweep("/tmp/a");
    auto b = tiny_sweep("/tmp/b");
    b.parallelism = 8;
    b.stop_after = 1;
    EXPECT_EQ(config_hash(a), config_hash(b));
    b.base.epochs = 101;
    EXPECT_NE(config_hash(a), config_hash(b));
}

TEST(SweepConfig, RejectsDuplicatesAndEmpty) {
    auto s = tiny_sweep("/tmp/x", {3, 3});
    EXPECT_THROW(s.validate(), InvalidArgument);
    s = tiny_sweep("/tmp/x", {});
    EXPECT_THROW(s.validate(), InvalidArgument);
}

TEST(DefaultOutputDir, FromEnvironment) {
    ::setenv(output_dir_env, "/tmp/adamlab-env-out", 1);
    EXPECT_EQ(default_output_dir(), fs::path("/tmp/adamlab-env-out"));
    ::unsetenv(output_dir_env);
    EXPECT_EQ(default_output_dir(), fs::path("adamlab-out"));
}

TEST(RunSweep, SingleRunCounts) {
    const auto dir = fresh_dir("single");
    auto cfg = tiny_sweep(dir, {8}, {0});
    const auto res = run_sweep(cfg);
    ASSERT_EQ(res.summaries.size(), 1u);
    EXPECT_EQ(res.trained, 1u);
    EXPECT_TRUE(res.complete);
    std::size_t atrj = 0, summaries = 0;
    for (const auto& e : fs::directory_iterator(dir / "runs")) {
        atrj += e.path().extension() == ".atrj";
        summaries += e.path().string().ends_with(".summary.json");
    }
    EXPECT_EQ(atrj, 1u);
    EXPECT_EQ(summaries, 1u);
    const auto manifest = load_json_file(dir / manifest_name);
    EXPECT_EQ(manifest["runs"].size(), 1u);
    EXPECT_EQ(manifest["config_hash"], config_hash(cfg));
    EXPECT_TRUE(verify_sweep(dir).ok());
}

TEST(RunSweep, GridIdsAreCartesianProduct) {
    const auto dir = fresh_dir("grid");
    auto cfg = tiny_sweep(dir, {2, 3, 4, 5}, {0, 1, 2, 3});
    cfg.parallelism = 3;
    const auto res = run_sweep(cfg);
    ASSERT_EQ(res.summaries.size(), 16u);
    std::set<std::pair<int, std::uint64_t>> ids;
    for (const auto& s : res.summaries) ids.insert({s.run_id.width, s.run_id.dataset_index});
    EXPECT_EQ(ids.size(), 16u);
    for (int w : cfg.widths)
        for (auto d : cfg.dataset_indices) EXPECT_TRUE(ids.contains({w, d}));
    EXPECT_EQ(load_summaries(dir), res.summaries);
}

TEST(RunSweep, RerunDoesNoWork) {
    const auto dir = fresh_dir("rerun");
    auto cfg = tiny_sweep(dir, {3, 4}, {0, 1});
    const auto first = run_sweep(cfg);
    const auto before = dir_contents(dir);
    const auto second = run_sweep(cfg);
    EXPECT_EQ(second.trained, 0u);
    EXPECT_EQ(second.reused, 4u);
    EXPECT_EQ(second.summaries, first.summaries);
    EXPECT_EQ(dir_contents(dir), before);
}

TEST(RunSweep, ParallelismDoesNotChangeArtifacts) {
    const auto d1 = fresh_dir("par1"), d4 = fresh_dir("par4");
    auto c1 = tiny_sweep(d1, {3, 5, 7}, {0, 1, 2});
    c1.base.precision = PrecisionMode::native32();
    auto c4 = c1;
    c4.output_dir = d4;
    c4.parallelism = 4;
    run_sweep(c1);
    run_sweep(c4);
    EXPECT_EQ(dir_contents(d1), dir_contents(d4));
}

TEST(RunSweep, InterruptedThenResumedMatchesUninterrupted) {
    const auto full = fresh_dir("full"), part = fresh_dir("part");
    auto cf = tiny_sweep(full, {3, 4}, {0, 1, 2});
    auto cp = cf;
    cp.output_dir = part;
    cp.stop_after = 2;
    run_sweep(cf);
    const auto partial = run_sweep(cp);
    EXPECT_FALSE(partial.complete);
    EXPECT_EQ(partial.trained, 2u);
    EXPECT_EQ(partial.summaries.size(), 2u);
    EXPECT_FALSE(fs::exists(part / "report.json"));
    EXPECT_TRUE(verify_sweep(part).ok());
    cp.stop_after.reset();
    const auto resumed = run_sweep(cp);
    EXPECT_EQ(resumed.trained, 4u);
    EXPECT_EQ(resumed.reused, 2u);
    EXPECT_TRUE(resumed.complete);
    EXPECT_EQ(dir_contents(full), dir_contents(part));
}

TEST(RunSweep, TamperedArtifactIsRetrainedAndVerifyFlagsIt) {
    const auto dir = fresh_dir("tamper");
    auto cfg = tiny_sweep(dir, {3}, {0, 1});
    run_sweep(cfg);
    const auto before = dir_contents(dir);
    {
        std::ofstream(dir / "runs/w3_d1.atrj", std::ios::app) << "junk";
    }
    std::ofstream(dir / "runs/stray.txt") << "x";
    const auto rep = verify_sweep(dir);
    EXPECT_FALSE(rep.ok());
    EXPECT_EQ(rep.problems.size(), 2u);
    fs::remove(dir / "runs/stray.txt");
    const auto res = run_sweep(cfg);
    EXPECT_EQ(res.trained, 1u);
    EXPECT_EQ(dir_contents(dir), before);
}

TEST(RunSweep, DifferentConfigInSameDirectoryIsRejected) {
    const auto dir = fresh_dir("mismatch");
    auto cfg = tiny_sweep(dir);
    run_sweep(cfg);
    cfg.base.epochs = 50;
    EXPECT_THROW(run_sweep(cfg), InvalidArgument);
}

TEST(RunSweep, UnwritableDirectoryFailsBeforeAnyRun) {
    const auto blocker = fresh_dir("blocker");
    fs::create_directories(blocker.parent_path());
    std::ofstream(blocker) << "a file, not a directory";
    auto cfg = tiny_sweep(blocker / "sub");
    EXPECT_THROW(run_sweep(cfg), IoError);
    fs::remove(blocker);
}

TEST(RunSweep, RunFailureIsRecordedNotFatal) {
    const auto dir = fresh_dir("failure");
    auto cfg = tiny_sweep(dir, {3}, {0, 1});
    // Pre-create a directory where one run's trajectory file must go.
    fs::create_directories(dir / "runs" / "w3_d1.atrj.tmp");
    const auto res = run_sweep(cfg);
    ASSERT_EQ(res.summaries.size(), 2u);
    EXPECT_EQ(res.failed, 1u);
    EXPECT_FALSE(res.summaries[0].error);
    EXPECT_TRUE(res.summaries[1].error);
    const auto manifest = load_json_file(dir / manifest_name);
    EXPECT_EQ(manifest["runs"]["w3_d1"]["status"], "failed");
    EXPECT_EQ(manifest["runs"]["w3_d0"]["status"], "done");
}

TEST(RunSweep, Beta2GridIdsCarryBeta2) {
    const auto dir = fresh_dir("beta2");
    auto cfg = tiny_sweep(dir, {3}, {0});
    cfg.beta2_grid = {0.99, 0.999};
    const auto res = run_sweep(cfg);
    ASSERT_EQ(res.summaries.size(), 2u);
    EXPECT_TRUE(fs::exists(dir / "runs/w3_d0_b0.99.atrj"));
    EXPECT_TRUE(fs::exists(dir / "runs/w3_d0_b0.999.atrj"));
    EXPECT_EQ(read_trajectory_binary(dir / "runs/w3_d0_b0.99.atrj").config.adam.beta2, 0.99);
}

TEST(RunSummaryJson, RoundTrip) {
    RunSummary s = summary_with(7, 1.25, 4);
    s.run_id.beta2 = 0.995;
    s.fast_ratio = 0.8;
    s.interval_logmag_fit = RegressionFit{12.5, -3.0, 0.75, 4};
    s.diverged = true;
    s.diverged_at = 99;
    EXPECT_EQ(summary_from_json(nlohmann::json::parse(to_json(s).dump())), s);
    RunSummary failed;
    failed.run_id = {3, 1, std::nullopt};
    failed.error = "boom";
    EXPECT_EQ(summary_from_json(to_json(failed)), failed);
}

TEST(BuildReport, NoSpikesIsRecordedAsNegativeResult) {
    const std::vector<RunSummary> runs{summary_with(3, std::nullopt, 0), summary_with(4, std::nullopt, 0)};
    const nlohmann::json provenance{{"epochs", 50000}};
    const auto rep = build_report(runs, provenance);
    EXPECT_EQ(rep.json["counts"]["spiking"], 0);
    EXPECT_EQ(rep.json["counts"]["quiet"], 2);
    EXPECT_EQ(rep.json["spiking_fraction"], 0.0);
    EXPECT_TRUE(rep.json["slow_ratio"].is_null());
    EXPECT_TRUE(rep.json["fast_ratio"].is_null());
    ASSERT_TRUE(rep.json["negative_result"].is_object());
    EXPECT_EQ(rep.json["negative_result"]["provenance"], provenance);
    EXPECT_NE(rep.text.find("NEGATIVE RESULT"), std::string::npos);
}

TEST(BuildReport, MedianOfSlowRatios) {
    const std::vector<RunSummary> runs{summary_with(3, 0.9, 2), summary_with(4, 1.1, 2), summary_with(5, std::nullopt, 0)};
    const auto rep = build_report(runs);
    EXPECT_DOUBLE_EQ(rep.json["slow_ratio"]["median"].get<double>(), 1.0);
    EXPECT_EQ(rep.json["counts"]["spiking"], 2);
    EXPECT_NEAR(rep.json["spiking_fraction"].get<double>(), 2.0 / 3.0, 1e-15);
    EXPECT_TRUE(rep.json["negative_result"].is_null());
}

TEST(BuildReport, TableHasOneRowPerRun) {
    std::vector<RunSummary> runs;
    for (int w = 1; w <= 12; ++w) runs.push_back(summary_with(w, std::nullopt, 0));
    runs[3].error = "disk full";
    runs[5].diverged = true;
    runs[5].diverged_at = 17;
    const auto rep = build_report(runs);
    std::istringstream in(rep.text);
    std::string line;
    std::size_t rows = 0;
    while (std::getline(in, line)) rows += line.starts_with("w") && line.find("_d") != std::string::npos;
    EXPECT_EQ(rows, runs.size());
    EXPECT_EQ(rep.json["runs"].size(), runs.size());
    EXPECT_EQ(rep.json["counts"]["failed"], 1);
    EXPECT_EQ(rep.json["counts"]["diverged"], 1);
}

TEST(BuildReport, CrossBeta2Regression) {
    std::vector<RunSummary> runs;
    for (double b : {0.99, 0.995, 0.999}) {
        RunSummary s = summary_with(3, 1.0, 6);
        s.run_id.beta2 = b;
        s.interval_logmag_fit = RegressionFit{2.0 / (1.0 - b) + 5.0, 0.0, 1.0, 5};
        runs.push_back(s);
    }
    const auto rep = build_report(runs);
    ASSERT_FALSE(rep.json["cross_beta2"]["fit"].is_null());
    EXPECT_NEAR(rep.json["cross_beta2"]["fit"]["slope"].get<double>(), 2.0, 1e-9);
    EXPECT_NEAR(rep.json["cross_beta2"]["fit"]["r_squared"].get<double>(), 1.0, 1e-12);
}

TEST(BuildReport, EmptyInputIsRejected) { EXPECT_THROW(build_report({}), InvalidArgument); }
