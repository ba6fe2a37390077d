// Train one small network, analyze its loss curve and draw two plots.
//
//   train_and_analyze [out_dir] [epochs]

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>

#include "adamlab/analysis/report.hpp"
#include "adamlab/harness/svg.hpp"
#include "adamlab/trainer.hpp"
#include "adamlab/trajectory_io.hpp"

int main(int argc, char** argv) {
    namespace fs = std::filesystem;
    using namespace adamlab;

    const fs::path out = argc > 1 ? argv[1] : "demo-out";
    RunConfig cfg;
    cfg.shape = {1, 12, 1, Activation::tanh};
    cfg.dataset_index = 5;
    cfg.epochs = argc > 2 ? std::strtoull(argv[2], nullptr, 10) : 20000;
    cfg.snapshot_stride = 5;
    cfg.precision = PrecisionMode::native32();

    fs::create_directories(out);
    const Trajectory traj = train(cfg);
    write_trajectory(traj, out / "run.atrj");

    AnalysisOptions opts;
    opts.spiral_triple = std::array<std::size_t, 3>{0, 12, 24};
    const AnalysisResult result = analyze_trajectory(traj, opts);
    detail::write_file(out / "analysis.json", analysis_document(result, cfg));

    render_series(traj.loss, out / "loss.svg", {.title = "training loss", .log_y = true, .spikes = &result.spikes});
    render_scatter3(traj, *opts.spiral_triple, {}, out / "params.svg");

    std::cout << "epochs        " << traj.loss.size() << "\n"
              << "final loss    " << (result.final_loss ? *result.final_loss : NAN) << "\n"
              << "spikes        " << result.spikes.size() << "\n"
              << "convergence   " << result.convergence.report << "\n"
              << "next spike at " << result.prediction.predicted_epoch << " (" << result.prediction.method << ")\n";
    if (result.spiral)
        std::cout << "winding       " << result.spiral->first.winding_number << " turns over the window\n";
    std::cout << "wrote " << (out / "run.atrj").string() << ", analysis.json, loss.svg, params.svg\n";
}
