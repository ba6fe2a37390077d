#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

#include "adamlab/errors.hpp"
#include "adamlab/netcore.hpp"
#include "adamlab/optim.hpp"
#include "adamlab/precision.hpp"

namespace adamlab {

struct RunConfig {
    NetworkShape shape{1, 8, 1, Activation::tanh};
    std::uint64_t dataset_index = 0;
    std::uint64_t n_points = 64;
    std::uint64_t init_seed = 0;
    AdamConfig adam{};
    PrecisionMode precision = PrecisionMode::native32();
    std::uint64_t epochs = 50000;
    std::uint64_t snapshot_stride = 10;

    void validate() const {
        shape.validate();
        adam.validate();
        precision.validate();
        if (n_points < 2) throw InvalidArgument("n_points must be >= 2");
        if (epochs < 1) throw InvalidArgument("epochs must be >= 1");
        if (snapshot_stride < 1) throw InvalidArgument("snapshot_stride must be >= 1");
    }

    friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

struct Snapshot {
    std::uint64_t epoch = 0;
    ParameterVector params;
    friend bool operator==(const Snapshot&, const Snapshot&) = default;
};

struct Trajectory {
    RunConfig config;
    std::vector<double> loss;  // loss[e] is evaluated at the parameters before step e
    std::vector<Snapshot> snapshots;
    std::optional<std::uint64_t> diverged_at;

    friend bool operator==(const Trajectory&, const Trajectory&) = default;
};

/// The dataset a run trains on, rounded into the run's precision.
inline Dataset run_dataset(const RunConfig& cfg) {
    return quantized(generate_dataset(cfg.dataset_index, cfg.n_points, cfg.shape), cfg.precision);
}

/// Initial parameters of a run, rounded into the run's precision.
inline ParameterVector run_initial_params(const RunConfig& cfg) {
    ParameterVector params = init_params(cfg.shape, cfg.init_seed);
    for (double& p : params) p = quantize(p, cfg.precision);
    return params;
}

/// One full-batch Adam step per epoch. Spikes are recorded like any other
/// loss value; the loop only stops at the first non-finite loss.
inline Trajectory train(const RunConfig& cfg) {
    cfg.validate();
    Trajectory traj;
    traj.config = cfg;
    traj.loss.reserve(cfg.epochs);

    const Dataset data = run_dataset(cfg);
    ParameterVector params = run_initial_params(cfg);
    AdamState state(params.size());
    std::vector<double> gradient(params.size());
    std::vector<double> scratch;

    with_arith(cfg.precision, [&](const auto& a) {
        for (std::uint64_t epoch = 0; epoch < cfg.epochs; ++epoch) {
            if (epoch % cfg.snapshot_stride == 0) traj.snapshots.push_back({epoch, params});
            const double loss = evaluate(params, cfg.shape, data, gradient, scratch, a);
            traj.loss.push_back(loss);
            if (!std::isfinite(loss)) {
                traj.diverged_at = epoch;
                return;
            }
            adam_step_inplace(params, state, gradient, cfg.adam, a);
        }
    });
    return traj;
}

}  // namespace adamlab
