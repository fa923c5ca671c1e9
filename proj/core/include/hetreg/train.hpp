#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "hetreg/dataset.hpp"
#include "hetreg/losses.hpp"
#include "hetreg/mlp.hpp"

namespace hetreg {

enum class OptimizerKind { sgd, adam };

struct OptimizerConfig {
    OptimizerKind kind = OptimizerKind::adam;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

struct TrainConfig {
    int epochs = 300;
    int batch_size = 32;
    double learning_rate = 1e-3;
    std::uint64_t seed = 0;
    OptimizerConfig optimizer{};
    int patience = 10;  // early-stopping patience on validation L1

    void validate() const;  // throws ConfigError
};

struct EpochStats {
    double train_loss;  // mean loss over the epoch's samples
    double val_l1;      // mean |y - y*| on validation; NaN when absent
};

struct TrainLog {
    std::vector<EpochStats> epochs;
    int best_epoch = -1;       // epoch of the returned parameters (validation runs only)
    double best_val_l1 = 0.0;  // NaN when no validation set
    bool early_stopped = false;
};

/// Hooks for instrumentation; any member may be left empty.
struct TrainObserver {
    std::function<void(int epoch, int batch, std::span<const std::size_t> indices)> on_batch;
    std::function<void(int epoch, const EpochStats&)> on_epoch;
};

struct TrainResult {
    MlpModel model;
    TrainLog log;
};

/// Mini-batch training with per-epoch reshuffling from a stream derived off
/// cfg.seed. With a validation set, returns the parameters with the lowest
/// validation L1 seen and stops once `patience` epochs pass without
/// improvement; otherwise returns the final-epoch parameters. A non-finite
/// batch loss raises DivergenceError naming the epoch and batch.
TrainResult train(const MlpModel& initial, const Dataset& data, const TrainConfig& cfg,
                  const LossConfig& loss_cfg, const ResidualCache* residuals = nullptr,
                  const Dataset* validation = nullptr, const TrainObserver* observer = nullptr);

/// Mean |y - y*| of the signal head over a dataset.
double mean_abs_residual(const MlpModel& model, const Dataset& data);

}  // namespace hetreg
