#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <vector>

#include "hetreg/dataset.hpp"
#include "hetreg/train.hpp"

namespace hetreg {

/// Balanced random partition of dataset indices into m folds.
struct FoldPlan {
    std::size_t m = 0;
    std::vector<std::uint32_t> assignment;  // dataset index -> fold id
    std::uint64_t seed = 0;

    std::size_t size() const { return assignment.size(); }
};

/// Uniform balanced partition: fold sizes differ by at most one, the first
/// (n mod m) folds take the extra sample. Pure function of (n, m, seed).
FoldPlan make_fold_plan(std::size_t n, std::size_t m, std::uint64_t seed);

struct ResidualEntry {
    double r_tilde = 0.0;               // out-of-fold |y_hat - y*|
    std::uint32_t fold = 0;
    std::uint64_t model_checksum = 0;   // checkpoint checksum of the producing model
};

/// Per-sample virtual residuals keyed by dataset index, with fold provenance
/// and a fingerprint of the fold-training configuration.
struct ResidualCache {
    std::vector<ResidualEntry> entries;  // one per dataset index
    FoldPlan plan;
    std::uint64_t config_fingerprint = 0;
    std::vector<std::size_t> fold_arch;  // layer sizes of the fold models

    double r_tilde(std::size_t index) const { return entries.at(index).r_tilde; }
    void validate() const;  // completeness + non-negative finite residuals
};

struct FoldTrainOptions {
    TrainConfig train{};
    /// Fraction of each fold-model training set held out for early stopping;
    /// 0 trains on the full complement for the whole epoch budget.
    double validation_fraction = 0.0;
    /// Worker threads for the independent fold trainings; 0 = hardware count.
    unsigned threads = 0;
    /// Instrumentation: invoked with the original dataset index of every
    /// sample a fold model sees (training stream and carved validation).
    /// May fire concurrently from different folds.
    std::function<void(std::uint32_t fold, std::size_t dataset_index)> on_fold_train_sample;
};

/// Fingerprint of everything that shapes the residuals: fold-model
/// architecture, training hyperparameters and the plan geometry.
std::uint64_t fold_config_fingerprint(const std::vector<std::size_t>& fold_arch,
                                      const FoldTrainOptions& options, std::size_t n,
                                      std::size_t m);

/// Architecture of a fold model: the main model with a single signal head.
std::vector<std::size_t> fold_model_arch(const std::vector<std::size_t>& main_arch);

/// Train one signal-only model per fold on the complement of that fold with
/// plain L1 loss, then record each sample's out-of-fold absolute residual.
/// `main_arch` is the main model's layer sizes (the fold models drop the
/// certainty head). Fold trainings run in parallel; the merge is keyed by
/// index so completion order cannot change the result.
ResidualCache compute_virtual_residuals(const Dataset& data, const FoldPlan& plan,
                                        const std::vector<std::size_t>& main_arch,
                                        const FoldTrainOptions& options);

void save_cache(const ResidualCache& cache, const std::filesystem::path& path);
ResidualCache load_cache(const std::filesystem::path& path);

}  // namespace hetreg
