#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "hetreg/dataset.hpp"
#include "hetreg/losses.hpp"

namespace hetreg {

struct ResidualCache;

struct DenseLayer {
    std::size_t in = 0;
    std::size_t out = 0;
    std::vector<double> weights;  // out x in, row-major
    std::vector<double> biases;   // out
};

/// Dense feed-forward net. ReLU follows every affine layer except the last
/// two, so the pre-head layer and the heads themselves stay linear. The main
/// model ends in a width-2 layer (signal head, certainty head); fold models
/// end in width 1.
struct MlpModel {
    std::vector<std::size_t> layer_sizes;
    std::vector<DenseLayer> layers;
    std::uint64_t seed = 0;

    std::size_t input_dim() const { return layer_sizes.front(); }
    std::size_t output_dim() const { return layer_sizes.back(); }
    std::size_t parameter_count() const;
};

struct HeteroscedasticPrediction {
    double y;  // signal estimate
    double w;  // certainty; predicted absolute error is exp(-w)
};

/// Weights uniform in +-sqrt(6 / (fan_in + fan_out)), biases zero, drawn
/// layer by layer in row-major order from Rng(seed).
MlpModel init_model(const std::vector<std::size_t>& layer_sizes, std::uint64_t seed);

/// Full head vector for any architecture.
std::vector<double> forward_raw(const MlpModel& model, std::span<const double> x);

/// Two-head forward; ShapeError unless the model has exactly two outputs.
HeteroscedasticPrediction forward(const MlpModel& model, std::span<const double> x);

/// First head only; works for signal-only fold models too.
double predict_signal(const MlpModel& model, std::span<const double> x);

/// Gradients of the batch-mean loss, same shapes as the model layers.
struct GradientSet {
    std::vector<DenseLayer> layers;
    double loss = 0.0;  // batch-mean loss value
};

/// Exact analytic gradients of the selected batch-mean loss. `residuals`
/// must be provided exactly when the variant is separate_laplace; the
/// virtual residual enters the loss value but contributes no gradient.
GradientSet backward(const MlpModel& model, const Dataset& data,
                     std::span<const std::size_t> batch, const LossConfig& loss_cfg,
                     const ResidualCache* residuals = nullptr);

/// Batch-mean loss via the forward/value path only (no gradient code shared).
double batch_loss(const MlpModel& model, const Dataset& data,
                  std::span<const std::size_t> batch, const LossConfig& loss_cfg,
                  const ResidualCache* residuals = nullptr);

// Checkpoint: self-describing text with layer sizes, seed and row-major
// parameter arrays in shortest round-trip decimal form. Loading reproduces
// forward outputs bit-exactly.
std::string serialize_model(const MlpModel& model);
MlpModel deserialize_model(std::string_view text);
void save_model(const MlpModel& model, const std::filesystem::path& path);
MlpModel load_model(const std::filesystem::path& path);

/// FNV-1a over the serialized checkpoint text.
std::uint64_t model_checksum(const MlpModel& model);

}  // namespace hetreg
