#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

namespace hetreg {

/// One evaluated sample: actual absolute residual r and the model's
/// predicted error e_hat = exp(-w).
struct EvalPair {
    double r;
    double e_hat;
};

/// sqrt(mean (prediction - target)^2).
double rmse(std::span<const double> predictions, std::span<const double> targets);

/// sqrt(mean (e_hat - r)^2): the root mean squared gap between predicted and
/// actual error.
double ermse(std::span<const EvalPair> pairs);

/// Fraction of pairs with eta * e_hat <= r < e_hat / eta. Left boundary
/// inclusive, right exclusive; requires 0 < eta <= 1.
double pir(std::span<const EvalPair> pairs, double eta);

/// PiR evaluated on a grid of eta values, one (eta, PiR) per grid point.
std::vector<std::pair<double, double>> pir_curve(std::span<const EvalPair> pairs,
                                                 std::span<const double> grid);

/// 1.0, 0.9, ..., 0.1.
std::vector<double> default_pir_grid();

// Grouped variants: the metric is computed per group and averaged across
// groups, for tasks where each group is one image or record.
double ermse_grouped(const std::vector<std::vector<EvalPair>>& groups);
double pir_grouped(const std::vector<std::vector<EvalPair>>& groups, double eta);

/// Evaluation summary for one trained model on one dataset.
struct MetricsReport {
    double rmse = 0.0;
    double ermse = 0.0;  // NaN for signal-only evaluations
    std::vector<std::pair<double, double>> pir_curve;
    std::size_t n = 0;
    std::vector<EvalPair> pairs;  // optional raw pairs for scatter export

    double pir_at(double eta) const;  // from the stored curve; NaN if absent
};

}  // namespace hetreg
