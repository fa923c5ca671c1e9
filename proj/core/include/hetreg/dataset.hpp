#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace hetreg {

/// Ordered collection of (input vector, scalar target) samples. Indices are
/// stable; everything is immutable after construction by convention.
struct Dataset {
    std::size_t input_dim = 0;
    std::vector<double> inputs;       // size() * input_dim, row-major
    std::vector<double> targets;      // size()
    std::vector<double> signal;       // ground-truth f(x); empty unless synthetic
    std::vector<double> noise_sigma;  // ground-truth sigma(x); empty unless synthetic
    std::string tag;                  // "full" / "train" / "val" / "test"

    // Per-column standardization stats when loaded with normalize=true.
    std::vector<double> input_mean;
    std::vector<double> input_std;

    std::size_t size() const { return targets.size(); }
    std::span<const double> input(std::size_t i) const {
        return {inputs.data() + i * input_dim, input_dim};
    }
    bool has_truth() const { return !signal.empty(); }
};

enum class NoiseFamily { gaussian };

struct SyntheticConfig {
    std::size_t n = 128;
    double delta = 0.0;
    std::uint64_t seed = 0;
    NoiseFamily noise_family = NoiseFamily::gaussian;
};

/// Step-linear signal: 2x - 1, plus delta on the right half-interval.
double synthetic_signal(double x, double delta);

/// Heteroscedastic noise scale 1.99 x + 0.01.
double synthetic_sigma(double x);

/// x ~ U[0,1), y = f(x) + sigma(x) * N(0,1). Ground truth f and sigma are
/// stored alongside for diagnostics; training uses only (x, y).
Dataset generate_synthetic(const SyntheticConfig& cfg);

/// CSV with a header row. Declared columns must exist and parse as numbers.
/// With normalize, each input column is standardized to mean 0 / variance 1
/// and the stats are recorded for the inverse transform.
Dataset load_csv(const std::filesystem::path& path, const std::vector<std::string>& input_cols,
                 const std::string& target_col, bool normalize = false);

/// Header x0..xk,target plus f,sigma columns when ground truth is present.
void save_csv(const Dataset& data, const std::filesystem::path& path);

struct SplitFractions {
    double train = 0.8;
    double val = 0.1;
    double test = 0.1;
};

/// Disjoint, exhaustive, seed-deterministic random split.
std::array<Dataset, 3> split(const Dataset& data, const SplitFractions& fractions,
                             std::uint64_t seed);

/// Subset by explicit indices (keeps truth columns and stats).
Dataset subset(const Dataset& data, std::span<const std::size_t> indices, std::string tag);

}  // namespace hetreg
