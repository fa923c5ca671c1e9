#include "hetreg/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "hetreg/errors.hpp"
#include "hetreg/rng.hpp"
#include "hetreg/textio.hpp"

namespace hetreg {

double synthetic_signal(double x, double delta) {
    return x < 0.5 ? 2.0 * x - 1.0 : 2.0 * x - 1.0 + delta;
}

double synthetic_sigma(double x) { return 1.99 * x + 0.01; }

Dataset generate_synthetic(const SyntheticConfig& cfg) {
    if (cfg.n == 0) throw ConfigError("synthetic dataset size must be positive");
    Dataset d;
    d.input_dim = 1;
    d.tag = "full";
    d.inputs.reserve(cfg.n);
    d.targets.reserve(cfg.n);
    d.signal.reserve(cfg.n);
    d.noise_sigma.reserve(cfg.n);
    Rng rng(cfg.seed);
    for (std::size_t i = 0; i < cfg.n; ++i) {
        const double x = rng.uniform();
        const double f = synthetic_signal(x, cfg.delta);
        const double sigma = synthetic_sigma(x);
        const double noise = sigma * rng.normal();
        d.inputs.push_back(x);
        d.targets.push_back(f + noise);
        d.signal.push_back(f);
        d.noise_sigma.push_back(sigma);
    }
    return d;
}

namespace {

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) cells.push_back(std::string(trim(cell)));
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

}  // namespace

Dataset load_csv(const std::filesystem::path& path, const std::vector<std::string>& input_cols,
                 const std::string& target_col, bool normalize) {
    if (input_cols.empty()) throw ConfigError("load_csv: no input columns declared");
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());

    std::string line;
    if (!std::getline(in, line)) throw ParseError(path.string() + ": empty file");
    const auto header = split_line(line);

    auto column_index = [&](const std::string& name) -> std::size_t {
        const auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end()) {
            throw ParseError(path.string() + ": missing column '" + name + "'");
        }
        return static_cast<std::size_t>(it - header.begin());
    };

    std::vector<std::size_t> in_idx;
    in_idx.reserve(input_cols.size());
    for (const auto& name : input_cols) in_idx.push_back(column_index(name));
    const std::size_t target_idx = column_index(target_col);

    Dataset d;
    d.input_dim = input_cols.size();
    d.tag = "full";

    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (trim(line).empty()) continue;
        const auto cells = split_line(line);
        auto numeric_cell = [&](std::size_t col) -> double {
            if (col >= cells.size()) {
                throw ParseError(path.string() + ": row " + std::to_string(row) +
                                 " has no column '" + header[col] + "'");
            }
            const auto v = parse_double(cells[col]);
            if (!v) {
                throw ParseError(path.string() + ": row " + std::to_string(row) + ", column '" +
                                 header[col] + "': non-numeric value '" + cells[col] + "'");
            }
            return *v;
        };
        for (const std::size_t col : in_idx) d.inputs.push_back(numeric_cell(col));
        d.targets.push_back(numeric_cell(target_idx));
    }
    if (d.targets.empty()) throw ParseError(path.string() + ": no data rows");

    if (normalize) {
        const std::size_t n = d.size();
        d.input_mean.assign(d.input_dim, 0.0);
        d.input_std.assign(d.input_dim, 0.0);
        for (std::size_t j = 0; j < d.input_dim; ++j) {
            double mean = 0.0;
            for (std::size_t i = 0; i < n; ++i) mean += d.inputs[i * d.input_dim + j];
            mean /= static_cast<double>(n);
            double var = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                const double c = d.inputs[i * d.input_dim + j] - mean;
                var += c * c;
            }
            var /= static_cast<double>(n);
            const double sd = std::sqrt(var);
            if (!(sd > 0.0)) {
                throw ConfigError(path.string() + ": column '" + input_cols[j] +
                                  "' is constant, cannot standardize");
            }
            d.input_mean[j] = mean;
            d.input_std[j] = sd;
            for (std::size_t i = 0; i < n; ++i) {
                auto& v = d.inputs[i * d.input_dim + j];
                v = (v - mean) / sd;
            }
        }
    }
    return d;
}

void save_csv(const Dataset& data, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    for (std::size_t j = 0; j < data.input_dim; ++j) out << "x" << j << ",";
    out << "target";
    if (data.has_truth()) out << ",f,sigma";
    out << "\n";
    for (std::size_t i = 0; i < data.size(); ++i) {
        for (const double v : data.input(i)) out << format_double(v) << ",";
        out << format_double(data.targets[i]);
        if (data.has_truth()) {
            out << "," << format_double(data.signal[i]) << ","
                << format_double(data.noise_sigma[i]);
        }
        out << "\n";
    }
    if (!out) throw IoError("write failed: " + path.string());
}

Dataset subset(const Dataset& data, std::span<const std::size_t> indices, std::string tag) {
    Dataset out;
    out.input_dim = data.input_dim;
    out.tag = std::move(tag);
    out.input_mean = data.input_mean;
    out.input_std = data.input_std;
    for (const std::size_t i : indices) {
        const auto x = data.input(i);
        out.inputs.insert(out.inputs.end(), x.begin(), x.end());
        out.targets.push_back(data.targets[i]);
        if (data.has_truth()) {
            out.signal.push_back(data.signal[i]);
            out.noise_sigma.push_back(data.noise_sigma[i]);
        }
    }
    return out;
}

std::array<Dataset, 3> split(const Dataset& data, const SplitFractions& fractions,
                             std::uint64_t seed) {
    const double f[3] = {fractions.train, fractions.val, fractions.test};
    double sum = 0.0;
    for (const double v : f) {
        if (!(v > 0.0)) throw ConfigError("split fractions must be positive");
        sum += v;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw ConfigError("split fractions must sum to 1");

    const std::size_t n = data.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    Rng rng(derive_seed(seed, "split"));
    rng.shuffle(order);

    // Cumulative rounding keeps the partition exhaustive.
    const auto c1 = static_cast<std::size_t>(std::llround(f[0] * static_cast<double>(n)));
    const auto c12 = static_cast<std::size_t>(std::llround((f[0] + f[1]) * static_cast<double>(n)));
    if (c1 == 0 || c12 <= c1 || c12 >= n) {
        throw ConfigError("split fractions produce an empty subset for n=" + std::to_string(n));
    }

    const std::span<const std::size_t> all(order);
    return {subset(data, all.subspan(0, c1), "train"), subset(data, all.subspan(c1, c12 - c1), "val"),
            subset(data, all.subspan(c12), "test")};
}

}  // namespace hetreg
