#include "hetreg/metrics.hpp"

#include <cmath>
#include <limits>

#include "hetreg/errors.hpp"

namespace hetreg {

double rmse(std::span<const double> predictions, std::span<const double> targets) {
    if (predictions.size() != targets.size()) {
        throw ConfigError("rmse: length mismatch");
    }
    if (predictions.empty()) throw ConfigError("rmse: empty input");
    double sum = 0.0;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        const double d = predictions[i] - targets[i];
        sum += d * d;
    }
    return std::sqrt(sum / static_cast<double>(predictions.size()));
}

double ermse(std::span<const EvalPair> pairs) {
    if (pairs.empty()) throw ConfigError("ermse: empty input");
    double sum = 0.0;
    for (const auto& p : pairs) {
        const double d = p.e_hat - p.r;
        sum += d * d;
    }
    return std::sqrt(sum / static_cast<double>(pairs.size()));
}

double pir(std::span<const EvalPair> pairs, double eta) {
    if (pairs.empty()) throw ConfigError("pir: empty input");
    if (!(eta > 0.0) || !(eta <= 1.0)) throw ConfigError("pir: eta must be in (0, 1]");
    std::size_t inside = 0;
    for (const auto& p : pairs) {
        if (eta * p.e_hat <= p.r && p.r < p.e_hat / eta) ++inside;
    }
    return static_cast<double>(inside) / static_cast<double>(pairs.size());
}

std::vector<std::pair<double, double>> pir_curve(std::span<const EvalPair> pairs,
                                                 std::span<const double> grid) {
    std::vector<std::pair<double, double>> curve;
    curve.reserve(grid.size());
    for (const double eta : grid) curve.emplace_back(eta, pir(pairs, eta));
    return curve;
}

std::vector<double> default_pir_grid() {
    std::vector<double> grid;
    for (int i = 10; i >= 1; --i) grid.push_back(static_cast<double>(i) / 10.0);
    return grid;
}

double ermse_grouped(const std::vector<std::vector<EvalPair>>& groups) {
    if (groups.empty()) throw ConfigError("ermse_grouped: empty input");
    double sum = 0.0;
    for (const auto& g : groups) sum += ermse(g);
    return sum / static_cast<double>(groups.size());
}

double pir_grouped(const std::vector<std::vector<EvalPair>>& groups, double eta) {
    if (groups.empty()) throw ConfigError("pir_grouped: empty input");
    double sum = 0.0;
    for (const auto& g : groups) sum += pir(g, eta);
    return sum / static_cast<double>(groups.size());
}

double MetricsReport::pir_at(double eta) const {
    for (const auto& [e, v] : pir_curve) {
        if (std::abs(e - eta) < 1e-12) return v;
    }
    return std::numeric_limits<double>::quiet_NaN();
}

}  // namespace hetreg
