#include "hetreg/train.hpp"

#include <cmath>
#include <limits>
#include <numeric>

#include "hetreg/errors.hpp"
#include "hetreg/rng.hpp"

namespace hetreg {

namespace {

class Optimizer {
public:
    Optimizer(const MlpModel& model, const TrainConfig& cfg) : cfg_(cfg) {
        if (cfg.optimizer.kind == OptimizerKind::adam) {
            m_.resize(model.layers.size());
            v_.resize(model.layers.size());
            for (std::size_t l = 0; l < model.layers.size(); ++l) {
                const std::size_t nw = model.layers[l].weights.size();
                const std::size_t nb = model.layers[l].biases.size();
                m_[l].assign(nw + nb, 0.0);
                v_[l].assign(nw + nb, 0.0);
            }
        }
    }

    void step(MlpModel& model, const GradientSet& grads) {
        ++t_;
        const auto& oc = cfg_.optimizer;
        if (oc.kind == OptimizerKind::sgd) {
            for (std::size_t l = 0; l < model.layers.size(); ++l) {
                apply_sgd(model.layers[l].weights, grads.layers[l].weights);
                apply_sgd(model.layers[l].biases, grads.layers[l].biases);
            }
            return;
        }
        const double corr1 = 1.0 - std::pow(oc.beta1, t_);
        const double corr2 = 1.0 - std::pow(oc.beta2, t_);
        for (std::size_t l = 0; l < model.layers.size(); ++l) {
            auto& layer = model.layers[l];
            const auto& g = grads.layers[l];
            const std::size_t nw = layer.weights.size();
            for (std::size_t i = 0; i < nw; ++i) {
                layer.weights[i] -= adam_delta(m_[l][i], v_[l][i], g.weights[i], corr1, corr2);
            }
            for (std::size_t i = 0; i < layer.biases.size(); ++i) {
                layer.biases[i] -=
                    adam_delta(m_[l][nw + i], v_[l][nw + i], g.biases[i], corr1, corr2);
            }
        }
    }

private:
    void apply_sgd(std::vector<double>& params, const std::vector<double>& grads) {
        for (std::size_t i = 0; i < params.size(); ++i) {
            params[i] -= cfg_.learning_rate * grads[i];
        }
    }

    double adam_delta(double& m, double& v, double g, double corr1, double corr2) {
        const auto& oc = cfg_.optimizer;
        m = oc.beta1 * m + (1.0 - oc.beta1) * g;
        v = oc.beta2 * v + (1.0 - oc.beta2) * g * g;
        return cfg_.learning_rate * (m / corr1) / (std::sqrt(v / corr2) + oc.epsilon);
    }

    const TrainConfig& cfg_;
    std::vector<std::vector<double>> m_, v_;
    int t_ = 0;
};

}  // namespace

void TrainConfig::validate() const {
    if (epochs <= 0) throw ConfigError("epochs must be positive");
    if (batch_size <= 0) throw ConfigError("batch_size must be positive");
    if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
        throw ConfigError("learning_rate must be finite and >= 0");
    }
    if (patience <= 0) throw ConfigError("early-stopping patience must be positive");
    const auto& oc = optimizer;
    if (oc.kind == OptimizerKind::adam) {
        if (!(oc.beta1 > 0.0 && oc.beta1 < 1.0) || !(oc.beta2 > 0.0 && oc.beta2 < 1.0) ||
            !(oc.epsilon > 0.0)) {
            throw ConfigError("adam parameters out of range");
        }
    }
}

double mean_abs_residual(const MlpModel& model, const Dataset& data) {
    if (data.size() == 0) throw ConfigError("mean_abs_residual on an empty dataset");
    double sum = 0.0;
    for (std::size_t i = 0; i < data.size(); ++i) {
        sum += std::abs(predict_signal(model, data.input(i)) - data.targets[i]);
    }
    return sum / static_cast<double>(data.size());
}

TrainResult train(const MlpModel& initial, const Dataset& data, const TrainConfig& cfg,
                  const LossConfig& loss_cfg, const ResidualCache* residuals,
                  const Dataset* validation, const TrainObserver* observer) {
    cfg.validate();
    loss_cfg.validate();
    if (data.size() == 0) throw ConfigError("training dataset is empty");
    if (validation != nullptr && validation->size() == 0) {
        throw ConfigError("validation dataset is empty");
    }

    TrainResult result;
    result.model = initial;
    Optimizer opt(result.model, cfg);
    Rng shuffle_rng(derive_seed(cfg.seed, "epoch-shuffle"));

    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), 0);

    MlpModel best = result.model;
    double best_val = std::numeric_limits<double>::infinity();
    int best_epoch = -1;
    int since_best = 0;

    result.log.best_val_l1 = std::numeric_limits<double>::quiet_NaN();

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        shuffle_rng.shuffle(order);
        double loss_sum = 0.0;
        const std::size_t n = order.size();
        const auto bs = static_cast<std::size_t>(cfg.batch_size);
        int batch_no = 0;
        for (std::size_t start = 0; start < n; start += bs, ++batch_no) {
            const std::span<const std::size_t> batch(order.data() + start,
                                                     std::min(bs, n - start));
            if (observer != nullptr && observer->on_batch) {
                observer->on_batch(epoch, batch_no, batch);
            }
            GradientSet grads;
            try {
                grads = backward(result.model, data, batch, loss_cfg, residuals);
            } catch (const NumericError& e) {
                throw DivergenceError("training diverged at epoch " + std::to_string(epoch) +
                                          ", batch " + std::to_string(batch_no) + ": " + e.what(),
                                      epoch, batch_no);
            }
            if (!std::isfinite(grads.loss)) {
                throw DivergenceError("training diverged at epoch " + std::to_string(epoch) +
                                          ", batch " + std::to_string(batch_no) +
                                          ": non-finite loss",
                                      epoch, batch_no);
            }
            loss_sum += grads.loss * static_cast<double>(batch.size());
            opt.step(result.model, grads);
        }

        EpochStats stats{loss_sum / static_cast<double>(n),
                         std::numeric_limits<double>::quiet_NaN()};
        if (validation != nullptr) {
            stats.val_l1 = mean_abs_residual(result.model, *validation);
            if (stats.val_l1 < best_val) {
                best_val = stats.val_l1;
                best = result.model;
                best_epoch = epoch;
                since_best = 0;
            } else {
                ++since_best;
            }
        }
        result.log.epochs.push_back(stats);
        if (observer != nullptr && observer->on_epoch) observer->on_epoch(epoch, stats);

        if (validation != nullptr && since_best >= cfg.patience) {
            result.log.early_stopped = true;
            break;
        }
    }

    if (validation != nullptr) {
        result.model = std::move(best);
        result.log.best_epoch = best_epoch;
        result.log.best_val_l1 = best_val;
    } else {
        result.log.best_epoch = static_cast<int>(result.log.epochs.size()) - 1;
    }
    return result;
}

}  // namespace hetreg
