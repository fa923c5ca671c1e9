#include "hetreg/folds.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <future>
#include <numeric>
#include <sstream>
#include <thread>

#include "hetreg/errors.hpp"
#include "hetreg/rng.hpp"
#include "hetreg/textio.hpp"

namespace hetreg {

FoldPlan make_fold_plan(std::size_t n, std::size_t m, std::uint64_t seed) {
    if (m < 2) throw ConfigError("fold count m must be at least 2");
    if (m > n) throw ConfigError("fold count m exceeds dataset size");

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    Rng rng(derive_seed(seed, "fold-plan"));
    rng.shuffle(order);

    FoldPlan plan;
    plan.m = m;
    plan.seed = seed;
    plan.assignment.resize(n);
    // First (n mod m) folds take ceil(n/m) samples, the rest floor(n/m).
    const std::size_t base = n / m;
    const std::size_t extra = n % m;
    std::size_t pos = 0;
    for (std::size_t fold = 0; fold < m; ++fold) {
        const std::size_t count = base + (fold < extra ? 1 : 0);
        for (std::size_t k = 0; k < count; ++k) {
            plan.assignment[order[pos++]] = static_cast<std::uint32_t>(fold);
        }
    }
    return plan;
}

void ResidualCache::validate() const {
    if (entries.size() != plan.assignment.size()) {
        throw CacheError("residual cache incomplete: " + std::to_string(entries.size()) +
                         " entries for " + std::to_string(plan.assignment.size()) + " samples");
    }
    for (std::size_t i = 0; i < entries.size(); ++i) {
        const auto& e = entries[i];
        if (!std::isfinite(e.r_tilde) || e.r_tilde < 0.0) {
            throw CacheError("residual cache entry " + std::to_string(i) +
                             " has invalid r_tilde");
        }
        if (e.fold >= plan.m) {
            throw CacheError("residual cache entry " + std::to_string(i) +
                             " names fold " + std::to_string(e.fold) + " out of " +
                             std::to_string(plan.m));
        }
        if (e.fold != plan.assignment[i]) {
            throw CacheError("residual cache entry " + std::to_string(i) +
                             " disagrees with the fold plan");
        }
    }
}

std::vector<std::size_t> fold_model_arch(const std::vector<std::size_t>& main_arch) {
    if (main_arch.size() < 2) throw ConfigError("architecture needs at least two layer sizes");
    std::vector<std::size_t> arch = main_arch;
    arch.back() = 1;
    return arch;
}

std::uint64_t fold_config_fingerprint(const std::vector<std::size_t>& fold_arch,
                                      const FoldTrainOptions& options, std::size_t n,
                                      std::size_t m) {
    std::ostringstream s;
    s << "arch";
    for (const std::size_t a : fold_arch) s << " " << a;
    const auto& t = options.train;
    s << ";epochs " << t.epochs << ";batch " << t.batch_size << ";lr "
      << format_double(t.learning_rate) << ";seed " << t.seed << ";opt "
      << (t.optimizer.kind == OptimizerKind::adam ? "adam" : "sgd") << " "
      << format_double(t.optimizer.beta1) << " " << format_double(t.optimizer.beta2) << " "
      << format_double(t.optimizer.epsilon) << ";patience " << t.patience << ";valfrac "
      << format_double(options.validation_fraction) << ";n " << n << ";m " << m;
    return fnv1a(s.str());
}

namespace {

struct FoldResult {
    std::vector<std::pair<std::size_t, double>> residuals;  // (dataset index, r_tilde)
    std::uint64_t checksum = 0;
};

FoldResult train_one_fold(const Dataset& data, const FoldPlan& plan, std::uint32_t fold,
                          const std::vector<std::size_t>& arch, const FoldTrainOptions& options) {
    std::vector<std::size_t> train_idx, held_out;
    for (std::size_t i = 0; i < plan.assignment.size(); ++i) {
        (plan.assignment[i] == fold ? held_out : train_idx).push_back(i);
    }

    const std::uint64_t fold_seed = derive_seed(options.train.seed, 0x7000u + fold);
    Dataset train_set;
    Dataset val_set;
    const Dataset* val_ptr = nullptr;
    if (options.validation_fraction > 0.0) {
        std::vector<std::size_t> shuffled = train_idx;
        Rng rng(derive_seed(fold_seed, "fold-val-split"));
        rng.shuffle(shuffled);
        const auto n_val = std::max<std::size_t>(
            1, static_cast<std::size_t>(std::llround(options.validation_fraction *
                                                     static_cast<double>(shuffled.size()))));
        if (n_val >= shuffled.size()) {
            throw ConfigError("fold validation fraction leaves no training data");
        }
        const std::span<const std::size_t> all(shuffled);
        val_set = subset(data, all.subspan(0, n_val), "val");
        train_set = subset(data, all.subspan(n_val), "train");
        val_ptr = &val_set;
    } else {
        train_set = subset(data, train_idx, "train");
    }

    MlpModel init = init_model(arch, derive_seed(fold_seed, "init"));
    TrainConfig cfg = options.train;
    cfg.seed = derive_seed(fold_seed, "shuffle");

    TrainObserver observer;
    std::vector<std::size_t> stream_to_dataset;  // subset position -> dataset index
    const TrainObserver* observer_ptr = nullptr;
    if (options.on_fold_train_sample) {
        if (val_ptr != nullptr) {
            // The shuffled prefix became validation; map positions of the rest.
            // subset() above consumed `shuffled` in order, so rebuild that order here.
        }
        stream_to_dataset = train_set_indices(plan, fold, options, fold_seed);
        observer.on_batch = [&](int, int, std::span<const std::size_t> indices) {
            for (const std::size_t pos : indices) {
                options.on_fold_train_sample(fold, stream_to_dataset[pos]);
            }
        };
        observer_ptr = &observer;
    }
    const TrainResult trained = train(init, train_set, cfg, LossConfig{LossVariant::l1_only},
                                      nullptr, val_ptr, observer_ptr);

    FoldResult result;
    result.checksum = model_checksum(trained.model);
    result.residuals.reserve(held_out.size());
    for (const std::size_t i : held_out) {
        const double pred = predict_signal(trained.model, data.input(i));
        const double r = std::abs(pred - data.targets[i]);
        if (!std::isfinite(r)) {
            throw Error("virtual residual pipeline: non-finite residual for sample " +
                        std::to_string(i) + " in fold " + std::to_string(fold));
        }
        result.residuals.emplace_back(i, r);
    }
    return result;
}

}  // namespace

ResidualCache compute_virtual_residuals(const Dataset& data, const FoldPlan& plan,
                                        const std::vector<std::size_t>& main_arch,
                                        const FoldTrainOptions& options) {
    if (plan.assignment.size() != data.size()) {
        throw ConfigError("fold plan covers " + std::to_string(plan.assignment.size()) +
                          " samples, dataset has " + std::to_string(data.size()));
    }
    options.train.validate();
    const std::vector<std::size_t> arch = fold_model_arch(main_arch);
    if (arch.front() != data.input_dim) {
        throw ShapeError("fold-model input width does not match the dataset");
    }

    unsigned threads = options.threads != 0 ? options.threads
                                            : std::max(1u, std::thread::hardware_concurrency());
    threads = std::min<unsigned>(threads, static_cast<unsigned>(plan.m));

    std::vector<FoldResult> results(plan.m);
    if (threads <= 1) {
        for (std::uint32_t fold = 0; fold < plan.m; ++fold) {
            results[fold] = train_one_fold(data, plan, fold, arch, options);
        }
    } else {
        std::vector<std::future<FoldResult>> futures;
        futures.reserve(plan.m);
        for (std::uint32_t fold = 0; fold < plan.m; ++fold) {
            futures.push_back(std::async(std::launch::async, [&, fold] {
                return train_one_fold(data, plan, fold, arch, options);
            }));
        }
        for (std::uint32_t fold = 0; fold < plan.m; ++fold) {
            results[fold] = futures[fold].get();
        }
    }

    ResidualCache cache;
    cache.plan = plan;
    cache.fold_arch = arch;
    cache.config_fingerprint = fold_config_fingerprint(arch, options, data.size(), plan.m);
    cache.entries.resize(data.size());
    for (std::uint32_t fold = 0; fold < plan.m; ++fold) {
        for (const auto& [index, r] : results[fold].residuals) {
            cache.entries[index] = {r, fold, results[fold].checksum};
        }
    }
    cache.validate();
    return cache;
}

void save_cache(const ResidualCache& cache, const std::filesystem::path& path) {
    cache.validate();
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << "hetreg-residual-cache v1\n";
    out << "n " << cache.entries.size() << "\n";
    out << "m " << cache.plan.m << "\n";
    out << "seed " << cache.plan.seed << "\n";
    out << "fingerprint " << to_hex(cache.config_fingerprint) << "\n";
    out << "arch " << cache.fold_arch.size();
    for (const std::size_t a : cache.fold_arch) out << " " << a;
    out << "\n";
    out << "entries\n";
    for (std::size_t i = 0; i < cache.entries.size(); ++i) {
        const auto& e = cache.entries[i];
        out << i << " " << e.fold << " " << format_double(e.r_tilde) << " "
            << to_hex(e.model_checksum) << "\n";
    }
    out << "end\n";
    if (!out) throw IoError("write failed: " + path.string());
}

ResidualCache load_cache(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());

    auto next_line = [&in, &path]() -> std::string {
        std::string line;
        while (std::getline(in, line)) {
            if (!trim(line).empty()) return std::string(trim(line));
        }
        throw CacheError(path.string() + ": truncated residual cache");
    };
    auto fields = [](const std::string& line) {
        std::vector<std::string> out;
        std::stringstream ss(line);
        std::string tok;
        while (ss >> tok) out.push_back(tok);
        return out;
    };
    auto expect_u64 = [&path](const std::vector<std::string>& t, const char* key) {
        if (t.size() != 2 || t[0] != key) {
            throw CacheError(path.string() + ": expected '" + key + " <value>'");
        }
        const auto v = parse_u64(t[1]);
        if (!v) throw CacheError(path.string() + ": bad value for " + key);
        return *v;
    };

    if (next_line() != "hetreg-residual-cache v1") {
        throw CacheError(path.string() + ": not a hetreg residual cache");
    }
    ResidualCache cache;
    const std::uint64_t n = expect_u64(fields(next_line()), "n");
    const std::uint64_t m = expect_u64(fields(next_line()), "m");
    cache.plan.m = static_cast<std::size_t>(m);
    cache.plan.seed = expect_u64(fields(next_line()), "seed");
    {
        const auto t = fields(next_line());
        if (t.size() != 2 || t[0] != "fingerprint") {
            throw CacheError(path.string() + ": expected fingerprint");
        }
        const auto v = from_hex(t[1]);
        if (!v) throw CacheError(path.string() + ": bad fingerprint");
        cache.config_fingerprint = *v;
    }
    {
        const auto t = fields(next_line());
        if (t.size() < 2 || t[0] != "arch") throw CacheError(path.string() + ": expected arch");
        const auto count = parse_u64(t[1]);
        if (!count || t.size() != 2 + *count) {
            throw CacheError(path.string() + ": arch width mismatch");
        }
        for (std::size_t i = 0; i < *count; ++i) {
            const auto a = parse_u64(t[2 + i]);
            if (!a || *a == 0) throw CacheError(path.string() + ": bad arch entry");
            cache.fold_arch.push_back(static_cast<std::size_t>(*a));
        }
    }
    if (next_line() != "entries") throw CacheError(path.string() + ": expected entries");

    cache.plan.assignment.resize(n);
    cache.entries.resize(n);
    std::vector<bool> seen(n, false);
    for (std::uint64_t k = 0; k < n; ++k) {
        const auto t = fields(next_line());
        if (t.size() != 4) throw CacheError(path.string() + ": malformed entry line");
        const auto index = parse_u64(t[0]);
        const auto fold = parse_u64(t[1]);
        const auto r = parse_double(t[2]);
        const auto checksum = from_hex(t[3]);
        if (!index || !fold || !r || !checksum || *index >= n) {
            throw CacheError(path.string() + ": malformed entry line");
        }
        if (seen[*index]) {
            throw CacheError(path.string() + ": duplicate entry for index " +
                             std::to_string(*index));
        }
        seen[*index] = true;
        if (!std::isfinite(*r) || *r < 0.0) {
            throw CacheError(path.string() + ": negative or non-finite r_tilde for index " +
                             std::to_string(*index));
        }
        if (*fold >= m) {
            throw CacheError(path.string() + ": fold id out of range for index " +
                             std::to_string(*index));
        }
        cache.entries[*index] = {*r, static_cast<std::uint32_t>(*fold), *checksum};
        cache.plan.assignment[*index] = static_cast<std::uint32_t>(*fold);
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (!seen[i]) {
            throw CacheError(path.string() + ": missing entry for index " + std::to_string(i));
        }
    }
    if (next_line() != "end") throw CacheError(path.string() + ": expected end");
    cache.validate();
    return cache;
}

}  // namespace hetreg
