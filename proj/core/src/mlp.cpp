#include "hetreg/mlp.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "hetreg/errors.hpp"
#include "hetreg/folds.hpp"
#include "hetreg/rng.hpp"
#include "hetreg/textio.hpp"

namespace hetreg {

namespace {

// ReLU after affine layer l, except the last two (pre-head and head layers).
bool relu_after(std::size_t layer, std::size_t num_layers) { return layer + 2 < num_layers; }

void affine(const DenseLayer& l, std::span<const double> x, std::vector<double>& out) {
    out.resize(l.out);
    for (std::size_t o = 0; o < l.out; ++o) {
        const double* row = l.weights.data() + o * l.in;
        double acc = l.biases[o];
        for (std::size_t i = 0; i < l.in; ++i) acc += row[i] * x[i];
        out[o] = acc;
    }
}

double lookup_residual(const ResidualCache& cache, std::size_t index) {
    if (index >= cache.entries.size()) {
        throw CacheError("residual cache has no entry for sample " + std::to_string(index));
    }
    return cache.entries[index].r_tilde;
}

void check_batch_args(const MlpModel& model, const Dataset& data, const LossConfig& loss_cfg,
                      const ResidualCache* residuals) {
    loss_cfg.validate();
    if (model.input_dim() != data.input_dim) {
        throw ShapeError("model input dim " + std::to_string(model.input_dim()) +
                         " != dataset dim " + std::to_string(data.input_dim));
    }
    const std::size_t heads = model.output_dim();
    if (loss_cfg.has_certainty_head() ? heads != 2 : heads < 1) {
        throw ShapeError(std::string("loss ") + std::string(to_string(loss_cfg.variant)) +
                         " incompatible with a " + std::to_string(heads) + "-head model");
    }
    if (loss_cfg.needs_residual_cache() != (residuals != nullptr)) {
        throw ConfigError(loss_cfg.needs_residual_cache()
                              ? "separate_laplace requires a residual cache"
                              : "residual cache given but the loss does not use one");
    }
}

}  // namespace

std::size_t MlpModel::parameter_count() const {
    std::size_t n = 0;
    for (const auto& l : layers) n += l.in * l.out + l.out;
    return n;
}

MlpModel init_model(const std::vector<std::size_t>& layer_sizes, std::uint64_t seed) {
    if (layer_sizes.size() < 2) {
        throw ConfigError("layer_sizes needs at least input and output widths");
    }
    for (const std::size_t s : layer_sizes) {
        if (s == 0) throw ConfigError("layer sizes must be positive");
    }
    MlpModel m;
    m.layer_sizes = layer_sizes;
    m.seed = seed;
    m.layers.resize(layer_sizes.size() - 1);
    Rng rng(seed);
    for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l) {
        auto& layer = m.layers[l];
        layer.in = layer_sizes[l];
        layer.out = layer_sizes[l + 1];
        layer.weights.resize(layer.in * layer.out);
        layer.biases.assign(layer.out, 0.0);
        const double bound = std::sqrt(6.0 / static_cast<double>(layer.in + layer.out));
        for (auto& w : layer.weights) w = rng.uniform(-bound, bound);
    }
    return m;
}

std::vector<double> forward_raw(const MlpModel& model, std::span<const double> x) {
    if (x.size() != model.input_dim()) {
        throw ShapeError("input dim " + std::to_string(x.size()) + " != model dim " +
                         std::to_string(model.input_dim()));
    }
    std::vector<double> a(x.begin(), x.end());
    std::vector<double> z;
    for (std::size_t l = 0; l < model.layers.size(); ++l) {
        affine(model.layers[l], a, z);
        if (relu_after(l, model.layers.size())) {
            for (auto& v : z) v = v > 0.0 ? v : 0.0;
        }
        a.swap(z);
    }
    return a;
}

HeteroscedasticPrediction forward(const MlpModel& model, std::span<const double> x) {
    if (model.output_dim() != 2) {
        throw ShapeError("two-head forward on a " + std::to_string(model.output_dim()) +
                         "-head model");
    }
    const auto out = forward_raw(model, x);
    return {out[0], out[1]};
}

double predict_signal(const MlpModel& model, std::span<const double> x) {
    return forward_raw(model, x)[0];
}

GradientSet backward(const MlpModel& model, const Dataset& data,
                     std::span<const std::size_t> batch, const LossConfig& loss_cfg,
                     const ResidualCache* residuals) {
    check_batch_args(model, data, loss_cfg, residuals);
    if (batch.empty()) throw ConfigError("backward on an empty batch");

    const std::size_t num_layers = model.layers.size();
    GradientSet g;
    g.layers.resize(num_layers);
    for (std::size_t l = 0; l < num_layers; ++l) {
        g.layers[l].in = model.layers[l].in;
        g.layers[l].out = model.layers[l].out;
        g.layers[l].weights.assign(model.layers[l].weights.size(), 0.0);
        g.layers[l].biases.assign(model.layers[l].biases.size(), 0.0);
    }

    // post[l]: activation after layer l (ReLU applied where it exists);
    // pre[l]: affine output of layer l before ReLU.
    std::vector<std::vector<double>> pre(num_layers), post(num_layers);
    std::vector<double> delta, delta_prev;
    double loss_sum = 0.0;

    for (const std::size_t idx : batch) {
        const auto x = data.input(idx);
        for (std::size_t l = 0; l < num_layers; ++l) {
            const std::span<const double> in_act = l == 0 ? x : std::span<const double>(post[l - 1]);
            affine(model.layers[l], in_act, pre[l]);
            post[l] = pre[l];
            if (relu_after(l, num_layers)) {
                for (auto& v : post[l]) v = v > 0.0 ? v : 0.0;
            }
        }

        const auto& heads = post[num_layers - 1];
        const double y = heads[0];
        const double w = heads.size() > 1 ? heads[1] : 0.0;
        const double r_tilde =
            residuals != nullptr ? lookup_residual(*residuals, idx) : 0.0;
        const LossTerms terms = loss_terms(loss_cfg, y, w, data.targets[idx], r_tilde);
        loss_sum += terms.value;

        delta.assign(heads.size(), 0.0);
        delta[0] = terms.dy;
        if (heads.size() > 1) delta[1] = terms.dw;

        for (std::size_t l = num_layers; l-- > 0;) {
            const auto& layer = model.layers[l];
            auto& grad = g.layers[l];
            const std::span<const double> in_act = l == 0 ? x : std::span<const double>(post[l - 1]);
            for (std::size_t o = 0; o < layer.out; ++o) {
                const double d = delta[o];
                if (d == 0.0) continue;
                grad.biases[o] += d;
                double* wrow = grad.weights.data() + o * layer.in;
                for (std::size_t i = 0; i < layer.in; ++i) wrow[i] += d * in_act[i];
            }
            if (l == 0) break;
            delta_prev.assign(layer.in, 0.0);
            for (std::size_t o = 0; o < layer.out; ++o) {
                const double d = delta[o];
                if (d == 0.0) continue;
                const double* wrow = layer.weights.data() + o * layer.in;
                for (std::size_t i = 0; i < layer.in; ++i) delta_prev[i] += d * wrow[i];
            }
            if (relu_after(l - 1, num_layers)) {
                for (std::size_t i = 0; i < layer.in; ++i) {
                    if (pre[l - 1][i] <= 0.0) delta_prev[i] = 0.0;  // subgradient 0 at the kink
                }
            }
            delta.swap(delta_prev);
        }
    }

    const double inv_n = 1.0 / static_cast<double>(batch.size());
    for (auto& layer : g.layers) {
        for (auto& v : layer.weights) v *= inv_n;
        for (auto& v : layer.biases) v *= inv_n;
    }
    g.loss = loss_sum * inv_n;
    return g;
}

double batch_loss(const MlpModel& model, const Dataset& data,
                  std::span<const std::size_t> batch, const LossConfig& loss_cfg,
                  const ResidualCache* residuals) {
    check_batch_args(model, data, loss_cfg, residuals);
    if (batch.empty()) throw ConfigError("batch_loss on an empty batch");
    double sum = 0.0;
    for (const std::size_t idx : batch) {
        const auto out = forward_raw(model, data.input(idx));
        const double y = out[0];
        const double w = out.size() > 1 ? out[1] : 0.0;
        const double r_tilde =
            residuals != nullptr ? lookup_residual(*residuals, idx) : 0.0;
        sum += loss_terms(loss_cfg, y, w, data.targets[idx], r_tilde).value;
    }
    return sum / static_cast<double>(batch.size());
}

std::string serialize_model(const MlpModel& model) {
    std::ostringstream out;
    out << "hetreg-model v1\n";
    out << "seed " << model.seed << "\n";
    out << "layer_sizes " << model.layer_sizes.size();
    for (const std::size_t s : model.layer_sizes) out << " " << s;
    out << "\n";
    for (std::size_t l = 0; l < model.layers.size(); ++l) {
        const auto& layer = model.layers[l];
        out << "layer " << l << " out " << layer.out << " in " << layer.in << "\n";
        out << "weights\n";
        for (std::size_t o = 0; o < layer.out; ++o) {
            for (std::size_t i = 0; i < layer.in; ++i) {
                if (i) out << " ";
                out << format_double(layer.weights[o * layer.in + i]);
            }
            out << "\n";
        }
        out << "biases\n";
        for (std::size_t o = 0; o < layer.out; ++o) {
            if (o) out << " ";
            out << format_double(layer.biases[o]);
        }
        out << "\n";
    }
    out << "end\n";
    return out.str();
}

namespace {

class LineReader {
public:
    explicit LineReader(std::string_view text) : text_(text) {}

    std::string_view next() {
        while (pos_ < text_.size()) {
            std::size_t eol = text_.find('\n', pos_);
            if (eol == std::string_view::npos) eol = text_.size();
            const std::string_view line = trim(text_.substr(pos_, eol - pos_));
            pos_ = eol + 1;
            ++line_no_;
            if (!line.empty()) return line;
        }
        throw ParseError("model checkpoint: unexpected end of file");
    }

    int line_no() const { return line_no_; }

private:
    std::string_view text_;
    std::size_t pos_ = 0;
    int line_no_ = 0;
};

std::vector<std::string_view> tokens(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
        std::size_t j = i;
        while (j < line.size() && line[j] != ' ' && line[j] != '\t') ++j;
        if (j > i) out.push_back(line.substr(i, j - i));
        i = j;
    }
    return out;
}

[[noreturn]] void bad(const LineReader& r, const std::string& what) {
    throw ParseError("model checkpoint, line " + std::to_string(r.line_no()) + ": " + what);
}

}  // namespace

MlpModel deserialize_model(std::string_view text) {
    LineReader r(text);
    if (r.next() != "hetreg-model v1") throw ParseError("not a hetreg-model v1 checkpoint");

    MlpModel m;
    {
        const auto t = tokens(r.next());
        if (t.size() != 2 || t[0] != "seed") bad(r, "expected 'seed <value>'");
        const auto seed = parse_u64(t[1]);
        if (!seed) bad(r, "bad seed");
        m.seed = *seed;
    }
    {
        const auto t = tokens(r.next());
        if (t.size() < 2 || t[0] != "layer_sizes") bad(r, "expected 'layer_sizes'");
        const auto count = parse_u64(t[1]);
        if (!count || t.size() != 2 + *count) bad(r, "layer_sizes count mismatch");
        for (std::size_t i = 0; i < *count; ++i) {
            const auto s = parse_u64(t[2 + i]);
            if (!s || *s == 0) bad(r, "bad layer size");
            m.layer_sizes.push_back(static_cast<std::size_t>(*s));
        }
        if (m.layer_sizes.size() < 2) bad(r, "need at least two layer sizes");
    }

    m.layers.resize(m.layer_sizes.size() - 1);
    for (std::size_t l = 0; l < m.layers.size(); ++l) {
        auto& layer = m.layers[l];
        layer.in = m.layer_sizes[l];
        layer.out = m.layer_sizes[l + 1];
        const auto t = tokens(r.next());
        if (t.size() != 6 || t[0] != "layer" || t[2] != "out" || t[4] != "in") {
            bad(r, "expected 'layer <idx> out <o> in <i>'");
        }
        if (parse_u64(t[1]) != l || parse_u64(t[3]) != layer.out || parse_u64(t[5]) != layer.in) {
            bad(r, "layer header disagrees with layer_sizes");
        }
        if (r.next() != "weights") bad(r, "expected 'weights'");
        layer.weights.resize(layer.in * layer.out);
        for (std::size_t o = 0; o < layer.out; ++o) {
            const auto row = tokens(r.next());
            if (row.size() != layer.in) bad(r, "weight row width mismatch");
            for (std::size_t i = 0; i < layer.in; ++i) {
                const auto v = parse_double(row[i]);
                if (!v) bad(r, "bad weight value");
                layer.weights[o * layer.in + i] = *v;
            }
        }
        if (r.next() != "biases") bad(r, "expected 'biases'");
        const auto row = tokens(r.next());
        if (row.size() != layer.out) bad(r, "bias row width mismatch");
        layer.biases.resize(layer.out);
        for (std::size_t o = 0; o < layer.out; ++o) {
            const auto v = parse_double(row[o]);
            if (!v) bad(r, "bad bias value");
            layer.biases[o] = *v;
        }
    }
    if (r.next() != "end") bad(r, "expected 'end'");
    return m;
}

void save_model(const MlpModel& model, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << serialize_model(model);
    if (!out) throw IoError("write failed: " + path.string());
}

MlpModel load_model(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return deserialize_model(buf.str());
}

std::uint64_t model_checksum(const MlpModel& model) { return fnv1a(serialize_model(model)); }

}  // namespace hetreg
