#include "statefusion/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <json.hpp>

#include "statefusion/io.hpp"
#include "statefusion/kernels.hpp"
#include "statefusion/rng.hpp"

namespace statefusion {

using nlohmann::json;

void MlpConfig::validate() const {
    if (input_dim == 0 || output_dim == 0) throw ValidationError("MLP input and output dims must be >= 1");
    for (auto h : hidden_dims)
        if (h == 0) throw ValidationError("MLP hidden dims must be >= 1");
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate))
        throw ValidationError("MLP learning rate must be > 0");
    if (batch_size == 0) throw ValidationError("MLP batch size must be >= 1");
    if (patience == 0) throw ValidationError("MLP patience must be >= 1");
    if (max_epochs == 0) throw ValidationError("MLP max epochs must be >= 1");
}

std::size_t MlpModel::parameter_count() const {
    std::size_t n = 0;
    for (const auto& layer : layers) n += layer.weights.size() + layer.bias.size();
    return n;
}

MlpModel init_mlp(const MlpConfig& config) {
    config.validate();
    MlpModel model{config, {}};
    Rng rng(derive_seed(config.seed, "init"));
    std::size_t fan_in = config.input_dim;
    std::vector<std::size_t> widths = config.hidden_dims;
    widths.push_back(config.output_dim);
    for (auto width : widths) {
        DenseLayer layer{Grid(width, fan_in), std::vector<double>(width, 0.0)};
        const double scale = std::sqrt(2.0 / static_cast<double>(fan_in));
        for (auto& w : layer.weights.data()) w = scale * rng.normal();
        model.layers.push_back(std::move(layer));
        fan_in = width;
    }
    return model;
}

namespace {

void check_input(const MlpModel& model, std::size_t length) {
    if (length != model.config.input_dim)
        throw ValidationError("feature length " + std::to_string(length) + " does not match MLP input dim " +
                              std::to_string(model.config.input_dim));
}

// Activations of one example: pre[l] and post[l] per layer (post of the last
// layer holds the soft-max probabilities).
struct Trace {
    std::vector<std::vector<double>> pre;
    std::vector<std::vector<double>> post;
};

Trace trace_forward(const MlpModel& model, std::span<const double> x) {
    Trace t;
    std::vector<double> input(x.begin(), x.end());
    for (std::size_t l = 0; l < model.layers.size(); ++l) {
        const auto& layer = model.layers[l];
        const bool last = l + 1 == model.layers.size();
        std::vector<double> z(layer.out_dim());
        for (std::size_t o = 0; o < layer.out_dim(); ++o) {
            const auto w = layer.weights.row(o);
            double acc = layer.bias[o];
            for (std::size_t k = 0; k < input.size(); ++k) acc += w[k] * input[k];
            z[o] = acc;
        }
        std::vector<double> a(z.size());
        if (last) {
            const double peak = *std::max_element(z.begin(), z.end());
            double sum = 0.0;
            for (std::size_t k = 0; k < z.size(); ++k) sum += a[k] = std::exp(z[k] - peak);
            for (auto& v : a) v /= sum;
        } else {
            for (std::size_t k = 0; k < z.size(); ++k) a[k] = z[k] < 0.0 ? 0.0 : z[k];
        }
        t.pre.push_back(std::move(z));
        t.post.push_back(a);
        input = std::move(a);
    }
    return t;
}

double cross_entropy_from_logits(std::span<const double> logits, std::size_t true_index) {
    const double peak = *std::max_element(logits.begin(), logits.end());
    double sum = 0.0;
    for (double z : logits) sum += std::exp(z - peak);
    return std::max(0.0, peak + std::log(sum) - logits[true_index]);
}

Grid logits_batch(const MlpModel& model, const Grid& features) {
    Grid act = features;
    for (std::size_t l = 0; l < model.layers.size(); ++l) {
        const bool last = l + 1 == model.layers.size();
        act = kernels::affine_omp(act, model.layers[l].weights, model.layers[l].bias, !last);
    }
    return act;
}

bool all_finite(const MlpModel& model) {
    for (const auto& layer : model.layers) {
        for (double w : layer.weights.data())
            if (!std::isfinite(w)) return false;
        for (double b : layer.bias)
            if (!std::isfinite(b)) return false;
    }
    return true;
}

}  // namespace

std::vector<double> forward(const MlpModel& model, std::span<const double> features) {
    check_input(model, features.size());
    return trace_forward(model, features).post.back();
}

Grid forward_batch(const MlpModel& model, const Grid& features) {
    if (features.rows() > 0) check_input(model, features.cols());
    return kernels::softmax_rows_omp(logits_batch(model, features));
}

double loss(const MlpModel& model, std::span<const double> features, std::size_t true_index) {
    check_input(model, features.size());
    if (true_index >= model.config.output_dim) throw ValidationError("true class index out of range");
    return cross_entropy_from_logits(trace_forward(model, features).pre.back(), true_index);
}

double mean_loss(const MlpModel& model, const LabeledSet& set) {
    if (set.size() == 0) throw ValidationError("mean loss of an empty set");
    check_input(model, set.features.cols());
    const Grid logits = logits_batch(model, set.features);
    double total = 0.0;
    for (std::size_t n = 0; n < set.size(); ++n) total += cross_entropy_from_logits(logits.row(n), set.labels[n]);
    return total / static_cast<double>(set.size());
}

double batch_loss(const MlpModel& model, const LabeledSet& set, std::span<const std::size_t> batch) {
    if (batch.empty()) throw ValidationError("empty batch");
    double total = 0.0;
    for (auto n : batch) total += loss(model, set.features.row(n), set.labels[n]);
    return total / static_cast<double>(batch.size());
}

Gradients gradient(const MlpModel& model, const LabeledSet& set, std::span<const std::size_t> batch) {
    if (batch.empty()) throw ValidationError("gradient of an empty batch");
    check_input(model, set.features.cols());
    Gradients grads;
    for (const auto& layer : model.layers)
        grads.push_back({Grid(layer.out_dim(), layer.in_dim()), std::vector<double>(layer.out_dim(), 0.0)});

    const std::size_t L = model.layers.size();
    for (auto n : batch) {
        const auto x = set.features.row(n);
        const std::size_t y = set.labels.at(n);
        if (y >= model.config.output_dim) throw ValidationError("label out of range in gradient batch");
        const Trace t = trace_forward(model, x);

        std::vector<double> delta = t.post.back();
        delta[y] -= 1.0;
        for (std::size_t l = L; l-- > 0;) {
            const auto& layer = model.layers[l];
            auto& g = grads[l];
            const std::span<const double> input = l == 0 ? x : std::span<const double>(t.post[l - 1]);
            for (std::size_t o = 0; o < layer.out_dim(); ++o) {
                if (delta[o] == 0.0) continue;
                auto grow = g.weights.row(o);
                for (std::size_t k = 0; k < input.size(); ++k) grow[k] += delta[o] * input[k];
                g.bias[o] += delta[o];
            }
            if (l == 0) break;
            std::vector<double> prev(layer.in_dim(), 0.0);
            for (std::size_t o = 0; o < layer.out_dim(); ++o) {
                if (delta[o] == 0.0) continue;
                const auto w = layer.weights.row(o);
                for (std::size_t k = 0; k < prev.size(); ++k) prev[k] += w[k] * delta[o];
            }
            const auto& pre = t.pre[l - 1];
            for (std::size_t k = 0; k < prev.size(); ++k)
                if (!(pre[k] > 0.0)) prev[k] = 0.0;
            delta = std::move(prev);
        }
    }
    const double scale = 1.0 / static_cast<double>(batch.size());
    for (auto& g : grads) {
        for (auto& w : g.weights.data()) w *= scale;
        for (auto& b : g.bias) b *= scale;
    }
    return grads;
}

TrainResult train(const MlpModel& initial, const LabeledSet& train_set, const LabeledSet& validation_set) {
    const MlpConfig& cfg = initial.config;
    cfg.validate();
    if (train_set.size() == 0 || validation_set.size() == 0)
        throw ValidationError("training needs non-empty train and validation sets");
    check_input(initial, train_set.features.cols());
    check_input(initial, validation_set.features.cols());

    MlpModel model = initial;
    MlpModel best = initial;
    TrainReport report;
    report.best_validation_loss = std::numeric_limits<double>::infinity();

    Rng rng(derive_seed(cfg.seed, "shuffle"));
    std::vector<std::size_t> order(train_set.size());
    std::iota(order.begin(), order.end(), 0);
    std::size_t since_best = 0;

    for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        rng.shuffle(order.begin(), order.end());
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t stop = std::min(order.size(), start + cfg.batch_size);
            const Gradients g = gradient(model, train_set, std::span(order).subspan(start, stop - start));
            for (std::size_t l = 0; l < model.layers.size(); ++l) {
                auto& w = model.layers[l].weights.data();
                const auto& gw = g[l].weights.data();
                for (std::size_t i = 0; i < w.size(); ++i) w[i] -= cfg.learning_rate * gw[i];
                auto& b = model.layers[l].bias;
                for (std::size_t i = 0; i < b.size(); ++i) b[i] -= cfg.learning_rate * g[l].bias[i];
            }
        }

        const double train_loss = mean_loss(model, train_set);
        const double val_loss = mean_loss(model, validation_set);
        report.epochs_run = epoch;
        report.train_loss_curve.push_back(train_loss);
        report.validation_loss_curve.push_back(val_loss);
        report.final_train_loss = train_loss;
        if (!std::isfinite(train_loss) || !std::isfinite(val_loss) || !all_finite(model))
            throw TrainingDiverged("training diverged at epoch " + std::to_string(epoch), report);

        if (val_loss < report.best_validation_loss) {
            report.best_validation_loss = val_loss;
            report.best_epoch = epoch;
            best = model;
            since_best = 0;
        } else if (++since_best >= cfg.patience) {
            break;
        }
    }
    return {std::move(best), std::move(report)};
}

Prediction predict(const MlpModel& model, std::span<const double> features) {
    Prediction p;
    p.probabilities = forward(model, features);
    const auto best = std::max_element(p.probabilities.begin(), p.probabilities.end());
    p.index = static_cast<std::size_t>(best - p.probabilities.begin());
    return p;
}

std::vector<std::size_t> predict_batch(const MlpModel& model, const Grid& features) {
    const Grid probs = forward_batch(model, features);
    std::vector<std::size_t> out(probs.rows());
    for (std::size_t n = 0; n < probs.rows(); ++n) {
        const auto row = probs.row(n);
        out[n] = static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin());
    }
    return out;
}

namespace {

json config_to_json(const MlpConfig& c) {
    return {{"input_dim", c.input_dim},   {"hidden_dims", c.hidden_dims}, {"output_dim", c.output_dim},
            {"activation", "relu"},       {"learning_rate", c.learning_rate}, {"batch_size", c.batch_size},
            {"max_epochs", c.max_epochs}, {"patience", c.patience},         {"seed", c.seed}};
}

MlpConfig config_from_json(const json& j) {
    MlpConfig c;
    c.input_dim = j.at("input_dim").get<std::size_t>();
    c.hidden_dims = j.at("hidden_dims").get<std::vector<std::size_t>>();
    c.output_dim = j.at("output_dim").get<std::size_t>();
    c.learning_rate = j.at("learning_rate").get<double>();
    c.batch_size = j.at("batch_size").get<std::size_t>();
    c.max_epochs = j.at("max_epochs").get<std::size_t>();
    c.patience = j.at("patience").get<std::size_t>();
    c.seed = j.at("seed").get<std::uint64_t>();
    return c;
}

}  // namespace

std::string mlp_to_json(const MlpModel& model, std::string_view catalog_fingerprint) {
    json layers = json::array();
    for (const auto& layer : model.layers)
        layers.push_back({{"rows", layer.weights.rows()},
                          {"cols", layer.weights.cols()},
                          {"weights", layer.weights.data()},
                          {"bias", layer.bias}});
    json j = {{"format", "statefusion.mlp/1"},
              {"catalog_fingerprint", catalog_fingerprint},
              {"config", config_to_json(model.config)},
              {"layers", layers}};
    return j.dump(1) + "\n";
}

MlpModel mlp_from_json(std::string_view text, std::string* catalog_fingerprint) {
    MlpModel model;
    try {
        const json j = json::parse(text);
        model.config = config_from_json(j.at("config"));
        model.config.validate();
        for (const auto& lj : j.at("layers")) {
            const auto rows = lj.at("rows").get<std::size_t>();
            const auto cols = lj.at("cols").get<std::size_t>();
            auto weights = lj.at("weights").get<std::vector<double>>();
            auto bias = lj.at("bias").get<std::vector<double>>();
            if (weights.size() != rows * cols || bias.size() != rows)
                throw ParseError("MLP layer arrays do not match their shape");
            model.layers.push_back({Grid(rows, cols, std::move(weights)), std::move(bias)});
        }
        if (catalog_fingerprint) *catalog_fingerprint = j.value("catalog_fingerprint", "");
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("MLP model: ") + e.what());
    }
    std::size_t in = model.config.input_dim;
    std::vector<std::size_t> widths = model.config.hidden_dims;
    widths.push_back(model.config.output_dim);
    if (widths.size() != model.layers.size()) throw ValidationError("MLP model has the wrong number of layers");
    for (std::size_t l = 0; l < widths.size(); ++l) {
        if (model.layers[l].in_dim() != in || model.layers[l].out_dim() != widths[l])
            throw ValidationError("MLP layer " + std::to_string(l) + " shape does not chain");
        in = widths[l];
    }
    if (!all_finite(model)) throw ValidationError("MLP model holds non-finite parameters");
    return model;
}

void save_mlp(const MlpModel& model, std::string_view catalog_fingerprint, const std::filesystem::path& path) {
    write_text_file(path, mlp_to_json(model, catalog_fingerprint));
}

MlpModel load_mlp(const std::filesystem::path& path, std::string* catalog_fingerprint) {
    return mlp_from_json(read_text_file(path), catalog_fingerprint);
}

std::string train_report_to_json(const TrainReport& r) {
    json j = {{"epochs_run", r.epochs_run},
              {"final_train_loss", r.final_train_loss},
              {"best_validation_loss", r.best_validation_loss},
              {"best_epoch", r.best_epoch},
              {"train_loss_curve", r.train_loss_curve},
              {"validation_loss_curve", r.validation_loss_curve}};
    return j.dump(2) + "\n";
}

}  // namespace statefusion
