#include "surropt/surrogate.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "surropt/energy.hpp"
#include "surropt/error.hpp"
#include "surropt/rng.hpp"

namespace surropt::surrogate {

namespace {

// Work-meter charge per multiply-add, in reference nanoseconds (about 0.45 ns
// measured on the development machine).
void charge_macs(std::uint64_t macs) { energy::charge_work(macs * 9 / 20); }

std::uint64_t forward_cost(const SurrogateModel& model) {
    std::uint64_t macs = 0;
    for (const auto& layer : model.layers) macs += static_cast<std::uint64_t>(layer.inputs) * layer.outputs;
    return macs;
}

void check_dims(std::span<const int> dims) {
    if (dims.size() < 2) throw InvalidSpecError("layer dims need at least an input and an output");
    for (int d : dims) {
        if (d < 1) throw InvalidSpecError("layer dims must be >= 1");
    }
}

// Per-layer activations for one mini-batch; reused across batches.
struct Workspace {
    std::vector<std::vector<double>> pre;   // z_l, rows x outputs
    std::vector<std::vector<double>> post;  // a_l; post[0] is the input
    std::vector<double> delta;
    std::vector<double> delta_prev;
};

void forward_rows(const SurrogateModel& model, const double* inputs, int rows, Workspace& ws) {
    const std::size_t n_layers = model.layers.size();
    ws.pre.resize(n_layers);
    ws.post.resize(n_layers + 1);
    const int in0 = model.layers.front().inputs;
    ws.post[0].assign(inputs, inputs + static_cast<std::size_t>(rows) * in0);
    for (std::size_t l = 0; l < n_layers; ++l) {
        const DenseLayer& layer = model.layers[l];
        const std::vector<double>& x = ws.post[l];
        std::vector<double>& z = ws.pre[l];
        z.resize(static_cast<std::size_t>(rows) * layer.outputs);
        for (int r = 0; r < rows; ++r) {
            const double* xr = x.data() + static_cast<std::size_t>(r) * layer.inputs;
            double* zr = z.data() + static_cast<std::size_t>(r) * layer.outputs;
            for (int o = 0; o < layer.outputs; ++o) {
                const double* w = layer.weights.data() + static_cast<std::size_t>(o) * layer.inputs;
                double acc = layer.bias[static_cast<std::size_t>(o)];
                for (int i = 0; i < layer.inputs; ++i) acc += w[i] * xr[i];
                zr[o] = acc;
            }
        }
        std::vector<double>& a = ws.post[l + 1];
        if (l + 1 < n_layers) {
            a.resize(z.size());
            for (std::size_t k = 0; k < z.size(); ++k) a[k] = z[k] > 0.0 ? z[k] : 0.0;
        } else {
            a = z;
        }
    }
}

// Adds d(MSE)/d(theta) for the given rows to `grads` and returns the batch MSE.
double backward_rows(const SurrogateModel& model, const double* targets, int rows, Workspace& ws,
                     std::vector<DenseLayer>& grads) {
    const std::size_t n_layers = model.layers.size();
    const std::vector<double>& out = ws.post[n_layers];
    const int n_out = model.layers.back().outputs;
    double loss = 0.0;
    ws.delta.resize(out.size());
    const double scale = 2.0 / (static_cast<double>(rows) * n_out);
    for (int r = 0; r < rows; ++r) {
        for (int o = 0; o < n_out; ++o) {
            const std::size_t k = static_cast<std::size_t>(r) * n_out + o;
            const double err = out[k] - targets[k];
            loss += err * err;
            ws.delta[k] = scale * err;
        }
    }
    loss /= static_cast<double>(rows) * n_out;

    for (std::size_t l = n_layers; l-- > 0;) {
        const DenseLayer& layer = model.layers[l];
        DenseLayer& g = grads[l];
        const std::vector<double>& x = ws.post[l];
        for (int r = 0; r < rows; ++r) {
            const double* xr = x.data() + static_cast<std::size_t>(r) * layer.inputs;
            const double* dr = ws.delta.data() + static_cast<std::size_t>(r) * layer.outputs;
            for (int o = 0; o < layer.outputs; ++o) {
                const double d = dr[o];
                if (d == 0.0) continue;
                double* gw = g.weights.data() + static_cast<std::size_t>(o) * layer.inputs;
                for (int i = 0; i < layer.inputs; ++i) gw[i] += d * xr[i];
                g.bias[static_cast<std::size_t>(o)] += d;
            }
        }
        if (l == 0) break;
        ws.delta_prev.assign(static_cast<std::size_t>(rows) * layer.inputs, 0.0);
        for (int r = 0; r < rows; ++r) {
            const double* dr = ws.delta.data() + static_cast<std::size_t>(r) * layer.outputs;
            double* pr = ws.delta_prev.data() + static_cast<std::size_t>(r) * layer.inputs;
            for (int o = 0; o < layer.outputs; ++o) {
                const double d = dr[o];
                if (d == 0.0) continue;
                const double* w = layer.weights.data() + static_cast<std::size_t>(o) * layer.inputs;
                for (int i = 0; i < layer.inputs; ++i) pr[i] += d * w[i];
            }
            const double* zr = ws.pre[l - 1].data() + static_cast<std::size_t>(r) * layer.inputs;
            for (int i = 0; i < layer.inputs; ++i) {
                if (zr[i] <= 0.0) pr[i] = 0.0;
            }
        }
        std::swap(ws.delta, ws.delta_prev);
    }
    return loss;
}

std::vector<DenseLayer> zero_like(const SurrogateModel& model) {
    std::vector<DenseLayer> out;
    out.reserve(model.layers.size());
    for (const auto& layer : model.layers) {
        out.push_back({layer.inputs, layer.outputs, std::vector<double>(layer.weights.size(), 0.0),
                       std::vector<double>(layer.bias.size(), 0.0)});
    }
    return out;
}

void check_batch(const SurrogateModel& model, const Batch& batch) {
    if (model.layers.empty()) throw InvalidSpecError("model has no layers");
    if (batch.cols != model.input_dim()) {
        throw DimensionMismatchError(fmt::format("batch has {} columns, model expects {}", batch.cols, model.input_dim()));
    }
    if (batch.rows < 1 || batch.inputs.size() != static_cast<std::size_t>(batch.rows) * batch.cols ||
        batch.targets.size() != static_cast<std::size_t>(batch.rows) * model.layer_dims.back()) {
        throw DimensionMismatchError("batch buffers do not match rows x cols");
    }
}

void scale_into(const SurrogateModel& model, std::span<const int> plan, double* out) {
    for (std::size_t k = 0; k < plan.size(); ++k) {
        const double lo = model.input_min[k], hi = model.input_max[k];
        out[k] = hi > lo ? (plan[k] - lo) / (hi - lo) : 0.0;
    }
}

}  // namespace

std::size_t SurrogateModel::parameter_count() const {
    std::size_t n = 0;
    for (const auto& layer : layers) n += layer.weights.size() + layer.bias.size();
    return n;
}

void validate(const TrainConfig& cfg) {
    if (cfg.epochs < 1) throw ConfigError("epochs", "must be >= 1");
    if (cfg.batch_size < 1) throw ConfigError("batch_size", "must be >= 1");
    if (!(cfg.learning_rate > 0.0)) throw ConfigError("learning_rate", "must be > 0");
    if (!(cfg.beta1 >= 0.0 && cfg.beta1 < 1.0)) throw ConfigError("beta1", "must be in [0, 1)");
    if (!(cfg.beta2 >= 0.0 && cfg.beta2 < 1.0)) throw ConfigError("beta2", "must be in [0, 1)");
    if (!(cfg.epsilon > 0.0)) throw ConfigError("epsilon", "must be > 0");
}

std::vector<int> default_layer_dims(int input_dim) {
    if (input_dim < 1) throw InvalidSpecError("input dimension must be >= 1");
    const int h1 = std::max(1, static_cast<int>(std::lround(1.5 * input_dim)));
    return {input_dim, h1, input_dim, 1};
}

SurrogateModel init_model(std::span<const int> dims, std::uint64_t seed) {
    check_dims(dims);
    SurrogateModel model;
    model.layer_dims.assign(dims.begin(), dims.end());
    Rng rng(seed);
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
        DenseLayer layer;
        layer.inputs = dims[l];
        layer.outputs = dims[l + 1];
        const double limit = std::sqrt(6.0 / layer.inputs);
        layer.weights.resize(static_cast<std::size_t>(layer.inputs) * layer.outputs);
        for (double& w : layer.weights) w = (2.0 * rng.uniform01() - 1.0) * limit;
        layer.bias.assign(static_cast<std::size_t>(layer.outputs), 0.0);
        model.layers.push_back(std::move(layer));
    }
    model.input_min.assign(static_cast<std::size_t>(dims.front()), 0.0);
    model.input_max.assign(static_cast<std::size_t>(dims.front()), 1.0);
    return model;
}

void set_input_range(SurrogateModel& model, DurationBounds bounds) {
    model.input_min.assign(static_cast<std::size_t>(model.input_dim()), static_cast<double>(bounds.min));
    model.input_max.assign(static_cast<std::size_t>(model.input_dim()), static_cast<double>(bounds.max));
}

double forward_scaled(const SurrogateModel& model, std::span<const double> scaled_input) {
    if (static_cast<int>(scaled_input.size()) != model.input_dim()) {
        throw DimensionMismatchError(
            fmt::format("input has {} values, model expects {}", scaled_input.size(), model.input_dim()));
    }
    Workspace ws;
    forward_rows(model, scaled_input.data(), 1, ws);
    return ws.post.back()[0];
}

double forward(const SurrogateModel& model, std::span<const int> plan) {
    if (static_cast<int>(plan.size()) != model.input_dim()) {
        throw DimensionMismatchError(fmt::format("plan has {} values, model expects {}", plan.size(), model.input_dim()));
    }
    std::vector<double> x(plan.size());
    scale_into(model, plan, x.data());
    Workspace ws;
    forward_rows(model, x.data(), 1, ws);
    charge_macs(forward_cost(model));
    return destandardize(ws.post.back()[0], model.output_mean, model.output_std);
}

std::vector<double> forward_batch(const SurrogateModel& model, std::span<const Plan> plans) {
    std::vector<double> out;
    out.reserve(plans.size());
    for (const auto& p : plans) out.push_back(forward(model, p));
    return out;
}

Batch make_batch(const SurrogateModel& model, const Dataset& data) {
    Batch batch;
    batch.rows = static_cast<int>(data.size());
    batch.cols = model.input_dim();
    batch.inputs.resize(data.size() * static_cast<std::size_t>(batch.cols));
    batch.targets.resize(data.size());
    for (std::size_t r = 0; r < data.size(); ++r) {
        if (static_cast<int>(data[r].plan.size()) != batch.cols) {
            throw DimensionMismatchError(
                fmt::format("dataset row {} has {} values, model expects {}", r, data[r].plan.size(), batch.cols));
        }
        scale_into(model, data[r].plan, batch.inputs.data() + r * static_cast<std::size_t>(batch.cols));
        batch.targets[r] = standardize(data[r].fitness, model.output_mean, model.output_std);
    }
    return batch;
}

LossGradient loss_gradient(const SurrogateModel& model, const Batch& batch) {
    check_batch(model, batch);
    Workspace ws;
    LossGradient out;
    out.layers = zero_like(model);
    forward_rows(model, batch.inputs.data(), batch.rows, ws);
    out.loss = backward_rows(model, batch.targets.data(), batch.rows, ws, out.layers);
    return out;
}

double batch_loss(const SurrogateModel& model, const Batch& batch) {
    check_batch(model, batch);
    Workspace ws;
    forward_rows(model, batch.inputs.data(), batch.rows, ws);
    const auto& out = ws.post.back();
    double loss = 0.0;
    for (std::size_t k = 0; k < out.size(); ++k) loss += (out[k] - batch.targets[k]) * (out[k] - batch.targets[k]);
    return loss / static_cast<double>(out.size());
}

double standardize(double y, double mean, double stdev) { return (y - mean) / stdev; }
double destandardize(double z, double mean, double stdev) { return z * stdev + mean; }

SurrogateModel train(SurrogateModel model, const Dataset& data, const TrainConfig& cfg,
                     std::vector<double>* epoch_losses) {
    validate(cfg);
    if (model.layers.empty()) throw InvalidSpecError("model has no layers");
    if (model.layer_dims.back() != 1) throw InvalidSpecError("surrogate output layer must have one unit");
    if (data.empty()) throw DegenerateNormalizationError("empty training set");

    double mean = 0.0;
    for (const auto& s : data) {
        if (!std::isfinite(s.fitness)) throw DegenerateNormalizationError("non-finite training target");
        mean += s.fitness;
    }
    mean /= static_cast<double>(data.size());
    double var = 0.0;
    for (const auto& s : data) var += (s.fitness - mean) * (s.fitness - mean);
    var /= static_cast<double>(data.size());
    const double stdev = std::sqrt(var);
    if (!(stdev > 0.0)) throw DegenerateNormalizationError("training targets are constant");
    model.output_mean = mean;
    model.output_std = stdev;

    const Batch all = make_batch(model, data);
    const int n = all.rows;
    const int cols = all.cols;

    std::vector<DenseLayer> m1 = zero_like(model), m2 = zero_like(model), grads = zero_like(model);
    std::vector<int> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::vector<double> xb, tb;
    Workspace ws;
    Rng rng(cfg.seed);
    long step = 0;
    const std::uint64_t row_cost = 3 * forward_cost(model);
    const std::uint64_t step_cost = 4 * model.parameter_count();

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        rng.shuffle(order);
        for (int start = 0; start < n; start += cfg.batch_size) {
            const int rows = std::min(cfg.batch_size, n - start);
            xb.resize(static_cast<std::size_t>(rows) * cols);
            tb.resize(static_cast<std::size_t>(rows));
            for (int r = 0; r < rows; ++r) {
                const auto src = static_cast<std::size_t>(order[static_cast<std::size_t>(start + r)]);
                std::copy_n(all.inputs.data() + src * cols, cols, xb.data() + static_cast<std::size_t>(r) * cols);
                tb[static_cast<std::size_t>(r)] = all.targets[src];
            }
            for (auto& g : grads) {
                std::fill(g.weights.begin(), g.weights.end(), 0.0);
                std::fill(g.bias.begin(), g.bias.end(), 0.0);
            }
            forward_rows(model, xb.data(), rows, ws);
            backward_rows(model, tb.data(), rows, ws, grads);

            ++step;
            const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step));
            const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step));
            auto adam = [&](std::vector<double>& p, std::vector<double>& m, std::vector<double>& v,
                            const std::vector<double>& g) {
                for (std::size_t k = 0; k < p.size(); ++k) {
                    m[k] = cfg.beta1 * m[k] + (1.0 - cfg.beta1) * g[k];
                    v[k] = cfg.beta2 * v[k] + (1.0 - cfg.beta2) * g[k] * g[k];
                    p[k] -= cfg.learning_rate * (m[k] / c1) / (std::sqrt(v[k] / c2) + cfg.epsilon);
                }
            };
            for (std::size_t l = 0; l < model.layers.size(); ++l) {
                adam(model.layers[l].weights, m1[l].weights, m2[l].weights, grads[l].weights);
                adam(model.layers[l].bias, m1[l].bias, m2[l].bias, grads[l].bias);
            }
            charge_macs(row_cost * static_cast<std::uint64_t>(rows) + step_cost);
        }
        if (epoch_losses) epoch_losses->push_back(batch_loss(model, all));
    }
    return model;
}

double mape(std::span<const double> actual, std::span<const double> predicted) {
    if (actual.size() != predicted.size()) throw DimensionMismatchError("mape: length mismatch");
    if (actual.empty()) throw UndefinedMetricError("mape: no samples");
    double sum = 0.0;
    for (std::size_t i = 0; i < actual.size(); ++i) {
        if (actual[i] == 0.0) throw UndefinedMetricError("mape: actual value is zero");
        sum += std::abs((predicted[i] - actual[i]) / actual[i]);
    }
    return sum / static_cast<double>(actual.size()) * 100.0;
}

double r_squared(std::span<const double> actual, std::span<const double> predicted) {
    if (actual.size() != predicted.size()) throw DimensionMismatchError("r_squared: length mismatch");
    if (actual.size() < 2) throw UndefinedMetricError("r_squared: need at least two samples");
    double mean = 0.0;
    for (double y : actual) mean += y;
    mean /= static_cast<double>(actual.size());
    double ss_res = 0.0, ss_tot = 0.0;
    for (std::size_t i = 0; i < actual.size(); ++i) {
        ss_res += (actual[i] - predicted[i]) * (actual[i] - predicted[i]);
        ss_tot += (actual[i] - mean) * (actual[i] - mean);
    }
    if (ss_tot == 0.0) throw UndefinedMetricError("r_squared: actual values are constant");
    return 1.0 - ss_res / ss_tot;
}

nlohmann::json to_json(const SurrogateModel& model) {
    nlohmann::json layers = nlohmann::json::array();
    for (const auto& layer : model.layers) {
        layers.push_back({{"inputs", layer.inputs},
                          {"outputs", layer.outputs},
                          {"weights", layer.weights},
                          {"bias", layer.bias}});
    }
    return {{"layer_dims", model.layer_dims},  {"layers", layers},
            {"input_min", model.input_min},    {"input_max", model.input_max},
            {"output_mean", model.output_mean}, {"output_std", model.output_std}};
}

SurrogateModel model_from_json(const nlohmann::json& doc) {
    SurrogateModel model;
    try {
        model.layer_dims = doc.at("layer_dims").get<std::vector<int>>();
        check_dims(model.layer_dims);
        for (const auto& l : doc.at("layers")) {
            DenseLayer layer;
            layer.inputs = l.at("inputs").get<int>();
            layer.outputs = l.at("outputs").get<int>();
            layer.weights = l.at("weights").get<std::vector<double>>();
            layer.bias = l.at("bias").get<std::vector<double>>();
            model.layers.push_back(std::move(layer));
        }
        model.input_min = doc.at("input_min").get<std::vector<double>>();
        model.input_max = doc.at("input_max").get<std::vector<double>>();
        model.output_mean = doc.at("output_mean").get<double>();
        model.output_std = doc.at("output_std").get<double>();
    } catch (const nlohmann::json::exception& e) {
        throw IoError(std::string("malformed model document: ") + e.what());
    }
    if (model.layers.size() + 1 != model.layer_dims.size()) throw IoError("model: layer count does not match dims");
    for (std::size_t l = 0; l < model.layers.size(); ++l) {
        const auto& layer = model.layers[l];
        if (layer.inputs != model.layer_dims[l] || layer.outputs != model.layer_dims[l + 1] ||
            layer.weights.size() != static_cast<std::size_t>(layer.inputs) * layer.outputs ||
            layer.bias.size() != static_cast<std::size_t>(layer.outputs)) {
            throw IoError(fmt::format("model: layer {} shape is inconsistent", l));
        }
    }
    if (model.input_min.size() != static_cast<std::size_t>(model.input_dim()) ||
        model.input_max.size() != model.input_min.size()) {
        throw IoError("model: input normalization size mismatch");
    }
    return model;
}

void save_model(const std::filesystem::path& path, const SurrogateModel& model) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError(fmt::format("cannot write model to '{}'", path.string()));
    out << to_json(model).dump() << '\n';
    if (!out) throw IoError(fmt::format("write to '{}' failed", path.string()));
}

SurrogateModel load_model(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError(fmt::format("cannot read model from '{}'", path.string()));
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw IoError(std::string("malformed model document: ") + e.what());
    }
    return model_from_json(doc);
}

MlpSurrogate::MlpSurrogate(int input_dim, DurationBounds bounds, TrainConfig cfg, std::vector<int> hidden)
    : bounds_(bounds), cfg_(cfg) {
    validate(cfg_);
    if (hidden.empty()) {
        dims_ = default_layer_dims(input_dim);
    } else {
        dims_.push_back(input_dim);
        dims_.insert(dims_.end(), hidden.begin(), hidden.end());
        dims_.push_back(1);
    }
    check_dims(dims_);
}

void MlpSurrogate::train(const Dataset& data) {
    const auto stream = static_cast<std::uint64_t>(trainings_);
    SurrogateModel fresh = init_model(dims_, derive_seed(cfg_.seed, 2 * stream));
    set_input_range(fresh, bounds_);
    TrainConfig cfg = cfg_;
    cfg.seed = derive_seed(cfg_.seed, 2 * stream + 1);
    model_ = surrogate::train(std::move(fresh), data, cfg);
    ++trainings_;
}

double MlpSurrogate::predict(std::span<const int> plan) const {
    if (model_.layers.empty()) throw Error("surrogate used before training");
    return forward(model_, plan);
}

}  // namespace surropt::surrogate
