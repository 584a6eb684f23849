#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include <json.hpp>

#include "surropt/problem.hpp"

namespace surropt::surrogate {

/// Fully connected layer; weights are row-major [outputs x inputs].
struct DenseLayer {
    int inputs = 0;
    int outputs = 0;
    std::vector<double> weights;
    std::vector<double> bias;
};

/// Feed-forward ReLU network with min-max input scaling and standardized output.
struct SurrogateModel {
    std::vector<int> layer_dims;  // input, hidden..., 1
    std::vector<DenseLayer> layers;
    std::vector<double> input_min;
    std::vector<double> input_max;
    double output_mean = 0.0;
    double output_std = 1.0;

    int input_dim() const { return layer_dims.empty() ? 0 : layer_dims.front(); }
    std::size_t parameter_count() const;
};

struct TrainConfig {
    int epochs = 100;
    int batch_size = 32;
    double learning_rate = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    std::uint64_t seed = 0;
};

void validate(const TrainConfig& cfg);

/// [dim, round(1.5 dim), dim, 1]; gives 190-285-190-1 at dim 190.
std::vector<int> default_layer_dims(int input_dim);

/// He-uniform weights in +-sqrt(6 / fan_in), zero biases, identity scaling.
SurrogateModel init_model(std::span<const int> dims, std::uint64_t seed);

/// Min-max input scaling from the duration bounds, same for every input.
void set_input_range(SurrogateModel& model, DurationBounds bounds);

double forward(const SurrogateModel& model, std::span<const int> plan);
std::vector<double> forward_batch(const SurrogateModel& model, std::span<const Plan> plans);

/// Inputs already scaled to [0, 1] and targets already standardized, row-major.
struct Batch {
    int rows = 0;
    int cols = 0;
    std::vector<double> inputs;
    std::vector<double> targets;
};

/// Network output on scaled inputs, before de-standardization.
double forward_scaled(const SurrogateModel& model, std::span<const double> scaled_input);

struct LossGradient {
    double loss = 0.0;  // mean squared error over the batch
    std::vector<DenseLayer> layers;
};

/// MSE loss and its analytic gradient with respect to every weight and bias.
LossGradient loss_gradient(const SurrogateModel& model, const Batch& batch);
double batch_loss(const SurrogateModel& model, const Batch& batch);

/// Scales plans and standardizes targets with the model's normalization.
Batch make_batch(const SurrogateModel& model, const Dataset& data);

double standardize(double y, double mean, double stdev);
double destandardize(double z, double mean, double stdev);

/// Adam on the MSE of standardized targets. Output normalization is refreshed
/// from `data`. Throws DegenerateNormalizationError for constant targets.
SurrogateModel train(SurrogateModel model, const Dataset& data, const TrainConfig& cfg,
                     std::vector<double>* epoch_losses = nullptr);

/// Mean absolute percentage error, in percent.
double mape(std::span<const double> actual, std::span<const double> predicted);
/// Coefficient of determination.
double r_squared(std::span<const double> actual, std::span<const double> predicted);

nlohmann::json to_json(const SurrogateModel& model);
SurrogateModel model_from_json(const nlohmann::json& doc);
void save_model(const std::filesystem::path& path, const SurrogateModel& model);
SurrogateModel load_model(const std::filesystem::path& path);

/// Surrogate adapter used by the swarm: every train() call re-initializes the
/// network and fits it from scratch on the whole dataset.
class MlpSurrogate final : public Surrogate {
public:
    MlpSurrogate(int input_dim, DurationBounds bounds, TrainConfig cfg, std::vector<int> hidden = {});

    void train(const Dataset& data) override;
    double predict(std::span<const int> plan) const override;

    const SurrogateModel& model() const { return model_; }
    int trainings() const { return trainings_; }

private:
    std::vector<int> dims_;
    DurationBounds bounds_;
    TrainConfig cfg_;
    SurrogateModel model_;
    int trainings_ = 0;
};

}  // namespace surropt::surrogate
