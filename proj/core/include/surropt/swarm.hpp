#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "surropt/energy.hpp"
#include "surropt/problem.hpp"
#include "surropt/rng.hpp"

namespace surropt::swarm {

enum class Variant { Plain, PretrainSmall, PretrainLarge, RetrainSmall, RetrainLarge };

inline constexpr std::array<Variant, 5> kAllVariants = {Variant::Plain, Variant::PretrainSmall,
                                                        Variant::PretrainLarge, Variant::RetrainSmall,
                                                        Variant::RetrainLarge};

/// plain, ps, pl, rs, rl
std::string_view short_name(Variant v);
std::optional<Variant> parse_variant(std::string_view name);
bool uses_surrogate(Variant v);
bool retrains(Variant v);

struct PsoConfig {
    int swarm_size = 20;           // N
    long max_fitness_evals = 2000;  // MaxFE
    double phi1 = 2.05;
    double phi2 = 2.05;
    double lambda = 0.5;
    double w_max = 0.5;
    double w_min = 0.1;
    int n_train = 20;  // N_t
    int n_reeval = 5;  // N_r
    Variant variant = Variant::Plain;
    std::uint64_t seed = 1;
    bool record_predictions = false;
};

/// Throws ConfigError naming the offending field.
void validate(const PsoConfig& cfg);

/// Generations the inertia schedule spans: ceil((MaxFE - N) / N).
long total_generations(const PsoConfig& cfg);

enum class FitnessKind { Actual, Predicted };

struct Particle {
    Plan position;
    std::vector<double> velocity;
    double fitness = 0.0;
    FitnessKind kind = FitnessKind::Actual;
    Plan best_position;
    double best_fitness = 0.0;
};

struct SwarmState {
    std::vector<Particle> particles;
    Plan global_best;
    double global_best_fitness = 0.0;
    long generation = 0;
    long fe = 0;
    Dataset dataset;
    long actual_evals = 0;
    long predicted_evals = 0;
    bool trained = false;
};

using UniformDraw = std::function<double()>;

/// w = w_max - (w_max - w_min) * g / g_total.
double inertia_weight(long g, long g_total, double w_max, double w_min);

/// w v + phi1 u1 (p - x) + phi2 u2 (b - x), draws per dimension (u1 then u2),
/// clamped to [-v_max, v_max].
std::vector<double> update_velocity(const Particle& particle, std::span<const int> global_best, double w,
                                    const PsoConfig& cfg, double v_max, const UniformDraw& draw);

/// Stochastic rounding: floor when u <= lambda, ceil otherwise; one draw per component.
std::vector<int> truncate_velocity(std::span<const double> velocity, double lambda, const UniformDraw& draw);

/// clamp(x + v, d_min, d_max) per component.
Plan update_position(std::span<const int> position, std::span<const int> velocity, DurationBounds bounds);

/// Indices of the n_reeval smallest predictions; ties go to the lower index.
std::vector<std::size_t> select_retrain_candidates(std::span<const Particle> particles,
                                                   std::span<const double> predictions, int n_reeval);

struct GenerationRecord {
    long generation = 0;
    long fe = 0;
    double best_actual_fitness = 0.0;
    long actual_evals = 0;
    energy::ProfileTable components = energy::empty_table();  // cumulative
};

struct PredictionRecord {
    long fe = 0;
    Plan plan;
    double predicted = 0.0;
};

struct RunResult {
    Variant variant = Variant::Plain;
    std::uint64_t seed = 0;
    Plan best_plan;
    double best_actual_fitness = 0.0;
    std::vector<GenerationRecord> history;
    long actual_evals = 0;
    long predicted_evals = 0;
    long generations = 0;
    long fe = 0;
    int trainings = 0;
    energy::ProfileTable components = energy::empty_table();
    std::vector<PredictionRecord> predictions;  // filled when cfg.record_predictions
};

/// Called after initialization and after every generation.
using Observer = std::function<void(const SwarmState&)>;

/// NN-assisted PSO. `surrogate` is required by every variant except Plain;
/// `profiler` may be null.
RunResult run(const PsoConfig& cfg, FitnessFunction& evaluator, Surrogate* surrogate,
              energy::Profiler* profiler = nullptr, const Observer& observer = {});

/// Columns of the per-generation CSV.
std::vector<std::string> history_columns();
void write_history_csv(const std::filesystem::path& path, const RunResult& result);

}  // namespace surropt::swarm
