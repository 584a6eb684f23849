#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <vector>

#include <json.hpp>

#include "surropt/problem.hpp"

namespace surropt::traffic {

/// Grid description for build_scenario; JSON keys match the field names
/// except phases/vehicles/horizon_s/link_travel_time_s as documented.
struct ScenarioSpec {
    int rows = 3;
    int cols = 3;
    int phases = 4;
    int vehicles = 100;
    int horizon_s = 500;
    std::uint64_t seed = 1;
    int d_min = 5;
    int d_max = 60;
    double saturation_flow = 1.0;
    int link_travel_time_s = 10;
};

/// Strict parse: unknown keys and out-of-range values raise ConfigError.
ScenarioSpec scenario_spec_from_json(const nlohmann::json& doc, const std::string& key_prefix = "");
nlohmann::json to_json(const ScenarioSpec& spec);

/// Counts of green and red signals of one intersection in one phase state.
struct SignalCounts {
    int green = 0;
    int red = 0;
};

/// Incoming lane of an intersection; green[j] != 0 when it may discharge in phase j.
struct Approach {
    std::vector<std::uint8_t> green;
};

/// One intersection on a vehicle's route and the approach it queues on there.
struct Hop {
    int intersection = 0;
    int approach = 0;
};

struct Vehicle {
    int departure_s = 0;
    std::vector<Hop> route;
};

struct TrafficScenario {
    int intersections = 0;
    int phases = 0;
    std::vector<SignalCounts> signal;            // [i * phases + j]
    std::vector<std::vector<Approach>> approaches;  // per intersection
    std::vector<Vehicle> vehicles;
    int link_travel_time_s = 10;
    double saturation_flow = 1.0;
    int horizon_s = 500;
    DurationBounds bounds;

    std::size_t dimension() const { return static_cast<std::size_t>(intersections) * phases; }
    const SignalCounts& counts(int i, int j) const { return signal[static_cast<std::size_t>(i) * phases + j]; }
};

/// Checks structural invariants (sizes, routes, departures, bounds). Does not
/// require r >= 1; phase_ratio reports that case itself.
void validate(const TrafficScenario& scenario);

/// Deterministic grid scenario: 4 approaches per intersection (N, E, S, W),
/// approach a green only in phase a % phases, shortest-path routes between
/// uniformly drawn intersections.
TrafficScenario build_scenario(const ScenarioSpec& spec);

struct TrafficMetrics {
    long arrived = 0;              // NV_D
    long not_arrived = 0;          // NV_ND
    long total_travel_time = 0;    // TT_v, s
    long total_stopped_time = 0;   // TT_EP, s

    bool operator==(const TrafficMetrics&) const = default;
};

/// Throws DimensionMismatchError / BoundsError for an unusable plan.
void check_plan(const TrafficScenario& scenario, std::span<const int> plan);

/// Runs horizon_s one-second steps of the queue model.
TrafficMetrics simulate(const TrafficScenario& scenario, std::span<const int> plan);

/// P = sum_i sum_j d_ij * g_ij / r_ij.
double phase_ratio(const TrafficScenario& scenario, std::span<const int> plan);

/// F = (TT_v + TT_EP + NV_ND * T_S) / (NV_D^2 + P); lower is better.
double combined_fitness(const TrafficMetrics& metrics, double phase_ratio, int horizon_s);

/// simulate -> phase_ratio -> combined_fitness, counting calls.
class Evaluator final : public FitnessFunction {
public:
    explicit Evaluator(std::shared_ptr<const TrafficScenario> scenario);

    double evaluate(std::span<const int> plan) override;
    std::size_t dimension() const override { return scenario_->dimension(); }
    DurationBounds bounds() const override { return scenario_->bounds; }

    long evaluations() const { return count_.load(); }
    const TrafficScenario& scenario() const { return *scenario_; }

private:
    std::shared_ptr<const TrafficScenario> scenario_;
    std::atomic<long> count_{0};
};

/// FNV-1a over the durations as little-endian int32.
std::uint64_t plan_hash(std::span<const int> plan);

/// Row of the golden-metrics fixture CSV.
struct GoldenRecord {
    std::uint64_t plan_hash = 0;
    TrafficMetrics metrics;
    double phase_ratio = 0.0;
    double fitness = 0.0;
};

void write_golden_csv(const std::filesystem::path& path, const std::vector<GoldenRecord>& records);
std::vector<GoldenRecord> read_golden_csv(const std::filesystem::path& path);

}  // namespace surropt::traffic
