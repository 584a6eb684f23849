#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include <json.hpp>

#include "surropt/energy.hpp"
#include "surropt/surrogate.hpp"
#include "surropt/swarm.hpp"
#include "surropt/traffic.hpp"

namespace surropt::config {

struct HarnessSettings {
    int eval_samples = 50;
    std::vector<int> sweep_sizes = {128, 512, 2048};
    int sweep_repeats = 3;
    int sweep_test_rows = 100;
    int runs = 5;
    int scatter_samples = 200;
};

/// Everything the CLI needs. Missing keys keep the defaults of the member
/// structs.
struct RunConfig {
    traffic::ScenarioSpec scenario;
    swarm::PsoConfig pso;  // variant and n_train are filled in per variant
    int n_train_small = 20;
    int n_train_large = 400;
    surrogate::TrainConfig train;
    std::vector<int> hidden_layers;  // empty: [1.5 dim, dim]
    energy::BackendOptions energy;
    HarnessSettings harness;
};

/// Validates a parsed document; ConfigError::key() holds the dotted key path.
RunConfig parse_config_json(const nlohmann::json& doc);

/// Reads and validates a JSON file. Malformed JSON raises ConfigError.
RunConfig parse_config(const std::filesystem::path& path);

nlohmann::json to_json(const RunConfig& cfg);

/// PsoConfig for one variant: n_train picks the small or large dataset size.
swarm::PsoConfig pso_for(const RunConfig& cfg, swarm::Variant variant, std::uint64_t seed);

}  // namespace surropt::config
