#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <vector>

#include "surropt/config.hpp"
#include "surropt/energy.hpp"
#include "surropt/problem.hpp"
#include "surropt/rng.hpp"
#include "surropt/surrogate.hpp"
#include "surropt/swarm.hpp"
#include "surropt/traffic.hpp"

namespace surropt::harness {

Plan random_plan(std::size_t dim, DurationBounds bounds, Rng& rng);

/// Evaluates `rows` uniformly random plans.
Dataset build_archive(FitnessFunction& f, int rows, std::uint64_t seed);

struct EvalCostStats {
    int samples = 0;
    energy::Stat cpu_j;
    energy::Stat dram_j;
    energy::Stat seconds;
};

/// Cost of single evaluations of random plans, one Evaluation scope each.
EvalCostStats experiment_eval_cost(FitnessFunction& f, energy::Profiler& profiler, int n_samples,
                                   std::uint64_t seed);

struct SweepOptions {
    std::vector<int> sizes = {128, 512, 2048};
    int repeats = 3;
    int test_rows = 100;
    surrogate::TrainConfig train;
    std::vector<int> hidden;  // empty: default layer dims
    DurationBounds bounds;
    std::uint64_t seed = 1;
};

struct SweepRow {
    int size = 0;
    energy::Stat train_cpu_j;
    energy::Stat train_dram_j;
    energy::Stat train_seconds;
    energy::Stat pred_cpu_j;
    energy::Stat pred_dram_j;
    energy::Stat pred_seconds;
    double mape = 0.0;  // pooled over repeats
    double r2 = 0.0;
};

/// Train/test sweep over dataset sizes. Each repeat draws one test set of
/// test_rows rows and, for every size, a disjoint training subset.
std::vector<SweepRow> experiment_surrogate_sweep(const Dataset& archive, const SweepOptions& options,
                                                 energy::Profiler& profiler);

struct ScatterPoint {
    long fe = 0;
    double actual = 0.0;
    double predicted = 0.0;
};

struct VariantRuns {
    swarm::Variant variant = swarm::Variant::Plain;
    std::vector<swarm::RunResult> runs;
    std::vector<std::vector<ScatterPoint>> scatter;  // per run; empty for Plain
    std::vector<energy::ReportRow> components;
};

/// Run r of every variant uses seed base_seed + r.
std::vector<VariantRuns> experiment_variants(std::shared_ptr<const traffic::TrafficScenario> scenario,
                                             const config::RunConfig& cfg,
                                             const std::vector<swarm::Variant>& variants, int runs,
                                             std::uint64_t base_seed, energy::Profiler& profiler);

/// At most `limit` predictions spread evenly over the FE axis, re-evaluated with f.
std::vector<ScatterPoint> sample_scatter(const std::vector<swarm::PredictionRecord>& predictions, int limit,
                                         FitnessFunction& f);

struct Reports {
    std::optional<EvalCostStats> eval_cost;
    std::vector<SweepRow> sweep;
    std::vector<VariantRuns> variants;

    bool empty() const { return !eval_cost && sweep.empty() && variants.empty(); }
};

std::vector<std::string> sweep_columns();

/// Writes every CSV that `results` has data for and returns the paths in
/// write order. Existing files are overwritten.
std::vector<std::filesystem::path> emit_reports(const Reports& results, const std::filesystem::path& out_dir);

/// Rebuilds components.csv and final_fitness.csv from run_<variant>_<seed>.csv
/// files already in `out_dir`.
std::vector<std::filesystem::path> rebuild_reports(const std::filesystem::path& out_dir);

}  // namespace surropt::harness
