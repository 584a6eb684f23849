#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "algorithm_trace.hpp"
#include "surropt/csv.hpp"
#include "surropt/error.hpp"
#include "surropt/harness.hpp"

namespace surropt::harness {
namespace {

namespace fs = std::filesystem;

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path fresh_dir(const std::string& name) {
    const auto dir = fs::temp_directory_path() / name;
    fs::remove_all(dir);
    return dir;
}

config::RunConfig small_config() {
    config::RunConfig cfg;
    cfg.scenario = {.rows = 2, .cols = 2, .phases = 2, .vehicles = 30, .horizon_s = 150};
    cfg.pso.swarm_size = 6;
    cfg.pso.max_fitness_evals = 60;
    cfg.pso.n_reeval = 2;
    cfg.n_train_small = 6;
    cfg.n_train_large = 18;
    cfg.train.epochs = 3;
    cfg.harness.scatter_samples = 5;
    return cfg;
}

TEST(EvalCost, StableOnFallbackBackend) {
    auto sc = std::make_shared<const traffic::TrafficScenario>(traffic::build_scenario({}));
    traffic::Evaluator f(sc);
    energy::FallbackBackend backend;
    energy::Profiler profiler(backend);
    const auto stats = experiment_eval_cost(f, profiler, 20, 1);
    EXPECT_EQ(stats.samples, 20);
    EXPECT_EQ(f.evaluations(), 20);
    EXPECT_GT(stats.seconds.mean, 0.0);
    EXPECT_LT(stats.seconds.stdev / stats.seconds.mean, 0.5);
    EXPECT_EQ(profiler.totals()[static_cast<std::size_t>(energy::ComponentTag::Evaluation)].call_count, 20);
}

TEST(EvalCost, NeedsTwoSamples) {
    testing::QuadraticStub f(Plan(3, 10), {});
    energy::FallbackBackend backend;
    energy::Profiler profiler(backend);
    EXPECT_THROW(experiment_eval_cost(f, profiler, 1, 1), ConfigError);
}

TEST(Sweep, ArchiveTooSmallThrows) {
    testing::QuadraticStub f(Plan(3, 10), {});
    const auto archive = build_archive(f, 50, 1);
    energy::FallbackBackend backend;
    energy::Profiler profiler(backend);
    EXPECT_THROW(experiment_surrogate_sweep(archive, {.sizes = {16}, .test_rows = 40}, profiler), Error);
}

TEST(Sweep, RowsPerSizeWithMetrics) {
    testing::QuadraticStub f(Plan(3, 30), {});
    const auto archive = build_archive(f, 80, 2);
    energy::FallbackBackend backend;
    energy::Profiler profiler(backend);
    const auto rows = experiment_surrogate_sweep(
        archive, {.sizes = {16, 48}, .repeats = 2, .test_rows = 20, .train = {.epochs = 5}, .seed = 3}, profiler);
    ASSERT_EQ(rows.size(), 2u);
    EXPECT_EQ(rows[0].size, 16);
    EXPECT_EQ(rows[1].size, 48);
    EXPECT_GT(rows[1].train_seconds.mean, rows[0].train_seconds.mean);
    EXPECT_GT(rows[0].pred_seconds.mean, 0.0);
    const auto& t = profiler.totals();
    EXPECT_EQ(t[static_cast<std::size_t>(energy::ComponentTag::Training)].call_count, 4);
    EXPECT_EQ(t[static_cast<std::size_t>(energy::ComponentTag::Prediction)].call_count, 4);
}

TEST(Variants, CountsFollowAlgorithmTraces) {
    const auto cfg = small_config();
    auto sc = std::make_shared<const traffic::TrafficScenario>(traffic::build_scenario(cfg.scenario));
    energy::FallbackBackend backend;
    energy::Profiler profiler(backend);
    const std::vector<swarm::Variant> all(swarm::kAllVariants.begin(), swarm::kAllVariants.end());
    const auto results = experiment_variants(sc, cfg, all, 2, 10, profiler);
    ASSERT_EQ(results.size(), 5u);
    for (const auto& vr : results) {
        ASSERT_EQ(vr.runs.size(), 2u);
        EXPECT_EQ(vr.runs[0].seed, 10u);
        EXPECT_EQ(vr.runs[1].seed, 11u);
        const auto pso = config::pso_for(cfg, vr.variant, 10);
        const auto trace = testing::interpret_algorithm(pso.swarm_size, pso.max_fitness_evals, pso.n_train,
                                                        pso.n_reeval, vr.variant);
        for (const auto& run : vr.runs) {
            EXPECT_EQ(run.actual_evals, trace.actual) << swarm::short_name(vr.variant);
            EXPECT_EQ(run.predicted_evals, trace.predicted) << swarm::short_name(vr.variant);
        }
        ASSERT_EQ(vr.components.size(), 6u);
        if (swarm::uses_surrogate(vr.variant)) {
            ASSERT_EQ(vr.scatter.size(), 2u);
            EXPECT_LE(vr.scatter[0].size(), 5u);
        }
    }
}

TEST(Variants, ScatterSamplingIsStratifiedByFe) {
    std::vector<swarm::PredictionRecord> preds;
    for (long fe = 1; fe <= 100; ++fe) preds.push_back({fe, Plan{static_cast<int>(fe % 50) + 5}, 1.0});
    testing::QuadraticStub f(Plan{5}, {5, 60});
    const auto s = sample_scatter(preds, 10, f);
    ASSERT_EQ(s.size(), 10u);
    for (std::size_t k = 0; k < s.size(); ++k) EXPECT_EQ(s[k].fe, static_cast<long>(k * 10 + 1));
    EXPECT_EQ(f.calls(), 10);
    EXPECT_EQ(sample_scatter(preds, 500, f).size(), 100u);
}

TEST(Reports, EmptyResultsThrow) { EXPECT_THROW(emit_reports({}, fresh_dir("surropt_empty")), Error); }

TEST(Reports, UnwritableDirectoryThrows) {
    Reports r;
    r.eval_cost = EvalCostStats{};
    EXPECT_THROW(emit_reports(r, "/proc/surropt-cannot-exist"), IoError);
}

TEST(Reports, SchemasAndIdempotence) {
    const auto cfg = small_config();
    auto sc = std::make_shared<const traffic::TrafficScenario>(traffic::build_scenario(cfg.scenario));
    Reports r;
    r.eval_cost = EvalCostStats{3, {1.0, 0.5}, {0.1, 0.0}, {0.02, 0.001}};
    r.sweep = {SweepRow{.size = 16, .mape = 12.5, .r2 = 0.25}};
    {
        energy::FallbackBackend backend;
        energy::Profiler profiler(backend);
        r.variants = experiment_variants(sc, cfg, {swarm::Variant::Plain, swarm::Variant::RetrainSmall}, 1, 4, profiler);
    }
    const auto dir = fresh_dir("surropt_reports");
    const auto files = emit_reports(r, dir);
    std::vector<std::string> names;
    for (const auto& f : files) names.push_back(f.filename().string());
    EXPECT_EQ(names, (std::vector<std::string>{"eval_cost.csv", "surrogate_sweep.csv", "run_plain_4.csv",
                                               "run_rs_4.csv", "scatter_rs_4.csv", "components.csv",
                                               "final_fitness.csv"}));

    auto header = [&](const std::string& name) { return csv::read(dir / name).header; };
    EXPECT_EQ(header("eval_cost.csv"), (std::vector<std::string>{"metric", "mean", "std"}));
    EXPECT_EQ(header("surrogate_sweep.csv"), sweep_columns());
    EXPECT_EQ(header("run_plain_4.csv"), swarm::history_columns());
    EXPECT_EQ(header("scatter_rs_4.csv"), (std::vector<std::string>{"fe", "actual", "predicted"}));
    EXPECT_EQ(header("final_fitness.csv"), (std::vector<std::string>{"variant", "seed", "fitness"}));
    EXPECT_EQ(header("components.csv"),
              (std::vector<std::string>{"variant", "component", "cpu_j_mean", "cpu_j_std", "dram_j_mean",
                                        "dram_j_std", "time_s_mean", "time_s_std"}));
    EXPECT_EQ(csv::read(dir / "components.csv").rows.size(), 12u);

    std::vector<std::string> first;
    for (const auto& f : files) first.push_back(slurp(f));
    emit_reports(r, dir);
    for (std::size_t k = 0; k < files.size(); ++k) EXPECT_EQ(slurp(files[k]), first[k]) << files[k];

    // The report command rebuilds the two summary files from run files alone.
    fs::remove(dir / "components.csv");
    fs::remove(dir / "final_fitness.csv");
    rebuild_reports(dir);
    EXPECT_EQ(slurp(dir / "final_fitness.csv"), first[6]);
    EXPECT_EQ(slurp(dir / "components.csv"), first[5]);
    fs::remove_all(dir);
}

TEST(Reports, RebuildNeedsRunFiles) {
    const auto dir = fresh_dir("surropt_no_runs");
    fs::create_directories(dir);
    EXPECT_THROW(rebuild_reports(dir), IoError);
    fs::remove_all(dir);
}

}  // namespace
}  // namespace surropt::harness
