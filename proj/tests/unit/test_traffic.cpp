#include <gtest/gtest.h>

#include <filesystem>
#include <memory>

#include "reference_sim.hpp"
#include "surropt/error.hpp"
#include "surropt/rng.hpp"
#include "surropt/traffic.hpp"

namespace surropt::traffic {
namespace {

TrafficScenario one_intersection(int phases, int horizon) {
    TrafficScenario sc;
    sc.intersections = 1;
    sc.phases = phases;
    sc.horizon_s = horizon;
    sc.signal.assign(static_cast<std::size_t>(phases), {});
    sc.approaches.assign(1, {});
    return sc;
}

TEST(BuildScenario, SingleIntersectionTwoPhases) {
    const auto sc = build_scenario({.rows = 1, .cols = 1, .phases = 2, .vehicles = 1, .horizon_s = 100, .seed = 7});
    EXPECT_EQ(sc.intersections, 1);
    EXPECT_EQ(sc.phases, 2);
    for (int j = 0; j < 2; ++j) EXPECT_EQ(sc.counts(0, j).green + sc.counts(0, j).red, 4);
    EXPECT_EQ(sc.vehicles.size(), 1u);
}

TEST(BuildScenario, Deterministic) {
    const ScenarioSpec spec{.seed = 5};
    const auto a = build_scenario(spec);
    const auto b = build_scenario(spec);
    ASSERT_EQ(a.vehicles.size(), b.vehicles.size());
    for (std::size_t v = 0; v < a.vehicles.size(); ++v) {
        EXPECT_EQ(a.vehicles[v].departure_s, b.vehicles[v].departure_s);
        ASSERT_EQ(a.vehicles[v].route.size(), b.vehicles[v].route.size());
        for (std::size_t k = 0; k < a.vehicles[v].route.size(); ++k) {
            EXPECT_EQ(a.vehicles[v].route[k].intersection, b.vehicles[v].route[k].intersection);
            EXPECT_EQ(a.vehicles[v].route[k].approach, b.vehicles[v].route[k].approach);
        }
    }
}

TEST(BuildScenario, DeskGridDimension) {
    const auto sc = build_scenario({.rows = 3, .cols = 3, .phases = 4, .vehicles = 100, .horizon_s = 500, .seed = 1});
    EXPECT_EQ(sc.intersections, 9);
    EXPECT_EQ(sc.dimension(), 36u);
    EXPECT_NO_THROW(validate(sc));
}

TEST(BuildScenario, EveryApproachGreenInExactlyOnePhase) {
    const auto sc = build_scenario({.phases = 3});
    for (const auto& list : sc.approaches) {
        ASSERT_EQ(list.size(), 4u);
        for (const auto& a : list) {
            int greens = 0;
            for (auto g : a.green) greens += g ? 1 : 0;
            EXPECT_EQ(greens, 1);
        }
    }
    for (const auto& c : sc.signal) EXPECT_GE(c.red, 1);
}

TEST(BuildScenario, RoutesAreShortestGridPaths) {
    const ScenarioSpec spec{.rows = 4, .cols = 5, .seed = 3};
    const auto sc = build_scenario(spec);
    for (const auto& v : sc.vehicles) {
        EXPECT_LT(v.departure_s, spec.horizon_s);
        const int o = v.route.front().intersection, d = v.route.back().intersection;
        const int manhattan = std::abs(o / spec.cols - d / spec.cols) + std::abs(o % spec.cols - d % spec.cols);
        EXPECT_EQ(static_cast<int>(v.route.size()), manhattan + 1);
        for (std::size_t k = 1; k < v.route.size(); ++k) {
            const int a = v.route[k - 1].intersection, b = v.route[k].intersection;
            EXPECT_EQ(std::abs(a / spec.cols - b / spec.cols) + std::abs(a % spec.cols - b % spec.cols), 1);
        }
    }
}

TEST(BuildScenario, RejectsEmptySpecs) {
    EXPECT_THROW(build_scenario({.vehicles = 0}), InvalidSpecError);
    EXPECT_THROW(build_scenario({.rows = 0}), InvalidSpecError);
    EXPECT_THROW(build_scenario({.horizon_s = 0}), InvalidSpecError);
    EXPECT_THROW(build_scenario({.d_min = 10, .d_max = 5}), InvalidSpecError);
}

TEST(Simulate, NoStoppingWhenAlwaysGreen) {
    // One vehicle, one approach that is green in both phases.
    auto sc = one_intersection(2, 100);
    sc.signal = {{1, 1}, {1, 1}};
    sc.approaches[0] = {Approach{{1, 1}}, Approach{{0, 0}}};
    sc.vehicles = {Vehicle{3, {Hop{0, 0}}}};
    const auto m = simulate(sc, std::vector<int>{10, 10});
    EXPECT_EQ(m.total_stopped_time, 0);
    EXPECT_EQ(m.arrived, 1);
    EXPECT_EQ(m.total_travel_time, 1);
}

TEST(Simulate, WaitsThroughRed) {
    // Approach green in phase 1 only; phase 0 lasts 10 s, so a vehicle queued
    // at t = 0 stops for 10 s and leaves in second 10.
    auto sc = one_intersection(2, 100);
    sc.signal = {{0, 1}, {1, 0}};
    sc.approaches[0] = {Approach{{0, 1}}};
    sc.vehicles = {Vehicle{0, {Hop{0, 0}}}};
    const auto m = simulate(sc, std::vector<int>{10, 20});
    EXPECT_EQ(m.total_stopped_time, 10);
    EXPECT_EQ(m.total_travel_time, 11);
}

TEST(Simulate, Conservation) {
    const auto sc = build_scenario({.vehicles = 300, .horizon_s = 200});
    const auto m = simulate(sc, std::vector<int>(sc.dimension(), 30));
    EXPECT_EQ(m.arrived + m.not_arrived, 300);
    EXPECT_LE(m.total_stopped_time, 300L * 200);
}

TEST(Simulate, RejectsBadPlans) {
    const auto sc = build_scenario({});
    EXPECT_THROW(simulate(sc, std::vector<int>(35, 10)), DimensionMismatchError);
    auto plan = std::vector<int>(36, 10);
    plan[4] = 61;
    EXPECT_THROW(simulate(sc, plan), BoundsError);
    plan[4] = 4;
    EXPECT_THROW(simulate(sc, plan), BoundsError);
}

TEST(Simulate, MatchesReferenceImplementation) {
    for (std::uint64_t seed : {1, 2, 3}) {
        const auto sc = build_scenario({.rows = 2, .cols = 3, .phases = 3, .vehicles = 60, .horizon_s = 300,
                                        .seed = seed, .saturation_flow = 0.4});
        Rng rng(seed);
        for (int k = 0; k < 5; ++k) {
            std::vector<int> plan(sc.dimension());
            for (auto& d : plan) d = static_cast<int>(rng.uniform_int(5, 60));
            EXPECT_EQ(simulate(sc, plan), testing::reference_simulate(sc, plan)) << "seed " << seed << " plan " << k;
        }
    }
}

TEST(PhaseRatio, IdentityRatio) {
    auto sc = one_intersection(1, 10);
    sc.signal = {{1, 1}};
    sc.bounds = {1, 100};
    EXPECT_DOUBLE_EQ(phase_ratio(sc, std::vector<int>{30}), 30.0);
}

TEST(PhaseRatio, HandEvaluatedTwoIntersections) {
    TrafficScenario sc;
    sc.intersections = 2;
    sc.phases = 1;
    sc.signal = {{2, 1}, {1, 2}};
    EXPECT_NEAR(phase_ratio(sc, std::vector<int>{10, 20}), 30.0, 1e-9);
}

TEST(PhaseRatio, ZeroGreenGivesZero) {
    TrafficScenario sc;
    sc.intersections = 2;
    sc.phases = 2;
    sc.signal.assign(4, {0, 4});
    EXPECT_EQ(phase_ratio(sc, std::vector<int>{5, 6, 7, 8}), 0.0);
}

TEST(PhaseRatio, ZeroRedThrows) {
    auto sc = one_intersection(1, 10);
    sc.signal = {{4, 0}};
    EXPECT_THROW(phase_ratio(sc, std::vector<int>{30}), DegenerateDenominatorError);
}

TEST(CombinedFitness, ZeroNumerator) {
    EXPECT_EQ(combined_fitness({.arrived = 1}, 0.0, 100), 0.0);
}

TEST(CombinedFitness, HandEvaluated) {
    const TrafficMetrics m{.arrived = 2, .not_arrived = 1, .total_travel_time = 10, .total_stopped_time = 5};
    EXPECT_NEAR(combined_fitness(m, 1.0, 100), 23.0, 1e-9);
}

TEST(CombinedFitness, DegenerateDenominatorThrows) {
    EXPECT_THROW(combined_fitness({.not_arrived = 3}, 0.0, 100), DegenerateDenominatorError);
}

TEST(Evaluator, DeterministicAndCounting) {
    auto sc = std::make_shared<const TrafficScenario>(build_scenario({}));
    Evaluator f(sc);
    EXPECT_EQ(f.evaluations(), 0);
    const std::vector<int> plan(36, 20);
    const double a = f.evaluate(plan);
    const double b = f.evaluate(plan);
    EXPECT_EQ(a, b);
    for (int k = 0; k < 3; ++k) f.evaluate(plan);
    EXPECT_EQ(f.evaluations(), 5);
    const auto m = simulate(*sc, plan);
    EXPECT_EQ(a, combined_fitness(m, phase_ratio(*sc, plan), sc->horizon_s));
}

TEST(Golden, DeskScenarioAtMinimumDurations) {
    const auto records = read_golden_csv(std::filesystem::path(SURROPT_FIXTURE_DIR) / "golden_metrics.csv");
    ASSERT_EQ(records.size(), 1u);
    const auto& g = records.front();
    auto sc = std::make_shared<const TrafficScenario>(build_scenario({}));
    const std::vector<int> plan(sc->dimension(), sc->bounds.min);
    EXPECT_EQ(plan_hash(plan), g.plan_hash);
    EXPECT_EQ(simulate(*sc, plan), g.metrics);
    EXPECT_NEAR(phase_ratio(*sc, plan), g.phase_ratio, 1e-12);
    EXPECT_NEAR(g.phase_ratio, 60.0, 1e-12);
    Evaluator f(sc);
    EXPECT_NEAR(f.evaluate(plan), g.fitness, 1e-12);
}

TEST(Golden, CsvRoundTrip) {
    const auto path = std::filesystem::temp_directory_path() / "surropt_golden_rt.csv";
    const std::vector<GoldenRecord> in = {{123, {1, 2, 3, 4}, 0.1, 1.0 / 3.0}};
    write_golden_csv(path, in);
    const auto out = read_golden_csv(path);
    ASSERT_EQ(out.size(), 1u);
    EXPECT_EQ(out[0].plan_hash, 123u);
    EXPECT_EQ(out[0].metrics, in[0].metrics);
    EXPECT_EQ(out[0].phase_ratio, 0.1);
    EXPECT_EQ(out[0].fitness, 1.0 / 3.0);
    std::filesystem::remove(path);
}

TEST(PlanHash, DistinguishesPlans) {
    EXPECT_NE(plan_hash(std::vector<int>{1, 2}), plan_hash(std::vector<int>{2, 1}));
    EXPECT_EQ(plan_hash(std::vector<int>{5, 5}), plan_hash(std::vector<int>{5, 5}));
}

}  // namespace
}  // namespace surropt::traffic
