#include <CLI11.hpp>

#include <algorithm>
#include <iostream>
#include <memory>
#include <optional>
#include <string>

#include "surropt/config.hpp"
#include "surropt/energy.hpp"
#include "surropt/error.hpp"
#include "surropt/harness.hpp"
#include "surropt/rng.hpp"
#include "surropt/traffic.hpp"

namespace {

using namespace surropt;

enum class Command { ProfileEval, Sweep, Run, All, Report };

struct Options {
    std::string config_path;
    std::string out_dir = "out";
    std::optional<std::uint64_t> seed;
    std::optional<int> runs;
    std::string variant;
};

// Stream ids for seeds derived from the base seed.
constexpr std::uint64_t kEvalCostStream = 101;
constexpr std::uint64_t kArchiveStream = 102;
constexpr std::uint64_t kSweepStream = 103;

harness::EvalCostStats eval_cost(const config::RunConfig& cfg, std::shared_ptr<const traffic::TrafficScenario> sc,
                                 energy::Profiler& profiler, std::uint64_t seed) {
    traffic::Evaluator f(std::move(sc));
    return harness::experiment_eval_cost(f, profiler, cfg.harness.eval_samples, derive_seed(seed, kEvalCostStream));
}

std::vector<harness::SweepRow> sweep(const config::RunConfig& cfg, std::shared_ptr<const traffic::TrafficScenario> sc,
                                     energy::Profiler& profiler, std::uint64_t seed) {
    traffic::Evaluator f(std::move(sc));
    harness::SweepOptions opt;
    opt.sizes = cfg.harness.sweep_sizes;
    opt.repeats = cfg.harness.sweep_repeats;
    opt.test_rows = cfg.harness.sweep_test_rows;
    opt.train = cfg.train;
    opt.hidden = cfg.hidden_layers;
    opt.bounds = f.bounds();
    opt.seed = derive_seed(seed, kSweepStream);
    const int largest = *std::max_element(opt.sizes.begin(), opt.sizes.end());
    const Dataset archive = harness::build_archive(f, largest + opt.test_rows, derive_seed(seed, kArchiveStream));
    return harness::experiment_surrogate_sweep(archive, opt, profiler);
}

int execute(Command command, const Options& opt) {
    if (command == Command::Report) {
        for (const auto& path : harness::rebuild_reports(opt.out_dir)) std::cout << path.string() << '\n';
        return 0;
    }

    config::RunConfig cfg = opt.config_path.empty() ? config::RunConfig{} : config::parse_config(opt.config_path);
    cfg.energy = energy::apply_environment(cfg.energy);
    if (opt.runs) {
        if (*opt.runs < 1) throw ConfigError("runs", "must be >= 1");
        cfg.harness.runs = *opt.runs;
    }
    const std::uint64_t seed = opt.seed.value_or(cfg.pso.seed);

    auto scenario = std::make_shared<const traffic::TrafficScenario>(traffic::build_scenario(cfg.scenario));
    auto backend = energy::make_backend(cfg.energy);
    energy::Profiler profiler(*backend);

    harness::Reports reports;
    if (command == Command::ProfileEval || command == Command::All) {
        reports.eval_cost = eval_cost(cfg, scenario, profiler, seed);
    }
    if (command == Command::Sweep || command == Command::All) {
        reports.sweep = sweep(cfg, scenario, profiler, seed);
    }
    if (command == Command::Run) {
        const auto variant = swarm::parse_variant(opt.variant);
        if (!variant) throw ConfigError("variant", "expected one of plain, ps, pl, rs, rl");
        reports.variants = harness::experiment_variants(scenario, cfg, {*variant}, cfg.harness.runs, seed, profiler);
    }
    if (command == Command::All) {
        const std::vector<swarm::Variant> all(swarm::kAllVariants.begin(), swarm::kAllVariants.end());
        reports.variants = harness::experiment_variants(scenario, cfg, all, cfg.harness.runs, seed, profiler);
    }
    for (const auto& path : harness::emit_reports(reports, opt.out_dir)) std::cout << path.string() << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Surrogate-assisted PSO for traffic signal timing, with per-component energy profiling"};
    app.require_subcommand(1);
    app.fallthrough();

    Options opt;
    app.add_option("--config", opt.config_path, "JSON configuration file")->check(CLI::ExistingFile);
    app.add_option("--out", opt.out_dir, "Output directory")->capture_default_str();
    app.add_option("--seed", opt.seed, "Base seed; run r uses seed + r");
    app.add_option("--runs", opt.runs, "Runs per variant");

    Command command = Command::Report;
    app.add_subcommand("profile-eval", "Energy and time of single fitness evaluations")
        ->callback([&] { command = Command::ProfileEval; });
    app.add_subcommand("sweep", "Surrogate training/testing cost and accuracy over dataset sizes")
        ->callback([&] { command = Command::Sweep; });
    auto* run = app.add_subcommand("run", "Run one PSO variant");
    run->add_option("--variant", opt.variant, "plain, ps, pl, rs or rl")
        ->required()
        ->check(CLI::IsMember({"plain", "ps", "pl", "rs", "rl"}));
    run->callback([&] { command = Command::Run; });
    app.add_subcommand("experiment-all", "Evaluation cost, surrogate sweep and every variant")
        ->callback([&] { command = Command::All; });
    app.add_subcommand("report", "Rebuild components.csv and final_fitness.csv from run files in --out")
        ->callback([&] { command = Command::Report; });

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        std::cerr << app.help();
        return 1;
    }

    try {
        return execute(command, opt);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 1;
    } catch (const InvalidSpecError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
}
