#include "surropt/harness.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cctype>
#include <map>
#include <numeric>

#include "surropt/csv.hpp"
#include "surropt/error.hpp"

namespace surropt::harness {

using energy::ComponentTag;

Plan random_plan(std::size_t dim, DurationBounds bounds, Rng& rng) {
    Plan plan(dim);
    for (auto& d : plan) d = static_cast<int>(rng.uniform_int(bounds.min, bounds.max));
    return plan;
}

Dataset build_archive(FitnessFunction& f, int rows, std::uint64_t seed) {
    Rng rng(seed);
    Dataset data;
    data.reserve(static_cast<std::size_t>(std::max(rows, 0)));
    for (int r = 0; r < rows; ++r) {
        Plan plan = random_plan(f.dimension(), f.bounds(), rng);
        const double fit = f.evaluate(plan);
        data.push_back({std::move(plan), fit});
    }
    return data;
}

EvalCostStats experiment_eval_cost(FitnessFunction& f, energy::Profiler& profiler, int n_samples,
                                   std::uint64_t seed) {
    if (n_samples < 2) throw ConfigError("eval_samples", "need at least two samples");
    Rng rng(seed);
    std::vector<double> cpu, dram, sec;
    for (int i = 0; i < n_samples; ++i) {
        const Plan plan = random_plan(f.dimension(), f.bounds(), rng);
        const auto profile = profiler.measure(ComponentTag::Evaluation, [&] { f.evaluate(plan); });
        cpu.push_back(profile.cpu_j);
        dram.push_back(profile.dram_j);
        sec.push_back(profile.seconds);
    }
    return {n_samples, energy::mean_stdev(cpu), energy::mean_stdev(dram), energy::mean_stdev(sec)};
}

std::vector<SweepRow> experiment_surrogate_sweep(const Dataset& archive, const SweepOptions& options,
                                                 energy::Profiler& profiler) {
    if (options.sizes.empty()) throw ConfigError("sweep_sizes", "must not be empty");
    if (options.repeats < 1) throw ConfigError("sweep_repeats", "must be >= 1");
    if (options.test_rows < 2) throw ConfigError("sweep_test_rows", "must be >= 2");
    const int largest = *std::max_element(options.sizes.begin(), options.sizes.end());
    if (static_cast<long>(archive.size()) < static_cast<long>(largest) + options.test_rows) {
        throw Error(fmt::format("archive has {} rows, sweep needs {}", archive.size(), largest + options.test_rows));
    }
    const int dim = static_cast<int>(archive.front().plan.size());
    std::vector<int> dims;
    if (options.hidden.empty()) {
        dims = surrogate::default_layer_dims(dim);
    } else {
        dims.push_back(dim);
        dims.insert(dims.end(), options.hidden.begin(), options.hidden.end());
        dims.push_back(1);
    }

    struct Acc {
        std::vector<double> tc, td, ts, pc, pd, ps, actual, predicted;
    };
    std::vector<Acc> acc(options.sizes.size());

    Rng rng(options.seed);
    std::vector<std::size_t> order(archive.size());
    for (int rep = 0; rep < options.repeats; ++rep) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        rng.shuffle(order);
        const auto test_begin = order.begin();
        const auto train_begin = order.begin() + options.test_rows;

        for (std::size_t s = 0; s < options.sizes.size(); ++s) {
            const int size = options.sizes[s];
            Dataset train_set;
            train_set.reserve(static_cast<std::size_t>(size));
            for (auto it = train_begin; it != train_begin + size; ++it) train_set.push_back(archive[*it]);

            const std::uint64_t stream = static_cast<std::uint64_t>(rep) * 1000u + s;
            surrogate::SurrogateModel model = surrogate::init_model(dims, derive_seed(options.seed, 2 * stream));
            surrogate::set_input_range(model, options.bounds);
            surrogate::TrainConfig tc = options.train;
            tc.seed = derive_seed(options.seed, 2 * stream + 1);

            auto [trained, train_profile] = profiler.measure(
                ComponentTag::Training, [&] { return surrogate::train(std::move(model), train_set, tc); });
            std::vector<double> predicted;
            const auto pred_profile = profiler.measure(ComponentTag::Prediction, [&] {
                for (auto it = test_begin; it != train_begin; ++it) {
                    predicted.push_back(surrogate::forward(trained, archive[*it].plan));
                }
            });

            auto& a = acc[s];
            a.tc.push_back(train_profile.cpu_j);
            a.td.push_back(train_profile.dram_j);
            a.ts.push_back(train_profile.seconds);
            a.pc.push_back(pred_profile.cpu_j);
            a.pd.push_back(pred_profile.dram_j);
            a.ps.push_back(pred_profile.seconds);
            for (auto it = test_begin; it != train_begin; ++it) a.actual.push_back(archive[*it].fitness);
            a.predicted.insert(a.predicted.end(), predicted.begin(), predicted.end());
        }
    }

    std::vector<SweepRow> rows;
    for (std::size_t s = 0; s < options.sizes.size(); ++s) {
        const auto& a = acc[s];
        SweepRow row;
        row.size = options.sizes[s];
        row.train_cpu_j = energy::mean_stdev(a.tc);
        row.train_dram_j = energy::mean_stdev(a.td);
        row.train_seconds = energy::mean_stdev(a.ts);
        row.pred_cpu_j = energy::mean_stdev(a.pc);
        row.pred_dram_j = energy::mean_stdev(a.pd);
        row.pred_seconds = energy::mean_stdev(a.ps);
        row.mape = surrogate::mape(a.actual, a.predicted);
        row.r2 = surrogate::r_squared(a.actual, a.predicted);
        rows.push_back(row);
    }
    return rows;
}

std::vector<ScatterPoint> sample_scatter(const std::vector<swarm::PredictionRecord>& predictions, int limit,
                                         FitnessFunction& f) {
    std::vector<ScatterPoint> out;
    if (predictions.empty() || limit <= 0) return out;
    const std::size_t n = predictions.size();
    const std::size_t m = std::min(n, static_cast<std::size_t>(limit));
    for (std::size_t k = 0; k < m; ++k) {
        const auto& rec = predictions[k * n / m];
        out.push_back({rec.fe, f.evaluate(rec.plan), rec.predicted});
    }
    return out;
}

std::vector<VariantRuns> experiment_variants(std::shared_ptr<const traffic::TrafficScenario> scenario,
                                             const config::RunConfig& cfg,
                                             const std::vector<swarm::Variant>& variants, int runs,
                                             std::uint64_t base_seed, energy::Profiler& profiler) {
    if (runs < 1) throw ConfigError("runs", "must be >= 1");
    std::vector<VariantRuns> out;
    for (const auto variant : variants) {
        VariantRuns vr;
        vr.variant = variant;
        std::vector<energy::ProfileTable> tables;
        for (int r = 0; r < runs; ++r) {
            const std::uint64_t seed = base_seed + static_cast<std::uint64_t>(r);
            swarm::PsoConfig pso = config::pso_for(cfg, variant, seed);
            pso.record_predictions = swarm::uses_surrogate(variant) && cfg.harness.scatter_samples > 0;

            traffic::Evaluator evaluator(scenario);
            std::unique_ptr<surrogate::MlpSurrogate> model;
            if (swarm::uses_surrogate(variant)) {
                surrogate::TrainConfig tc = cfg.train;
                tc.seed = derive_seed(seed, cfg.train.seed);
                model = std::make_unique<surrogate::MlpSurrogate>(static_cast<int>(evaluator.dimension()),
                                                                  evaluator.bounds(), tc, cfg.hidden_layers);
            }
            swarm::RunResult result = swarm::run(pso, evaluator, model.get(), &profiler);

            std::vector<ScatterPoint> scatter;
            if (pso.record_predictions) {
                traffic::Evaluator judge(scenario);
                scatter = sample_scatter(result.predictions, cfg.harness.scatter_samples, judge);
                result.predictions.clear();
                result.predictions.shrink_to_fit();
            }
            tables.push_back(result.components);
            vr.runs.push_back(std::move(result));
            vr.scatter.push_back(std::move(scatter));
        }
        vr.components = energy::aggregate(tables);
        out.push_back(std::move(vr));
    }
    return out;
}

std::vector<std::string> sweep_columns() {
    std::vector<std::string> cols = {"size"};
    for (const char* phase : {"train", "pred"}) {
        for (const char* metric : {"cpu_j", "dram_j", "time_s"}) {
            cols.push_back(fmt::format("{}_{}_mean", phase, metric));
            cols.push_back(fmt::format("{}_{}_std", phase, metric));
        }
    }
    cols.push_back("mape");
    cols.push_back("r2");
    return cols;
}

namespace {

void prepare_dir(const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec || !std::filesystem::is_directory(dir)) {
        throw IoError(fmt::format("cannot create output directory '{}'", dir.string()));
    }
}

csv::Table components_table(const std::vector<std::pair<std::string, std::vector<energy::ReportRow>>>& groups) {
    csv::Table t;
    t.header = {"variant"};
    t.header.insert(t.header.end(), energy::kReportColumns.begin(), energy::kReportColumns.end());
    for (const auto& [variant, rows] : groups) {
        for (const auto& r : rows) {
            t.rows.push_back({variant, r.component, csv::num(r.cpu_j.mean), csv::num(r.cpu_j.stdev),
                              csv::num(r.dram_j.mean), csv::num(r.dram_j.stdev), csv::num(r.seconds.mean),
                              csv::num(r.seconds.stdev)});
        }
    }
    return t;
}

}  // namespace

std::vector<std::filesystem::path> emit_reports(const Reports& results, const std::filesystem::path& out_dir) {
    if (results.empty()) throw Error("emit_reports: nothing to write");
    prepare_dir(out_dir);
    std::vector<std::filesystem::path> written;
    auto put = [&](const std::string& name, const csv::Table& table) {
        const auto path = out_dir / name;
        csv::write(path, table);
        written.push_back(path);
    };

    if (results.eval_cost) {
        const auto& e = *results.eval_cost;
        csv::Table t;
        t.header = {"metric", "mean", "std"};
        t.rows = {{"cpu_j", csv::num(e.cpu_j.mean), csv::num(e.cpu_j.stdev)},
                  {"dram_j", csv::num(e.dram_j.mean), csv::num(e.dram_j.stdev)},
                  {"time_s", csv::num(e.seconds.mean), csv::num(e.seconds.stdev)}};
        put("eval_cost.csv", t);
    }

    if (!results.sweep.empty()) {
        csv::Table t;
        t.header = sweep_columns();
        for (const auto& r : results.sweep) {
            std::vector<std::string> row = {csv::num(r.size)};
            for (const auto* s : {&r.train_cpu_j, &r.train_dram_j, &r.train_seconds, &r.pred_cpu_j, &r.pred_dram_j,
                                  &r.pred_seconds}) {
                row.push_back(csv::num(s->mean));
                row.push_back(csv::num(s->stdev));
            }
            row.push_back(csv::num(r.mape));
            row.push_back(csv::num(r.r2));
            t.rows.push_back(std::move(row));
        }
        put("surrogate_sweep.csv", t);
    }

    if (!results.variants.empty()) {
        csv::Table finals;
        finals.header = {"variant", "seed", "fitness"};
        std::vector<std::pair<std::string, std::vector<energy::ReportRow>>> groups;
        for (const auto& vr : results.variants) {
            const std::string name(swarm::short_name(vr.variant));
            for (std::size_t r = 0; r < vr.runs.size(); ++r) {
                const auto& run = vr.runs[r];
                const auto path = out_dir / fmt::format("run_{}_{}.csv", name, run.seed);
                swarm::write_history_csv(path, run);
                written.push_back(path);
                if (swarm::uses_surrogate(vr.variant) && r < vr.scatter.size()) {
                    csv::Table s;
                    s.header = {"fe", "actual", "predicted"};
                    for (const auto& p : vr.scatter[r]) {
                        s.rows.push_back({csv::num(p.fe), csv::num(p.actual), csv::num(p.predicted)});
                    }
                    put(fmt::format("scatter_{}_{}.csv", name, run.seed), s);
                }
                finals.rows.push_back({name, csv::num(run.seed), csv::num(run.best_actual_fitness)});
            }
            groups.emplace_back(name, vr.components);
        }
        put("components.csv", components_table(groups));
        put("final_fitness.csv", finals);
    }
    return written;
}

std::vector<std::filesystem::path> rebuild_reports(const std::filesystem::path& out_dir) {
    if (!std::filesystem::is_directory(out_dir)) {
        throw IoError(fmt::format("'{}' is not a directory", out_dir.string()));
    }
    // variant -> seed -> file
    std::map<swarm::Variant, std::map<std::uint64_t, std::filesystem::path>> files;
    for (const auto& entry : std::filesystem::directory_iterator(out_dir)) {
        const std::string name = entry.path().filename().string();
        if (name.rfind("run_", 0) != 0 || entry.path().extension() != ".csv") continue;
        const std::string stem = entry.path().stem().string().substr(4);
        const auto cut = stem.rfind('_');
        if (cut == std::string::npos) continue;
        const auto variant = swarm::parse_variant(stem.substr(0, cut));
        if (!variant) continue;
        try {
            files[*variant][std::stoull(stem.substr(cut + 1))] = entry.path();
        } catch (const std::exception&) {
            continue;
        }
    }
    if (files.empty()) throw IoError(fmt::format("no run_<variant>_<seed>.csv files in '{}'", out_dir.string()));

    csv::Table finals;
    finals.header = {"variant", "seed", "fitness"};
    std::vector<std::pair<std::string, std::vector<energy::ReportRow>>> groups;
    for (const auto& [variant, by_seed] : files) {
        const std::string name(swarm::short_name(variant));
        std::vector<energy::ProfileTable> tables;
        for (const auto& [seed, path] : by_seed) {
            const csv::Table t = csv::read(path);
            if (t.rows.empty()) throw IoError(fmt::format("'{}' has no rows", path.string()));
            const auto& last = t.rows.back();
            energy::ProfileTable table = energy::empty_table();
            for (auto tag : energy::kAllComponents) {
                std::string base(energy::to_string(tag));
                std::transform(base.begin(), base.end(), base.begin(), [](unsigned char c) { return std::tolower(c); });
                auto& p = table[static_cast<std::size_t>(tag)];
                p.cpu_j = std::stod(last.at(t.column(base + "_cpu_j")));
                p.dram_j = std::stod(last.at(t.column(base + "_dram_j")));
                p.seconds = std::stod(last.at(t.column(base + "_time_s")));
            }
            tables.push_back(table);
            finals.rows.push_back({name, csv::num(seed), last.at(t.column("best_actual_fitness"))});
        }
        groups.emplace_back(name, energy::aggregate(tables));
    }
    std::vector<std::filesystem::path> written = {out_dir / "components.csv", out_dir / "final_fitness.csv"};
    csv::write(written[0], components_table(groups));
    csv::write(written[1], finals);
    return written;
}

}  // namespace surropt::harness
