#include "surropt/config.hpp"

#include <fmt/format.h>

#include <fstream>

#include "json_util.hpp"
#include "surropt/error.hpp"

namespace surropt::config {

namespace {

using namespace detail;

template <class F>
void with_prefix(const std::string& prefix, F&& check) {
    try {
        check();
    } catch (const ConfigError& e) {
        throw ConfigError(join_key(prefix, e.key()), e.detail());
    }
}

void parse_pso(const nlohmann::json& doc, RunConfig& cfg) {
    const std::string p = "pso";
    require_object(doc, p);
    reject_unknown(doc, p,
                   {"swarm_size", "max_fitness_evals", "phi1", "phi2", "lambda", "w_max", "w_min", "n_train_small",
                    "n_train_large", "n_reeval", "seed"});
    auto& pso = cfg.pso;
    read_int(doc, p, "swarm_size", pso.swarm_size);
    read_long(doc, p, "max_fitness_evals", pso.max_fitness_evals);
    read_double(doc, p, "phi1", pso.phi1);
    read_double(doc, p, "phi2", pso.phi2);
    read_double(doc, p, "lambda", pso.lambda);
    read_double(doc, p, "w_max", pso.w_max);
    read_double(doc, p, "w_min", pso.w_min);
    read_int(doc, p, "n_train_small", cfg.n_train_small);
    read_int(doc, p, "n_train_large", cfg.n_train_large);
    read_int(doc, p, "n_reeval", pso.n_reeval);
    read_u64(doc, p, "seed", pso.seed);
}

void parse_train(const nlohmann::json& doc, RunConfig& cfg) {
    const std::string p = "train";
    require_object(doc, p);
    reject_unknown(doc, p,
                   {"epochs", "batch_size", "learning_rate", "beta1", "beta2", "epsilon", "hidden_layers", "seed"});
    auto& t = cfg.train;
    read_int(doc, p, "epochs", t.epochs);
    read_int(doc, p, "batch_size", t.batch_size);
    read_double(doc, p, "learning_rate", t.learning_rate);
    read_double(doc, p, "beta1", t.beta1);
    read_double(doc, p, "beta2", t.beta2);
    read_double(doc, p, "epsilon", t.epsilon);
    read_u64(doc, p, "seed", t.seed);
    if (const auto it = doc.find("hidden_layers"); it != doc.end()) {
        if (!it->is_array()) throw ConfigError("train.hidden_layers", "expected an array of integers");
        cfg.hidden_layers.clear();
        for (const auto& v : *it) {
            if (!v.is_number_integer() || v.get<long>() < 1) {
                throw ConfigError("train.hidden_layers", "expected positive integers");
            }
            cfg.hidden_layers.push_back(v.get<int>());
        }
    }
}

void parse_energy(const nlohmann::json& doc, RunConfig& cfg) {
    const std::string p = "energy";
    require_object(doc, p);
    reject_unknown(doc, p, {"backend", "cpu_watts", "dram_watts", "clock", "ns_per_work_unit", "powercap_root"});
    auto& e = cfg.energy;
    std::string backend = "fallback";
    read_string(doc, p, "backend", backend);
    const auto kind = energy::parse_backend_kind(backend);
    if (!kind) throw ConfigError("energy.backend", "expected one of auto, rapl, fallback");
    e.kind = *kind;
    read_double(doc, p, "cpu_watts", e.fallback.cpu_watts);
    read_double(doc, p, "dram_watts", e.fallback.dram_watts);
    read_double(doc, p, "ns_per_work_unit", e.fallback.ns_per_work_unit);
    if (e.fallback.cpu_watts < 0) throw ConfigError("energy.cpu_watts", "must be >= 0");
    if (e.fallback.dram_watts < 0) throw ConfigError("energy.dram_watts", "must be >= 0");
    if (!(e.fallback.ns_per_work_unit > 0)) throw ConfigError("energy.ns_per_work_unit", "must be > 0");
    std::string clock = "work";
    read_string(doc, p, "clock", clock);
    if (clock == "work") {
        e.fallback.clock = energy::FallbackClock::Work;
    } else if (clock == "wall") {
        e.fallback.clock = energy::FallbackClock::Wall;
    } else {
        throw ConfigError("energy.clock", "expected work or wall");
    }
    std::string root = e.powercap_root.string();
    read_string(doc, p, "powercap_root", root);
    e.powercap_root = root;
}

void parse_harness(const nlohmann::json& doc, RunConfig& cfg) {
    const std::string p = "harness";
    require_object(doc, p);
    reject_unknown(doc, p, {"eval_samples", "sweep_sizes", "sweep_repeats", "sweep_test_rows", "runs", "scatter_samples"});
    auto& h = cfg.harness;
    read_int(doc, p, "eval_samples", h.eval_samples);
    read_int(doc, p, "sweep_repeats", h.sweep_repeats);
    read_int(doc, p, "sweep_test_rows", h.sweep_test_rows);
    read_int(doc, p, "runs", h.runs);
    read_int(doc, p, "scatter_samples", h.scatter_samples);
    if (const auto it = doc.find("sweep_sizes"); it != doc.end()) {
        if (!it->is_array() || it->empty()) throw ConfigError("harness.sweep_sizes", "expected a non-empty array");
        h.sweep_sizes.clear();
        for (const auto& v : *it) {
            if (!v.is_number_integer() || v.get<long>() < 2) {
                throw ConfigError("harness.sweep_sizes", "expected integers >= 2");
            }
            h.sweep_sizes.push_back(v.get<int>());
        }
    }
    if (h.eval_samples < 2) throw ConfigError("harness.eval_samples", "must be >= 2");
    if (h.sweep_repeats < 1) throw ConfigError("harness.sweep_repeats", "must be >= 1");
    if (h.sweep_test_rows < 2) throw ConfigError("harness.sweep_test_rows", "must be >= 2");
    if (h.runs < 1) throw ConfigError("harness.runs", "must be >= 1");
    if (h.scatter_samples < 0) throw ConfigError("harness.scatter_samples", "must be >= 0");
}

}  // namespace

RunConfig parse_config_json(const nlohmann::json& doc) {
    require_object(doc, "");
    reject_unknown(doc, "", {"scenario", "pso", "train", "energy", "harness"});
    RunConfig cfg;
    if (const auto it = doc.find("scenario"); it != doc.end()) {
        cfg.scenario = traffic::scenario_spec_from_json(*it, "scenario");
    }
    if (const auto it = doc.find("pso"); it != doc.end()) parse_pso(*it, cfg);
    if (const auto it = doc.find("train"); it != doc.end()) parse_train(*it, cfg);
    if (const auto it = doc.find("energy"); it != doc.end()) parse_energy(*it, cfg);
    if (const auto it = doc.find("harness"); it != doc.end()) parse_harness(*it, cfg);

    with_prefix("train", [&] { surrogate::validate(cfg.train); });
    with_prefix("pso", [&] {
        swarm::validate(pso_for(cfg, swarm::Variant::Plain, cfg.pso.seed));
        if (cfg.n_train_small < cfg.pso.swarm_size) throw ConfigError("n_train_small", "must be >= swarm_size");
        if (cfg.n_train_large < cfg.pso.swarm_size) throw ConfigError("n_train_large", "must be >= swarm_size");
        swarm::validate(pso_for(cfg, swarm::Variant::PretrainSmall, cfg.pso.seed));
        swarm::validate(pso_for(cfg, swarm::Variant::PretrainLarge, cfg.pso.seed));
    });
    return cfg;
}

RunConfig parse_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("", fmt::format("cannot read config file '{}'", path.string()));
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("", fmt::format("malformed JSON in '{}': {}", path.string(), e.what()));
    }
    return parse_config_json(doc);
}

nlohmann::json to_json(const RunConfig& cfg) {
    const auto& p = cfg.pso;
    const auto& t = cfg.train;
    const auto& e = cfg.energy;
    const auto& h = cfg.harness;
    std::string backend = e.kind == energy::BackendKind::Auto ? "auto"
                          : e.kind == energy::BackendKind::Rapl ? "rapl"
                                                                : "fallback";
    return {{"scenario", traffic::to_json(cfg.scenario)},
            {"pso",
             {{"swarm_size", p.swarm_size},
              {"max_fitness_evals", p.max_fitness_evals},
              {"phi1", p.phi1},
              {"phi2", p.phi2},
              {"lambda", p.lambda},
              {"w_max", p.w_max},
              {"w_min", p.w_min},
              {"n_train_small", cfg.n_train_small},
              {"n_train_large", cfg.n_train_large},
              {"n_reeval", p.n_reeval},
              {"seed", p.seed}}},
            {"train",
             {{"epochs", t.epochs},
              {"batch_size", t.batch_size},
              {"learning_rate", t.learning_rate},
              {"beta1", t.beta1},
              {"beta2", t.beta2},
              {"epsilon", t.epsilon},
              {"hidden_layers", cfg.hidden_layers},
              {"seed", t.seed}}},
            {"energy",
             {{"backend", backend},
              {"cpu_watts", e.fallback.cpu_watts},
              {"dram_watts", e.fallback.dram_watts},
              {"clock", e.fallback.clock == energy::FallbackClock::Work ? "work" : "wall"},
              {"ns_per_work_unit", e.fallback.ns_per_work_unit},
              {"powercap_root", e.powercap_root.string()}}},
            {"harness",
             {{"eval_samples", h.eval_samples},
              {"sweep_sizes", h.sweep_sizes},
              {"sweep_repeats", h.sweep_repeats},
              {"sweep_test_rows", h.sweep_test_rows},
              {"runs", h.runs},
              {"scatter_samples", h.scatter_samples}}}};
}

swarm::PsoConfig pso_for(const RunConfig& cfg, swarm::Variant variant, std::uint64_t seed) {
    swarm::PsoConfig p = cfg.pso;
    p.variant = variant;
    p.seed = seed;
    const bool large = variant == swarm::Variant::PretrainLarge || variant == swarm::Variant::RetrainLarge;
    p.n_train = large ? cfg.n_train_large : cfg.n_train_small;
    return p;
}

}  // namespace surropt::config
