#include "surropt/swarm.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>

#include "surropt/csv.hpp"
#include "surropt/error.hpp"

namespace surropt::swarm {

namespace {

// Reference nanoseconds per particle coordinate touched.
constexpr std::size_t kNsPerCoordinate = 10;

constexpr std::array<std::string_view, 5> kShortNames = {"plain", "ps", "pl", "rs", "rl"};

std::size_t argmin(std::span<const double> values) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < values.size(); ++i) {
        if (values[i] < values[best]) best = i;
    }
    return best;
}

std::string lower(std::string_view s) {
    std::string out(s);
    for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

}  // namespace

std::string_view short_name(Variant v) { return kShortNames[static_cast<std::size_t>(v)]; }

std::optional<Variant> parse_variant(std::string_view name) {
    for (std::size_t i = 0; i < kShortNames.size(); ++i) {
        if (kShortNames[i] == name) return kAllVariants[i];
    }
    return std::nullopt;
}

bool uses_surrogate(Variant v) { return v != Variant::Plain; }
bool retrains(Variant v) { return v == Variant::RetrainSmall || v == Variant::RetrainLarge; }

void validate(const PsoConfig& cfg) {
    auto finite = [](const char* key, double x) {
        if (!std::isfinite(x)) throw ConfigError(key, "must be finite");
    };
    if (cfg.swarm_size < 1) throw ConfigError("swarm_size", "must be >= 1");
    if (cfg.max_fitness_evals < cfg.swarm_size) throw ConfigError("max_fitness_evals", "must be >= swarm_size");
    finite("phi1", cfg.phi1);
    finite("phi2", cfg.phi2);
    finite("w_max", cfg.w_max);
    finite("w_min", cfg.w_min);
    if (!(cfg.lambda >= 0.0 && cfg.lambda <= 1.0)) throw ConfigError("lambda", "must be in [0, 1]");
    if (cfg.w_min > cfg.w_max) throw ConfigError("w_min", "must be <= w_max");
    if (cfg.n_reeval < 0 || cfg.n_reeval > cfg.swarm_size) {
        throw ConfigError("n_reeval", "must be in [0, swarm_size]");
    }
    if (uses_surrogate(cfg.variant) && cfg.n_train < cfg.swarm_size) {
        throw ConfigError("n_train", "must be >= swarm_size for surrogate variants");
    }
}

long total_generations(const PsoConfig& cfg) {
    const long n = cfg.swarm_size;
    return (cfg.max_fitness_evals - n + n - 1) / n;
}

double inertia_weight(long g, long g_total, double w_max, double w_min) {
    if (g_total <= 0) throw ConfigError("g_total", "must be >= 1");
    if (g < 0 || g > g_total) throw ConfigError("g", "must be in [0, g_total]");
    return w_max - (w_max - w_min) * static_cast<double>(g) / static_cast<double>(g_total);
}

std::vector<double> update_velocity(const Particle& particle, std::span<const int> global_best, double w,
                                    const PsoConfig& cfg, double v_max, const UniformDraw& draw) {
    const std::size_t dim = particle.position.size();
    if (particle.velocity.size() != dim || particle.best_position.size() != dim || global_best.size() != dim) {
        throw DimensionMismatchError("update_velocity: position, velocity and bests differ in dimension");
    }
    std::vector<double> v(dim);
    for (std::size_t k = 0; k < dim; ++k) {
        const double u1 = draw();
        const double u2 = draw();
        const double x = particle.position[k];
        const double next = w * particle.velocity[k] + cfg.phi1 * u1 * (particle.best_position[k] - x) +
                            cfg.phi2 * u2 * (global_best[k] - x);
        v[k] = std::clamp(next, -v_max, v_max);
    }
    return v;
}

std::vector<int> truncate_velocity(std::span<const double> velocity, double lambda, const UniformDraw& draw) {
    std::vector<int> out(velocity.size());
    for (std::size_t k = 0; k < velocity.size(); ++k) {
        const double u = draw();
        out[k] = static_cast<int>(u <= lambda ? std::floor(velocity[k]) : std::ceil(velocity[k]));
    }
    return out;
}

Plan update_position(std::span<const int> position, std::span<const int> velocity, DurationBounds bounds) {
    if (position.size() != velocity.size()) throw DimensionMismatchError("update_position: dimension mismatch");
    Plan out(position.size());
    for (std::size_t k = 0; k < position.size(); ++k) {
        const long moved = static_cast<long>(position[k]) + velocity[k];
        out[k] = static_cast<int>(std::clamp<long>(moved, bounds.min, bounds.max));
    }
    return out;
}

std::vector<std::size_t> select_retrain_candidates(std::span<const Particle> particles,
                                                   std::span<const double> predictions, int n_reeval) {
    if (predictions.size() != particles.size()) {
        throw Error(fmt::format("select_retrain_candidates: {} predictions for {} particles", predictions.size(),
                                particles.size()));
    }
    for (double p : predictions) {
        if (std::isnan(p)) throw Error("select_retrain_candidates: missing prediction");
    }
    if (n_reeval < 0 || static_cast<std::size_t>(n_reeval) > particles.size()) {
        throw ConfigError("n_reeval", "must be in [0, swarm_size]");
    }
    std::vector<std::size_t> order(particles.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return predictions[a] < predictions[b]; });
    order.resize(static_cast<std::size_t>(n_reeval));
    return order;
}

RunResult run(const PsoConfig& cfg, FitnessFunction& f, Surrogate* surrogate, energy::Profiler* profiler,
              const Observer& observer) {
    using energy::ComponentTag;
    validate(cfg);
    const bool assisted = uses_surrogate(cfg.variant);
    const bool retraining = retrains(cfg.variant);
    if (assisted && surrogate == nullptr) throw ConfigError("variant", "surrogate variants need a surrogate");

    const std::size_t dim = f.dimension();
    const DurationBounds bounds = f.bounds();
    if (dim == 0) throw InvalidSpecError("problem dimension is zero");
    const auto n = static_cast<std::size_t>(cfg.swarm_size);

    Rng rng(cfg.seed);
    const UniformDraw draw = [&rng] { return rng.uniform01(); };

    SwarmState st;
    RunResult res;
    res.variant = cfg.variant;
    res.seed = cfg.seed;
    bool have_best = false;

    auto scoped = [&](ComponentTag tag, auto&& action) {
        if (profiler) {
            res.components[static_cast<std::size_t>(tag)] += profiler->measure(tag, action);
        } else {
            action();
        }
    };
    auto actual = [&](const Plan& plan, long fe) {
        double value;
        try {
            value = f.evaluate(plan);
        } catch (const EvaluationError&) {
            throw;
        } catch (const std::exception& e) {
            throw EvaluationError(fe, st.generation, e.what());
        }
        ++st.actual_evals;
        if (!have_best || value < res.best_actual_fitness) {
            res.best_actual_fitness = value;
            res.best_plan = plan;
            have_best = true;
        }
        return value;
    };
    auto snapshot = [&] {
        res.history.push_back({st.generation, st.fe, res.best_actual_fitness, st.actual_evals, res.components});
        if (observer) observer(st);
    };
    auto refresh_global_best = [&] {
        std::vector<double> bests(n);
        for (std::size_t i = 0; i < n; ++i) bests[i] = st.particles[i].best_fitness;
        const std::size_t b = argmin(bests);
        st.global_best = st.particles[b].best_position;
        st.global_best_fitness = bests[b];
    };

    scoped(ComponentTag::Initialization, [&] {
        st.particles.resize(n);
        for (auto& p : st.particles) {
            p.position.resize(dim);
            for (auto& d : p.position) d = static_cast<int>(rng.uniform_int(bounds.min, bounds.max));
            p.velocity.assign(dim, 0.0);
        }
        energy::charge_work(n * dim * kNsPerCoordinate);
    });
    scoped(ComponentTag::Evaluation, [&] {
        for (std::size_t i = 0; i < n; ++i) {
            auto& p = st.particles[i];
            p.fitness = actual(p.position, static_cast<long>(i));
            p.kind = FitnessKind::Actual;
        }
    });
    scoped(ComponentTag::Initialization, [&] {
        for (auto& p : st.particles) {
            p.best_position = p.position;
            p.best_fitness = p.fitness;
            if (assisted) st.dataset.push_back({p.position, p.fitness});
        }
        refresh_global_best();
        st.fe = static_cast<long>(n);
        st.generation = 0;
        energy::charge_work(n * dim * kNsPerCoordinate);
    });
    snapshot();

    const long g_total = total_generations(cfg);
    const double v_max = static_cast<double>(bounds.max - bounds.min);

    while (st.fe < cfg.max_fitness_evals) {
        if (assisted && static_cast<long>(st.dataset.size()) >= cfg.n_train && (!st.trained || retraining)) {
            scoped(ComponentTag::Training, [&] { surrogate->train(st.dataset); });
            st.trained = true;
            ++res.trainings;
        }

        const double w = inertia_weight(st.generation, g_total, cfg.w_max, cfg.w_min);
        scoped(ComponentTag::Update, [&] {
            for (auto& p : st.particles) {
                const auto v = update_velocity(p, st.global_best, w, cfg, v_max, draw);
                const auto vi = truncate_velocity(v, cfg.lambda, draw);
                p.position = update_position(p.position, vi, bounds);
                p.velocity.assign(vi.begin(), vi.end());
            }
            energy::charge_work(4 * n * dim * kNsPerCoordinate);
        });

        if (st.trained) {
            scoped(ComponentTag::Prediction, [&] {
                for (std::size_t i = 0; i < n; ++i) {
                    auto& p = st.particles[i];
                    p.fitness = surrogate->predict(p.position);
                    p.kind = FitnessKind::Predicted;
                    ++st.predicted_evals;
                    if (cfg.record_predictions) {
                        res.predictions.push_back({st.fe + static_cast<long>(i) + 1, p.position, p.fitness});
                    }
                }
            });
        } else {
            scoped(ComponentTag::Evaluation, [&] {
                for (std::size_t i = 0; i < n; ++i) {
                    auto& p = st.particles[i];
                    p.fitness = actual(p.position, st.fe + static_cast<long>(i));
                    p.kind = FitnessKind::Actual;
                    if (assisted) st.dataset.push_back({p.position, p.fitness});
                }
            });
        }

        // Re-evaluations feed the dataset only; FE is not advanced.
        if (st.trained && retraining) {
            std::vector<double> predictions(n);
            for (std::size_t i = 0; i < n; ++i) predictions[i] = st.particles[i].fitness;
            scoped(ComponentTag::Evaluation, [&] {
                for (std::size_t idx : select_retrain_candidates(st.particles, predictions, cfg.n_reeval)) {
                    const Plan& x = st.particles[idx].position;
                    st.dataset.push_back({x, actual(x, st.fe + static_cast<long>(n))});
                }
            });
        }

        scoped(ComponentTag::Update, [&] {
            for (auto& p : st.particles) {
                if (p.fitness < p.best_fitness) {
                    p.best_fitness = p.fitness;
                    p.best_position = p.position;
                }
            }
            st.fe += static_cast<long>(n);
            refresh_global_best();
            energy::charge_work(n * dim * kNsPerCoordinate);
        });
        ++st.generation;
        snapshot();
    }

    // Pre-trained variants end with one actual evaluation of the best predicted particle.
    if (assisted && !retraining) {
        scoped(ComponentTag::Evaluation, [&] {
            std::vector<double> current(n);
            for (std::size_t i = 0; i < n; ++i) current[i] = st.particles[i].fitness;
            actual(st.particles[argmin(current)].position, st.fe);
        });
        auto& last = res.history.back();
        last.best_actual_fitness = res.best_actual_fitness;
        last.actual_evals = st.actual_evals;
        last.components = res.components;
    }

    res.actual_evals = st.actual_evals;
    res.predicted_evals = st.predicted_evals;
    res.generations = st.generation;
    res.fe = st.fe;
    return res;
}

std::vector<std::string> history_columns() {
    std::vector<std::string> cols = {"generation", "fe", "best_actual_fitness", "actual_evals_cum"};
    for (auto tag : energy::kAllComponents) {
        const std::string t = lower(energy::to_string(tag));
        cols.push_back(t + "_cpu_j");
        cols.push_back(t + "_dram_j");
        cols.push_back(t + "_time_s");
    }
    return cols;
}

void write_history_csv(const std::filesystem::path& path, const RunResult& result) {
    csv::Table table;
    table.header = history_columns();
    for (const auto& h : result.history) {
        std::vector<std::string> row = {csv::num(h.generation), csv::num(h.fe), csv::num(h.best_actual_fitness),
                                        csv::num(h.actual_evals)};
        for (const auto& c : h.components) {
            row.push_back(csv::num(c.cpu_j));
            row.push_back(csv::num(c.dram_j));
            row.push_back(csv::num(c.seconds));
        }
        table.rows.push_back(std::move(row));
    }
    csv::write(path, table);
}

}  // namespace surropt::swarm
