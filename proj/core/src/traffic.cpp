#include "surropt/traffic.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <deque>

#include "json_util.hpp"
#include "surropt/csv.hpp"
#include "surropt/energy.hpp"
#include "surropt/error.hpp"
#include "surropt/rng.hpp"

namespace surropt::traffic {

namespace {

// Work-meter charge per simulator work item (vehicle move or queue scan), in
// reference nanoseconds: about 5.6 ns measured on the development machine.
std::uint64_t simulator_charge(std::uint64_t items) { return items * 28 / 5; }

// Approach index = side the vehicle arrives from.
constexpr int kNorth = 0;
constexpr int kEast = 1;
constexpr int kSouth = 2;
constexpr int kWest = 3;
constexpr int kApproaches = 4;

void check_spec(const ScenarioSpec& s) {
    auto fail = [](const std::string& what) { throw InvalidSpecError("scenario spec: " + what); };
    if (s.rows < 1 || s.cols < 1) fail("rows and cols must be >= 1 (no intersections)");
    if (s.vehicles < 1) fail("vehicles must be >= 1");
    if (s.horizon_s < 1) fail("horizon_s must be >= 1");
    if (s.phases < 2) fail("phases must be >= 2 so every phase has a red signal");
    if (s.d_min < 1 || s.d_max < s.d_min) fail("need 1 <= d_min <= d_max");
    if (!(s.saturation_flow > 0.0) || !std::isfinite(s.saturation_flow)) fail("saturation_flow must be > 0");
    if (s.link_travel_time_s < 1) fail("link_travel_time_s must be >= 1");
}

// Approach a vehicle uses when entering `to` from neighbouring `from`.
int approach_from_move(int from_row, int from_col, int to_row, int to_col) {
    if (to_col > from_col) return kWest;
    if (to_col < from_col) return kEast;
    if (to_row > from_row) return kNorth;
    return kSouth;
}

}  // namespace

ScenarioSpec scenario_spec_from_json(const nlohmann::json& doc, const std::string& prefix) {
    using namespace detail;
    require_object(doc, prefix);
    reject_unknown(doc, prefix,
                   {"rows", "cols", "phases", "vehicles", "horizon_s", "seed", "d_min", "d_max",
                    "saturation_flow", "link_travel_time_s"});
    ScenarioSpec s;
    read_int(doc, prefix, "rows", s.rows);
    read_int(doc, prefix, "cols", s.cols);
    read_int(doc, prefix, "phases", s.phases);
    read_int(doc, prefix, "vehicles", s.vehicles);
    read_int(doc, prefix, "horizon_s", s.horizon_s);
    read_u64(doc, prefix, "seed", s.seed);
    read_int(doc, prefix, "d_min", s.d_min);
    read_int(doc, prefix, "d_max", s.d_max);
    read_double(doc, prefix, "saturation_flow", s.saturation_flow);
    read_int(doc, prefix, "link_travel_time_s", s.link_travel_time_s);

    auto positive = [&](std::string_view key, int v) {
        if (v < 1) throw ConfigError(join_key(prefix, key), "must be >= 1");
    };
    positive("rows", s.rows);
    positive("cols", s.cols);
    positive("vehicles", s.vehicles);
    positive("horizon_s", s.horizon_s);
    positive("d_min", s.d_min);
    positive("link_travel_time_s", s.link_travel_time_s);
    if (s.phases < 2) throw ConfigError(join_key(prefix, "phases"), "must be >= 2");
    if (s.d_max < s.d_min) throw ConfigError(join_key(prefix, "d_max"), "must be >= d_min");
    if (!(s.saturation_flow > 0.0)) throw ConfigError(join_key(prefix, "saturation_flow"), "must be > 0");
    return s;
}

nlohmann::json to_json(const ScenarioSpec& s) {
    return nlohmann::json{{"rows", s.rows},
                          {"cols", s.cols},
                          {"phases", s.phases},
                          {"vehicles", s.vehicles},
                          {"horizon_s", s.horizon_s},
                          {"seed", s.seed},
                          {"d_min", s.d_min},
                          {"d_max", s.d_max},
                          {"saturation_flow", s.saturation_flow},
                          {"link_travel_time_s", s.link_travel_time_s}};
}

void validate(const TrafficScenario& sc) {
    auto fail = [](const std::string& what) { throw InvalidSpecError("scenario: " + what); };
    if (sc.intersections < 1 || sc.phases < 1) fail("need at least one intersection and one phase");
    if (sc.signal.size() != sc.dimension()) fail("signal matrix size != intersections x phases");
    if (sc.approaches.size() != static_cast<std::size_t>(sc.intersections)) fail("approach table size");
    for (const auto& list : sc.approaches) {
        for (const auto& a : list) {
            if (a.green.size() != static_cast<std::size_t>(sc.phases)) fail("approach green mask size");
        }
    }
    if (sc.horizon_s < 1) fail("horizon_s must be >= 1");
    if (sc.link_travel_time_s < 1) fail("link_travel_time_s must be >= 1");
    if (!(sc.saturation_flow > 0.0)) fail("saturation_flow must be > 0");
    if (sc.bounds.min < 1 || sc.bounds.max < sc.bounds.min) fail("duration bounds");
    for (const auto& v : sc.vehicles) {
        if (v.departure_s < 0 || v.departure_s >= sc.horizon_s) fail("departure outside [0, horizon)");
        if (v.route.empty()) fail("empty route");
        for (const auto& hop : v.route) {
            if (hop.intersection < 0 || hop.intersection >= sc.intersections) fail("route leaves the network");
            const auto& list = sc.approaches[static_cast<std::size_t>(hop.intersection)];
            if (hop.approach < 0 || hop.approach >= static_cast<int>(list.size())) fail("unknown approach");
        }
    }
}

TrafficScenario build_scenario(const ScenarioSpec& spec) {
    check_spec(spec);
    TrafficScenario sc;
    sc.intersections = spec.rows * spec.cols;
    sc.phases = spec.phases;
    sc.link_travel_time_s = spec.link_travel_time_s;
    sc.saturation_flow = spec.saturation_flow;
    sc.horizon_s = spec.horizon_s;
    sc.bounds = {spec.d_min, spec.d_max};

    sc.approaches.resize(static_cast<std::size_t>(sc.intersections));
    sc.signal.resize(sc.dimension());
    for (int i = 0; i < sc.intersections; ++i) {
        auto& list = sc.approaches[static_cast<std::size_t>(i)];
        list.resize(kApproaches);
        for (int a = 0; a < kApproaches; ++a) {
            list[static_cast<std::size_t>(a)].green.assign(static_cast<std::size_t>(sc.phases), 0);
            list[static_cast<std::size_t>(a)].green[static_cast<std::size_t>(a % sc.phases)] = 1;
        }
        for (int j = 0; j < sc.phases; ++j) {
            int green = 0;
            for (int a = 0; a < kApproaches; ++a) green += (a % sc.phases == j) ? 1 : 0;
            sc.signal[static_cast<std::size_t>(i) * sc.phases + j] = {green, kApproaches - green};
        }
    }

    Rng rng(spec.seed);
    const int last_departure = std::max(0, spec.horizon_s / 2 - 1);
    sc.vehicles.reserve(static_cast<std::size_t>(spec.vehicles));
    for (int v = 0; v < spec.vehicles; ++v) {
        const int origin = static_cast<int>(rng.uniform_int(0, sc.intersections - 1));
        const int dest = static_cast<int>(rng.uniform_int(0, sc.intersections - 1));
        Vehicle vehicle;
        vehicle.departure_s = static_cast<int>(rng.uniform_int(0, last_departure));
        const bool horizontal_first = rng.uniform_int(0, 1) == 0;

        int r = origin / spec.cols, c = origin % spec.cols;
        const int r1 = dest / spec.cols, c1 = dest % spec.cols;
        std::vector<std::pair<int, int>> cells{{r, c}};
        auto walk_cols = [&] {
            while (c != c1) cells.emplace_back(r, c += (c1 > c ? 1 : -1));
        };
        auto walk_rows = [&] {
            while (r != r1) cells.emplace_back(r += (r1 > r ? 1 : -1), c);
        };
        if (horizontal_first) {
            walk_cols();
            walk_rows();
        } else {
            walk_rows();
            walk_cols();
        }

        for (std::size_t k = 0; k < cells.size(); ++k) {
            const auto [cr, cc] = cells[k];
            int approach;
            if (k > 0) {
                approach = approach_from_move(cells[k - 1].first, cells[k - 1].second, cr, cc);
            } else if (cells.size() > 1) {
                // Enters the first intersection heading the way it will leave.
                approach = approach_from_move(cr - (cells[1].first - cr), cc - (cells[1].second - cc), cr, cc);
            } else {
                approach = static_cast<int>(rng.uniform_int(0, kApproaches - 1));
            }
            vehicle.route.push_back({cr * spec.cols + cc, approach});
        }
        sc.vehicles.push_back(std::move(vehicle));
    }
    return sc;
}

void check_plan(const TrafficScenario& sc, std::span<const int> plan) {
    if (plan.size() != sc.dimension()) {
        throw DimensionMismatchError(
            fmt::format("plan has {} durations, scenario needs {}", plan.size(), sc.dimension()));
    }
    for (std::size_t k = 0; k < plan.size(); ++k) {
        if (!sc.bounds.contains(plan[k])) {
            throw BoundsError(fmt::format("duration[{}] = {} outside [{}, {}]", k, plan[k], sc.bounds.min,
                                          sc.bounds.max));
        }
    }
}

TrafficMetrics simulate(const TrafficScenario& sc, std::span<const int> plan) {
    check_plan(sc, plan);
    const int horizon = sc.horizon_s;
    const auto n_inter = static_cast<std::size_t>(sc.intersections);
    const auto n_phases = static_cast<std::size_t>(sc.phases);

    std::vector<std::size_t> approach_offset(n_inter + 1, 0);
    for (std::size_t i = 0; i < n_inter; ++i) approach_offset[i + 1] = approach_offset[i] + sc.approaches[i].size();
    const std::size_t n_approaches = approach_offset.back();

    std::vector<std::deque<int>> queue(n_approaches);
    std::vector<double> credit(n_approaches, 0.0);
    std::vector<std::vector<int>> joins(static_cast<std::size_t>(horizon));
    std::vector<std::size_t> hop(sc.vehicles.size(), 0);

    for (std::size_t v = 0; v < sc.vehicles.size(); ++v) {
        joins[static_cast<std::size_t>(sc.vehicles[v].departure_s)].push_back(static_cast<int>(v));
    }

    std::vector<std::size_t> phase(n_inter, 0);
    std::vector<int> remaining(n_inter);
    for (std::size_t i = 0; i < n_inter; ++i) remaining[i] = plan[i * n_phases];

    TrafficMetrics m;
    long queued = 0;
    std::uint64_t work = 0;

    for (int t = 0; t < horizon; ++t) {
        auto& arriving = joins[static_cast<std::size_t>(t)];
        std::sort(arriving.begin(), arriving.end());
        for (int v : arriving) {
            const Hop& h = sc.vehicles[static_cast<std::size_t>(v)].route[hop[static_cast<std::size_t>(v)]];
            queue[approach_offset[static_cast<std::size_t>(h.intersection)] + static_cast<std::size_t>(h.approach)]
                .push_back(v);
            ++queued;
        }
        work += arriving.size();

        for (std::size_t i = 0; i < n_inter; ++i) {
            if (remaining[i] == 0) {
                phase[i] = (phase[i] + 1) % n_phases;
                remaining[i] = plan[i * n_phases + phase[i]];
            }
            --remaining[i];

            const auto& list = sc.approaches[i];
            for (std::size_t a = 0; a < list.size(); ++a) {
                const std::size_t q = approach_offset[i] + a;
                if (!list[a].green[phase[i]]) {
                    credit[q] = 0.0;
                    continue;
                }
                const double capacity = credit[q] + sc.saturation_flow;
                auto& lane = queue[q];
                long discharge = std::min(static_cast<long>(std::floor(capacity)), static_cast<long>(lane.size()));
                const long discharged = discharge;
                while (discharge-- > 0) {
                    const int v = lane.front();
                    lane.pop_front();
                    --queued;
                    const auto vi = static_cast<std::size_t>(v);
                    const Vehicle& veh = sc.vehicles[vi];
                    if (++hop[vi] == veh.route.size()) {
                        ++m.arrived;
                        m.total_travel_time += (t + 1) - veh.departure_s;
                    } else {
                        const int next = t + sc.link_travel_time_s;
                        if (next < horizon) joins[static_cast<std::size_t>(next)].push_back(v);
                    }
                }
                credit[q] = lane.empty() ? 0.0 : capacity - static_cast<double>(discharged);
            }
            work += list.size() + 1;
        }
        m.total_stopped_time += queued;
        work += static_cast<std::uint64_t>(queued);
    }
    m.not_arrived = static_cast<long>(sc.vehicles.size()) - m.arrived;
    energy::charge_work(simulator_charge(work));
    return m;
}

double phase_ratio(const TrafficScenario& sc, std::span<const int> plan) {
    if (plan.size() != sc.dimension()) {
        throw DimensionMismatchError(
            fmt::format("plan has {} durations, scenario needs {}", plan.size(), sc.dimension()));
    }
    double p = 0.0;
    for (int i = 0; i < sc.intersections; ++i) {
        for (int j = 0; j < sc.phases; ++j) {
            const auto& c = sc.counts(i, j);
            if (c.red == 0) {
                throw DegenerateDenominatorError(fmt::format("r[{}][{}] = 0 in phase ratio", i, j));
            }
            p += plan[static_cast<std::size_t>(i) * sc.phases + j] * static_cast<double>(c.green) / c.red;
        }
    }
    return p;
}

double combined_fitness(const TrafficMetrics& m, double p, int horizon_s) {
    const double denom = static_cast<double>(m.arrived) * static_cast<double>(m.arrived) + p;
    if (!(denom > 0.0)) throw DegenerateDenominatorError("NV_D^2 + P must be > 0");
    const double numer = static_cast<double>(m.total_travel_time) + static_cast<double>(m.total_stopped_time) +
                         static_cast<double>(m.not_arrived) * horizon_s;
    return numer / denom;
}

Evaluator::Evaluator(std::shared_ptr<const TrafficScenario> scenario) : scenario_(std::move(scenario)) {
    if (!scenario_) throw InvalidSpecError("evaluator needs a scenario");
    validate(*scenario_);
}

double Evaluator::evaluate(std::span<const int> plan) {
    count_.fetch_add(1);
    const TrafficMetrics m = simulate(*scenario_, plan);
    return combined_fitness(m, phase_ratio(*scenario_, plan), scenario_->horizon_s);
}

std::uint64_t plan_hash(std::span<const int> plan) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (int d : plan) {
        const auto u = static_cast<std::uint32_t>(d);
        for (int b = 0; b < 4; ++b) {
            h ^= (u >> (8 * b)) & 0xffu;
            h *= 0x100000001b3ULL;
        }
    }
    return h;
}

void write_golden_csv(const std::filesystem::path& path, const std::vector<GoldenRecord>& records) {
    csv::Table table;
    table.header = {"plan_hash", "NV_D", "NV_ND", "TT_v", "TT_EP", "P", "F"};
    for (const auto& r : records) {
        table.rows.push_back({csv::num(r.plan_hash), csv::num(r.metrics.arrived), csv::num(r.metrics.not_arrived),
                              csv::num(r.metrics.total_travel_time), csv::num(r.metrics.total_stopped_time),
                              csv::num(r.phase_ratio), csv::num(r.fitness)});
    }
    csv::write(path, table);
}

std::vector<GoldenRecord> read_golden_csv(const std::filesystem::path& path) {
    const csv::Table table = csv::read(path);
    const std::size_t c_hash = table.column("plan_hash"), c_d = table.column("NV_D"), c_nd = table.column("NV_ND"),
                      c_tt = table.column("TT_v"), c_ep = table.column("TT_EP"), c_p = table.column("P"),
                      c_f = table.column("F");
    std::vector<GoldenRecord> out;
    for (const auto& row : table.rows) {
        GoldenRecord r;
        r.plan_hash = std::stoull(row.at(c_hash));
        r.metrics.arrived = std::stol(row.at(c_d));
        r.metrics.not_arrived = std::stol(row.at(c_nd));
        r.metrics.total_travel_time = std::stol(row.at(c_tt));
        r.metrics.total_stopped_time = std::stol(row.at(c_ep));
        r.phase_ratio = std::stod(row.at(c_p));
        r.fitness = std::stod(row.at(c_f));
        out.push_back(r);
    }
    return out;
}

}  // namespace surropt::traffic
