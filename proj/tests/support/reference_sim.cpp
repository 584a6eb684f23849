#include "reference_sim.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <tuple>
#include <vector>

namespace surropt::testing {

int reference_phase(std::span<const int> durations, int t) {
    const int cycle = std::accumulate(durations.begin(), durations.end(), 0);
    int tau = t % cycle;
    for (std::size_t j = 0; j < durations.size(); ++j) {
        if (tau < durations[j]) return static_cast<int>(j);
        tau -= durations[j];
    }
    return 0;
}

traffic::TrafficMetrics reference_simulate(const traffic::TrafficScenario& sc, std::span<const int> plan) {
    struct State {
        std::size_t hop = 0;
        int joined_at = -1;  // second the vehicle entered its current queue
        bool waiting = false;
        bool done = false;
        int ready_at = 0;  // second it reaches its current queue
    };
    std::vector<State> veh(sc.vehicles.size());
    for (std::size_t v = 0; v < veh.size(); ++v) veh[v].ready_at = sc.vehicles[v].departure_s;

    std::vector<std::vector<double>> credit(static_cast<std::size_t>(sc.intersections));
    for (int i = 0; i < sc.intersections; ++i) credit[i].assign(sc.approaches[i].size(), 0.0);

    traffic::TrafficMetrics m;
    for (int t = 0; t < sc.horizon_s; ++t) {
        for (auto& s : veh) {
            if (!s.done && !s.waiting && s.ready_at == t) {
                s.waiting = true;
                s.joined_at = t;
            }
        }
        for (int i = 0; i < sc.intersections; ++i) {
            const int j = reference_phase(plan.subspan(static_cast<std::size_t>(i) * sc.phases, sc.phases), t);
            for (std::size_t a = 0; a < sc.approaches[i].size(); ++a) {
                // Queue order: joining second, then vehicle id.
                std::vector<std::tuple<int, std::size_t>> lane;
                for (std::size_t v = 0; v < veh.size(); ++v) {
                    const auto& s = veh[v];
                    if (!s.waiting) continue;
                    const auto& h = sc.vehicles[v].route[s.hop];
                    if (h.intersection == i && static_cast<std::size_t>(h.approach) == a) lane.emplace_back(s.joined_at, v);
                }
                std::sort(lane.begin(), lane.end());
                if (!sc.approaches[i][a].green[j]) {
                    credit[i][a] = 0.0;
                    continue;
                }
                const double capacity = credit[i][a] + sc.saturation_flow;
                const auto served = std::min<std::size_t>(static_cast<std::size_t>(std::floor(capacity)), lane.size());
                for (std::size_t k = 0; k < served; ++k) {
                    const std::size_t v = std::get<1>(lane[k]);
                    auto& s = veh[v];
                    s.waiting = false;
                    ++s.hop;
                    if (s.hop == sc.vehicles[v].route.size()) {
                        s.done = true;
                        ++m.arrived;
                        m.total_travel_time += t + 1 - sc.vehicles[v].departure_s;
                    } else {
                        s.ready_at = t + sc.link_travel_time_s;
                    }
                }
                credit[i][a] = served == lane.size() ? 0.0 : capacity - static_cast<double>(served);
            }
        }
        for (const auto& s : veh) m.total_stopped_time += s.waiting ? 1 : 0;
    }
    m.not_arrived = static_cast<long>(veh.size()) - m.arrived;
    return m;
}

}  // namespace surropt::testing
