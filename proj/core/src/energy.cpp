#include "surropt/energy.hpp"

#include <fmt/format.h>

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>

#include "surropt/csv.hpp"
#include "surropt/error.hpp"

namespace surropt::energy {

namespace {

std::atomic<std::uint64_t> g_work_units{0};
std::atomic<bool> g_scope_active{false};

constexpr std::array<std::string_view, 5> kTagNames = {
    "Initialization", "Update", "Evaluation", "Training", "Prediction"};

std::optional<std::uint64_t> read_u64(const std::filesystem::path& path) {
    std::ifstream in(path);
    std::uint64_t value = 0;
    if (!(in >> value)) return std::nullopt;
    return value;
}

std::optional<std::string> read_word(const std::filesystem::path& path) {
    std::ifstream in(path);
    std::string word;
    if (!(in >> word)) return std::nullopt;
    return word;
}

std::int64_t steady_now_ns() {
    return std::chrono::duration_cast<std::chrono::nanoseconds>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

std::uint64_t wrap_delta(std::uint64_t before, std::uint64_t after, std::uint64_t max) {
    if (after >= before) return after - before;
    return max - before + after;
}

}  // namespace

std::string_view to_string(ComponentTag tag) { return kTagNames[static_cast<std::size_t>(tag)]; }

std::optional<ComponentTag> parse_component(std::string_view name) {
    for (std::size_t i = 0; i < kTagNames.size(); ++i) {
        if (kTagNames[i] == name) return kAllComponents[i];
    }
    return std::nullopt;
}

void charge_work(std::uint64_t units) noexcept { g_work_units.fetch_add(units, std::memory_order_relaxed); }

std::uint64_t work_units() noexcept { return g_work_units.load(std::memory_order_relaxed); }

EnergyDelta counter_delta(const EnergySample& before, const EnergySample& after) {
    if (before.cpu_max_uj != after.cpu_max_uj || before.dram_max_uj != after.dram_max_uj) {
        throw Error("counter_delta: samples have different counter ranges");
    }
    EnergyDelta delta;
    delta.cpu_j = static_cast<double>(wrap_delta(before.cpu_uj, after.cpu_uj, after.cpu_max_uj)) * 1e-6;
    if (before.has_dram && after.has_dram) {
        delta.dram_j = static_cast<double>(wrap_delta(before.dram_uj, after.dram_uj, after.dram_max_uj)) * 1e-6;
    }
    return delta;
}

// ---------------------------------------------------------------------------
// RAPL

bool RaplBackend::available(const std::filesystem::path& root) {
    return read_u64(root / "intel-rapl:0" / "energy_uj").has_value();
}

RaplBackend::RaplBackend(std::filesystem::path root) {
    package_dir_ = root / "intel-rapl:0";
    const auto max = read_u64(package_dir_ / "max_energy_range_uj");
    if (!read_u64(package_dir_ / "energy_uj") || !max) {
        throw BackendUnavailableError(
            fmt::format("no readable RAPL package domain under '{}'", root.string()));
    }
    package_max_ = *max;

    // Subdomains appear both nested and as top-level symlinks on real systems.
    std::error_code ec;
    for (const auto& dir : {package_dir_, root}) {
        for (const auto& entry : std::filesystem::directory_iterator(dir, ec)) {
            const std::string name = entry.path().filename().string();
            if (name.rfind("intel-rapl:0:", 0) != 0) continue;
            if (read_word(entry.path() / "name") != "dram") continue;
            const auto dmax = read_u64(entry.path() / "max_energy_range_uj");
            if (!dmax || !read_u64(entry.path() / "energy_uj")) continue;
            dram_dir_ = entry.path();
            dram_max_ = *dmax;
            return;
        }
    }
}

EnergySample RaplBackend::read() {
    EnergySample s;
    const auto cpu = read_u64(package_dir_ / "energy_uj");
    if (!cpu) throw BackendUnavailableError("RAPL package counter became unreadable");
    s.cpu_uj = *cpu;
    s.cpu_max_uj = package_max_;
    if (!dram_dir_.empty()) {
        if (const auto dram = read_u64(dram_dir_ / "energy_uj")) {
            s.dram_uj = *dram;
            s.has_dram = true;
        }
    }
    s.dram_max_uj = dram_max_;
    s.timestamp_ns = steady_now_ns();
    return s;
}

// ---------------------------------------------------------------------------
// Fallback

FallbackBackend::FallbackBackend(FallbackOptions options)
    : options_(options), work_origin_(work_units()), wall_origin_(std::chrono::steady_clock::now()) {
    if (options_.cpu_watts < 0 || options_.dram_watts < 0 || options_.ns_per_work_unit <= 0 ||
        options_.counter_max_uj == 0) {
        throw InvalidSpecError("fallback backend: watts must be >= 0, ns_per_work_unit > 0");
    }
}

std::int64_t FallbackBackend::elapsed_ns() const {
    if (options_.clock == FallbackClock::Work) {
        const auto units = static_cast<double>(work_units() - work_origin_);
        return static_cast<std::int64_t>(units * options_.ns_per_work_unit);
    }
    return std::chrono::duration_cast<std::chrono::nanoseconds>(std::chrono::steady_clock::now() -
                                                                wall_origin_)
        .count();
}

EnergySample FallbackBackend::read() {
    const auto ns = static_cast<double>(elapsed_ns());
    // W x ns = 1e-3 uJ
    const auto cpu = static_cast<std::uint64_t>(std::floor(options_.cpu_watts * ns * 1e-3));
    const auto dram = static_cast<std::uint64_t>(std::floor(options_.dram_watts * ns * 1e-3));
    EnergySample s;
    s.cpu_uj = cpu % options_.counter_max_uj;
    s.dram_uj = dram % options_.counter_max_uj;
    s.cpu_max_uj = options_.counter_max_uj;
    s.dram_max_uj = options_.counter_max_uj;
    s.has_dram = true;
    s.timestamp_ns = static_cast<std::int64_t>(ns);
    return s;
}

// ---------------------------------------------------------------------------
// Backend selection

std::optional<BackendKind> parse_backend_kind(std::string_view name) {
    if (name == "auto") return BackendKind::Auto;
    if (name == "rapl") return BackendKind::Rapl;
    if (name == "fallback") return BackendKind::Fallback;
    return std::nullopt;
}

BackendOptions apply_environment(BackendOptions options) {
    auto number = [](const char* var, double& out) {
        if (const char* v = std::getenv(var)) {
            char* end = nullptr;
            const double x = std::strtod(v, &end);
            if (end == v || *end != '\0' || x < 0) throw ConfigError(var, "expected a non-negative number");
            out = x;
        }
    };
    if (const char* v = std::getenv("SURROPT_ENERGY_BACKEND")) {
        const auto kind = parse_backend_kind(v);
        if (!kind) throw ConfigError("SURROPT_ENERGY_BACKEND", "expected one of auto, rapl, fallback");
        options.kind = *kind;
    }
    number("SURROPT_FALLBACK_CPU_W", options.fallback.cpu_watts);
    number("SURROPT_FALLBACK_DRAM_W", options.fallback.dram_watts);
    if (const char* v = std::getenv("SURROPT_FALLBACK_CLOCK")) {
        const std::string_view clock(v);
        if (clock == "work") {
            options.fallback.clock = FallbackClock::Work;
        } else if (clock == "wall") {
            options.fallback.clock = FallbackClock::Wall;
        } else {
            throw ConfigError("SURROPT_FALLBACK_CLOCK", "expected work or wall");
        }
    }
    return options;
}

std::unique_ptr<EnergyBackend> make_backend(const BackendOptions& options) {
    switch (options.kind) {
        case BackendKind::Rapl:
            return std::make_unique<RaplBackend>(options.powercap_root);
        case BackendKind::Auto:
            if (RaplBackend::available(options.powercap_root)) {
                return std::make_unique<RaplBackend>(options.powercap_root);
            }
            return std::make_unique<FallbackBackend>(options.fallback);
        case BackendKind::Fallback:
            break;
    }
    return std::make_unique<FallbackBackend>(options.fallback);
}

EnergySample read_counters(EnergyBackend& backend) { return backend.read(); }

// ---------------------------------------------------------------------------
// Profiles

ComponentProfile& ComponentProfile::operator+=(const ComponentProfile& other) {
    cpu_j += other.cpu_j;
    dram_j += other.dram_j;
    seconds += other.seconds;
    call_count += other.call_count;
    return *this;
}

ProfileTable empty_table() {
    ProfileTable table;
    for (std::size_t i = 0; i < table.size(); ++i) table[i].tag = kAllComponents[i];
    return table;
}

Profiler::Profiler(EnergyBackend& backend, double max_scope_seconds)
    : backend_(&backend), max_scope_seconds_(max_scope_seconds), totals_(empty_table()) {}

bool Profiler::scope_active() noexcept { return g_scope_active.load(); }

Profiler::ScopeLock::ScopeLock() {
    bool expected = false;
    if (!g_scope_active.compare_exchange_strong(expected, true)) {
        throw NestedScopeError("a measurement scope is already active in this process");
    }
}

Profiler::ScopeLock::~ScopeLock() { g_scope_active.store(false); }

ComponentProfile Profiler::finish(ComponentTag tag, const EnergySample& before) {
    const EnergySample after = backend_->read();
    const EnergyDelta delta = counter_delta(before, after);
    ComponentProfile profile;
    profile.tag = tag;
    profile.cpu_j = delta.cpu_j;
    profile.dram_j = delta.dram_j;
    profile.seconds = static_cast<double>(after.timestamp_ns - before.timestamp_ns) * 1e-9;
    profile.call_count = 1;
    if (profile.seconds > max_scope_seconds_) {
        // Longer scopes risk more than one counter wrap, which counter_delta cannot see.
        std::clog << fmt::format("warning: {} scope lasted {:.1f} s (limit {:.1f} s); energy may be undercounted\n",
                                 to_string(tag), profile.seconds, max_scope_seconds_);
    }
    totals_[static_cast<std::size_t>(tag)] += profile;
    return profile;
}

// ---------------------------------------------------------------------------
// Aggregation

Stat mean_stdev(const std::vector<double>& values) {
    Stat s;
    if (values.empty()) return s;
    double sum = 0.0;
    for (double v : values) sum += v;
    s.mean = sum / static_cast<double>(values.size());
    if (values.size() < 2) return s;
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.stdev = std::sqrt(ss / static_cast<double>(values.size() - 1));
    return s;
}

std::vector<ReportRow> aggregate(const std::vector<ProfileTable>& runs) {
    if (runs.empty()) throw Error("aggregate: no runs");
    std::vector<ReportRow> rows;
    std::vector<double> total_cpu(runs.size(), 0.0), total_dram(runs.size(), 0.0), total_s(runs.size(), 0.0);
    ReportRow total{"Total", {}, {}, {}};
    for (std::size_t t = 0; t < kAllComponents.size(); ++t) {
        std::vector<double> cpu, dram, sec;
        for (std::size_t r = 0; r < runs.size(); ++r) {
            const auto& p = runs[r][t];
            cpu.push_back(p.cpu_j);
            dram.push_back(p.dram_j);
            sec.push_back(p.seconds);
            total_cpu[r] += p.cpu_j;
            total_dram[r] += p.dram_j;
            total_s[r] += p.seconds;
        }
        ReportRow row{std::string(to_string(kAllComponents[t])), mean_stdev(cpu), mean_stdev(dram),
                      mean_stdev(sec)};
        total.cpu_j.mean += row.cpu_j.mean;
        total.dram_j.mean += row.dram_j.mean;
        total.seconds.mean += row.seconds.mean;
        rows.push_back(row);
    }
    total.cpu_j.stdev = mean_stdev(total_cpu).stdev;
    total.dram_j.stdev = mean_stdev(total_dram).stdev;
    total.seconds.stdev = mean_stdev(total_s).stdev;
    rows.push_back(total);
    return rows;
}

void write_report_csv(const std::filesystem::path& path, const std::vector<ReportRow>& rows) {
    csv::Table table;
    table.header.assign(kReportColumns.begin(), kReportColumns.end());
    for (const auto& r : rows) {
        table.rows.push_back({r.component, csv::num(r.cpu_j.mean), csv::num(r.cpu_j.stdev), csv::num(r.dram_j.mean),
                              csv::num(r.dram_j.stdev), csv::num(r.seconds.mean), csv::num(r.seconds.stdev)});
    }
    csv::write(path, table);
}

}  // namespace surropt::energy
