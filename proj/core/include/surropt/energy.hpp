#pragma once

#include <array>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <type_traits>
#include <utility>
#include <vector>

namespace surropt::energy {

enum class ComponentTag { Initialization, Update, Evaluation, Training, Prediction };

inline constexpr std::array<ComponentTag, 5> kAllComponents = {
    ComponentTag::Initialization, ComponentTag::Update, ComponentTag::Evaluation,
    ComponentTag::Training, ComponentTag::Prediction};

std::string_view to_string(ComponentTag tag);
std::optional<ComponentTag> parse_component(std::string_view name);

// ---------------------------------------------------------------------------
// Work meter
//
// A process-wide count of elementary operations (simulated vehicle-seconds,
// multiply-adds, ...). The fallback backend can use it as a deterministic
// clock so that profiles are reproducible bit for bit.
void charge_work(std::uint64_t units) noexcept;
std::uint64_t work_units() noexcept;

// ---------------------------------------------------------------------------
// Counters

/// Raw counter reading. Energy counters are in microjoules and wrap at *_max_uj.
struct EnergySample {
    std::uint64_t cpu_uj = 0;
    std::uint64_t dram_uj = 0;
    std::uint64_t cpu_max_uj = 0;
    std::uint64_t dram_max_uj = 0;
    std::int64_t timestamp_ns = 0;
    bool has_dram = false;
};

struct EnergyDelta {
    double cpu_j = 0.0;
    double dram_j = 0.0;
};

/// (after - before) mod counter_max per domain, converted to joules.
/// Assumes at most one wrap between the two samples.
EnergyDelta counter_delta(const EnergySample& before, const EnergySample& after);

class EnergyBackend {
public:
    virtual ~EnergyBackend() = default;
    virtual EnergySample read() = 0;
    virtual std::string_view name() const = 0;
};

/// Linux powercap RAPL: package domain intel-rapl:0 and its "dram" subdomain.
class RaplBackend final : public EnergyBackend {
public:
    explicit RaplBackend(std::filesystem::path root = "/sys/class/powercap");

    /// True when the package energy file under root can be read.
    static bool available(const std::filesystem::path& root = "/sys/class/powercap");

    EnergySample read() override;
    std::string_view name() const override { return "rapl"; }
    bool has_dram() const { return !dram_dir_.empty(); }

private:
    std::filesystem::path package_dir_;
    std::filesystem::path dram_dir_;
    std::uint64_t package_max_ = 0;
    std::uint64_t dram_max_ = 0;
};

enum class FallbackClock { Work, Wall };

struct FallbackOptions {
    double cpu_watts = 50.0;
    double dram_watts = 2.5;
    FallbackClock clock = FallbackClock::Work;
    double ns_per_work_unit = 1.0;
    std::uint64_t counter_max_uj = 262143328850ULL;  // typical RAPL package range
};

/// Synthetic counters: energy = watts x elapsed time, where elapsed time comes
/// from the work meter (deterministic) or the steady clock.
class FallbackBackend final : public EnergyBackend {
public:
    explicit FallbackBackend(FallbackOptions options = {});

    EnergySample read() override;
    std::string_view name() const override { return "fallback"; }
    const FallbackOptions& options() const { return options_; }

private:
    std::int64_t elapsed_ns() const;

    FallbackOptions options_;
    std::uint64_t work_origin_;
    std::chrono::steady_clock::time_point wall_origin_;
};

enum class BackendKind { Auto, Rapl, Fallback };

std::optional<BackendKind> parse_backend_kind(std::string_view name);

struct BackendOptions {
    BackendKind kind = BackendKind::Fallback;
    FallbackOptions fallback;
    std::filesystem::path powercap_root = "/sys/class/powercap";
};

/// Applies SURROPT_ENERGY_BACKEND, SURROPT_FALLBACK_CPU_W, SURROPT_FALLBACK_DRAM_W
/// and SURROPT_FALLBACK_CLOCK on top of `options`.
BackendOptions apply_environment(BackendOptions options);

/// Builds the requested backend. Rapl throws BackendUnavailableError when no
/// readable domain exists; Auto falls back silently.
std::unique_ptr<EnergyBackend> make_backend(const BackendOptions& options);

EnergySample read_counters(EnergyBackend& backend);

// ---------------------------------------------------------------------------
// Profiles

struct ComponentProfile {
    ComponentTag tag = ComponentTag::Initialization;
    double cpu_j = 0.0;
    double dram_j = 0.0;
    double seconds = 0.0;
    long call_count = 0;

    ComponentProfile& operator+=(const ComponentProfile& other);
};

/// One profile per tag, indexed by static_cast<size_t>(tag).
using ProfileTable = std::array<ComponentProfile, kAllComponents.size()>;

ProfileTable empty_table();

/// Attributes counter deltas and elapsed time to component tags. Only one scope
/// may be open per process, because RAPL counters are package-wide.
class Profiler {
public:
    explicit Profiler(EnergyBackend& backend, double max_scope_seconds = 60.0);

    template <class Action>
    auto measure(ComponentTag tag, Action&& action) {
        ScopeLock lock;
        const EnergySample before = backend_->read();
        if constexpr (std::is_void_v<std::invoke_result_t<Action&>>) {
            action();
            return finish(tag, before);
        } else {
            auto value = action();
            ComponentProfile profile = finish(tag, before);
            return std::pair<decltype(value), ComponentProfile>(std::move(value), profile);
        }
    }

    const ProfileTable& totals() const { return totals_; }
    void reset() { totals_ = empty_table(); }
    EnergyBackend& backend() { return *backend_; }

    /// True while any Profiler in the process has an open scope.
    static bool scope_active() noexcept;

private:
    class ScopeLock {
    public:
        ScopeLock();
        ~ScopeLock();
        ScopeLock(const ScopeLock&) = delete;
        ScopeLock& operator=(const ScopeLock&) = delete;
    };

    ComponentProfile finish(ComponentTag tag, const EnergySample& before);

    EnergyBackend* backend_;
    double max_scope_seconds_;
    ProfileTable totals_;
};

// ---------------------------------------------------------------------------
// Aggregation over runs

struct Stat {
    double mean = 0.0;
    double stdev = 0.0;
};

/// Mean and sample standard deviation (0 for fewer than two values).
Stat mean_stdev(const std::vector<double>& values);

struct ReportRow {
    std::string component;  // a tag name or "Total"
    Stat cpu_j;
    Stat dram_j;
    Stat seconds;
};

/// One row per tag plus a trailing "Total" row. Total means are sums of the
/// component means; Total deviations are taken over per-run totals.
std::vector<ReportRow> aggregate(const std::vector<ProfileTable>& runs);

inline constexpr std::array<std::string_view, 7> kReportColumns = {
    "component", "cpu_j_mean", "cpu_j_std", "dram_j_mean", "dram_j_std", "time_s_mean", "time_s_std"};

void write_report_csv(const std::filesystem::path& path, const std::vector<ReportRow>& rows);

}  // namespace surropt::energy
