#pragma once

#include <cstdint>
#include <random>
#include <utility>
#include <vector>

namespace surropt {

// The mt19937_64 sequence is fixed by the standard. The standard distributions
// are not, so draws are derived by hand and stay identical across libraries.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }

    /// Uniform in [0, 1) with 53 random bits.
    double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// Uniform integer in [lo, hi] (inclusive).
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);

    template <class T>
    void shuffle(std::vector<T>& items) {
        for (std::size_t i = items.size(); i > 1; --i) {
            const auto j = static_cast<std::size_t>(uniform_int(0, static_cast<std::int64_t>(i) - 1));
            std::swap(items[i - 1], items[j]);
        }
    }

private:
    std::mt19937_64 engine_;
};

/// splitmix64 mix of (base, stream); used to give independent seeds to sub-tasks.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);

}  // namespace surropt
