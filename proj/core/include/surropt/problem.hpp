#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace surropt {

/// Integer phase durations in seconds, flattened intersection-major.
using Plan = std::vector<int>;

struct DurationBounds {
    int min = 5;
    int max = 60;

    bool contains(int d) const { return d >= min && d <= max; }
};

/// One row of the training archive D: a plan and its actual fitness.
struct Sample {
    Plan plan;
    double fitness = 0.0;
};

using Dataset = std::vector<Sample>;

/// The expensive objective f.
class FitnessFunction {
public:
    virtual ~FitnessFunction() = default;
    virtual double evaluate(std::span<const int> plan) = 0;
    virtual std::size_t dimension() const = 0;
    virtual DurationBounds bounds() const = 0;
};

/// A learned approximation f^ of a FitnessFunction.
class Surrogate {
public:
    virtual ~Surrogate() = default;
    virtual void train(const Dataset& data) = 0;
    virtual double predict(std::span<const int> plan) const = 0;
};

}  // namespace surropt
