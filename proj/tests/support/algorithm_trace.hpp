#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "surropt/problem.hpp"
#include "surropt/swarm.hpp"

namespace surropt::testing {

struct TraceCounts {
    long actual = 0;
    long predicted = 0;
    long generations = 0;
    long fe = 0;
    int trainings = 0;
    std::vector<long> training_sizes;  // |D| at every training
};

/// Walks the control flow of the NN-assisted PSO pseudo-code line by line,
/// counting evaluations without doing any optimisation.
TraceCounts interpret_algorithm(int n, long max_fe, int n_train, int n_reeval, swarm::Variant variant);

/// Sum of squared distances to a target plan; counts its calls.
class QuadraticStub final : public FitnessFunction {
public:
    QuadraticStub(Plan target, DurationBounds bounds) : target_(std::move(target)), bounds_(bounds) {}
    double evaluate(std::span<const int> plan) override;
    std::size_t dimension() const override { return target_.size(); }
    DurationBounds bounds() const override { return bounds_; }
    long calls() const { return calls_; }
    const Plan& target() const { return target_; }

private:
    Plan target_;
    DurationBounds bounds_;
    long calls_ = 0;
};

/// Surrogate that remembers dataset sizes and predicts the plan sum.
class RecordingSurrogate final : public Surrogate {
public:
    void train(const Dataset& data) override { sizes.push_back(static_cast<long>(data.size())); }
    double predict(std::span<const int> plan) const override;
    std::vector<long> sizes;
};

}  // namespace surropt::testing
