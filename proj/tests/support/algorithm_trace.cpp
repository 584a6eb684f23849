#include "algorithm_trace.hpp"

namespace surropt::testing {

TraceCounts interpret_algorithm(int n, long max_fe, int n_train, int n_reeval, swarm::Variant variant) {
    const bool surrogate = swarm::uses_surrogate(variant);
    const bool retraining = swarm::retrains(variant);
    TraceCounts c;
    long dataset = 0;
    bool trained = false;

    // Initialization: every particle evaluated with f.
    for (int i = 0; i < n; ++i) {
        ++c.actual;
        if (surrogate) ++dataset;
    }
    c.fe = n;

    while (c.fe < max_fe) {
        if (surrogate && dataset >= n_train && (!trained || retraining)) {
            ++c.trainings;
            c.training_sizes.push_back(dataset);
            trained = true;
        }
        for (int i = 0; i < n; ++i) {
            if (trained) {
                ++c.predicted;
            } else {
                ++c.actual;
                if (surrogate) ++dataset;
            }
            ++c.fe;
        }
        if (trained && retraining) {
            for (int k = 0; k < n_reeval; ++k) {
                ++c.actual;
                ++dataset;
            }
        }
        ++c.generations;
    }
    if (surrogate && !retraining) ++c.actual;
    return c;
}

double QuadraticStub::evaluate(std::span<const int> plan) {
    ++calls_;
    double s = 0.0;
    for (std::size_t k = 0; k < plan.size(); ++k) {
        const double d = plan[k] - target_[k];
        s += d * d;
    }
    return s;
}

double RecordingSurrogate::predict(std::span<const int> plan) const {
    double s = 0.0;
    for (int d : plan) s += d;
    return s;
}

}  // namespace surropt::testing
