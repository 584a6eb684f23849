#include "oracles.hpp"

#include <cmath>
#include <stdexcept>
#include <utility>

namespace surropt::testing {

double finite_difference(const surrogate::SurrogateModel& model, const surrogate::Batch& batch, std::size_t layer,
                         bool bias, std::size_t index, double h) {
    auto shifted = [&](double delta) {
        surrogate::SurrogateModel m = model;
        auto& values = bias ? m.layers[layer].bias : m.layers[layer].weights;
        values[index] += delta;
        return surrogate::batch_loss(m, batch);
    };
    return (shifted(h) - shifted(-h)) / (2.0 * h);
}

std::vector<double> least_squares(const std::vector<std::vector<double>>& x, const std::vector<double>& y) {
    const std::size_t k = x.front().size() + 1;
    std::vector<std::vector<double>> a(k, std::vector<double>(k + 1, 0.0));
    for (std::size_t r = 0; r < x.size(); ++r) {
        std::vector<double> row{1.0};
        row.insert(row.end(), x[r].begin(), x[r].end());
        for (std::size_t i = 0; i < k; ++i) {
            for (std::size_t j = 0; j < k; ++j) a[i][j] += row[i] * row[j];
            a[i][k] += row[i] * y[r];
        }
    }
    for (std::size_t c = 0; c < k; ++c) {
        std::size_t pivot = c;
        for (std::size_t r = c + 1; r < k; ++r) {
            if (std::abs(a[r][c]) > std::abs(a[pivot][c])) pivot = r;
        }
        if (std::abs(a[pivot][c]) < 1e-300) throw std::runtime_error("singular normal equations");
        std::swap(a[c], a[pivot]);
        for (std::size_t r = 0; r < k; ++r) {
            if (r == c) continue;
            const double f = a[r][c] / a[c][c];
            for (std::size_t j = c; j <= k; ++j) a[r][j] -= f * a[c][j];
        }
    }
    std::vector<double> beta(k);
    for (std::size_t i = 0; i < k; ++i) beta[i] = a[i][k] / a[i][i];
    return beta;
}

}  // namespace surropt::testing
