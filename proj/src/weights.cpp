#include "scomb/weights.hpp"

#include <cmath>

#include "scomb/errors.hpp"

namespace scomb {

AccuracyMatrix accuracy_matrix(const ForecastPanel& panel, double epsilon) {
    panel.validate();
    if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
        fail(Errc::invalid_argument, "epsilon must be positive and finite");
    }
    AccuracyMatrix a;
    a.epsilon_floor = epsilon;
    a.values.reserve(panel.rows());
    for (size_t t = 0; t < panel.rows(); ++t) {
        std::vector<double> row;
        row.reserve(panel.cols());
        for (size_t j = 0; j < panel.cols(); ++j) {
            double err = std::max(std::abs(panel.forecasts[t][j] - panel.actuals[t]), epsilon);
            row.push_back(1.0 / (err * err));
        }
        a.values.push_back(std::move(row));
    }
    return a;
}

CompositionMatrix weight_matrix(const AccuracyMatrix& a) {
    if (a.rows() == 0 || a.cols() < 2) {
        fail(Errc::invalid_argument, "accuracy matrix must be T x J with J >= 2");
    }
    std::vector<Composition> rows;
    rows.reserve(a.rows());
    for (const auto& row : a.values) {
        if (row.size() != a.cols()) {
            fail(Errc::dimension_mismatch, "ragged accuracy matrix");
        }
        rows.push_back(closure(row));
    }
    return CompositionMatrix(std::move(rows));
}

EuclideanWeights euclidean_stc_weights(const ForecastPanel& panel, size_t t1, double epsilon) {
    panel.validate();
    if (t1 < 1 || t1 > panel.rows()) {
        fail(Errc::invalid_argument, "t1 outside 1..T");
    }
    if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
        fail(Errc::invalid_argument, "epsilon must be positive and finite");
    }
    size_t J = panel.cols();
    std::vector<double> means(J, 0.0);
    double grand = 0.0;
    for (size_t t = 0; t < t1; ++t) {
        for (size_t j = 0; j < J; ++j) {
            means[j] += panel.forecasts[t][j];
            grand += panel.forecasts[t][j];
        }
    }
    for (double& m : means) m /= static_cast<double>(t1);
    grand /= static_cast<double>(t1 * J);

    EuclideanWeights w;
    w.as_of = t1;
    w.weights.resize(J);
    double total = 0.0;
    for (size_t j = 0; j < J; ++j) {
        double dev = std::max(std::abs(means[j] - grand), epsilon);
        w.weights[j] = 1.0 / (dev * dev);
        total += w.weights[j];
    }
    for (double& x : w.weights) x /= total;
    return w;
}

}  // namespace scomb
