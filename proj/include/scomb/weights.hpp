#pragma once

#include <vector>

#include "scomb/coda.hpp"
#include "scomb/panel.hpp"

namespace scomb {

/// T×J panel of prediction accuracies a_{t,j} = 1/err², all entries
/// strictly positive. `epsilon_floor` records the floor applied to
/// |error| before inverting, so exact hits stay finite.
struct AccuracyMatrix {
    std::vector<std::vector<double>> values;
    double epsilon_floor = 0.0;

    size_t rows() const { return values.size(); }
    size_t cols() const { return values.empty() ? 0 : values.front().size(); }
};

/// Fixed combination weights from mean-forecast dispersion, estimated
/// with data up to row index `as_of` (1-based count of rows used).
struct EuclideanWeights {
    std::vector<double> weights;
    size_t as_of = 0;
};

/// a_{t,j} = (max(|forecast - actual|, epsilon))^{-2}.
AccuracyMatrix accuracy_matrix(const ForecastPanel& panel, double epsilon);

/// Rowwise closure of the accuracy panel: each row becomes the
/// combination vector w_t proportional to that period's accuracies.
CompositionMatrix weight_matrix(const AccuracyMatrix& a);

/// Weights proportional to (forecaster mean - grand mean)^{-2} over the
/// first `t1` rows; deviation magnitudes are floored at `epsilon`.
EuclideanWeights euclidean_stc_weights(const ForecastPanel& panel, size_t t1, double epsilon);

}  // namespace scomb
