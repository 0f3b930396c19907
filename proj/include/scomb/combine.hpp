#pragma once

#include <span>
#include <string>
#include <vector>

#include "scomb/coda.hpp"

namespace scomb {

enum class Method { ave, e_stc, s_stc, cas };

const char* method_name(Method m) noexcept;
Method method_from_name(const std::string& name);

/// One combined point forecast: `value` is the weighted sum of the
/// included forecasts with `weights_used`.
struct CombinationForecast {
    Method method = Method::ave;
    int time = 0;
    double value = 0.0;
    std::vector<double> weights_used;
    std::vector<size_t> included;
};

/// Weighted sum of forecasts; weights form a Composition so the
/// combination is unbiased when the individual forecasts are.
double combine_row(const Composition& weights, std::span<const double> forecasts);

/// Arithmetic mean: the neutral-point combination.
double average_forecast(std::span<const double> forecasts);

/// Gravity center of the weight history; held fixed for the next
/// one-step forecast and refreshed once its actual arrives.
Composition s_stc_weights(const CompositionMatrix& w_history);

}  // namespace scomb
