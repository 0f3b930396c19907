#include "scomb/combine.hpp"

#include "scomb/errors.hpp"

namespace scomb {

const char* method_name(Method m) noexcept {
    switch (m) {
        case Method::ave: return "AVE";
        case Method::e_stc: return "E_STC";
        case Method::s_stc: return "S_STC";
        case Method::cas: return "CAS";
    }
    return "?";
}

Method method_from_name(const std::string& name) {
    if (name == "AVE") return Method::ave;
    if (name == "E_STC") return Method::e_stc;
    if (name == "S_STC") return Method::s_stc;
    if (name == "CAS") return Method::cas;
    fail(Errc::invalid_argument, "unknown method '" + name + "'");
}

double combine_row(const Composition& weights, std::span<const double> forecasts) {
    if (weights.size() != forecasts.size()) {
        fail(Errc::dimension_mismatch, "weights length " + std::to_string(weights.size()) +
                                           " vs forecasts length " +
                                           std::to_string(forecasts.size()));
    }
    double sum = 0.0;
    for (size_t j = 0; j < forecasts.size(); ++j) sum += weights[j] * forecasts[j];
    return sum;
}

double average_forecast(std::span<const double> forecasts) {
    if (forecasts.empty()) fail(Errc::invalid_argument, "no forecasts to average");
    double sum = 0.0;
    for (double f : forecasts) sum += f;
    return sum / static_cast<double>(forecasts.size());
}

Composition s_stc_weights(const CompositionMatrix& w_history) { return center(w_history); }

}  // namespace scomb
