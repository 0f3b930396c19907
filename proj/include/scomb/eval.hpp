#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "scomb/coda.hpp"
#include "scomb/combine.hpp"
#include "scomb/panel.hpp"
#include "scomb/select.hpp"

namespace scomb {

/// Out-of-sample plan: weights are first estimated on rows up to
/// `train_end` (1-based count), each listed eval period is forecast one
/// step ahead, and the weights are refreshed as soon as that period's
/// actual becomes part of the history.
struct RollingScheme {
    size_t train_end = 0;
    std::vector<int> eval_periods;
};

enum class CasMode { threshold, cluster, biplot };
enum class ClusterAllocation { uniform, combined };

struct CasOptions {
    CasMode mode = CasMode::threshold;
    Linkage linkage = Linkage::ward;
    size_t k = 2;
    ClusterAllocation allocation = ClusterAllocation::uniform;
    double angle_tolerance_degrees = 5.0;
    double min_length_fraction = 0.1;
};

struct MethodSeries {
    Method method = Method::ave;
    std::vector<int> times;
    std::vector<double> forecasts;
    std::vector<double> actuals;
};

/// Everything recomputed at one eval step, for inspection and export.
/// `cas_weights_full` spreads the survivors' weights over all J slots
/// (zeros for dropped forecasters).
struct StepDetail {
    int time = 0;
    std::vector<double> s_stc_weights;
    std::vector<double> e_stc_weights;
    std::vector<size_t> cas_included;
    std::vector<double> cas_weights_full;
    std::vector<int> cluster_assignment;
};

struct RollingResult {
    std::vector<MethodSeries> series;
    std::vector<StepDetail> details;
};

/// Roll through the eval periods: for each target time the weights use
/// strictly earlier rows only, so nothing after the target can affect
/// its forecast.
RollingResult rolling_evaluate(const ForecastPanel& panel, const std::vector<Method>& methods,
                               const RollingScheme& scheme, double epsilon,
                               const CasOptions& cas = {});

/// Point-forecast accuracy. Percentage metrics are absent when any
/// actual is zero; the rest are always computed.
struct Metrics {
    size_t n = 0;
    double me = 0.0;
    double rmse = 0.0;
    std::optional<double> mape;
    std::optional<double> mdape;
};

Metrics accuracy_metrics(std::span<const double> forecasts, std::span<const double> actuals);

/// Squared-error decomposition into bias, variance, and covariance
/// shares. Population (divide-by-H) moments make the three shares sum
/// to one exactly.
struct MsfeDecomposition {
    double msfe = 0.0;
    double bias_prop = 0.0;
    double var_prop = 0.0;
    double cov_prop = 0.0;
};

MsfeDecomposition msfe_decomposition(std::span<const double> forecasts,
                                     std::span<const double> actuals);

/// Four-way diagnosis: 1 = low bias low variance, 2 = high variance,
/// 3 = high bias high variance, 4 = high bias low variance.
int classify_case(const MsfeDecomposition& d, double bias_cut = 0.3, double var_cut = 0.3);

/// Sample standard deviation over |mean| of one forecast row.
double coefficient_of_variation(std::span<const double> row);

/// One head-to-head outcome: the winning method for a
/// (variable, sample, season, metric) cell, tagged with whether the
/// panel had more forecasters than periods.
struct BeatCell {
    std::string variable;
    std::string sample;
    int season = 0;
    std::string metric;
    Method winner = Method::ave;
    bool j_greater_equal_t = false;
};

/// Method with the best value: smallest |value| for ME, smallest value
/// otherwise. Exact ties go to the fixed-weight method (AVE, then
/// E_STC) before the varying-weight ones.
Method beat_winner(const std::string& metric,
                   const std::vector<std::pair<Method, double>>& values);

struct BeatCounts {
    std::map<Method, size_t> counts;

    size_t total() const;
    double percent(Method m) const;
    /// Varying-weight combinations pooled: S_STC plus CAS.
    double percent_simplex() const;
};

struct BeatTable {
    BeatCounts overall;
    BeatCounts j_less;     // panels with J < T
    BeatCounts j_greater;  // panels with J >= T
};

BeatTable beat_table(const std::vector<BeatCell>& cells);

}  // namespace scomb
