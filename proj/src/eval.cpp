#include "scomb/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "scomb/errors.hpp"
#include "scomb/weights.hpp"

namespace scomb {

namespace {

size_t row_index_of_time(const ForecastPanel& panel, int time) {
    for (size_t i = 0; i < panel.times.size(); ++i) {
        if (panel.times[i] == time) return i;
    }
    fail(Errc::invalid_argument,
         "eval period " + std::to_string(time) + " not present in panel");
}

std::vector<double> spread_selection(const Selection& sel) {
    std::vector<double> full(sel.j_total, 0.0);
    for (size_t i = 0; i < sel.included.size(); ++i) {
        full[sel.included[i]] = sel.sub_weights[i];
    }
    return full;
}

}  // namespace

RollingResult rolling_evaluate(const ForecastPanel& panel, const std::vector<Method>& methods,
                               const RollingScheme& scheme, double epsilon,
                               const CasOptions& cas) {
    panel.validate();
    if (methods.empty()) fail(Errc::invalid_argument, "no methods requested");
    if (scheme.train_end < 1 || scheme.train_end >= panel.rows()) {
        fail(Errc::invalid_argument, "train_end must leave at least one eval row");
    }
    if (scheme.eval_periods.empty()) {
        fail(Errc::invalid_argument, "no eval periods requested");
    }

    const bool wants_cas =
        std::find(methods.begin(), methods.end(), Method::cas) != methods.end();
    const bool wants_s_stc =
        std::find(methods.begin(), methods.end(), Method::s_stc) != methods.end();
    const bool needs_dispersion = wants_cas && cas.mode != CasMode::threshold;
    if (needs_dispersion && scheme.train_end < 2) {
        fail(Errc::insufficient_rows,
             "cluster and biplot selection need at least two history rows");
    }
    if (wants_cas && cas.mode == CasMode::cluster &&
        (cas.k < 1 || cas.k > panel.cols())) {
        fail(Errc::invalid_k, "k=" + std::to_string(cas.k) + " outside 1.." +
                                  std::to_string(panel.cols()));
    }

    std::vector<size_t> rows;
    rows.reserve(scheme.eval_periods.size());
    int prev = std::numeric_limits<int>::min();
    for (int time : scheme.eval_periods) {
        if (time <= prev) fail(Errc::invalid_argument, "eval periods must strictly increase");
        prev = time;
        size_t r = row_index_of_time(panel, time);
        if (r < scheme.train_end) {
            fail(Errc::invalid_argument,
                 "eval period " + std::to_string(time) + " not after the training window");
        }
        rows.push_back(r);
    }

    RollingResult out;
    out.series.reserve(methods.size());
    for (Method m : methods) {
        MethodSeries s;
        s.method = m;
        out.series.push_back(std::move(s));
    }

    for (size_t r : rows) {
        const ForecastPanel history = panel.head(r);
        const std::vector<double>& target = panel.forecasts[r];
        StepDetail detail;
        detail.time = panel.times[r];

        Composition g;
        std::optional<CompositionMatrix> w;
        if (wants_s_stc || wants_cas) {
            w = weight_matrix(accuracy_matrix(history, epsilon));
            g = center(*w);
            detail.s_stc_weights = g.parts();
        }

        for (size_t mi = 0; mi < methods.size(); ++mi) {
            double value = 0.0;
            switch (methods[mi]) {
                case Method::ave:
                    value = average_forecast(target);
                    break;
                case Method::e_stc: {
                    EuclideanWeights ew = euclidean_stc_weights(panel, r, epsilon);
                    detail.e_stc_weights = ew.weights;
                    value = combine_row(Composition(std::move(ew.weights)), target);
                    break;
                }
                case Method::s_stc:
                    value = combine_row(g, target);
                    break;
                case Method::cas: {
                    if (!w) fail(Errc::invalid_argument, "cas requires weight history");
                    if (cas.mode == CasMode::cluster) {
                        const Dendrogram dend = cluster_forecasts(
                            pairwise_distance(*w), cas.linkage, panel.forecaster_ids);
                        const ClusterWeights cw =
                            cas.allocation == ClusterAllocation::uniform
                                ? cluster_cas(*w, dend, cas.k)
                                : cluster_cas_combined(history, *w, dend, cas.k, epsilon);
                        value = combine_row(cw.weights, target);
                        detail.cluster_assignment = cw.assignment;
                        detail.cas_weights_full = cw.weights.parts();
                        std::vector<size_t> all(panel.cols());
                        std::iota(all.begin(), all.end(), size_t{0});
                        detail.cas_included = std::move(all);
                    } else {
                        const Selection sel =
                            cas.mode == CasMode::threshold
                                ? cas_select(g)
                                : cas_biplot_select(*w, g, cas.angle_tolerance_degrees,
                                                    cas.min_length_fraction);
                        std::vector<double> picked;
                        picked.reserve(sel.included.size());
                        for (size_t j : sel.included) picked.push_back(target[j]);
                        value = combine_row(sel.sub_weights, picked);
                        detail.cas_included = sel.included;
                        detail.cas_weights_full = spread_selection(sel);
                    }
                    break;
                }
            }
            out.series[mi].times.push_back(panel.times[r]);
            out.series[mi].forecasts.push_back(value);
            out.series[mi].actuals.push_back(panel.actuals[r]);
        }
        out.details.push_back(std::move(detail));
    }
    return out;
}

Metrics accuracy_metrics(std::span<const double> forecasts, std::span<const double> actuals) {
    if (forecasts.size() != actuals.size()) {
        fail(Errc::dimension_mismatch, "forecast and actual lengths differ");
    }
    if (forecasts.empty()) fail(Errc::invalid_argument, "no forecasts to score");

    Metrics m;
    m.n = forecasts.size();
    double sum_err = 0.0;
    double sum_sq = 0.0;
    bool zero_actual = false;
    std::vector<double> ape;
    ape.reserve(m.n);
    for (size_t i = 0; i < m.n; ++i) {
        const double err = forecasts[i] - actuals[i];
        sum_err += err;
        sum_sq += err * err;
        if (actuals[i] == 0.0) {
            zero_actual = true;
        } else {
            ape.push_back(100.0 * std::abs(err) / std::abs(actuals[i]));
        }
    }
    m.me = sum_err / static_cast<double>(m.n);
    m.rmse = std::sqrt(sum_sq / static_cast<double>(m.n));
    if (!zero_actual) {
        double total = 0.0;
        for (double a : ape) total += a;
        m.mape = total / static_cast<double>(ape.size());
        std::sort(ape.begin(), ape.end());
        const size_t h = ape.size() / 2;
        m.mdape = ape.size() % 2 == 1 ? ape[h] : (ape[h - 1] + ape[h]) / 2.0;
    }
    return m;
}

MsfeDecomposition msfe_decomposition(std::span<const double> forecasts,
                                     std::span<const double> actuals) {
    if (forecasts.size() != actuals.size()) {
        fail(Errc::dimension_mismatch, "forecast and actual lengths differ");
    }
    const size_t H = forecasts.size();
    if (H < 2) fail(Errc::insufficient_rows, "decomposition needs at least two periods");

    const double n = static_cast<double>(H);
    double mu_f = 0.0, mu_y = 0.0, msfe = 0.0;
    for (size_t i = 0; i < H; ++i) {
        mu_f += forecasts[i];
        mu_y += actuals[i];
        const double err = forecasts[i] - actuals[i];
        msfe += err * err;
    }
    mu_f /= n;
    mu_y /= n;
    msfe /= n;
    if (msfe == 0.0) fail(Errc::zero_msfe, "perfect forecasts: proportions undefined");

    double ss_f = 0.0, ss_y = 0.0, cross = 0.0;
    for (size_t i = 0; i < H; ++i) {
        const double df = forecasts[i] - mu_f;
        const double dy = actuals[i] - mu_y;
        ss_f += df * df;
        ss_y += dy * dy;
        cross += df * dy;
    }
    const double sd_f = std::sqrt(ss_f / n);
    const double sd_y = std::sqrt(ss_y / n);
    const double cov = cross / n;

    MsfeDecomposition d;
    d.msfe = msfe;
    const double bias_term = (mu_f - mu_y) * (mu_f - mu_y);
    const double var_term = (sd_f - sd_y) * (sd_f - sd_y);
    double cov_term = 0.0;
    if (sd_f > 0.0 && sd_y > 0.0) {
        const double corr = cov / (sd_f * sd_y);
        cov_term = 2.0 * sd_f * sd_y * (1.0 - corr);
    }
    d.bias_prop = bias_term / msfe;
    d.var_prop = var_term / msfe;
    d.cov_prop = cov_term / msfe;
    return d;
}

int classify_case(const MsfeDecomposition& d, double bias_cut, double var_cut) {
    const bool high_bias = d.bias_prop >= bias_cut;
    const bool high_var = d.var_prop >= var_cut;
    if (!high_bias && !high_var) return 1;
    if (!high_bias) return 2;
    if (high_var) return 3;
    return 4;
}

double coefficient_of_variation(std::span<const double> row) {
    if (row.size() < 2) fail(Errc::invalid_argument, "cv needs at least two forecasts");
    double mean = 0.0;
    for (double v : row) mean += v;
    mean /= static_cast<double>(row.size());
    if (mean == 0.0) fail(Errc::zero_mean, "cv undefined for zero-mean row");
    double ss = 0.0;
    for (double v : row) ss += (v - mean) * (v - mean);
    const double sd = std::sqrt(ss / static_cast<double>(row.size() - 1));
    return sd / std::abs(mean);
}

Method beat_winner(const std::string& metric,
                   const std::vector<std::pair<Method, double>>& values) {
    if (values.empty()) fail(Errc::invalid_argument, "no method values to compare");
    // Tie preference: fixed-weight methods first.
    auto rank = [](Method m) {
        switch (m) {
            case Method::ave: return 0;
            case Method::e_stc: return 1;
            case Method::s_stc: return 2;
            case Method::cas: return 3;
        }
        return 4;
    };
    const bool magnitude = metric == "ME";
    Method best = values.front().first;
    double best_value = magnitude ? std::abs(values.front().second) : values.front().second;
    for (size_t i = 1; i < values.size(); ++i) {
        double v = magnitude ? std::abs(values[i].second) : values[i].second;
        if (v < best_value || (v == best_value && rank(values[i].first) < rank(best))) {
            best = values[i].first;
            best_value = v;
        }
    }
    return best;
}

size_t BeatCounts::total() const {
    size_t t = 0;
    for (const auto& [m, c] : counts) t += c;
    return t;
}

double BeatCounts::percent(Method m) const {
    const size_t t = total();
    if (t == 0) return 0.0;
    auto it = counts.find(m);
    const size_t c = it == counts.end() ? 0 : it->second;
    return 100.0 * static_cast<double>(c) / static_cast<double>(t);
}

double BeatCounts::percent_simplex() const {
    const size_t t = total();
    if (t == 0) return 0.0;
    size_t c = 0;
    for (Method m : {Method::s_stc, Method::cas}) {
        auto it = counts.find(m);
        if (it != counts.end()) c += it->second;
    }
    return 100.0 * static_cast<double>(c) / static_cast<double>(t);
}

BeatTable beat_table(const std::vector<BeatCell>& cells) {
    BeatTable t;
    for (const BeatCell& cell : cells) {
        ++t.overall.counts[cell.winner];
        if (cell.j_greater_equal_t) {
            ++t.j_greater.counts[cell.winner];
        } else {
            ++t.j_less.counts[cell.winner];
        }
    }
    return t;
}

}  // namespace scomb
