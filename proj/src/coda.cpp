#include "scomb/coda.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace scomb {

namespace {

// Divide by the sum and wrap as a Composition. Callers guarantee strictly
// positive finite entries.
Composition normalize_positive(std::vector<double> v) {
    double sum = std::accumulate(v.begin(), v.end(), 0.0);
    for (double& x : v) x /= sum;
    return Composition(std::move(v));
}

}  // namespace

Composition::Composition(std::vector<double> parts) : parts_(std::move(parts)) {
    if (parts_.empty()) {
        fail(Errc::invalid_argument, "composition must have at least one part");
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < parts_.size(); ++i) {
        double p = parts_[i];
        if (!(p > 0.0) || !std::isfinite(p)) {
            fail(Errc::non_positive_entry,
                 "composition part " + std::to_string(i) + " is not strictly positive");
        }
        sum += p;
    }
    if (std::abs(sum - 1.0) > sum_tolerance) {
        fail(Errc::invalid_argument,
             "composition parts sum to " + std::to_string(sum) + ", expected 1");
    }
}

Composition Composition::uniform(std::size_t n) {
    if (n == 0) fail(Errc::invalid_argument, "uniform composition needs n >= 1");
    return Composition(std::vector<double>(n, 1.0 / static_cast<double>(n)));
}

CompositionMatrix::CompositionMatrix(std::vector<Composition> rows,
                                     std::vector<std::string> column_labels,
                                     std::vector<std::string> row_labels)
    : rows_(std::move(rows)),
      column_labels_(std::move(column_labels)),
      row_labels_(std::move(row_labels)) {
    if (rows_.empty()) {
        fail(Errc::insufficient_rows, "composition matrix needs at least one row");
    }
    const std::size_t j = rows_.front().size();
    for (const Composition& r : rows_) {
        if (r.size() != j) {
            fail(Errc::dimension_mismatch, "composition matrix rows differ in length");
        }
    }
    if (!column_labels_.empty() && column_labels_.size() != j) {
        fail(Errc::dimension_mismatch, "column label count does not match row length");
    }
    if (!row_labels_.empty() && row_labels_.size() != rows_.size()) {
        fail(Errc::dimension_mismatch, "row label count does not match row count");
    }
}

CompositionMatrix CompositionMatrix::subcolumns(std::span<const std::size_t> keep) const {
    std::vector<Composition> sub;
    sub.reserve(rows_.size());
    for (const Composition& r : rows_) {
        sub.push_back(subcomposition(r, keep));
    }
    std::vector<std::string> labels;
    if (!column_labels_.empty()) {
        labels.reserve(keep.size());
        for (std::size_t idx : keep) labels.push_back(column_labels_[idx]);
    }
    return CompositionMatrix(std::move(sub), std::move(labels), row_labels_);
}

Composition closure(std::span<const double> v) {
    if (v.size() < 2) {
        fail(Errc::invalid_argument, "closure needs at least two entries");
    }
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (!(v[i] > 0.0) || !std::isfinite(v[i])) {
            fail(Errc::non_positive_entry,
                 "closure entry " + std::to_string(i) + " is not strictly positive");
        }
    }
    return normalize_positive(std::vector<double>(v.begin(), v.end()));
}

ClrVector clr(const Composition& w) {
    const std::size_t n = w.size();
    std::vector<double> logs(n);
    for (std::size_t i = 0; i < n; ++i) logs[i] = std::log(w[i]);
    const double mean = std::accumulate(logs.begin(), logs.end(), 0.0) / static_cast<double>(n);
    for (double& x : logs) x -= mean;
    return ClrVector{std::move(logs)};
}

Composition clr_inv(const ClrVector& x) {
    if (x.coords.empty()) {
        fail(Errc::invalid_argument, "clr_inv needs a non-empty vector");
    }
    const double sum = std::accumulate(x.coords.begin(), x.coords.end(), 0.0);
    if (std::abs(sum) > 1e-8) {
        fail(Errc::not_zero_sum,
             "clr coordinates sum to " + std::to_string(sum) + ", expected 0");
    }
    // Shift by the max before exponentiating; the closure cancels the shift.
    const double shift = *std::max_element(x.coords.begin(), x.coords.end());
    std::vector<double> e(x.coords.size());
    for (std::size_t i = 0; i < e.size(); ++i) e[i] = std::exp(x.coords[i] - shift);
    return normalize_positive(std::move(e));
}

Composition perturb(const Composition& a, const Composition& b) {
    if (a.size() != b.size()) {
        fail(Errc::dimension_mismatch, "perturb operands differ in length");
    }
    std::vector<double> v(a.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = a[i] * b[i];
    return normalize_positive(std::move(v));
}

Composition perturb_inverse(const Composition& a, const Composition& b) {
    if (a.size() != b.size()) {
        fail(Errc::dimension_mismatch, "perturb_inverse operands differ in length");
    }
    std::vector<double> v(a.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = a[i] / b[i];
    return normalize_positive(std::move(v));
}

Composition power(const Composition& w, double alpha) {
    if (!std::isfinite(alpha)) {
        fail(Errc::invalid_argument, "power exponent must be finite");
    }
    std::vector<double> y(w.size());
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = alpha * std::log(w[i]);
    const double shift = *std::max_element(y.begin(), y.end());
    for (double& v : y) v = std::exp(v - shift);
    return normalize_positive(std::move(y));
}

Composition center(const CompositionMatrix& w) {
    const std::size_t t_count = w.rows();
    const std::size_t j_count = w.cols();
    // Columnwise geometric means, computed as means of logs.
    std::vector<double> log_mean(j_count, 0.0);
    for (std::size_t t = 0; t < t_count; ++t) {
        const Composition& row = w.row(t);
        for (std::size_t j = 0; j < j_count; ++j) log_mean[j] += std::log(row[j]);
    }
    for (double& v : log_mean) v /= static_cast<double>(t_count);
    const double shift = *std::max_element(log_mean.begin(), log_mean.end());
    for (double& v : log_mean) v = std::exp(v - shift);
    return normalize_positive(std::move(log_mean));
}

VariationMatrix variation_matrix(const CompositionMatrix& w) {
    const std::size_t t_count = w.rows();
    const std::size_t j_count = w.cols();
    if (t_count < 2) {
        fail(Errc::insufficient_rows, "variation matrix needs at least two rows");
    }
    VariationMatrix out;
    out.dim = j_count;
    out.entries.assign(j_count * j_count, 0.0);
    out.total = 0.0;
    std::vector<double> ratios(t_count);
    for (std::size_t i = 0; i < j_count; ++i) {
        for (std::size_t j = i + 1; j < j_count; ++j) {
            for (std::size_t t = 0; t < t_count; ++t) {
                ratios[t] = std::log(w.row(t)[i] / w.row(t)[j]);
            }
            const double mean =
                std::accumulate(ratios.begin(), ratios.end(), 0.0) / static_cast<double>(t_count);
            double ss = 0.0;
            for (double r : ratios) ss += (r - mean) * (r - mean);
            const double var = ss / static_cast<double>(t_count - 1);
            out.entries[i * j_count + j] = var;
            out.entries[j * j_count + i] = var;
            out.total += var;
        }
    }
    return out;
}

CompositionMatrix center_and_scale(const CompositionMatrix& w) {
    const Composition g = center(w);
    std::vector<Composition> centered;
    centered.reserve(w.rows());
    for (std::size_t t = 0; t < w.rows(); ++t) {
        centered.push_back(perturb_inverse(w.row(t), g));
    }
    CompositionMatrix wc(std::move(centered), w.column_labels(), w.row_labels());
    const VariationMatrix var = variation_matrix(wc);
    if (var.total <= 1e-20) {
        fail(Errc::zero_variation, "total variation is zero; all columns are proportional");
    }
    const double alpha = 1.0 / std::sqrt(var.total);
    std::vector<Composition> scaled;
    scaled.reserve(wc.rows());
    for (std::size_t t = 0; t < wc.rows(); ++t) {
        scaled.push_back(power(wc.row(t), alpha));
    }
    return CompositionMatrix(std::move(scaled), w.column_labels(), w.row_labels());
}

Composition subcomposition(const Composition& w, std::span<const std::size_t> keep) {
    if (keep.empty()) {
        fail(Errc::invalid_argument, "subcomposition needs at least one index");
    }
    std::vector<double> v;
    v.reserve(keep.size());
    for (std::size_t idx : keep) {
        if (idx >= w.size()) {
            fail(Errc::invalid_argument, "subcomposition index out of range");
        }
        v.push_back(w[idx]);
    }
    return normalize_positive(std::move(v));
}

const char* errc_name(Errc code) noexcept {
    switch (code) {
        case Errc::invalid_argument: return "invalid_argument";
        case Errc::dimension_mismatch: return "dimension_mismatch";
        case Errc::non_positive_entry: return "non_positive_entry";
        case Errc::not_zero_sum: return "not_zero_sum";
        case Errc::insufficient_rows: return "insufficient_rows";
        case Errc::zero_variation: return "zero_variation";
        case Errc::invalid_k: return "invalid_k";
        case Errc::zero_msfe: return "zero_msfe";
        case Errc::zero_mean: return "zero_mean";
        case Errc::io_error: return "io_error";
        case Errc::schema_error: return "schema_error";
        case Errc::parse_error: return "parse_error";
        case Errc::empty_panel: return "empty_panel";
        case Errc::missing_run: return "missing_run";
        case Errc::config_error: return "config_error";
    }
    return "unknown";
}

}  // namespace scomb
