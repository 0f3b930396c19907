#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "scomb/errors.hpp"

namespace scomb {

/// A point of the simplex: strictly positive weights summing to one.
/// Construction validates positivity and |sum - 1| <= sum_tolerance.
class Composition {
public:
    static constexpr double sum_tolerance = 1e-12;

    /// Empty placeholder; only valid as an assignment target.
    Composition() = default;

    explicit Composition(std::vector<double> parts);

    static Composition uniform(std::size_t n);

    std::size_t size() const noexcept { return parts_.size(); }
    double operator[](std::size_t i) const noexcept { return parts_[i]; }
    const std::vector<double>& parts() const noexcept { return parts_; }

    bool operator==(const Composition& other) const noexcept {
        return parts_ == other.parts_;
    }

private:
    std::vector<double> parts_;
};

/// Image of a composition under the centered log-ratio map: real
/// coordinates summing to zero (the hyperplane orthogonal to the ones
/// vector).
struct ClrVector {
    std::vector<double> coords;

    std::size_t size() const noexcept { return coords.size(); }
};

/// T rows of compositions of common length J, with optional time and
/// forecaster labels.
class CompositionMatrix {
public:
    explicit CompositionMatrix(std::vector<Composition> rows,
                               std::vector<std::string> column_labels = {},
                               std::vector<std::string> row_labels = {});

    std::size_t rows() const noexcept { return rows_.size(); }
    std::size_t cols() const noexcept { return rows_.front().size(); }
    const Composition& row(std::size_t t) const { return rows_.at(t); }
    const std::vector<Composition>& row_data() const noexcept { return rows_; }
    const std::vector<std::string>& column_labels() const noexcept { return column_labels_; }
    const std::vector<std::string>& row_labels() const noexcept { return row_labels_; }

    /// Keep only the given columns, reclosing every row (subcompositions).
    CompositionMatrix subcolumns(std::span<const std::size_t> keep) const;

private:
    std::vector<Composition> rows_;
    std::vector<std::string> column_labels_;
    std::vector<std::string> row_labels_;
};

/// Pairwise variances of log-ratios over time. Symmetric, zero diagonal;
/// total is the sum over the upper triangle.
struct VariationMatrix {
    std::size_t dim = 0;
    std::vector<double> entries;  // dim*dim, row-major
    double total = 0.0;

    double operator()(std::size_t i, std::size_t j) const {
        return entries[i * dim + j];
    }
};

/// Normalize a strictly positive vector by its sum. Scale invariant.
/// Rejects non-positive or non-finite entries and vectors shorter than 2.
Composition closure(std::span<const double> v);

/// Centered log-ratio transform: ln of each part over the geometric mean.
ClrVector clr(const Composition& w);

/// Inverse clr: closure of the componentwise exponential. The input must
/// sum to zero (|sum| <= 1e-8).
Composition clr_inv(const ClrVector& x);

/// Simplex addition: closure of the componentwise product.
Composition perturb(const Composition& a, const Composition& b);

/// Simplex subtraction: closure of the componentwise ratio.
Composition perturb_inverse(const Composition& a, const Composition& b);

/// Simplex scalar multiplication: closure of componentwise powers.
/// Evaluated in log space so extreme exponents cannot overflow.
Composition power(const Composition& w, double alpha);

/// Center of a composition matrix: closure of columnwise geometric means,
/// equal to clr_inv of the columnwise mean of clr rows.
Composition center(const CompositionMatrix& w);

/// Sample variance (divide by T-1) of every pairwise log-ratio.
/// Requires at least two rows.
VariationMatrix variation_matrix(const CompositionMatrix& w);

/// Translate by the inverse of the center, then scale every row by
/// 1/sqrt(total variation). The result is centered at the uniform
/// composition and has unit total variation. Degenerate (zero-variation)
/// input is an error.
CompositionMatrix center_and_scale(const CompositionMatrix& w);

/// Reclose a composition onto a subset of its parts. Ratios among the
/// retained parts are preserved.
Composition subcomposition(const Composition& w, std::span<const std::size_t> keep);

}  // namespace scomb
