#pragma once

#include <array>
#include <string>
#include <vector>

#include "scomb/coda.hpp"
#include "scomb/panel.hpp"

namespace scomb {

/// Forecaster subset kept after selection, with its reclosed weights.
/// Reclosure preserves the weight ratios among survivors.
struct Selection {
    std::vector<size_t> included;
    size_t j_total = 0;
    Composition sub_weights;
};

/// Keep forecasters whose center weight strictly exceeds the neutral
/// share 1/J, then reclose. Falls back to keeping everyone when no
/// weight clears the threshold.
Selection cas_select(const Composition& g);

/// d[i][j] = standard deviation of log(w_i/w_j) across rows.
std::vector<std::vector<double>> pairwise_distance(const CompositionMatrix& w);

enum class Linkage { ward, complete };

/// One agglomeration step. `a` and `b` are node ids: leaves are
/// 0..J-1, the cluster formed by step i is J+i. `size` counts leaves
/// in the new cluster.
struct MergeStep {
    int a = 0;
    int b = 0;
    double height = 0.0;
    size_t size = 0;
};

struct Dendrogram {
    std::vector<MergeStep> merges;
    std::vector<std::string> leaf_labels;

    size_t leaves() const { return merges.size() + 1; }
};

/// Agglomerative clustering over a symmetric distance matrix.
/// Complete linkage merges by maximum inter-cluster distance; ward
/// applies the Lance-Williams update to squared distances and reports
/// heights on the original scale.
Dendrogram cluster_forecasts(const std::vector<std::vector<double>>& d, Linkage linkage,
                             std::vector<std::string> leaf_labels = {});

/// Cluster assignment (ids 0..k-1, ordered by smallest member index)
/// after cutting the dendrogram to k clusters.
std::vector<int> cut_clusters(const Dendrogram& d, size_t k);

struct ClusterWeights {
    std::vector<int> assignment;
    Composition weights;
};

/// Cut at k clusters, give each cluster the share 1/k, and split that
/// share inside the cluster by the center of the reclosed columns.
ClusterWeights cluster_cas(const CompositionMatrix& w, const Dendrogram& d, size_t k);

/// Variant that weights whole clusters by forecast accuracy instead of
/// uniformly: member forecasts are combined per cluster with the
/// within-cluster center, the combined series are weighted like any
/// panel of forecasters, and each cluster's weight is split by the
/// same within-cluster center.
ClusterWeights cluster_cas_combined(const ForecastPanel& panel, const CompositionMatrix& w,
                                    const Dendrogram& d, size_t k, double epsilon);

/// Rank-2 factorization of the double-centered log-ratio matrix.
/// scores/loadings follow the chosen scaling; variance_explained is
/// the share of squared Frobenius norm carried by the first two
/// singular values.
struct BiplotResult {
    std::vector<std::array<double, 2>> scores;
    std::vector<std::array<double, 2>> loadings;
    std::array<double, 2> singular_values{0.0, 0.0};
    double variance_explained = 0.0;
};

enum class BiplotScaling {
    form,       // scores U*S, loadings V
    covariance  // scores U, loadings V*S
};

BiplotResult biplot(const CompositionMatrix& w, BiplotScaling scaling = BiplotScaling::form);

/// Group forecasters whose loading vectors lie on a common line
/// (either direction) within `angle_tolerance_degrees`. Loadings
/// shorter than `min_length_fraction` of the longest never join a
/// group. Every index appears in exactly one group; groups and members
/// are ordered ascending.
std::vector<std::vector<size_t>> redundancy_groups(const BiplotResult& b,
                                                   double angle_tolerance_degrees,
                                                   double min_length_fraction = 0.1);

/// Threshold selection followed by biplot-based pruning: survivors that
/// share a redundancy group keep only the member with the largest
/// center weight, then the kept set is reclosed.
Selection cas_biplot_select(const CompositionMatrix& w, const Composition& g,
                            double angle_tolerance_degrees, double min_length_fraction = 0.1);

}  // namespace scomb
