#include "scomb/select.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include "scomb/errors.hpp"

namespace scomb {

Selection cas_select(const Composition& g) {
    const size_t J = g.size();
    const double threshold = 1.0 / static_cast<double>(J);
    Selection sel;
    sel.j_total = J;
    for (size_t j = 0; j < J; ++j) {
        if (g[j] > threshold) sel.included.push_back(j);
    }
    // All weights at exactly 1/J: selection has nothing to drop.
    if (sel.included.empty()) {
        sel.included.resize(J);
        std::iota(sel.included.begin(), sel.included.end(), size_t{0});
    }
    sel.sub_weights = subcomposition(g, sel.included);
    return sel;
}

std::vector<std::vector<double>> pairwise_distance(const CompositionMatrix& w) {
    const VariationMatrix var = variation_matrix(w);
    std::vector<std::vector<double>> d(var.dim, std::vector<double>(var.dim, 0.0));
    for (size_t i = 0; i < var.dim; ++i) {
        for (size_t j = 0; j < var.dim; ++j) d[i][j] = std::sqrt(var(i, j));
    }
    return d;
}

namespace {

void check_distance_matrix(const std::vector<std::vector<double>>& d) {
    const size_t J = d.size();
    if (J < 2) fail(Errc::invalid_argument, "clustering needs at least two items");
    for (size_t i = 0; i < J; ++i) {
        if (d[i].size() != J) fail(Errc::dimension_mismatch, "distance matrix not square");
        if (d[i][i] != 0.0) fail(Errc::invalid_argument, "distance matrix diagonal not zero");
        for (size_t j = 0; j < J; ++j) {
            double v = d[i][j];
            if (!(v >= 0.0) || !std::isfinite(v)) {
                fail(Errc::invalid_argument, "distance entries must be finite and nonnegative");
            }
            if (std::abs(v - d[j][i]) > 1e-12) {
                fail(Errc::invalid_argument, "distance matrix not symmetric");
            }
        }
    }
}

struct UnionFind {
    std::vector<int> parent;

    explicit UnionFind(size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }

    int find(int x) {
        while (parent[x] != x) {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        return x;
    }

    void unite(int a, int b) { parent[find(a)] = find(b); }
};

}  // namespace

Dendrogram cluster_forecasts(const std::vector<std::vector<double>>& d, Linkage linkage,
                             std::vector<std::string> leaf_labels) {
    check_distance_matrix(d);
    const size_t J = d.size();
    if (!leaf_labels.empty() && leaf_labels.size() != J) {
        fail(Errc::dimension_mismatch, "leaf label count does not match distance matrix");
    }

    // Working inter-cluster dissimilarity: plain distance for complete
    // linkage, squared distance for ward (Lance-Williams update).
    std::vector<std::vector<double>> cd(J, std::vector<double>(J, 0.0));
    for (size_t i = 0; i < J; ++i) {
        for (size_t j = 0; j < J; ++j) {
            cd[i][j] = linkage == Linkage::ward ? d[i][j] * d[i][j] : d[i][j];
        }
    }

    std::vector<int> node(J);
    std::iota(node.begin(), node.end(), 0);
    std::vector<size_t> size(J, 1);
    std::vector<bool> active(J, true);

    Dendrogram out;
    out.leaf_labels = std::move(leaf_labels);
    out.merges.reserve(J - 1);

    for (size_t step = 0; step + 1 < J; ++step) {
        size_t best_i = J, best_j = J;
        double best = std::numeric_limits<double>::infinity();
        for (size_t i = 0; i < J; ++i) {
            if (!active[i]) continue;
            for (size_t j = i + 1; j < J; ++j) {
                if (!active[j]) continue;
                if (cd[i][j] < best) {
                    best = cd[i][j];
                    best_i = i;
                    best_j = j;
                }
            }
        }

        double height = linkage == Linkage::ward ? std::sqrt(best) : best;
        MergeStep m;
        m.a = std::min(node[best_i], node[best_j]);
        m.b = std::max(node[best_i], node[best_j]);
        m.height = height;
        m.size = size[best_i] + size[best_j];
        out.merges.push_back(m);

        const double na = static_cast<double>(size[best_i]);
        const double nb = static_cast<double>(size[best_j]);
        for (size_t l = 0; l < J; ++l) {
            if (!active[l] || l == best_i || l == best_j) continue;
            double updated;
            if (linkage == Linkage::ward) {
                const double nl = static_cast<double>(size[l]);
                updated = ((na + nl) * cd[best_i][l] + (nb + nl) * cd[best_j][l] -
                           nl * cd[best_i][best_j]) /
                          (na + nb + nl);
            } else {
                updated = std::max(cd[best_i][l], cd[best_j][l]);
            }
            cd[best_i][l] = updated;
            cd[l][best_i] = updated;
        }
        node[best_i] = static_cast<int>(J + step);
        size[best_i] += size[best_j];
        active[best_j] = false;
    }
    return out;
}

std::vector<int> cut_clusters(const Dendrogram& d, size_t k) {
    const size_t J = d.leaves();
    if (k < 1 || k > J) {
        fail(Errc::invalid_k, "k=" + std::to_string(k) + " outside 1.." + std::to_string(J));
    }
    // Leaves for every node id; merge step i creates node J+i.
    std::vector<std::vector<int>> node_leaves(J + d.merges.size());
    std::vector<bool> consumed(J + d.merges.size(), false);
    for (size_t i = 0; i < J; ++i) node_leaves[i] = {static_cast<int>(i)};
    for (size_t s = 0; s < J - k; ++s) {
        const MergeStep& m = d.merges[s];
        auto& dst = node_leaves[J + s];
        dst = node_leaves[m.a];
        dst.insert(dst.end(), node_leaves[m.b].begin(), node_leaves[m.b].end());
        consumed[m.a] = true;
        consumed[m.b] = true;
    }

    std::vector<std::vector<int>> clusters;
    for (size_t n = 0; n < J + (J - k); ++n) {
        if (consumed[n] || node_leaves[n].empty()) continue;
        auto leaves = node_leaves[n];
        std::sort(leaves.begin(), leaves.end());
        clusters.push_back(std::move(leaves));
    }
    std::sort(clusters.begin(), clusters.end(),
              [](const auto& a, const auto& b) { return a.front() < b.front(); });

    std::vector<int> assignment(J, -1);
    for (size_t c = 0; c < clusters.size(); ++c) {
        for (int leaf : clusters[c]) assignment[leaf] = static_cast<int>(c);
    }
    return assignment;
}

namespace {

std::vector<std::vector<size_t>> clusters_from_assignment(const std::vector<int>& assignment,
                                                          size_t k) {
    std::vector<std::vector<size_t>> clusters(k);
    for (size_t j = 0; j < assignment.size(); ++j) {
        clusters[assignment[j]].push_back(j);
    }
    return clusters;
}

}  // namespace

ClusterWeights cluster_cas(const CompositionMatrix& w, const Dendrogram& d, size_t k) {
    if (d.leaves() != w.cols()) {
        fail(Errc::dimension_mismatch, "dendrogram leaves do not match matrix columns");
    }
    ClusterWeights out;
    out.assignment = cut_clusters(d, k);
    auto clusters = clusters_from_assignment(out.assignment, k);

    std::vector<double> weights(w.cols(), 0.0);
    const double cluster_share = 1.0 / static_cast<double>(k);
    for (const auto& members : clusters) {
        const Composition within = center(w.subcolumns(members));
        for (size_t i = 0; i < members.size(); ++i) {
            weights[members[i]] = cluster_share * within[i];
        }
    }
    out.weights = Composition(std::move(weights));
    return out;
}

ClusterWeights cluster_cas_combined(const ForecastPanel& panel, const CompositionMatrix& w,
                                    const Dendrogram& d, size_t k, double epsilon) {
    panel.validate();
    if (d.leaves() != w.cols() || panel.cols() != w.cols()) {
        fail(Errc::dimension_mismatch, "panel, weights, and dendrogram disagree on J");
    }
    if (panel.rows() != w.rows()) {
        fail(Errc::dimension_mismatch, "panel rows do not match weight history rows");
    }
    if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
        fail(Errc::invalid_argument, "epsilon must be positive and finite");
    }

    ClusterWeights out;
    out.assignment = cut_clusters(d, k);
    auto clusters = clusters_from_assignment(out.assignment, k);

    std::vector<Composition> within;
    within.reserve(k);
    for (const auto& members : clusters) {
        within.push_back(center(w.subcolumns(members)));
    }

    // Cluster shares: weight the per-cluster combined forecast series the
    // same way individual forecasters are weighted, then take the center.
    std::vector<double> shares(k, 1.0);
    if (k >= 2) {
        std::vector<Composition> acc_rows;
        acc_rows.reserve(panel.rows());
        for (size_t t = 0; t < panel.rows(); ++t) {
            std::vector<double> acc(k);
            for (size_t c = 0; c < k; ++c) {
                double combined = 0.0;
                for (size_t i = 0; i < clusters[c].size(); ++i) {
                    combined += within[c][i] * panel.forecasts[t][clusters[c][i]];
                }
                double err = std::max(std::abs(combined - panel.actuals[t]), epsilon);
                acc[c] = 1.0 / (err * err);
            }
            acc_rows.push_back(closure(acc));
        }
        const Composition g = center(CompositionMatrix(std::move(acc_rows)));
        shares.assign(g.parts().begin(), g.parts().end());
    }

    std::vector<double> weights(w.cols(), 0.0);
    for (size_t c = 0; c < k; ++c) {
        for (size_t i = 0; i < clusters[c].size(); ++i) {
            weights[clusters[c][i]] = shares[c] * within[c][i];
        }
    }
    out.weights = Composition(std::move(weights));
    return out;
}

BiplotResult biplot(const CompositionMatrix& w, BiplotScaling scaling) {
    const CompositionMatrix standardized = center_and_scale(w);
    const size_t T = standardized.rows();
    const size_t J = standardized.cols();

    Eigen::MatrixXd Z(static_cast<Eigen::Index>(T), static_cast<Eigen::Index>(J));
    for (size_t t = 0; t < T; ++t) {
        const ClrVector z = clr(standardized.row(t));
        for (size_t j = 0; j < J; ++j) {
            Z(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(j)) = z.coords[j];
        }
    }

    Eigen::JacobiSVD<Eigen::MatrixXd> svd(Z, Eigen::ComputeThinU | Eigen::ComputeThinV);
    Eigen::MatrixXd U = svd.matrixU();
    Eigen::MatrixXd V = svd.matrixV();
    const Eigen::VectorXd& sv = svd.singularValues();

    BiplotResult out;
    out.singular_values = {sv.size() > 0 ? sv(0) : 0.0, sv.size() > 1 ? sv(1) : 0.0};

    // Sign convention: the dominant loading entry of each component is
    // positive, so repeated runs and different SVD backends agree.
    for (int c = 0; c < 2 && c < V.cols(); ++c) {
        Eigen::Index pivot = 0;
        V.col(c).cwiseAbs().maxCoeff(&pivot);
        if (V(pivot, c) < 0.0) {
            V.col(c) = -V.col(c);
            U.col(c) = -U.col(c);
        }
    }

    const double total = Z.squaredNorm();
    const double top2 = out.singular_values[0] * out.singular_values[0] +
                        out.singular_values[1] * out.singular_values[1];
    out.variance_explained = top2 / total;

    out.scores.resize(T, {0.0, 0.0});
    out.loadings.resize(J, {0.0, 0.0});
    for (int c = 0; c < 2 && c < V.cols(); ++c) {
        const double s = out.singular_values[c];
        const double score_scale = scaling == BiplotScaling::form ? s : 1.0;
        const double loading_scale = scaling == BiplotScaling::form ? 1.0 : s;
        for (size_t t = 0; t < T; ++t) {
            out.scores[t][c] = U(static_cast<Eigen::Index>(t), c) * score_scale;
        }
        for (size_t j = 0; j < J; ++j) {
            out.loadings[j][c] = V(static_cast<Eigen::Index>(j), c) * loading_scale;
        }
    }
    return out;
}

std::vector<std::vector<size_t>> redundancy_groups(const BiplotResult& b,
                                                   double angle_tolerance_degrees,
                                                   double min_length_fraction) {
    const size_t J = b.loadings.size();
    if (J == 0) return {};
    if (!(angle_tolerance_degrees >= 0.0) || !(min_length_fraction >= 0.0)) {
        fail(Errc::invalid_argument, "tolerances must be nonnegative");
    }

    std::vector<double> length(J);
    double longest = 0.0;
    for (size_t j = 0; j < J; ++j) {
        length[j] = std::hypot(b.loadings[j][0], b.loadings[j][1]);
        longest = std::max(longest, length[j]);
    }
    const double min_length = longest * min_length_fraction;

    UnionFind uf(J);
    for (size_t i = 0; i < J; ++i) {
        if (length[i] < min_length || length[i] == 0.0) continue;
        for (size_t j = i + 1; j < J; ++j) {
            if (length[j] < min_length || length[j] == 0.0) continue;
            double cosine = std::abs(b.loadings[i][0] * b.loadings[j][0] +
                                     b.loadings[i][1] * b.loadings[j][1]) /
                            (length[i] * length[j]);
            cosine = std::min(cosine, 1.0);
            const double angle = std::acos(cosine) * 180.0 / std::numbers::pi;
            if (angle <= angle_tolerance_degrees) uf.unite(static_cast<int>(i),
                                                           static_cast<int>(j));
        }
    }

    std::vector<std::vector<size_t>> groups;
    std::vector<int> group_of(J, -1);
    for (size_t j = 0; j < J; ++j) {
        int root = uf.find(static_cast<int>(j));
        if (group_of[root] < 0) {
            group_of[root] = static_cast<int>(groups.size());
            groups.emplace_back();
        }
        groups[group_of[root]].push_back(j);
    }
    return groups;
}

Selection cas_biplot_select(const CompositionMatrix& w, const Composition& g,
                            double angle_tolerance_degrees, double min_length_fraction) {
    if (w.cols() != g.size()) {
        fail(Errc::dimension_mismatch, "center length does not match matrix columns");
    }
    Selection sel = cas_select(g);
    if (sel.included.size() < 2) return sel;

    std::vector<std::vector<size_t>> groups;
    try {
        const BiplotResult b = biplot(w.subcolumns(sel.included));
        groups = redundancy_groups(b, angle_tolerance_degrees, min_length_fraction);
    } catch (const Error& e) {
        // Zero variation means the survivors are perfectly associated:
        // one redundancy group covering all of them.
        if (e.code() != Errc::zero_variation) throw;
        groups.emplace_back(sel.included.size());
        std::iota(groups.back().begin(), groups.back().end(), size_t{0});
    }

    std::vector<size_t> kept;
    for (const auto& group : groups) {
        size_t best = group.front();
        for (size_t local : group) {
            if (g[sel.included[local]] > g[sel.included[best]]) best = local;
        }
        kept.push_back(sel.included[best]);
    }
    std::sort(kept.begin(), kept.end());
    if (kept.size() == sel.included.size()) return sel;

    Selection pruned;
    pruned.j_total = g.size();
    pruned.included = std::move(kept);
    pruned.sub_weights = subcomposition(g, pruned.included);
    return pruned;
}

}  // namespace scomb
