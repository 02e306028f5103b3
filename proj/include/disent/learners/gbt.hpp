#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "disent/errors.hpp"
#include "disent/learners/logistic.hpp"
#include "disent/matrix.hpp"

namespace disent {

struct GbtConfig {
    int n_trees = 100;      // boosting iterations per class
    int max_depth = 3;
    double shrinkage = 0.1;
};

namespace detail {

struct GbtNode {
    int feature = -1;       // -1 marks a leaf
    double threshold = 0.0; // x < threshold goes left
    int left = -1;
    int right = -1;
    double value = 0.0;     // leaf value, shrinkage already applied
};

struct GbtTree {
    std::vector<GbtNode> nodes;

    double eval(const double* x) const {
        int u = 0;
        while (nodes[u].feature >= 0) {
            u = x[nodes[u].feature] < nodes[u].threshold ? nodes[u].left : nodes[u].right;
        }
        return nodes[u].value;
    }
};

struct BestSplit {
    double gain = 0.0;
    int feature = -1;
    double threshold = 0.0;
};

} // namespace detail

// One-vs-rest gradient boosted regression trees on the logistic loss with
// exact greedy splits over presorted features. Feature importance is the
// squared-error split gain summed over every tree of every class, normalized
// to sum 1. Ties in gain keep the first candidate (lowest feature index,
// lowest threshold), so fits are deterministic given identical data order.
class GbtModel {
  public:
    GbtModel() = default;

    int predict(const double* x, int d) const {
        if (d != n_features_) throw argument_error("GbtModel: feature width mismatch");
        int best = 0;
        double best_s = -HUGE_VAL;
        for (std::size_t c = 0; c < trees_.size(); ++c) {
            double s = prior_[c];
            for (const auto& t : trees_[c]) s += t.eval(x);
            if (s > best_s) {
                best_s = s;
                best = static_cast<int>(c);
            }
        }
        return classes_[best];
    }

    double accuracy(const Matrix& x, const std::vector<int>& y) const {
        if (x.rows() != static_cast<int>(y.size()) || x.rows() == 0) {
            throw argument_error("GbtModel::accuracy: size mismatch");
        }
        double hits = 0.0;
        for (int i = 0; i < x.rows(); ++i) {
            if (predict(x.row(i), x.cols()) == y[i]) hits += 1.0;
        }
        return hits / x.rows();
    }

    // Sums to 1 when any split happened; all-zero otherwise.
    const std::vector<double>& feature_importance() const { return importance_; }

    friend GbtModel fit_gbt(const Matrix&, const std::vector<int>&, const GbtConfig&);

  private:
    int n_features_ = 0;
    std::vector<int> classes_;
    std::vector<double> prior_;
    std::vector<std::vector<detail::GbtTree>> trees_; // per class
    std::vector<double> importance_;
};

inline GbtModel fit_gbt(const Matrix& x, const std::vector<int>& y, const GbtConfig& cfg = {}) {
    const int n = x.rows(), d = x.cols();
    if (n == 0 || n != static_cast<int>(y.size())) {
        throw argument_error("fit_gbt: rows of x must match labels");
    }
    if (cfg.n_trees < 1 || cfg.max_depth < 1 || !(cfg.shrinkage > 0.0)) {
        throw argument_error("fit_gbt: invalid config");
    }
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < d; ++j)
            if (!std::isfinite(x(i, j))) throw data_error("fit_gbt: non-finite feature");

    const std::vector<int> cls = detail::sorted_classes(y);
    const std::vector<int> yy = detail::remap_labels(y, cls);
    const int k = static_cast<int>(cls.size());

    // Presort each feature once; ties keep ascending row order.
    std::vector<std::vector<int>> sorted(d, std::vector<int>(n));
    for (int f = 0; f < d; ++f) {
        auto& idx = sorted[f];
        std::iota(idx.begin(), idx.end(), 0);
        std::stable_sort(idx.begin(), idx.end(),
                         [&](int a, int b) { return x(a, f) < x(b, f); });
    }

    GbtModel model;
    model.n_features_ = d;
    model.classes_ = cls;
    model.prior_.resize(k);
    model.trees_.resize(k);
    model.importance_.assign(d, 0.0);

    std::vector<double> score(n), resid(n), hess(n);
    std::vector<int> node_of(n), slot_of(1), level_nodes;

    struct Scan {
        double sum_l = 0.0;
        int cnt_l = 0;
        double last = 0.0;
        bool seen = false;
    };

    for (int c = 0; c < k; ++c) {
        double pos = 0.0;
        for (int i = 0; i < n; ++i) pos += yy[i] == c ? 1.0 : 0.0;
        double p0 = std::clamp(pos / n, 1e-12, 1.0 - 1e-12);
        model.prior_[c] = std::log(p0 / (1.0 - p0));
        std::fill(score.begin(), score.end(), model.prior_[c]);

        for (int it = 0; it < cfg.n_trees; ++it) {
            for (int i = 0; i < n; ++i) {
                double p = 1.0 / (1.0 + std::exp(-score[i]));
                resid[i] = (yy[i] == c ? 1.0 : 0.0) - p;
                hess[i] = std::max(p * (1.0 - p), 1e-12);
            }

            detail::GbtTree tree;
            tree.nodes.push_back({});
            std::fill(node_of.begin(), node_of.end(), 0);
            level_nodes.assign(1, 0);

            for (int depth = 0; depth < cfg.max_depth && !level_nodes.empty(); ++depth) {
                const int n_level = static_cast<int>(level_nodes.size());
                slot_of.assign(tree.nodes.size(), -1);
                for (int s = 0; s < n_level; ++s) slot_of[level_nodes[s]] = s;

                std::vector<double> tot_sum(n_level, 0.0);
                std::vector<int> tot_cnt(n_level, 0);
                for (int i = 0; i < n; ++i) {
                    int s = slot_of[node_of[i]];
                    if (s >= 0) {
                        tot_sum[s] += resid[i];
                        ++tot_cnt[s];
                    }
                }

                std::vector<detail::BestSplit> best(n_level);
                std::vector<Scan> scan(n_level);
                for (int f = 0; f < d; ++f) {
                    std::fill(scan.begin(), scan.end(), Scan{});
                    for (int idx : sorted[f]) {
                        int s = slot_of[node_of[idx]];
                        if (s < 0) continue;
                        double v = x(idx, f);
                        Scan& sc = scan[s];
                        if (sc.seen && v > sc.last && sc.cnt_l < tot_cnt[s]) {
                            double sl = sc.sum_l, nl = sc.cnt_l;
                            double sr = tot_sum[s] - sl;
                            double nr = tot_cnt[s] - nl;
                            double gain = sl * sl / nl + sr * sr / nr -
                                          tot_sum[s] * tot_sum[s] / tot_cnt[s];
                            if (gain > best[s].gain) {
                                best[s] = {gain, f, 0.5 * (sc.last + v)};
                            }
                        }
                        sc.sum_l += resid[idx];
                        ++sc.cnt_l;
                        sc.last = v;
                        sc.seen = true;
                    }
                }

                std::vector<int> next_level;
                for (int s = 0; s < n_level; ++s) {
                    if (best[s].feature < 0 || !(best[s].gain > 1e-12) || tot_cnt[s] < 2) continue;
                    int u = level_nodes[s];
                    tree.nodes[u].feature = best[s].feature;
                    tree.nodes[u].threshold = best[s].threshold;
                    tree.nodes[u].left = static_cast<int>(tree.nodes.size());
                    tree.nodes[u].right = static_cast<int>(tree.nodes.size()) + 1;
                    tree.nodes.push_back({});
                    tree.nodes.push_back({});
                    next_level.push_back(tree.nodes[u].left);
                    next_level.push_back(tree.nodes[u].right);
                    model.importance_[best[s].feature] += best[s].gain;
                }
                if (!next_level.empty()) {
                    for (int i = 0; i < n; ++i) {
                        int u = node_of[i];
                        if (tree.nodes[u].feature >= 0 && slot_of[u] >= 0) {
                            node_of[i] = x(i, tree.nodes[u].feature) < tree.nodes[u].threshold
                                             ? tree.nodes[u].left
                                             : tree.nodes[u].right;
                        }
                    }
                }
                level_nodes = std::move(next_level);
            }

            // Newton leaf values with shrinkage folded in.
            std::vector<double> leaf_r(tree.nodes.size(), 0.0), leaf_h(tree.nodes.size(), 0.0);
            for (int i = 0; i < n; ++i) {
                leaf_r[node_of[i]] += resid[i];
                leaf_h[node_of[i]] += hess[i];
            }
            for (std::size_t u = 0; u < tree.nodes.size(); ++u) {
                if (tree.nodes[u].feature < 0 && leaf_h[u] > 0.0) {
                    tree.nodes[u].value = cfg.shrinkage * leaf_r[u] / leaf_h[u];
                }
            }
            for (int i = 0; i < n; ++i) score[i] += tree.nodes[node_of[i]].value;
            model.trees_[c].push_back(std::move(tree));
        }
    }

    double total = std::accumulate(model.importance_.begin(), model.importance_.end(), 0.0);
    if (total > 0.0) {
        for (double& v : model.importance_) v /= total;
    }
    return model;
}

} // namespace disent
