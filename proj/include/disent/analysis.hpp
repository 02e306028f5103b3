#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "disent/errors.hpp"
#include "disent/estimation.hpp"
#include "disent/evaluate.hpp"
#include "disent/factor_model.hpp"
#include "disent/learners.hpp"
#include "disent/matrix.hpp"
#include "disent/metrics.hpp"
#include "disent/rng.hpp"

namespace disent {

// ---- score tables ----------------------------------------------------------

struct ScoreRow {
    std::string encoder_id;
    std::string dataset_id;
    std::string method_label;
    std::string hyperparam_label;
    std::uint64_t seed = 0;
    std::string metric_name;
    int n_samples = 0;
    double value = 0.0;
};

// Flat per-model score grid. One row per (dataset, encoder, metric, seed,
// budget); method/hyperparameter labels describe the encoder, they are not
// part of the uniqueness key.
class ScoreTable {
  public:
    void add(ScoreRow row) {
        if (!std::isfinite(row.value)) {
            throw data_error("ScoreTable: non-finite value for metric '" + row.metric_name +
                             "' on encoder '" + row.encoder_id + "'");
        }
        if (row.n_samples < 0) throw argument_error("ScoreTable: negative n_samples");
        rows_.push_back(std::move(row));
    }

    const std::vector<ScoreRow>& rows() const { return rows_; }
    bool empty() const { return rows_.empty(); }

    void sort_rows() {
        std::sort(rows_.begin(), rows_.end(), [](const ScoreRow& a, const ScoreRow& b) {
            return std::tie(a.dataset_id, a.encoder_id, a.metric_name, a.seed, a.n_samples,
                            a.method_label, a.hyperparam_label, a.value) <
                   std::tie(b.dataset_id, b.encoder_id, b.metric_name, b.seed, b.n_samples,
                            b.method_label, b.hyperparam_label, b.value);
        });
    }

    void validate_unique() const {
        std::set<std::tuple<std::string, std::string, std::string, std::uint64_t, int>> seen;
        for (const auto& r : rows_) {
            auto key = std::make_tuple(r.dataset_id, r.encoder_id, r.metric_name, r.seed,
                                       r.n_samples);
            if (!seen.insert(key).second) {
                throw data_error("ScoreTable: duplicate row for (" + r.dataset_id + ", " +
                                 r.encoder_id + ", " + r.metric_name + ", seed " +
                                 std::to_string(r.seed) + ", n " + std::to_string(r.n_samples) +
                                 ")");
            }
        }
    }

    std::vector<std::string> distinct_metrics() const { return distinct(&ScoreRow::metric_name); }
    std::vector<std::string> distinct_datasets() const { return distinct(&ScoreRow::dataset_id); }

  private:
    std::vector<std::string> distinct(std::string ScoreRow::*field) const {
        std::set<std::string> s;
        for (const auto& r : rows_) s.insert(r.*field);
        return {s.begin(), s.end()};
    }

    std::vector<ScoreRow> rows_;
};

// ---- downstream tasks and statistical efficiency ---------------------------

enum class DownstreamLearner { logistic_cv, gbt };

inline const char* downstream_learner_name(DownstreamLearner l) {
    return l == DownstreamLearner::logistic_cv ? "logistic_cv" : "gbt";
}

struct DownstreamResult {
    std::vector<int> sizes;
    std::vector<double> mean_accuracy;         // per size, averaged over factors
    Matrix per_factor;                         // sizes x K test accuracies
    std::vector<std::vector<bool>> fallback;   // true where majority fallback fired
};

// Per factor: fit the learner on mean-mode codes of the first `size` pool
// rows, score on a shared held-out set. Training sets are nested prefixes of
// one pool so larger budgets strictly extend smaller ones. Degenerate labels
// (or budgets too small for cross-validation) fall back to predicting the
// training majority class, and the fallback is recorded.
inline DownstreamResult downstream(const FactorSpace& space, const OracleEncoder& enc,
                                   const std::vector<int>& sizes, DownstreamLearner learner,
                                   int n_test, Rng& rng) {
    if (sizes.empty()) throw argument_error("downstream: need at least one training size");
    int max_size = 0;
    for (int s : sizes) {
        if (s < 1) throw argument_error("downstream: sizes must be positive");
        max_size = std::max(max_size, s);
    }
    if (n_test < 1) throw argument_error("downstream: n_test must be positive");

    const int k = space.size();
    FactorBatch f = sample_factors(space, max_size + n_test, rng);
    CodeBatch codes = encode(enc, f, CodeMode::mean, rng);
    Matrix x_test(n_test, codes.cols());
    for (int i = 0; i < n_test; ++i)
        for (int c = 0; c < codes.cols(); ++c) x_test(i, c) = codes(max_size + i, c);

    DownstreamResult out;
    out.sizes = sizes;
    out.mean_accuracy.assign(sizes.size(), 0.0);
    out.per_factor = Matrix(static_cast<int>(sizes.size()), k);
    out.fallback.assign(sizes.size(), std::vector<bool>(k, false));

    for (std::size_t si = 0; si < sizes.size(); ++si) {
        const int s = sizes[si];
        Matrix xt(s, codes.cols());
        for (int i = 0; i < s; ++i)
            for (int c = 0; c < codes.cols(); ++c) xt(i, c) = codes(i, c);
        for (int kk = 0; kk < k; ++kk) {
            std::vector<int> yt(s), yv(n_test);
            for (int i = 0; i < s; ++i) yt[i] = f(i, kk);
            for (int i = 0; i < n_test; ++i) yv[i] = f(max_size + i, kk);

            auto majority_accuracy = [&] {
                std::vector<int> cnt(space.factor(kk).cardinality, 0);
                for (int y : yt) ++cnt[y];
                int best = 0;
                for (int v = 1; v < static_cast<int>(cnt.size()); ++v)
                    if (cnt[v] > cnt[best]) best = v;
                double hits = 0.0;
                for (int y : yv) hits += y == best ? 1.0 : 0.0;
                return hits / n_test;
            };

            bool degenerate = std::all_of(yt.begin(), yt.end(), [&](int y) { return y == yt[0]; });
            double acc;
            if (degenerate || (learner == DownstreamLearner::logistic_cv && s < 4)) {
                acc = majority_accuracy();
                out.fallback[si][kk] = true;
            } else {
                try {
                    if (learner == DownstreamLearner::logistic_cv) {
                        Rng fold_rng(rng.next());
                        LogisticModel m = fit_logistic_cv(xt, yt, fold_rng);
                        acc = m.accuracy(x_test, yv);
                    } else {
                        GbtModel m = fit_gbt(xt, yt);
                        acc = m.accuracy(x_test, yv);
                    }
                } catch (const degenerate_error&) {
                    acc = majority_accuracy();
                    out.fallback[si][kk] = true;
                }
            }
            out.per_factor(static_cast<int>(si), kk) = acc;
            out.mean_accuracy[si] += acc / k;
        }
    }
    return out;
}

// Ratio of the 100-sample accuracy to the 10000-sample accuracy.
inline double statistical_efficiency(const DownstreamResult& r) {
    int i100 = -1, i10000 = -1;
    for (std::size_t i = 0; i < r.sizes.size(); ++i) {
        if (r.sizes[i] == 100) i100 = static_cast<int>(i);
        if (r.sizes[i] == 10000) i10000 = static_cast<int>(i);
    }
    if (i100 < 0 || i10000 < 0) {
        throw argument_error("statistical_efficiency: needs sizes 100 and 10000");
    }
    double denom = r.mean_accuracy[i10000];
    if (!(denom > 0.0)) throw degenerate_error("statistical_efficiency: zero denominator");
    return r.mean_accuracy[i100] / denom;
}

// ---- rank correlations ------------------------------------------------------

// One score series: a metric column, optionally restricted to one dataset.
// With no dataset filter the dataset id joins the matching key, so values
// from different datasets never pair with each other.
struct SeriesSpec {
    std::string metric;
    std::string dataset; // empty = unrestricted
    std::string label;
};

struct CorrelationTable {
    std::vector<std::string> row_names, col_names;
    Matrix rho;
    std::vector<std::vector<bool>> missing; // too few pairs or undefined ranks
};

namespace detail {

using SeriesKey = std::tuple<std::string, std::string, std::uint64_t, int>;

inline std::map<SeriesKey, double> extract_series(const ScoreTable& t, const SeriesSpec& spec) {
    std::map<SeriesKey, double> out;
    for (const auto& r : t.rows()) {
        if (r.metric_name != spec.metric) continue;
        if (!spec.dataset.empty() && r.dataset_id != spec.dataset) continue;
        SeriesKey key{spec.dataset.empty() ? r.dataset_id : std::string(), r.encoder_id, r.seed,
                      r.n_samples};
        if (!out.emplace(key, r.value).second) {
            throw data_error("rank_correlation: ambiguous series for metric '" + spec.metric +
                             "' (duplicate model key)");
        }
    }
    return out;
}

} // namespace detail

// Spearman between every (row, col) series pair over models matched by
// (dataset, encoder, seed, budget). Cells with fewer than two shared models
// or with constant ranks are marked missing instead of failing.
inline CorrelationTable rank_correlation(const ScoreTable& t,
                                         const std::vector<SeriesSpec>& row_specs,
                                         const std::vector<SeriesSpec>& col_specs) {
    if (row_specs.empty() || col_specs.empty()) {
        throw argument_error("rank_correlation: need at least one row and column series");
    }
    CorrelationTable out;
    for (const auto& s : row_specs) out.row_names.push_back(s.label.empty() ? s.metric : s.label);
    for (const auto& s : col_specs) out.col_names.push_back(s.label.empty() ? s.metric : s.label);
    out.rho = Matrix(static_cast<int>(row_specs.size()), static_cast<int>(col_specs.size()));
    out.missing.assign(row_specs.size(), std::vector<bool>(col_specs.size(), false));

    std::vector<std::map<detail::SeriesKey, double>> rows, cols;
    for (const auto& s : row_specs) rows.push_back(detail::extract_series(t, s));
    for (const auto& s : col_specs) cols.push_back(detail::extract_series(t, s));

    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t j = 0; j < cols.size(); ++j) {
            std::vector<double> a, b;
            for (const auto& [key, va] : rows[i]) {
                auto it = cols[j].find(key);
                if (it == cols[j].end()) continue;
                a.push_back(va);
                b.push_back(it->second);
            }
            const int r = static_cast<int>(i), c = static_cast<int>(j);
            if (a.size() < 2) {
                out.missing[i][j] = true;
                out.rho(r, c) = std::nan("");
                continue;
            }
            try {
                out.rho(r, c) = spearman(a, b);
            } catch (const degenerate_error&) {
                out.missing[i][j] = true;
                out.rho(r, c) = std::nan("");
            }
        }
    }
    return out;
}

enum class CorrAxis { metric_vs_metric, metric_vs_dataset, unsupervised_vs_metric,
                      metric_vs_downstream };

inline const char* corr_axis_name(CorrAxis a) {
    switch (a) {
    case CorrAxis::metric_vs_metric: return "metric_vs_metric";
    case CorrAxis::metric_vs_dataset: return "metric_vs_dataset";
    case CorrAxis::unsupervised_vs_metric: return "unsupervised_vs_metric";
    default: return "metric_vs_downstream";
    }
}

// Convenience axes over the metrics present in the table. The dataset axis
// correlates each metric's model ranking between every pair of datasets; the
// downstream axis splits on the "downstream" name prefix.
inline CorrelationTable rank_corr_table(const ScoreTable& t, CorrAxis axis) {
    std::vector<std::string> metrics = t.distinct_metrics();
    if (metrics.empty()) throw argument_error("rank_corr_table: empty score table");
    auto is_unsup = [](const std::string& m) {
        const auto& u = unsupervised_metric_names();
        return std::find(u.begin(), u.end(), m) != u.end();
    };
    auto is_downstream = [](const std::string& m) { return m.rfind("downstream", 0) == 0; };

    std::vector<SeriesSpec> rows, cols;
    switch (axis) {
    case CorrAxis::metric_vs_metric:
        for (const auto& m : metrics) rows.push_back({m, "", m});
        cols = rows;
        break;
    case CorrAxis::unsupervised_vs_metric:
        for (const auto& m : metrics) {
            if (is_unsup(m)) rows.push_back({m, "", m});
            else cols.push_back({m, "", m});
        }
        break;
    case CorrAxis::metric_vs_downstream:
        for (const auto& m : metrics) {
            if (is_downstream(m)) cols.push_back({m, "", m});
            else rows.push_back({m, "", m});
        }
        break;
    case CorrAxis::metric_vs_dataset: {
        std::vector<std::string> datasets = t.distinct_datasets();
        if (datasets.size() < 2) {
            throw argument_error("rank_corr_table: dataset axis needs >= 2 datasets");
        }
        // one correlation table per dataset pair would be K tables; instead
        // each cell (metric, pair) correlates the metric across the pair
        CorrelationTable out;
        for (const auto& m : metrics) out.row_names.push_back(m);
        std::vector<std::pair<std::string, std::string>> pairs;
        for (std::size_t a = 0; a < datasets.size(); ++a)
            for (std::size_t b = a + 1; b < datasets.size(); ++b) {
                pairs.emplace_back(datasets[a], datasets[b]);
                out.col_names.push_back(datasets[a] + "|" + datasets[b]);
            }
        out.rho = Matrix(static_cast<int>(metrics.size()), static_cast<int>(pairs.size()));
        out.missing.assign(metrics.size(), std::vector<bool>(pairs.size(), false));
        for (std::size_t i = 0; i < metrics.size(); ++i) {
            for (std::size_t j = 0; j < pairs.size(); ++j) {
                CorrelationTable cell = rank_correlation(
                    t, {{metrics[i], pairs[j].first, ""}}, {{metrics[i], pairs[j].second, ""}});
                out.rho(static_cast<int>(i), static_cast<int>(j)) = cell.rho(0, 0);
                out.missing[i][j] = cell.missing[0][0];
            }
        }
        return out;
    }
    }
    if (rows.empty() || cols.empty()) {
        throw argument_error("rank_corr_table: table lacks series for this axis");
    }
    return rank_correlation(t, rows, cols);
}

// ---- bipartite threshold graphs ---------------------------------------------

struct GroupsCurvePoint {
    double threshold = 0.0;
    int components_gt_one = 0; // connected components of size > 1
    int factors_connected = 0; // factors with at least one kept edge
};

struct MergeEvent {
    double threshold = 0.0;
    int factor_a = 0, factor_b = 0; // lowest factor index on each side
};

struct Dendrogram {
    int n_factors = 0;
    std::vector<MergeEvent> merges; // thresholds nonincreasing
    Matrix pair_threshold;          // K x K symmetric, diagonal 0
};

namespace detail {

struct UnionFind {
    std::vector<int> parent;
    explicit UnionFind(int n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
    int find(int a) {
        while (parent[a] != a) {
            parent[a] = parent[parent[a]];
            a = parent[a];
        }
        return a;
    }
    // Returns false when already joined; the surviving root is find(a).
    bool unite(int a, int b) {
        a = find(a);
        b = find(b);
        if (a == b) return false;
        parent[b] = a;
        return true;
    }
};

inline void require_unit_interval(const FactorCodeMatrix& m, const char* who) {
    bool any = false;
    for (int r = 0; r < m.values.rows(); ++r)
        for (int c = 0; c < m.values.cols(); ++c) {
            double v = m.values(r, c);
            if (!(v >= 0.0 && v <= 1.0)) {
                throw argument_error(std::string(who) + ": entries must lie in [0, 1]");
            }
            if (v > 0.0) any = true;
        }
    if (!any) throw degenerate_error(std::string(who) + ": all-zero matrix");
}

} // namespace detail

// Rescales a nonnegative relevance matrix by its maximum entry.
inline FactorCodeMatrix normalize_by_max(FactorCodeMatrix m) {
    double top = 0.0;
    for (int r = 0; r < m.values.rows(); ++r)
        for (int c = 0; c < m.values.cols(); ++c) {
            if (m.values(r, c) < 0.0) {
                throw argument_error("normalize_by_max: negative matrix entry");
            }
            top = std::max(top, m.values(r, c));
        }
    if (top <= 0.0) throw degenerate_error("normalize_by_max: all-zero matrix");
    for (int r = 0; r < m.values.rows(); ++r)
        for (int c = 0; c < m.values.cols(); ++c) m.values(r, c) /= top;
    return m;
}

// Bipartite graph on factors and code dims with the matrix entries as edge
// weights; per threshold t keeps edges >= t and reports the component counts.
inline std::vector<GroupsCurvePoint> independent_groups_curve(const FactorCodeMatrix& m,
                                                              const std::vector<double>& thresholds) {
    detail::require_unit_interval(m, "independent_groups_curve");
    if (thresholds.empty()) throw argument_error("independent_groups_curve: empty threshold grid");
    const int k = m.values.rows(), d = m.values.cols();

    std::vector<GroupsCurvePoint> out;
    for (double t : thresholds) {
        if (!std::isfinite(t)) throw argument_error("independent_groups_curve: non-finite threshold");
        detail::UnionFind uf(k + d);
        std::vector<bool> factor_touched(k, false);
        for (int r = 0; r < k; ++r)
            for (int c = 0; c < d; ++c)
                if (m.values(r, c) >= t) {
                    uf.unite(r, k + c);
                    factor_touched[r] = true;
                }
        std::vector<int> size(k + d, 0);
        for (int v = 0; v < k + d; ++v) ++size[uf.find(v)];
        GroupsCurvePoint p;
        p.threshold = t;
        for (int v = 0; v < k + d; ++v) p.components_gt_one += size[v] > 1 ? 1 : 0;
        for (int r = 0; r < k; ++r) p.factors_connected += factor_touched[r] ? 1 : 0;
        out.push_back(p);
    }
    return out;
}

// Exact merge thresholds via a descending sweep over the distinct positive
// edge weights: pair_threshold(i, j) is the largest t at which factors i and
// j share a connected component. Pairs only reachable through zero-weight
// edges keep threshold 0 and produce no merge event.
inline Dendrogram dendrogram(const FactorCodeMatrix& m) {
    detail::require_unit_interval(m, "dendrogram");
    const int k = m.values.rows(), d = m.values.cols();

    std::vector<double> weights;
    for (int r = 0; r < k; ++r)
        for (int c = 0; c < d; ++c)
            if (m.values(r, c) > 0.0) weights.push_back(m.values(r, c));
    std::sort(weights.begin(), weights.end(), std::greater<>());
    weights.erase(std::unique(weights.begin(), weights.end()), weights.end());

    Dendrogram out;
    out.n_factors = k;
    out.pair_threshold = Matrix(k, k);

    detail::UnionFind uf(k + d);
    std::vector<std::vector<int>> members(k + d); // factor lists per root
    for (int r = 0; r < k; ++r) members[r] = {r};

    for (double w : weights) {
        for (int r = 0; r < k; ++r) {
            for (int c = 0; c < d; ++c) {
                if (m.values(r, c) != w) continue;
                int ra = uf.find(r), rb = uf.find(k + c);
                if (ra == rb) continue;
                std::vector<int>& fa = members[ra];
                std::vector<int>& fb = members[rb];
                if (!fa.empty() && !fb.empty()) {
                    for (int i : fa)
                        for (int j : fb) {
                            out.pair_threshold(i, j) = w;
                            out.pair_threshold(j, i) = w;
                        }
                    out.merges.push_back({w, std::min(*std::min_element(fa.begin(), fa.end()),
                                                      *std::min_element(fb.begin(), fb.end())),
                                          std::max(*std::min_element(fa.begin(), fa.end()),
                                                   *std::min_element(fb.begin(), fb.end()))});
                }
                uf.unite(ra, rb);
                int root = uf.find(ra);
                std::vector<int> merged = std::move(fa);
                merged.insert(merged.end(), fb.begin(), fb.end());
                members[ra].clear();
                members[rb].clear();
                members[root] = std::move(merged);
            }
        }
    }
    return out;
}

// Mean pairwise merge threshold over a set of dendrograms from one factor
// space. Higher mean = the pair is entangled already at high thresholds.
inline Matrix confusion_thresholds(const std::vector<Dendrogram>& ds) {
    if (ds.empty()) throw argument_error("confusion_thresholds: empty dendrogram list");
    const int k = ds.front().n_factors;
    for (const auto& d : ds) {
        if (d.n_factors != k) {
            throw argument_error("confusion_thresholds: mismatched factor spaces");
        }
    }
    Matrix out(k, k);
    for (const auto& d : ds)
        for (int i = 0; i < k; ++i)
            for (int j = 0; j < k; ++j) out(i, j) += d.pair_threshold(i, j) / ds.size();
    return out;
}

// ---- variance explained ------------------------------------------------------

enum class VarianceDesign { method, method_by_hyperparam };

struct VarianceExplained {
    std::vector<std::string> dataset_ids;
    std::vector<std::string> metric_names;
    Matrix r2; // dataset x metric
};

// Per (dataset, metric): R^2 of the scores against the categorical design
// (method labels, or the method x hyperparameter product).
inline VarianceExplained variance_explained(const ScoreTable& t, VarianceDesign design) {
    if (t.empty()) throw argument_error("variance_explained: empty score table");
    VarianceExplained out;
    out.dataset_ids = t.distinct_datasets();
    out.metric_names = t.distinct_metrics();
    out.r2 = Matrix(static_cast<int>(out.dataset_ids.size()),
                    static_cast<int>(out.metric_names.size()));

    for (std::size_t di = 0; di < out.dataset_ids.size(); ++di) {
        for (std::size_t mi = 0; mi < out.metric_names.size(); ++mi) {
            std::vector<double> y;
            std::map<std::string, int> method_codes, hyper_codes;
            std::vector<int> method, hyper;
            for (const auto& r : t.rows()) {
                if (r.dataset_id != out.dataset_ids[di] || r.metric_name != out.metric_names[mi]) {
                    continue;
                }
                y.push_back(r.value);
                method.push_back(
                    method_codes.emplace(r.method_label, static_cast<int>(method_codes.size()))
                        .first->second);
                hyper.push_back(
                    hyper_codes.emplace(r.hyperparam_label, static_cast<int>(hyper_codes.size()))
                        .first->second);
            }
            int groups = static_cast<int>(method_codes.size());
            if (design == VarianceDesign::method_by_hyperparam) {
                std::set<std::pair<int, int>> combos;
                for (std::size_t i = 0; i < method.size(); ++i) combos.insert({method[i], hyper[i]});
                groups = static_cast<int>(combos.size());
            }
            if (groups < 2) {
                throw degenerate_error("variance_explained: a single predictor group for metric '" +
                                       out.metric_names[mi] + "'");
            }
            std::vector<std::vector<int>> design_cols = {method};
            if (design == VarianceDesign::method_by_hyperparam) design_cols.push_back(hyper);
            out.r2(static_cast<int>(di), static_cast<int>(mi)) =
                ols_r2_categorical(y, design_cols);
        }
    }
    return out;
}

// ---- model-selection transfer -------------------------------------------------

struct TransferCells {
    double same_metric_same_dataset = 0.0;
    double same_metric_diff_dataset = 0.0;
    double diff_metric_same_dataset = 0.0;
    double diff_metric_diff_dataset = 0.0;
};

// Per trial: pick the best hyperparameter setting on a random (seed, metric,
// dataset), re-score it at a fresh seed under the cell's metric/dataset, and
// compare against a uniformly random (setting, seed) model. Ties count as
// wins. Trials use counter-derived seeds, so the result is independent of
// batching.
inline TransferCells transfer_protocol(const ScoreTable& t, int trials, Rng& rng) {
    if (trials < 1) throw argument_error("transfer_protocol: trials must be positive");

    std::vector<std::string> datasets = t.distinct_datasets();
    std::vector<std::string> metrics = t.distinct_metrics();
    std::set<std::pair<std::string, std::string>> setting_set;
    std::set<std::uint64_t> seed_set;
    for (const auto& r : t.rows()) {
        setting_set.insert({r.method_label, r.hyperparam_label});
        seed_set.insert(r.seed);
    }
    std::vector<std::pair<std::string, std::string>> settings(setting_set.begin(),
                                                              setting_set.end());
    std::vector<std::uint64_t> seeds(seed_set.begin(), seed_set.end());
    const int nd = static_cast<int>(datasets.size()), nm = static_cast<int>(metrics.size());
    const int ns = static_cast<int>(settings.size()), ne = static_cast<int>(seeds.size());
    if (nd < 2 || nm < 2 || ne < 2) {
        throw argument_error("transfer_protocol: table must span >= 2 datasets, metrics and seeds");
    }

    auto index_of = [](const auto& v, const auto& x) {
        return static_cast<int>(std::lower_bound(v.begin(), v.end(), x) - v.begin());
    };
    std::vector<double> value(static_cast<std::size_t>(nd) * nm * ns * ne,
                              std::nan(""));
    auto slot = [&](int d, int m, int s, int e) -> double& {
        return value[((static_cast<std::size_t>(d) * nm + m) * ns + s) * ne + e];
    };
    for (const auto& r : t.rows()) {
        double& v = slot(index_of(datasets, r.dataset_id), index_of(metrics, r.metric_name),
                         index_of(settings, std::make_pair(r.method_label, r.hyperparam_label)),
                         index_of(seeds, r.seed));
        if (!std::isnan(v)) {
            throw data_error("transfer_protocol: duplicate score for one (dataset, metric, "
                             "setting, seed) cell");
        }
        v = r.value;
    }
    for (double v : value) {
        if (std::isnan(v)) {
            throw data_error("transfer_protocol: the score grid has holes; every (dataset, "
                             "metric, setting, seed) combination is required");
        }
    }

    const std::uint64_t base = rng.next();
    long long wins[4] = {0, 0, 0, 0};
    for (int trial = 0; trial < trials; ++trial) {
        Rng tr(mix64(base + 0x9e3779b97f4a7c15ull * static_cast<std::uint64_t>(trial + 1)));
        const int e_sel = tr.uniform_index(ne);
        const int m_sel = tr.uniform_index(nm);
        const int d_sel = tr.uniform_index(nd);

        int best_setting = 0;
        double best = -HUGE_VAL;
        for (int s = 0; s < ns; ++s) {
            double v = slot(d_sel, m_sel, s, e_sel);
            if (v > best) {
                best = v;
                best_setting = s;
            }
        }
        int e_fresh = tr.uniform_index(ne - 1);
        if (e_fresh >= e_sel) ++e_fresh;

        for (int cell = 0; cell < 4; ++cell) {
            const bool same_metric = cell < 2;
            const bool same_dataset = cell % 2 == 0;
            int m_tgt = m_sel, d_tgt = d_sel;
            if (!same_metric) {
                m_tgt = tr.uniform_index(nm - 1);
                if (m_tgt >= m_sel) ++m_tgt;
            }
            if (!same_dataset) {
                d_tgt = tr.uniform_index(nd - 1);
                if (d_tgt >= d_sel) ++d_tgt;
            }
            double candidate = slot(d_tgt, m_tgt, best_setting, e_fresh);
            double baseline = slot(d_tgt, m_tgt, tr.uniform_index(ns), tr.uniform_index(ne));
            if (candidate >= baseline) ++wins[cell];
        }
    }
    TransferCells out;
    out.same_metric_same_dataset = static_cast<double>(wins[0]) / trials;
    out.same_metric_diff_dataset = static_cast<double>(wins[1]) / trials;
    out.diff_metric_same_dataset = static_cast<double>(wins[2]) / trials;
    out.diff_metric_diff_dataset = static_cast<double>(wins[3]) / trials;
    return out;
}

// ---- evaluation reliability ----------------------------------------------------

struct ReliabilityResult {
    std::vector<std::string> metric_names;
    Matrix run_a, run_b;      // encoders x metrics
    std::vector<double> rho;  // per-metric Spearman between the runs
};

// Scores every encoder twice under two master seeds at budget n and reports
// the per-metric rank correlation of the two score vectors.
inline ReliabilityResult reliability(const FactorSpace& space,
                                     const std::vector<OracleEncoder>& encoders,
                                     const std::vector<std::string>& metrics, int n,
                                     std::uint64_t seed_a, std::uint64_t seed_b) {
    if (encoders.size() < 10) {
        throw argument_error("reliability: need at least 10 encoders for a stable rank vector");
    }
    if (metrics.empty()) throw argument_error("reliability: empty metric list");
    if (n < 8) throw argument_error("reliability: budget too small");

    EvalBudget budget;
    budget.n_train = n;
    budget.n_test = std::max(2, n / 2);

    ReliabilityResult out;
    for (std::size_t i = 0; i < encoders.size(); ++i) {
        const std::string prefix = "reliability|" + encoders[i].id + "|" + std::to_string(i);
        std::vector<MetricResult> a =
            evaluate_encoder(space, encoders[i], budget, metrics, seed_a, prefix);
        std::vector<MetricResult> b =
            evaluate_encoder(space, encoders[i], budget, metrics, seed_b, prefix);
        if (i == 0) {
            for (const auto& r : a) out.metric_names.push_back(r.name);
            out.run_a = Matrix(static_cast<int>(encoders.size()),
                               static_cast<int>(out.metric_names.size()));
            out.run_b = out.run_a;
        }
        if (a.size() != out.metric_names.size() || b.size() != out.metric_names.size()) {
            throw data_error("reliability: inconsistent metric sets across encoders");
        }
        for (std::size_t j = 0; j < a.size(); ++j) {
            if (a[j].failed || b[j].failed) {
                throw data_error("reliability: metric '" + a[j].name + "' failed on encoder '" +
                                 encoders[i].id + "': " +
                                 (a[j].failed ? a[j].error : b[j].error));
            }
            out.run_a(static_cast<int>(i), static_cast<int>(j)) = a[j].value;
            out.run_b(static_cast<int>(i), static_cast<int>(j)) = b[j].value;
        }
    }
    for (int j = 0; j < out.run_a.cols(); ++j) {
        out.rho.push_back(spearman(out.run_a.col(j), out.run_b.col(j)));
    }
    return out;
}

} // namespace disent
