#pragma once

#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "disent/errors.hpp"
#include "disent/estimation.hpp"
#include "disent/factor_model.hpp"
#include "disent/learners.hpp"

namespace disent {

struct EvalBudget {
    int n_train = 10000;
    int n_test = 5000;
    int batch = 64;              // interventional batch size
    int bins = 20;               // discretization bins
    double variance_threshold = 0.05; // dimension pruning cutoff
    // Zero-relevance code dims count as perfectly modular by default; flip
    // to score them as fully entangled instead.
    bool dead_code_modular = true;
};

struct MetricResult {
    std::string name;
    double value = 0.0;
    bool failed = false;
    std::string error; // set when failed
};

// ---- interventional metrics ----------------------------------------------

// Interventional robustness: two batches share one fixed factor; the mean
// absolute per-dimension difference between paired mean codes feeds a
// multinomial logistic classifier that must recover which factor was fixed.
inline double beta_vae_score(const FactorSpace& space, const OracleEncoder& enc,
                             const EvalBudget& budget, Rng& rng) {
    if (budget.n_train < 2 || budget.n_test < 1 || budget.batch < 2) {
        throw argument_error("beta_vae_score: invalid budget");
    }
    const int k = space.size(), d = enc.dim();
    auto make_point = [&](std::vector<double>& feature) {
        int fixed = rng.uniform_index(k);
        int value = rng.uniform_index(space.factor(fixed).cardinality);
        FactorBatch a = sample_factors_fixed(space, budget.batch, fixed, value, rng);
        FactorBatch b = sample_factors_fixed(space, budget.batch, fixed, value, rng);
        CodeBatch ca = encode(enc, a, CodeMode::mean, rng);
        CodeBatch cb = encode(enc, b, CodeMode::mean, rng);
        feature.assign(d, 0.0);
        for (int i = 0; i < budget.batch; ++i)
            for (int c = 0; c < d; ++c) feature[c] += std::fabs(ca(i, c) - cb(i, c));
        for (int c = 0; c < d; ++c) feature[c] /= budget.batch;
        return fixed;
    };

    Matrix xt(budget.n_train, d), xv(budget.n_test, d);
    std::vector<int> yt(budget.n_train), yv(budget.n_test);
    std::vector<double> feat;
    for (int i = 0; i < budget.n_train; ++i) {
        yt[i] = make_point(feat);
        for (int c = 0; c < d; ++c) xt(i, c) = feat[c];
    }
    for (int i = 0; i < budget.n_test; ++i) {
        yv[i] = make_point(feat);
        for (int c = 0; c < d; ++c) xv(i, c) = feat[c];
    }
    LogisticModel m = fit_logistic(xt, yt);
    return m.accuracy(xv, yv);
}

// Each vote is the dimension of least normalized within-batch variance when
// one factor is fixed; a majority-vote table over training votes classifies
// evaluation votes. Dimensions with global variance below the threshold are
// pruned before the argmin.
inline double factor_vae_score(const FactorSpace& space, const OracleEncoder& enc,
                               const EvalBudget& budget, Rng& rng) {
    if (budget.n_train < 2 || budget.n_test < 1 || budget.batch < 2) {
        throw argument_error("factor_vae_score: invalid budget");
    }
    const int k = space.size(), d = enc.dim();

    FactorBatch gf = sample_factors(space, budget.n_train, rng);
    CodeBatch gc = encode(enc, gf, CodeMode::mean, rng);
    std::vector<double> global_var(d, 0.0), mean(d, 0.0);
    for (int i = 0; i < gc.rows(); ++i)
        for (int c = 0; c < d; ++c) mean[c] += gc(i, c);
    for (int c = 0; c < d; ++c) mean[c] /= gc.rows();
    for (int i = 0; i < gc.rows(); ++i)
        for (int c = 0; c < d; ++c) {
            double t = gc(i, c) - mean[c];
            global_var[c] += t * t;
        }
    std::vector<int> active;
    for (int c = 0; c < d; ++c) {
        global_var[c] /= gc.rows();
        if (global_var[c] >= budget.variance_threshold) active.push_back(c);
    }
    if (active.empty()) {
        throw degenerate_error("factor_vae_score: all dimensions pruned as collapsed");
    }

    auto make_vote = [&](int& dim_vote) {
        int fixed = rng.uniform_index(k);
        int value = rng.uniform_index(space.factor(fixed).cardinality);
        FactorBatch fb = sample_factors_fixed(space, budget.batch, fixed, value, rng);
        CodeBatch cb = encode(enc, fb, CodeMode::mean, rng);
        double best = HUGE_VAL;
        int best_dim = active.front();
        for (int c : active) {
            double m = 0.0;
            for (int i = 0; i < budget.batch; ++i) m += cb(i, c);
            m /= budget.batch;
            double v = 0.0;
            for (int i = 0; i < budget.batch; ++i) {
                double t = cb(i, c) - m;
                v += t * t;
            }
            v = (v / budget.batch) / global_var[c];
            if (v < best) {
                best = v;
                best_dim = c;
            }
        }
        dim_vote = best_dim;
        return fixed;
    };

    std::vector<int> vt_dim(budget.n_train), vt_lab(budget.n_train);
    std::vector<int> vv_dim(budget.n_test), vv_lab(budget.n_test);
    for (int i = 0; i < budget.n_train; ++i) vt_lab[i] = make_vote(vt_dim[i]);
    for (int i = 0; i < budget.n_test; ++i) vv_lab[i] = make_vote(vv_dim[i]);
    MajorityVoteModel m = fit_majority_vote(vt_dim, vt_lab);
    return m.accuracy(vv_dim, vv_lab);
}

// Interventional robustness score. Dimensions are attributed to the factor
// with maximal mutual information; for each factor's dimension set, the mean
// over values of the worst-case L2 displacement of the conditional mean code
// under interventions on any other factor, normalized by the maximal
// unconstrained deviation, is turned into a 1-minus score and averaged with
// per-dimension variance weights.
inline double irs_score(const FactorSpace& space, const OracleEncoder& enc,
                        const EvalBudget& budget, Rng& rng) {
    if (budget.n_train < 4) throw argument_error("irs_score: invalid budget");
    const int k = space.size(), d = enc.dim();
    FactorBatch f = sample_factors(space, budget.n_train, rng);
    CodeBatch codes = encode(enc, f, CodeMode::mean, rng);
    const int n = f.rows();

    FactorCodeMatrix mi = mi_matrix(f, codes, budget.bins);
    std::vector<int> owner(d, 0);
    for (int c = 0; c < d; ++c) {
        double best = -HUGE_VAL;
        for (int kk = 0; kk < k; ++kk) {
            if (mi.values(kk, c) > best) {
                best = mi.values(kk, c);
                owner[c] = kk;
            }
        }
    }
    std::vector<std::vector<int>> dims_of(k);
    for (int c = 0; c < d; ++c) dims_of[owner[c]].push_back(c);

    std::vector<double> var(d, 0.0), mean(d, 0.0);
    for (int i = 0; i < n; ++i)
        for (int c = 0; c < d; ++c) mean[c] += codes(i, c);
    for (int c = 0; c < d; ++c) mean[c] /= n;
    for (int i = 0; i < n; ++i)
        for (int c = 0; c < d; ++c) {
            double t = codes(i, c) - mean[c];
            var[c] += t * t;
        }
    for (int c = 0; c < d; ++c) var[c] /= n;

    std::vector<double> factor_score(k, 0.0);
    std::vector<bool> factor_defined(k, false);
    for (int ki = 0; ki < k; ++ki) {
        const auto& dims = dims_of[ki];
        if (dims.empty()) continue;
        const int card_i = space.factor(ki).cardinality;

        // Unconstrained normalizer: max L2 deviation from the global mean on dims.
        double norm = 0.0;
        for (int i = 0; i < n; ++i) {
            double s = 0.0;
            for (int c : dims) {
                double t = codes(i, c) - mean[c];
                s += t * t;
            }
            norm = std::max(norm, std::sqrt(s));
        }
        if (norm == 0.0) continue; // constant on its dims; leave undefined

        // Reference points: conditional mean code per value of factor ki.
        std::vector<std::vector<double>> ref(card_i, std::vector<double>(dims.size(), 0.0));
        std::vector<int> ref_cnt(card_i, 0);
        for (int i = 0; i < n; ++i) {
            int v = f(i, ki);
            ++ref_cnt[v];
            for (std::size_t cdx = 0; cdx < dims.size(); ++cdx) ref[v][cdx] += codes(i, dims[cdx]);
        }
        for (int v = 0; v < card_i; ++v) {
            if (ref_cnt[v] == 0) continue;
            for (double& t : ref[v]) t /= ref_cnt[v];
        }

        double sum_dev = 0.0;
        int n_values = 0;
        for (int v = 0; v < card_i; ++v) {
            if (ref_cnt[v] == 0) continue;
            double worst = 0.0;
            for (int kj = 0; kj < k; ++kj) {
                if (kj == ki) continue;
                const int card_j = space.factor(kj).cardinality;
                std::vector<std::vector<double>> cell(card_j,
                                                      std::vector<double>(dims.size(), 0.0));
                std::vector<int> cnt(card_j, 0);
                for (int i = 0; i < n; ++i) {
                    if (f(i, ki) != v) continue;
                    int w = f(i, kj);
                    ++cnt[w];
                    for (std::size_t cdx = 0; cdx < dims.size(); ++cdx) {
                        cell[w][cdx] += codes(i, dims[cdx]);
                    }
                }
                for (int w = 0; w < card_j; ++w) {
                    if (cnt[w] == 0) continue;
                    double s = 0.0;
                    for (std::size_t cdx = 0; cdx < dims.size(); ++cdx) {
                        double t = cell[w][cdx] / cnt[w] - ref[v][cdx];
                        s += t * t;
                    }
                    worst = std::max(worst, std::sqrt(s));
                }
            }
            sum_dev += worst;
            ++n_values;
        }
        factor_score[ki] = 1.0 - (sum_dev / n_values) / norm;
        factor_defined[ki] = true;
    }

    double wsum = 0.0, wtotal = 0.0;
    for (int c = 0; c < d; ++c) {
        if (!factor_defined[owner[c]]) continue;
        wsum += var[c] * factor_score[owner[c]];
        wtotal += var[c];
    }
    if (wtotal <= 0.0) {
        throw degenerate_error("irs_score: no varying dimension with a defined score");
    }
    return wsum / wtotal;
}

// ---- matrix aggregations ---------------------------------------------------

namespace detail {

inline void require_aggregatable(const FactorCodeMatrix& m, const char* who) {
    if (m.values.rows() < 1 || m.values.cols() < 1) {
        throw argument_error(std::string(who) + ": empty matrix");
    }
    bool any = false;
    for (int r = 0; r < m.values.rows(); ++r)
        for (int c = 0; c < m.values.cols(); ++c) {
            if (m.values(r, c) < 0.0) {
                throw argument_error(std::string(who) + ": negative matrix entry");
            }
            if (m.values(r, c) > 0.0) any = true;
        }
    if (!any) throw degenerate_error(std::string(who) + ": all-zero matrix");
}

} // namespace detail

// Mean normalized gap between the best and second-best entry of each factor
// row. MI rows normalize by the factor entropy; other estimators normalize by
// the row maximum (an all-zero row contributes zero gap).
inline double aggregate_mig(const FactorCodeMatrix& m, const std::vector<double>& factor_entropy) {
    detail::require_aggregatable(m, "aggregate_mig");
    if (m.values.cols() < 2) throw argument_error("aggregate_mig: need at least 2 code dims");
    const bool mi_tag = m.tag == MatrixTag::mi;
    if (mi_tag && static_cast<int>(factor_entropy.size()) != m.values.rows()) {
        throw argument_error("aggregate_mig: factor entropies must match rows");
    }
    double sum = 0.0;
    for (int r = 0; r < m.values.rows(); ++r) {
        double top = -HUGE_VAL, second = -HUGE_VAL;
        for (int c = 0; c < m.values.cols(); ++c) {
            double v = m.values(r, c);
            if (v > top) {
                second = top;
                top = v;
            } else if (v > second) {
                second = v;
            }
        }
        double norm = mi_tag ? factor_entropy[r] : top;
        if (mi_tag && !(norm > 0.0)) {
            throw degenerate_error("aggregate_mig: zero factor entropy");
        }
        sum += norm > 0.0 ? (top - second) / norm : 0.0;
    }
    return sum / m.values.rows();
}

// Mean separated-attribute gap: best minus second-best entry per factor row.
inline double aggregate_sap(const FactorCodeMatrix& m) {
    detail::require_aggregatable(m, "aggregate_sap");
    if (m.values.cols() < 2) throw argument_error("aggregate_sap: need at least 2 code dims");
    double sum = 0.0;
    for (int r = 0; r < m.values.rows(); ++r) {
        double top = -HUGE_VAL, second = -HUGE_VAL;
        for (int c = 0; c < m.values.cols(); ++c) {
            double v = m.values(r, c);
            if (v > top) {
                second = top;
                top = v;
            } else if (v > second) {
                second = v;
            }
        }
        sum += top - second;
    }
    return sum / m.values.rows();
}

// Per dimension: squared deviation from the ideal one-factor template,
// normalized by the best case; score is the mean of one minus the deviation.
// A dimension with no mass anywhere counts as perfectly modular unless
// dead_code_modular is cleared, which scores it as fully entangled.
inline double aggregate_modularity(const FactorCodeMatrix& m, bool dead_code_modular = true) {
    detail::require_aggregatable(m, "aggregate_modularity");
    const int k = m.values.rows(), d = m.values.cols();
    if (k < 2) throw argument_error("aggregate_modularity: need at least 2 factors");
    double sum = 0.0;
    for (int c = 0; c < d; ++c) {
        double theta = 0.0;
        int arg = 0;
        for (int r = 0; r < k; ++r) {
            if (m.values(r, c) > theta) {
                theta = m.values(r, c);
                arg = r;
            }
        }
        if (theta == 0.0) {
            sum += dead_code_modular ? 1.0 : 0.0;
            continue;
        }
        double delta = 0.0;
        for (int r = 0; r < k; ++r) {
            double t = r == arg ? 0.0 : m.values(r, c);
            delta += t * t;
        }
        delta /= theta * theta * (k - 1);
        sum += 1.0 - delta;
    }
    return sum / d;
}

// Column-entropy disentanglement: one minus the base-K entropy of each
// normalized column, weighted by the column's share of the total mass.
inline double aggregate_dci_d(const FactorCodeMatrix& m) {
    detail::require_aggregatable(m, "aggregate_dci_d");
    const int k = m.values.rows(), d = m.values.cols();
    if (k < 2) throw argument_error("aggregate_dci_d: need at least 2 factors");
    const double logk = std::log(static_cast<double>(k));
    double total = 0.0;
    std::vector<double> col_sum(d, 0.0);
    for (int c = 0; c < d; ++c) {
        for (int r = 0; r < k; ++r) col_sum[c] += m.values(r, c);
        total += col_sum[c];
    }
    double score = 0.0;
    for (int c = 0; c < d; ++c) {
        if (col_sum[c] <= 0.0) continue; // zero column carries zero weight
        double h = 0.0;
        for (int r = 0; r < k; ++r) {
            double p = m.values(r, c) / col_sum[c];
            if (p > 0.0) h -= p * std::log(p);
        }
        score += (col_sum[c] / total) * (1.0 - h / logk);
    }
    return score;
}

// Row-entropy completeness: unweighted mean over factors of one minus the
// base-d entropy of the normalized row. A zero row contributes zero.
inline double aggregate_dci_c(const FactorCodeMatrix& m) {
    detail::require_aggregatable(m, "aggregate_dci_c");
    const int k = m.values.rows(), d = m.values.cols();
    if (d < 2) throw argument_error("aggregate_dci_c: need at least 2 code dims");
    const double logd = std::log(static_cast<double>(d));
    double score = 0.0;
    for (int r = 0; r < k; ++r) {
        double row_sum = 0.0;
        for (int c = 0; c < d; ++c) row_sum += m.values(r, c);
        if (row_sum <= 0.0) continue;
        double h = 0.0;
        for (int c = 0; c < d; ++c) {
            double p = m.values(r, c) / row_sum;
            if (p > 0.0) h -= p * std::log(p);
        }
        score += 1.0 - h / logd;
    }
    return score / k;
}

// Mean cached per-factor test accuracy of the boosted-tree models.
inline double dci_informativeness(const FactorCodeMatrix& m) {
    if (m.tag != MatrixTag::gbt || m.row_accuracy.empty()) {
        throw argument_error("dci_informativeness: requires a gbt matrix with cached accuracies");
    }
    double s = 0.0;
    for (double a : m.row_accuracy) s += a;
    return s / m.row_accuracy.size();
}

// ---- blends ----------------------------------------------------------------

inline const std::vector<std::string>& aggregation_names() {
    static const std::vector<std::string> names = {"mig", "sap", "modularity", "dci_d", "dci_c"};
    return names;
}

inline double apply_aggregation(const FactorCodeMatrix& m, const std::string& agg,
                                const std::vector<double>& factor_entropy,
                                bool dead_code_modular = true) {
    if (agg == "mig") return aggregate_mig(m, factor_entropy);
    if (agg == "sap") return aggregate_sap(m);
    if (agg == "modularity") return aggregate_modularity(m, dead_code_modular);
    if (agg == "dci_d") return aggregate_dci_d(m);
    if (agg == "dci_c") return aggregate_dci_c(m);
    throw argument_error("apply_aggregation: unknown aggregation '" + agg + "'");
}

// Every estimator matrix crossed with every aggregation, named
// "<estimator>-<aggregation>". Failures are recorded per cell, not thrown.
inline std::vector<MetricResult> blend_scores(const std::vector<FactorCodeMatrix>& matrices,
                                              const std::vector<double>& factor_entropy,
                                              const std::vector<std::string>& aggregations,
                                              bool dead_code_modular = true) {
    std::vector<MetricResult> out;
    for (const auto& m : matrices) {
        for (const auto& agg : aggregations) {
            MetricResult r;
            r.name = std::string(matrix_tag_name(m.tag)) + "-" + agg;
            try {
                r.value = apply_aggregation(m, agg, factor_entropy, dead_code_modular);
            } catch (const std::exception& e) {
                r.failed = true;
                r.error = e.what();
                r.value = std::nan("");
            }
            out.push_back(std::move(r));
        }
    }
    return out;
}

} // namespace disent
