#pragma once

#include <set>
#include <string>
#include <vector>

#include "disent/estimation.hpp"
#include "disent/metrics.hpp"

namespace disent {

// Canonical estimator pairing: mig and modularity aggregate the MI matrix,
// sap the SVM accuracy matrix, the DCI family the boosted-tree importances.
inline const std::vector<std::string>& canonical_metric_names() {
    static const std::vector<std::string> names = {
        "beta_vae", "factor_vae", "irs",   "mig",   "sap",
        "modularity", "dci_d",    "dci_c", "dci_i",
    };
    return names;
}

inline const std::vector<std::string>& unsupervised_metric_names() {
    static const std::vector<std::string> names = {"tc_mean", "tc_sampled", "avg_mi_mean",
                                                   "avg_mi_sampled"};
    return names;
}

inline std::vector<std::string> blend_metric_names() {
    std::vector<std::string> out;
    for (const char* est : {"mi", "gbt", "svm"}) {
        for (const auto& agg : aggregation_names()) {
            out.push_back(std::string(est) + "-" + agg);
        }
    }
    return out;
}

// Estimator matrices plus the factor entropies of the batch they came from;
// one sampling pass shared by every matrix-based metric.
struct EstimatedMatrices {
    FactorCodeMatrix mi;
    FactorCodeMatrix gbt;
    FactorCodeMatrix svm;
    std::vector<double> factor_entropy;
};

inline EstimatedMatrices estimate_matrices(const FactorSpace& space, const OracleEncoder& enc,
                                           const EvalBudget& budget, Rng& rng) {
    const int n = budget.n_train + budget.n_test;
    FactorBatch f = sample_factors(space, n, rng);
    CodeBatch codes = encode(enc, f, CodeMode::mean, rng);

    FactorBatch f_train(budget.n_train, f.cols());
    Matrix c_train(budget.n_train, codes.cols());
    for (int i = 0; i < budget.n_train; ++i) {
        for (int k = 0; k < f.cols(); ++k) f_train(i, k) = f(i, k);
        for (int c = 0; c < codes.cols(); ++c) c_train(i, c) = codes(i, c);
    }

    std::vector<std::string> names;
    for (const auto& fac : space.factors()) names.push_back(fac.name);

    EstimatedMatrices out;
    out.mi = mi_matrix(f_train, c_train, budget.bins, names);
    out.gbt = gbt_matrix(f, codes, budget.n_train, budget.n_test, {}, names);
    out.svm = svm_matrix(f, codes, budget.n_train, budget.n_test, {}, names);
    out.factor_entropy.resize(f.cols());
    for (int k = 0; k < f.cols(); ++k) out.factor_entropy[k] = entropy(f_train.col(k));
    return out;
}

// Evaluates the requested metrics for one encoder. Metric groups draw from
// independent streams derived from (master_seed, task_prefix, group), so a
// score never depends on which other metrics were requested. Failures are
// captured per metric; nothing throws out of here but invalid requests.
inline std::vector<MetricResult> evaluate_encoder(const FactorSpace& space,
                                                  const OracleEncoder& enc,
                                                  const EvalBudget& budget,
                                                  const std::vector<std::string>& metrics,
                                                  std::uint64_t master_seed,
                                                  const std::string& task_prefix) {
    std::set<std::string> want(metrics.begin(), metrics.end());
    const bool want_blends = want.count("blends") > 0;
    auto group_rng = [&](const char* group) {
        return Rng(task_seed(master_seed, task_prefix + "|" + group));
    };

    std::vector<MetricResult> out;
    auto run = [&](const std::string& name, auto&& fn) {
        MetricResult r;
        r.name = name;
        try {
            r.value = fn();
        } catch (const std::exception& e) {
            r.failed = true;
            r.error = e.what();
            r.value = std::nan("");
        }
        out.push_back(std::move(r));
    };

    if (want.count("beta_vae")) {
        run("beta_vae", [&] {
            Rng rng = group_rng("beta_vae");
            return beta_vae_score(space, enc, budget, rng);
        });
    }
    if (want.count("factor_vae")) {
        run("factor_vae", [&] {
            Rng rng = group_rng("factor_vae");
            return factor_vae_score(space, enc, budget, rng);
        });
    }
    if (want.count("irs")) {
        run("irs", [&] {
            Rng rng = group_rng("irs");
            return irs_score(space, enc, budget, rng);
        });
    }

    const bool needs_matrices = want_blends || want.count("mig") || want.count("sap") ||
                                want.count("modularity") || want.count("dci_d") ||
                                want.count("dci_c") || want.count("dci_i");
    if (needs_matrices) {
        bool have = false;
        EstimatedMatrices est;
        std::string est_error;
        try {
            Rng rng = group_rng("matrices");
            est = estimate_matrices(space, enc, budget, rng);
            have = true;
        } catch (const std::exception& e) {
            est_error = e.what();
        }
        auto run_m = [&](const std::string& name, auto&& fn) {
            if (!want.count(name)) return;
            if (!have) {
                out.push_back({name, std::nan(""), true, est_error});
                return;
            }
            run(name, fn);
        };
        run_m("mig", [&] { return aggregate_mig(est.mi, est.factor_entropy); });
        run_m("modularity", [&] { return aggregate_modularity(est.mi, budget.dead_code_modular); });
        run_m("sap", [&] { return aggregate_sap(est.svm); });
        run_m("dci_d", [&] { return aggregate_dci_d(est.gbt); });
        run_m("dci_c", [&] { return aggregate_dci_c(est.gbt); });
        run_m("dci_i", [&] { return dci_informativeness(est.gbt); });
        if (want_blends) {
            if (!have) {
                for (const auto& name : blend_metric_names()) {
                    out.push_back({name, std::nan(""), true, est_error});
                }
            } else {
                for (auto& r : blend_scores({est.mi, est.gbt, est.svm}, est.factor_entropy,
                                            aggregation_names(), budget.dead_code_modular)) {
                    out.push_back(std::move(r));
                }
            }
        }
    }

    if (want.count("unsupervised")) {
        bool ok = false;
        UnsupervisedScores us;
        std::string err;
        try {
            Rng rng = group_rng("unsupervised");
            us = unsupervised_scores(space, enc, budget.n_train, budget.bins, rng);
            ok = true;
        } catch (const std::exception& e) {
            err = e.what();
        }
        auto push = [&](const std::string& name, double v) {
            if (ok) out.push_back({name, v, false, ""});
            else out.push_back({name, std::nan(""), true, err});
        };
        push("tc_mean", us.tc_mean);
        push("tc_sampled", us.tc_sampled);
        push("avg_mi_mean", us.avg_mi_mean);
        push("avg_mi_sampled", us.avg_mi_sampled);
    }

    for (const auto& name : metrics) {
        if (name == "blends" || name == "unsupervised") continue;
        bool known = false;
        for (const auto& c : canonical_metric_names()) known = known || c == name;
        if (!known) throw argument_error("evaluate_encoder: unknown metric '" + name + "'");
    }
    return out;
}

} // namespace disent
