#pragma once

#include <atomic>
#include <chrono>
#include <ctime>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "disent/analysis.hpp"
#include "disent/config.hpp"
#include "disent/csv.hpp"
#include "disent/evaluate.hpp"
#include "disent/svg_report.hpp"
#include "disent/version.hpp"

namespace disent {

inline std::uint64_t fnv1a64(const std::string& s) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

inline std::string hex64(std::uint64_t v) {
    char buf[19];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

inline std::string encoder_method_label(const EncoderSpec& s) { return s.kind; }

inline std::string encoder_hyperparam_label(const EncoderSpec& s) {
    std::string label;
    if (s.kind == "rotation") {
        label = "alpha=" + format_double(s.alpha);
    } else if (s.kind == "merge") {
        label = "groups=" + std::to_string(s.groups.size());
    } else if (s.kind == "duplicate") {
        label = "copies=" + std::to_string(s.copies.size());
    } else if (s.kind == "noise_channels") {
        label = "extra=" + std::to_string(s.extra);
    } else if (s.kind == "collapsed") {
        label = "const=" + std::to_string(s.constant_dims) +
                (s.keep_factors ? "" : ";drop_factors");
    } else if (s.kind == "permute_scale") {
        label = "perm";
    } else {
        label = "-";
    }
    if (s.sigma > 0.0) label += ";sigma=" + format_double(s.sigma);
    return label;
}

// ---- external representation scoring --------------------------------------------

// A fixed (factors, codes) sample supports the matrix-derived metrics and the
// mean-mode unsupervised scores; anything that must re-query the encoder is
// reported as a per-metric failure. Rows are shuffled per task seed so eval
// seeds give independent train/test splits.
inline std::vector<MetricResult> evaluate_external(const ExternalData& x, const EvalBudget& budget,
                                                   const std::vector<std::string>& metrics,
                                                   std::uint64_t master,
                                                   const std::string& task_prefix) {
    const int n = x.factors.rows();
    const int k = x.factors.cols(), d = x.codes.cols();
    Rng rng(task_seed(master, task_prefix + "|external"));
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    for (int i = n - 1; i > 0; --i) std::swap(order[i], order[rng.uniform_index(i + 1)]);

    int n_test = std::min(budget.n_test, std::max(1, n / 3));
    int n_train = std::min(budget.n_train, n - n_test);
    if (n_train < 2) throw data_error("external data: too few rows for evaluation");

    FactorBatch f(n_train + n_test, k);
    CodeBatch c(n_train + n_test, d);
    for (int i = 0; i < n_train + n_test; ++i) {
        for (int j = 0; j < k; ++j) f(i, j) = x.factors(order[i], j);
        for (int j = 0; j < d; ++j) c(i, j) = x.codes(order[i], j);
    }
    FactorBatch f_train(n_train, k);
    CodeBatch c_train(n_train, d);
    for (int i = 0; i < n_train; ++i) {
        for (int j = 0; j < k; ++j) f_train(i, j) = f(i, j);
        for (int j = 0; j < d; ++j) c_train(i, j) = c(i, j);
    }

    std::vector<std::string> names;
    for (int j = 0; j < k; ++j) names.push_back("factor_" + std::to_string(j));

    bool have_matrices = false;
    EstimatedMatrices est;
    std::string est_error;
    auto ensure_matrices = [&] {
        if (have_matrices || !est_error.empty()) return;
        try {
            est.mi = mi_matrix(f_train, c_train, budget.bins, names);
            est.gbt = gbt_matrix(f, c, n_train, n_test, {}, names);
            est.svm = svm_matrix(f, c, n_train, n_test, {}, names);
            est.factor_entropy.resize(k);
            for (int j = 0; j < k; ++j) est.factor_entropy[j] = entropy(f_train.col(j));
            have_matrices = true;
        } catch (const std::exception& e) {
            est_error = e.what();
        }
    };

    std::vector<MetricResult> out;
    auto fail = [&](const std::string& name, const std::string& why) {
        out.push_back({name, std::nan(""), true, why});
    };
    auto run = [&](const std::string& name, auto&& fn) {
        ensure_matrices();
        if (!have_matrices) {
            fail(name, est_error);
            return;
        }
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

    const std::string fixed_sample =
        "not computable on a fixed external sample; requires querying the encoder";
    for (const auto& name : metrics) {
        if (name == "mig") run(name, [&] { return aggregate_mig(est.mi, est.factor_entropy); });
        else if (name == "sap") run(name, [&] { return aggregate_sap(est.svm); });
        else if (name == "modularity") {
            run(name, [&] { return aggregate_modularity(est.mi, budget.dead_code_modular); });
        } else if (name == "dci_d") run(name, [&] { return aggregate_dci_d(est.gbt); });
        else if (name == "dci_c") run(name, [&] { return aggregate_dci_c(est.gbt); });
        else if (name == "dci_i") run(name, [&] { return dci_informativeness(est.gbt); });
        else if (name == "beta_vae" || name == "factor_vae" || name == "irs") {
            fail(name, fixed_sample);
        } else if (name == "blends") {
            ensure_matrices();
            if (!have_matrices) {
                for (const auto& b : blend_metric_names()) fail(b, est_error);
            } else {
                for (auto& r : blend_scores({est.mi, est.gbt, est.svm}, est.factor_entropy,
                                            aggregation_names(), budget.dead_code_modular)) {
                    out.push_back(std::move(r));
                }
            }
        } else if (name == "unsupervised" || name == "tc_mean" || name == "avg_mi_mean" ||
                   name == "tc_sampled" || name == "avg_mi_sampled") {
            auto tc = [&] { return gaussian_total_correlation(fit_gaussian(c_train)); };
            auto avg_mi = [&]() -> double {
                if (d < 2) return 0.0;
                DiscretizedBatch disc = discretize(c_train, budget.bins);
                double sum = 0.0;
                int pairs = 0;
                for (int i = 0; i < d; ++i)
                    for (int j = i + 1; j < d; ++j) {
                        sum += mutual_information(disc.bins.col(i), disc.bins.col(j));
                        ++pairs;
                    }
                return sum / pairs;
            };
            auto run_plain = [&](const std::string& nm, auto&& fn) {
                MetricResult r;
                r.name = nm;
                try {
                    r.value = fn();
                } catch (const std::exception& e) {
                    r.failed = true;
                    r.error = e.what();
                    r.value = std::nan("");
                }
                out.push_back(std::move(r));
            };
            const std::string no_sampled = "external data has only one (mean) sample mode";
            if (name == "tc_mean") run_plain(name, tc);
            else if (name == "avg_mi_mean") run_plain(name, avg_mi);
            else if (name == "tc_sampled" || name == "avg_mi_sampled") fail(name, no_sampled);
            else {
                run_plain("tc_mean", tc);
                fail("tc_sampled", no_sampled);
                run_plain("avg_mi_mean", avg_mi);
                fail("avg_mi_sampled", no_sampled);
            }
        } else {
            throw argument_error("evaluate_external: unknown metric '" + name + "'");
        }
    }
    return out;
}

// ---- run driver -----------------------------------------------------------------

struct RunContext {
    RunConfig cfg;
    std::string config_text; // exact file bytes, hashed into the manifest
    std::filesystem::path out_dir;
    std::uint64_t master_seed = 0;
    int jobs = 1;
};

struct TaskRecord {
    std::string id;
    std::uint64_t seed = 0;
    bool ok = true;
    std::string error;
};

class Runner {
  public:
    explicit Runner(RunContext ctx) : ctx_(std::move(ctx)) {
        if (ctx_.jobs < 1) throw argument_error("jobs must be >= 1");
        for (const auto& d : ctx_.cfg.datasets) {
            spaces_.push_back(FactorSpace::from_cardinalities(d.cardinalities));
        }
        // encoder build errors are configuration errors; surface them before
        // any task starts
        built_.resize(ctx_.cfg.datasets.size());
        for (std::size_t di = 0; di < ctx_.cfg.datasets.size(); ++di) {
            for (const auto& spec : ctx_.cfg.encoders) {
                try {
                    built_[di].push_back({spec, build_encoder(spec, spaces_[di])});
                } catch (const std::exception& e) {
                    throw argument_error("config: encoder '" + spec.id + "' on dataset '" +
                                         ctx_.cfg.datasets[di].id + "': " + e.what());
                }
            }
        }
        std::filesystem::create_directories(ctx_.out_dir);
    }

    // generate: write a sampled (factors, codes) CSV pair per dataset/encoder
    bool generate() {
        for (std::size_t di = 0; di < ctx_.cfg.datasets.size(); ++di) {
            const std::string& ds = ctx_.cfg.datasets[di].id;
            for (const auto& [spec, enc] : built_[di]) {
                const std::string id = "generate|" + ds + "|" + spec.id;
                Rng rng(task_seed(ctx_.master_seed, id));
                record_task(id, task_seed(ctx_.master_seed, id));
                // train + test rows so ingesting the pair reproduces the
                // internal evaluation split at the same budget
                const int n = ctx_.cfg.default_budget.n_train + ctx_.cfg.default_budget.n_test;
                FactorBatch f = sample_factors(spaces_[di], n, rng);
                CodeBatch c = encode(enc, f, CodeMode::sampled, rng);

                std::string ftext, ctext;
                for (int j = 0; j < f.cols(); ++j) {
                    ftext += (j ? "," : "") + std::string("factor_") + std::to_string(j);
                }
                ftext += '\n';
                for (int j = 0; j < c.cols(); ++j) {
                    ctext += (j ? "," : "") + std::string("code_") + std::to_string(j);
                }
                ctext += '\n';
                for (int i = 0; i < f.rows(); ++i) {
                    for (int j = 0; j < f.cols(); ++j) {
                        ftext += (j ? "," : "") + std::to_string(f(i, j));
                    }
                    ftext += '\n';
                    for (int j = 0; j < c.cols(); ++j) {
                        ctext += (j ? "," : "") + format_double(c(i, j));
                    }
                    ctext += '\n';
                }
                write_out("factors_" + ds + "_" + spec.id + ".csv", ftext);
                write_out("codes_" + ds + "_" + spec.id + ".csv", ctext);
            }
        }
        write_manifest();
        return !partial_;
    }

    // evaluate: score every dataset x encoder x seed cell, in parallel over
    // tasks; task outputs are merged in task order so --jobs never changes
    // the result
    bool evaluate() {
        load_external();
        struct Task {
            std::size_t dataset;
            const EncoderSpec* spec;        // null for external
            const OracleEncoder* enc;       // null for external
            const ExternalSpec* ext;        // null for internal
            const ExternalData* ext_data;
            std::uint64_t eval_seed;
            std::string id;
        };
        std::vector<Task> tasks;
        for (std::size_t di = 0; di < ctx_.cfg.datasets.size(); ++di) {
            const std::string& ds = ctx_.cfg.datasets[di].id;
            for (const auto& [spec, enc] : built_[di]) {
                for (std::uint64_t s : ctx_.cfg.eval_seeds) {
                    tasks.push_back({di, &spec, &enc, nullptr, nullptr, s,
                                     "eval|" + ds + "|" + spec.id + "|s" + std::to_string(s)});
                }
            }
            for (std::size_t xi = 0; xi < ctx_.cfg.external.size(); ++xi) {
                if (ctx_.cfg.external[xi].dataset != ds) continue;
                for (std::uint64_t s : ctx_.cfg.eval_seeds) {
                    tasks.push_back({di, nullptr, nullptr, &ctx_.cfg.external[xi],
                                     &external_data_[xi], s,
                                     "eval|" + ds + "|" + ctx_.cfg.external[xi].id + "|s" +
                                         std::to_string(s)});
                }
            }
        }

        struct Outcome {
            std::vector<ScoreRow> rows;
            std::vector<std::string> errors;
        };
        std::vector<Outcome> slots(tasks.size());
        std::atomic<std::size_t> next{0};
        auto worker = [&] {
            for (std::size_t i; (i = next.fetch_add(1)) < tasks.size();) {
                const Task& t = tasks[i];
                Outcome& o = slots[i];
                try {
                    for (const auto& [budget, metric_names] : metric_groups()) {
                        std::vector<MetricResult> rs =
                            t.enc ? evaluate_encoder(spaces_[t.dataset], *t.enc, budget,
                                                     metric_names, ctx_.master_seed, t.id)
                                  : evaluate_external(*t.ext_data, budget, metric_names,
                                                      ctx_.master_seed, t.id);
                        for (const auto& r : rs) {
                            if (r.failed) {
                                o.errors.push_back(r.name + ": " + r.error);
                                continue;
                            }
                            ScoreRow row;
                            row.encoder_id = t.enc ? t.spec->id : t.ext->id;
                            row.dataset_id = ctx_.cfg.datasets[t.dataset].id;
                            row.method_label =
                                t.enc ? encoder_method_label(*t.spec) : "external";
                            row.hyperparam_label =
                                t.enc ? encoder_hyperparam_label(*t.spec) : "-";
                            row.seed = t.eval_seed;
                            row.metric_name = r.name;
                            row.n_samples = budget.n_train;
                            row.value = r.value;
                            o.rows.push_back(std::move(row));
                        }
                    }
                } catch (const std::exception& e) {
                    o.errors.push_back(e.what());
                }
            }
        };
        const int n_threads = std::min<int>(ctx_.jobs, static_cast<int>(tasks.size()));
        if (n_threads <= 1) {
            worker();
        } else {
            std::vector<std::thread> pool;
            for (int i = 0; i < n_threads; ++i) pool.emplace_back(worker);
            for (auto& th : pool) th.join();
        }

        for (std::size_t i = 0; i < tasks.size(); ++i) {
            TaskRecord rec;
            rec.id = tasks[i].id;
            rec.seed = task_seed(ctx_.master_seed, tasks[i].id);
            if (!slots[i].errors.empty()) {
                rec.ok = false;
                std::string msg;
                for (const auto& e : slots[i].errors) {
                    if (!msg.empty()) msg += "; ";
                    msg += e;
                }
                rec.error = msg;
                partial_ = true;
            }
            tasks_.push_back(std::move(rec));
            for (auto& row : slots[i].rows) scores_.add(std::move(row));
        }
        scores_.validate_unique();
        write_out("scores.csv", scores_csv_text(scores_));
        write_manifest();
        return !partial_;
    }

    // analyze: derived tables from the score grid plus the data-dependent
    // analyses; downstream runs first because its rows feed the correlation
    // axes, and scores.csv is rewritten to include them
    bool analyze(bool load_scores_from_disk) {
        if (load_scores_from_disk) {
            scores_ = read_scores_csv((ctx_.out_dir / "scores.csv").string());
            // regenerate rather than duplicate downstream rows on a rerun
            ScoreTable kept;
            for (const auto& r : scores_.rows()) {
                if (r.metric_name.rfind("downstream_", 0) == 0) continue;
                if (r.metric_name.rfind("efficiency_", 0) == 0) continue;
                kept.add(r);
            }
            scores_ = std::move(kept);
        }
        for (const auto& a : ctx_.cfg.analyses) {
            if (a.name == "downstream") run_analysis(a, [&] { analyze_downstream(a); });
        }
        write_out("scores.csv", scores_csv_text(scores_));
        for (const auto& a : ctx_.cfg.analyses) {
            if (a.name == "rank_correlation") {
                run_analysis(a, [&] { analyze_rank_corr(a); });
            } else if (a.name == "independent_groups") {
                run_analysis(a, [&] { analyze_groups(a); });
            } else if (a.name == "variance_explained") {
                run_analysis(a, [&] { analyze_variance(a); });
            } else if (a.name == "transfer") {
                run_analysis(a, [&] { analyze_transfer(a); });
            } else if (a.name == "reliability") {
                run_analysis(a, [&] { analyze_reliability(a); });
            }
        }
        write_manifest();
        return !partial_;
    }

    // report: pure rendering of previously written CSVs into SVG figures
    bool report() {
        namespace fs = std::filesystem;
        std::vector<std::string> names;
        for (const auto& e : fs::directory_iterator(ctx_.out_dir)) {
            if (e.is_regular_file()) names.push_back(e.path().filename().string());
        }
        std::sort(names.begin(), names.end());

        bool any = false;
        auto stem_of = [](const std::string& name) {
            return name.substr(0, name.size() - 4);
        };
        for (const auto& name : names) {
            if (name.size() < 5 || name.substr(name.size() - 4) != ".csv") continue;
            const std::string path = (ctx_.out_dir / name).string();
            const std::string stem = stem_of(name);
            if (name == "scores.csv") {
                ScoreTable t = read_scores_csv(path);
                std::set<std::string> present;
                for (const auto& r : t.rows()) present.insert(r.metric_name);
                std::vector<std::string> panel;
                for (const auto& m : canonical_metric_names()) {
                    if (present.count(m)) panel.push_back(m);
                }
                if (panel.size() >= 2) {
                    write_out("fig_scatter.svg", svg_scatter_grid(t, panel, "metric scatter"));
                    any = true;
                }
            } else if (stem.rfind("rankcorr_", 0) == 0 || stem.rfind("confusion_", 0) == 0 ||
                       stem.rfind("matrix_", 0) == 0 || stem.rfind("varexp_", 0) == 0 ||
                       stem.rfind("transfer", 0) == 0) {
                NamedMatrix m = read_named_matrix_csv(path);
                write_out("fig_" + stem + ".svg", svg_heatmap(m, stem));
                any = true;
            } else if (stem.rfind("groups_curve_", 0) == 0) {
                NamedMatrix m = read_named_matrix_csv(path);
                std::vector<GroupsCurvePoint> curve;
                for (int r = 0; r < m.values.rows(); ++r) {
                    curve.push_back({m.values(r, 0), static_cast<int>(m.values(r, 1)),
                                     static_cast<int>(m.values(r, 2))});
                }
                write_out("fig_" + stem + ".svg", svg_step_plot(curve, stem));
                any = true;
            } else if (stem.rfind("downstream_", 0) == 0) {
                NamedMatrix m = read_named_matrix_csv(path);
                std::vector<std::pair<double, double>> pts;
                for (int r = 0; r < m.values.rows(); ++r) {
                    pts.emplace_back(m.values(r, 0), m.values(r, 1));
                }
                write_out("fig_" + stem + ".svg",
                          svg_line_plot(pts, stem, "training samples", "accuracy"));
                any = true;
            } else if (stem.rfind("dendrogram_", 0) == 0) {
                Dendrogram dd = load_dendrogram(path);
                std::vector<std::string> fnames;
                for (int i = 0; i < dd.n_factors; ++i) {
                    fnames.push_back("factor_" + std::to_string(i));
                }
                write_out("fig_" + stem + ".svg", svg_dendrogram(dd, fnames, stem));
                any = true;
            }
        }
        if (!any) {
            throw data_error("report: no renderable CSV outputs in '" + ctx_.out_dir.string() +
                             "'; run evaluate and analyze first");
        }
        write_manifest();
        return !partial_;
    }

    bool run() {
        bool ok = evaluate();
        ok = analyze(false) && ok;
        ok = report() && ok;
        return ok;
    }

    const ScoreTable& scores() const { return scores_; }
    const std::vector<TaskRecord>& tasks() const { return tasks_; }

  private:
    // metrics grouped by effective budget; one evaluate call per group keeps
    // per-metric seed streams identical regardless of grouping
    std::vector<std::pair<EvalBudget, std::vector<std::string>>> metric_groups() {
        std::map<std::pair<int, int>, std::vector<std::string>> groups;
        for (const auto& m : ctx_.cfg.metrics) {
            int tr = m.n_train.value_or(ctx_.cfg.default_budget.n_train);
            int te = m.n_test.value_or(ctx_.cfg.default_budget.n_test);
            groups[{tr, te}].push_back(m.name);
        }
        std::vector<std::pair<EvalBudget, std::vector<std::string>>> out;
        for (const auto& [key, names] : groups) {
            EvalBudget b = ctx_.cfg.default_budget;
            b.n_train = key.first;
            b.n_test = key.second;
            out.emplace_back(b, names);
        }
        return out;
    }

    void load_external() {
        if (!external_data_.empty() || ctx_.cfg.external.empty()) return;
        for (const auto& x : ctx_.cfg.external) {
            ExternalData data = ingest_external(x.factors_csv, x.codes_csv);
            for (const auto& w : data.warnings) warnings_.push_back(x.id + ": " + w);
            external_data_.push_back(std::move(data));
        }
    }

    template <typename Fn> void run_analysis(const AnalysisSpec& a, Fn&& fn) {
        const std::string id = "analysis|" + a.name + (a.name == "rank_correlation" ?
                                                       "|" + a.axis : "");
        record_task(id, task_seed(ctx_.master_seed, id));
        try {
            fn();
        } catch (const std::exception& e) {
            tasks_.back().ok = false;
            tasks_.back().error = e.what();
            partial_ = true;
        }
    }

    void analyze_downstream(const AnalysisSpec& a) {
        std::vector<std::string> wanted = a.encoders;
        if (wanted.empty()) {
            for (const auto& e : ctx_.cfg.encoders) wanted.push_back(e.id);
        }
        for (const auto& id : wanted) {
            bool internal = std::any_of(ctx_.cfg.encoders.begin(), ctx_.cfg.encoders.end(),
                                        [&](const EncoderSpec& e) { return e.id == id; });
            if (!internal) {
                throw argument_error("downstream: encoder '" + id +
                                     "' is external; downstream needs a resamplable encoder");
            }
        }
        for (std::size_t di = 0; di < ctx_.cfg.datasets.size(); ++di) {
            const std::string& ds = ctx_.cfg.datasets[di].id;
            for (const auto& [spec, enc] : built_[di]) {
                if (std::find(wanted.begin(), wanted.end(), spec.id) == wanted.end()) continue;
                NamedMatrix curve;
                curve.col_names = {"size", "mean_accuracy"};
                curve.values = Matrix(static_cast<int>(a.sizes.size()), 2);
                for (std::size_t si = 0; si < ctx_.cfg.eval_seeds.size(); ++si) {
                    const std::uint64_t s = ctx_.cfg.eval_seeds[si];
                    const std::string id = "downstream|" + ds + "|" + spec.id + "|" + a.learner +
                                           "|s" + std::to_string(s);
                    Rng rng(task_seed(ctx_.master_seed, id));
                    DownstreamResult r = downstream(
                        spaces_[di], enc, a.sizes,
                        a.learner == "gbt" ? DownstreamLearner::gbt
                                           : DownstreamLearner::logistic_cv,
                        5000, rng);
                    for (std::size_t zi = 0; zi < a.sizes.size(); ++zi) {
                        ScoreRow row;
                        row.encoder_id = spec.id;
                        row.dataset_id = ds;
                        row.method_label = encoder_method_label(spec);
                        row.hyperparam_label = encoder_hyperparam_label(spec);
                        row.seed = s;
                        row.metric_name =
                            "downstream_" + a.learner + "_" + std::to_string(a.sizes[zi]);
                        row.n_samples = a.sizes[zi];
                        row.value = r.mean_accuracy[zi];
                        scores_.add(std::move(row));
                    }
                    bool has_eff = std::find(a.sizes.begin(), a.sizes.end(), 100) != a.sizes.end() &&
                                   std::find(a.sizes.begin(), a.sizes.end(), 10000) != a.sizes.end();
                    if (has_eff) {
                        ScoreRow row;
                        row.encoder_id = spec.id;
                        row.dataset_id = ds;
                        row.method_label = encoder_method_label(spec);
                        row.hyperparam_label = encoder_hyperparam_label(spec);
                        row.seed = s;
                        row.metric_name = "efficiency_" + a.learner;
                        row.n_samples = 10000;
                        row.value = statistical_efficiency(r);
                        scores_.add(std::move(row));
                    }
                    if (si == 0) {
                        for (std::size_t zi = 0; zi < a.sizes.size(); ++zi) {
                            curve.values(static_cast<int>(zi), 0) = a.sizes[zi];
                            curve.values(static_cast<int>(zi), 1) = r.mean_accuracy[zi];
                            curve.row_names.push_back(std::to_string(a.sizes[zi]));
                        }
                    }
                }
                write_out("downstream_" + ds + "_" + spec.id + "_" + a.learner + ".csv",
                          named_matrix_csv_text(curve));
            }
        }
    }

    void analyze_rank_corr(const AnalysisSpec& a) {
        CorrAxis axis = CorrAxis::metric_vs_metric;
        if (a.axis == "metric_vs_dataset") axis = CorrAxis::metric_vs_dataset;
        else if (a.axis == "unsupervised_vs_metric") axis = CorrAxis::unsupervised_vs_metric;
        else if (a.axis == "metric_vs_downstream") axis = CorrAxis::metric_vs_downstream;
        CorrelationTable c = rank_corr_table(scores_, axis);
        NamedMatrix m;
        m.row_names = c.row_names;
        m.col_names = c.col_names;
        m.values = c.rho;
        m.missing = c.missing;
        write_out("rankcorr_" + a.axis + ".csv", named_matrix_csv_text(m));
        write_sidecar("rankcorr_" + a.axis + ".json",
                      {{"analysis", "rank_correlation"},
                       {"axis", a.axis},
                       {"statistic", "spearman"},
                       {"matched_on", "dataset, encoder, seed, n_samples"}});
    }

    void analyze_groups(const AnalysisSpec& a) {
        std::vector<double> thresholds = a.thresholds;
        if (thresholds.empty()) {
            for (int i = 1; i <= 49; ++i) thresholds.push_back(0.02 * i);
        }
        for (std::size_t di = 0; di < ctx_.cfg.datasets.size(); ++di) {
            const std::string& ds = ctx_.cfg.datasets[di].id;
            std::vector<Dendrogram> dendros;
            for (const auto& [spec, enc] : built_[di]) {
                const std::uint64_t s = ctx_.cfg.eval_seeds.front();
                const std::string id = "groups|" + ds + "|" + spec.id + "|s" + std::to_string(s);
                Rng rng(task_seed(ctx_.master_seed, id));
                const EvalBudget& b = ctx_.cfg.default_budget;
                FactorBatch f = sample_factors(spaces_[di], b.n_train + b.n_test, rng);
                CodeBatch c = encode(enc, f, CodeMode::mean, rng);
                std::vector<std::string> names;
                for (const auto& fac : spaces_[di].factors()) names.push_back(fac.name);
                FactorCodeMatrix rel =
                    normalize_by_max(gbt_matrix(f, c, b.n_train, b.n_test, {}, names));

                NamedMatrix rel_nm = named_matrix(rel.values, rel.factor_names);
                write_out("matrix_gbt_" + ds + "_" + spec.id + ".csv",
                          named_matrix_csv_text(rel_nm));

                auto curve = independent_groups_curve(rel, thresholds);
                NamedMatrix cm;
                cm.col_names = {"threshold", "mixed_components", "factors_connected"};
                cm.values = Matrix(static_cast<int>(curve.size()), 3);
                for (std::size_t i = 0; i < curve.size(); ++i) {
                    cm.values(static_cast<int>(i), 0) = curve[i].threshold;
                    cm.values(static_cast<int>(i), 1) = curve[i].components_gt_one;
                    cm.values(static_cast<int>(i), 2) = curve[i].factors_connected;
                    cm.row_names.push_back(std::to_string(i));
                }
                write_out("groups_curve_" + ds + "_" + spec.id + ".csv",
                          named_matrix_csv_text(cm));

                Dendrogram dd = dendrogram(rel);
                NamedMatrix dm;
                dm.col_names = {"threshold", "factor_a", "factor_b"};
                dm.values = Matrix(static_cast<int>(dd.merges.size()), 3);
                for (std::size_t i = 0; i < dd.merges.size(); ++i) {
                    dm.values(static_cast<int>(i), 0) = dd.merges[i].threshold;
                    dm.values(static_cast<int>(i), 1) = dd.merges[i].factor_a;
                    dm.values(static_cast<int>(i), 2) = dd.merges[i].factor_b;
                    dm.row_names.push_back(std::to_string(i));
                }
                write_out("dendrogram_" + ds + "_" + spec.id + ".csv", named_matrix_csv_text(dm));
                write_sidecar("dendrogram_" + ds + "_" + spec.id + ".json",
                              {{"analysis", "independent_groups"},
                               {"n_factors", std::to_string(dd.n_factors)},
                               {"direction",
                                "higher threshold = factors entangled at stricter cutoffs"}});
                dendros.push_back(std::move(dd));
            }
            if (!dendros.empty()) {
                Matrix conf = confusion_thresholds(dendros);
                std::vector<std::string> names;
                for (const auto& fac : spaces_[di].factors()) names.push_back(fac.name);
                write_out("confusion_" + ds + ".csv",
                          named_matrix_csv_text(named_matrix(conf, names, names)));
                write_sidecar("confusion_" + ds + ".json",
                              {{"analysis", "independent_groups"},
                               {"cell", "mean merge threshold over encoders"},
                               {"direction",
                                "higher = the factor pair merges at stricter cutoffs"}});
            }
        }
    }

    void analyze_variance(const AnalysisSpec& a) {
        VarianceDesign d = a.design == "method_by_hyperparam"
                               ? VarianceDesign::method_by_hyperparam
                               : VarianceDesign::method;
        VarianceExplained v = variance_explained(scores_, d);
        write_out("varexp_" + a.design + ".csv",
                  named_matrix_csv_text(named_matrix(v.r2, v.dataset_ids, v.metric_names)));
    }

    void analyze_transfer(const AnalysisSpec& a) {
        // downstream rows cover only a subset of encoders; the transfer grid
        // must be complete, so restrict to the plain metric rows
        ScoreTable plain;
        for (const auto& r : scores_.rows()) {
            if (r.metric_name.rfind("downstream_", 0) == 0) continue;
            if (r.metric_name.rfind("efficiency_", 0) == 0) continue;
            plain.add(r);
        }
        Rng rng(task_seed(ctx_.master_seed, "analysis|transfer"));
        TransferCells c = transfer_protocol(plain, a.trials, rng);
        NamedMatrix m;
        m.row_names = {"same_metric", "diff_metric"};
        m.col_names = {"same_dataset", "diff_dataset"};
        m.values = Matrix(2, 2);
        m.values(0, 0) = c.same_metric_same_dataset;
        m.values(0, 1) = c.same_metric_diff_dataset;
        m.values(1, 0) = c.diff_metric_same_dataset;
        m.values(1, 1) = c.diff_metric_diff_dataset;
        write_out("transfer.csv", named_matrix_csv_text(m));
    }

    void analyze_reliability(const AnalysisSpec& a) {
        for (std::size_t di = 0; di < ctx_.cfg.datasets.size(); ++di) {
            const std::string& ds = ctx_.cfg.datasets[di].id;
            std::vector<OracleEncoder> encoders;
            for (const auto& [spec, enc] : built_[di]) encoders.push_back(enc);
            ReliabilityResult r = reliability(
                spaces_[di], encoders, a.metrics, a.n,
                task_seed(ctx_.master_seed, "reliability|" + ds + "|a"),
                task_seed(ctx_.master_seed, "reliability|" + ds + "|b"));
            NamedMatrix m;
            m.col_names = {"spearman"};
            m.values = Matrix(static_cast<int>(r.rho.size()), 1);
            for (std::size_t i = 0; i < r.rho.size(); ++i) {
                m.row_names.push_back(r.metric_names[i]);
                m.values(static_cast<int>(i), 0) = r.rho[i];
            }
            write_out("reliability_" + ds + ".csv", named_matrix_csv_text(m));
        }
    }

    Dendrogram load_dendrogram(const std::string& csv_path) {
        NamedMatrix m = read_named_matrix_csv(csv_path);
        std::string sidecar = csv_path.substr(0, csv_path.size() - 4) + ".json";
        std::ifstream in(sidecar, std::ios::binary);
        if (!in) throw data_error("report: missing sidecar '" + sidecar + "'");
        nlohmann::json j;
        try {
            in >> j;
        } catch (const std::exception& e) {
            throw data_error("report: bad sidecar '" + sidecar + "': " + e.what());
        }
        Dendrogram d;
        d.n_factors = std::stoi(j.at("n_factors").get<std::string>());
        d.pair_threshold = Matrix(d.n_factors, d.n_factors);
        for (int r = 0; r < m.values.rows(); ++r) {
            MergeEvent e;
            e.threshold = m.values(r, 0);
            e.factor_a = static_cast<int>(m.values(r, 1));
            e.factor_b = static_cast<int>(m.values(r, 2));
            d.merges.push_back(e);
        }
        return d;
    }

    void record_task(const std::string& id, std::uint64_t seed) {
        tasks_.push_back({id, seed, true, ""});
    }

    void write_out(const std::string& name, const std::string& text) {
        detail::write_file((ctx_.out_dir / name).string(), text);
        files_.insert(name);
    }

    void write_sidecar(const std::string& name,
                       std::initializer_list<std::pair<std::string, std::string>> fields) {
        nlohmann::json j;
        for (const auto& [k, v] : fields) j[k] = v;
        write_out(name, j.dump(2) + "\n");
    }

    void write_manifest() {
        nlohmann::json j;
        j["tool"] = tool_name;
        j["version"] = tool_version;
        j["config_hash"] = "fnv1a64:" + hex64(fnv1a64(ctx_.config_text));
        j["master_seed"] = ctx_.master_seed;
        j["jobs"] = ctx_.jobs;
        j["files"] = std::vector<std::string>(files_.begin(), files_.end());
        nlohmann::json tasks = nlohmann::json::array();
        for (const auto& t : tasks_) {
            nlohmann::json tj;
            tj["id"] = t.id;
            tj["seed"] = t.seed;
            tj["status"] = t.ok ? "ok" : "failed";
            if (!t.ok) tj["error"] = t.error;
            tasks.push_back(std::move(tj));
        }
        j["tasks"] = std::move(tasks);
        j["warnings"] = warnings_;
        // the single nondeterministic field; everything else is
        // byte-reproducible across reruns
        j["timestamp"] = iso_timestamp();
        detail::write_file((ctx_.out_dir / "manifest.json").string(), j.dump(2) + "\n");
    }

    static std::string iso_timestamp() {
        std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
        std::tm tm{};
        gmtime_r(&now, &tm);
        char buf[32];
        std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
        return buf;
    }

    RunContext ctx_;
    std::vector<FactorSpace> spaces_;
    std::vector<std::vector<std::pair<EncoderSpec, OracleEncoder>>> built_;
    std::vector<ExternalData> external_data_;
    ScoreTable scores_;
    std::vector<TaskRecord> tasks_;
    std::vector<std::string> warnings_;
    std::set<std::string> files_;
    bool partial_ = false;
};

} // namespace disent
