#pragma once

#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "disent/analysis.hpp"
#include "disent/errors.hpp"
#include "disent/factor_model.hpp"
#include "disent/metrics.hpp"

namespace disent {

// ---- run configuration --------------------------------------------------------

struct DatasetSpec {
    std::string id;
    std::vector<int> cardinalities;
};

struct EncoderSpec {
    std::string id;
    std::string kind;
    double sigma = 0.0;
    std::vector<int> perm;                // permute_scale
    std::vector<double> scale;            // permute_scale
    std::vector<std::vector<int>> groups; // merge
    std::vector<int> copies;              // duplicate
    int extra = 0;                        // noise_channels
    double noise_sd = 1.0;                // noise_channels
    int constant_dims = 0;                // collapsed
    bool keep_factors = true;             // collapsed
    double constant_value = 0.5;          // collapsed
    double alpha = 0.25;                  // rotation
    std::string marginal = "uniform01";   // rotation
};

struct ExternalSpec {
    std::string id;
    std::string dataset;
    std::string factors_csv;
    std::string codes_csv;
};

struct MetricSpec {
    std::string name;
    std::optional<int> n_train, n_test;
};

struct AnalysisSpec {
    std::string name;
    std::string axis = "metric_vs_metric";          // rank_correlation
    std::vector<double> thresholds;                 // independent_groups (optional)
    std::string learner = "logistic_cv";            // downstream
    std::vector<int> sizes = {10, 100, 1000, 10000}; // downstream
    std::vector<std::string> encoders;              // downstream subset (optional)
    std::string design = "method";                  // variance_explained
    int trials = 10000;                             // transfer
    int n = 10000;                                  // reliability
    std::vector<std::string> metrics = {"mig"};     // reliability
};

struct RunConfig {
    std::uint64_t seed = 0;
    std::string output_dir; // may be empty; the CLI resolves the final directory
    std::vector<DatasetSpec> datasets;
    std::vector<EncoderSpec> encoders;
    std::vector<ExternalSpec> external;
    std::vector<MetricSpec> metrics;
    std::vector<std::uint64_t> eval_seeds = {0};
    EvalBudget default_budget;
    std::vector<AnalysisSpec> analyses;
};

// ---- strict JSON helpers --------------------------------------------------------

namespace detail {

using json = nlohmann::json;

inline void reject_unknown_keys(const json& obj, const std::string& path,
                                const std::set<std::string>& allowed) {
    for (const auto& [key, _] : obj.items()) {
        if (!allowed.count(key)) {
            throw argument_error("config: unknown key '" + path + "." + key + "'");
        }
    }
}

inline const json& require_key(const json& obj, const std::string& path, const char* key) {
    auto it = obj.find(key);
    if (it == obj.end()) {
        throw argument_error("config: missing key '" + path + "." + key + "'");
    }
    return *it;
}

inline std::string want_string(const json& v, const std::string& path) {
    if (!v.is_string()) throw argument_error("config: '" + path + "' must be a string");
    return v.get<std::string>();
}

inline double want_number(const json& v, const std::string& path) {
    if (!v.is_number()) throw argument_error("config: '" + path + "' must be a number");
    return v.get<double>();
}

inline int want_int(const json& v, const std::string& path) {
    if (!v.is_number_integer()) throw argument_error("config: '" + path + "' must be an integer");
    return v.get<int>();
}

inline std::uint64_t want_uint(const json& v, const std::string& path) {
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
        throw argument_error("config: '" + path + "' must be a nonnegative integer");
    }
    return v.get<std::uint64_t>();
}

inline bool want_bool(const json& v, const std::string& path) {
    if (!v.is_boolean()) throw argument_error("config: '" + path + "' must be a boolean");
    return v.get<bool>();
}

inline const json& want_array(const json& v, const std::string& path) {
    if (!v.is_array()) throw argument_error("config: '" + path + "' must be an array");
    return v;
}

inline std::vector<int> want_int_array(const json& v, const std::string& path) {
    std::vector<int> out;
    for (std::size_t i = 0; i < want_array(v, path).size(); ++i) {
        out.push_back(want_int(v[i], path + "[" + std::to_string(i) + "]"));
    }
    return out;
}

inline std::vector<double> want_number_array(const json& v, const std::string& path) {
    std::vector<double> out;
    for (std::size_t i = 0; i < want_array(v, path).size(); ++i) {
        out.push_back(want_number(v[i], path + "[" + std::to_string(i) + "]"));
    }
    return out;
}

inline std::vector<std::string> want_string_array(const json& v, const std::string& path) {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < want_array(v, path).size(); ++i) {
        out.push_back(want_string(v[i], path + "[" + std::to_string(i) + "]"));
    }
    return out;
}

inline EncoderSpec parse_encoder_spec(const json& e, const std::string& path) {
    if (!e.is_object()) throw argument_error("config: '" + path + "' must be an object");
    EncoderSpec spec;
    spec.id = want_string(require_key(e, path, "id"), path + ".id");
    spec.kind = want_string(require_key(e, path, "kind"), path + ".kind");

    std::set<std::string> allowed = {"id", "kind", "sigma"};
    if (spec.kind == "identity") {
        // no extra keys
    } else if (spec.kind == "permute_scale") {
        allowed.insert({"perm", "scale"});
    } else if (spec.kind == "merge") {
        allowed.insert("groups");
    } else if (spec.kind == "duplicate") {
        allowed.insert("copies");
    } else if (spec.kind == "noise_channels") {
        allowed.insert({"extra", "noise_sd"});
    } else if (spec.kind == "collapsed") {
        allowed.insert({"constant_dims", "keep_factors", "constant_value"});
    } else if (spec.kind == "rotation") {
        allowed.insert({"alpha", "marginal"});
    } else {
        throw argument_error("config: '" + path + ".kind' has unknown encoder kind '" +
                             spec.kind + "'");
    }
    reject_unknown_keys(e, path, allowed);

    if (e.contains("sigma")) {
        spec.sigma = want_number(e["sigma"], path + ".sigma");
        if (spec.sigma < 0.0) throw argument_error("config: '" + path + ".sigma' must be >= 0");
    }
    if (spec.kind == "permute_scale") {
        if (e.contains("perm")) spec.perm = want_int_array(e["perm"], path + ".perm");
        if (e.contains("scale")) {
            spec.scale = want_number_array(e["scale"], path + ".scale");
        }
    } else if (spec.kind == "merge") {
        const json& g = want_array(require_key(e, path, "groups"), path + ".groups");
        for (std::size_t i = 0; i < g.size(); ++i) {
            spec.groups.push_back(want_int_array(g[i], path + ".groups[" + std::to_string(i) + "]"));
        }
    } else if (spec.kind == "duplicate") {
        spec.copies = want_int_array(require_key(e, path, "copies"), path + ".copies");
    } else if (spec.kind == "noise_channels") {
        spec.extra = want_int(require_key(e, path, "extra"), path + ".extra");
        if (spec.extra < 1) throw argument_error("config: '" + path + ".extra' must be >= 1");
        if (e.contains("noise_sd")) {
            spec.noise_sd = want_number(e["noise_sd"], path + ".noise_sd");
            if (spec.noise_sd <= 0.0) {
                throw argument_error("config: '" + path + ".noise_sd' must be > 0");
            }
        }
    } else if (spec.kind == "collapsed") {
        spec.constant_dims = want_int(require_key(e, path, "constant_dims"),
                                      path + ".constant_dims");
        if (spec.constant_dims < 0) {
            throw argument_error("config: '" + path + ".constant_dims' must be >= 0");
        }
        if (e.contains("keep_factors")) {
            spec.keep_factors = want_bool(e["keep_factors"], path + ".keep_factors");
        }
        if (e.contains("constant_value")) {
            spec.constant_value = want_number(e["constant_value"], path + ".constant_value");
        }
    } else if (spec.kind == "rotation") {
        spec.alpha = want_number(require_key(e, path, "alpha"), path + ".alpha");
        if (!(spec.alpha > 0.0 && spec.alpha < 0.5)) {
            throw argument_error("config: '" + path +
                                 ".alpha' must lie strictly inside (0, 0.5)");
        }
        if (e.contains("marginal")) {
            spec.marginal = want_string(e["marginal"], path + ".marginal");
            if (spec.marginal != "uniform01" && spec.marginal != "normal") {
                throw argument_error("config: '" + path +
                                     ".marginal' must be 'uniform01' or 'normal'");
            }
        }
    }
    return spec;
}

inline AnalysisSpec parse_analysis_spec(const json& a, const std::string& path) {
    if (!a.is_object()) throw argument_error("config: '" + path + "' must be an object");
    AnalysisSpec spec;
    spec.name = want_string(require_key(a, path, "name"), path + ".name");

    std::set<std::string> allowed = {"name"};
    if (spec.name == "rank_correlation") {
        allowed.insert("axis");
    } else if (spec.name == "independent_groups") {
        allowed.insert("thresholds");
    } else if (spec.name == "downstream") {
        allowed.insert({"learner", "sizes", "encoders"});
    } else if (spec.name == "variance_explained") {
        allowed.insert("design");
    } else if (spec.name == "transfer") {
        allowed.insert("trials");
    } else if (spec.name == "reliability") {
        allowed.insert({"n", "metrics"});
    } else {
        throw argument_error("config: '" + path + ".name' has unknown analysis '" + spec.name +
                             "'");
    }
    reject_unknown_keys(a, path, allowed);

    if (a.contains("axis")) {
        spec.axis = want_string(a["axis"], path + ".axis");
        static const std::set<std::string> axes = {"metric_vs_metric", "metric_vs_dataset",
                                                   "unsupervised_vs_metric",
                                                   "metric_vs_downstream"};
        if (!axes.count(spec.axis)) {
            throw argument_error("config: '" + path + ".axis' has unknown axis '" + spec.axis +
                                 "'");
        }
    }
    if (a.contains("thresholds")) {
        spec.thresholds = want_number_array(a["thresholds"], path + ".thresholds");
        for (double t : spec.thresholds) {
            if (!(t >= 0.0 && t <= 1.0)) {
                throw argument_error("config: '" + path + ".thresholds' must lie in [0, 1]");
            }
        }
    }
    if (a.contains("learner")) {
        spec.learner = want_string(a["learner"], path + ".learner");
        if (spec.learner != "logistic_cv" && spec.learner != "gbt") {
            throw argument_error("config: '" + path +
                                 ".learner' must be 'logistic_cv' or 'gbt'");
        }
    }
    if (a.contains("sizes")) {
        spec.sizes = want_int_array(a["sizes"], path + ".sizes");
        if (spec.sizes.empty()) {
            throw argument_error("config: '" + path + ".sizes' must be nonempty");
        }
        for (int s : spec.sizes) {
            if (s < 1) throw argument_error("config: '" + path + ".sizes' must be positive");
        }
    }
    if (a.contains("encoders")) {
        spec.encoders = want_string_array(a["encoders"], path + ".encoders");
    }
    if (a.contains("design")) {
        spec.design = want_string(a["design"], path + ".design");
        if (spec.design != "method" && spec.design != "method_by_hyperparam") {
            throw argument_error("config: '" + path +
                                 ".design' must be 'method' or 'method_by_hyperparam'");
        }
    }
    if (a.contains("trials")) {
        spec.trials = want_int(a["trials"], path + ".trials");
        if (spec.trials < 1) throw argument_error("config: '" + path + ".trials' must be >= 1");
    }
    if (a.contains("n")) {
        spec.n = want_int(a["n"], path + ".n");
        if (spec.n < 8) throw argument_error("config: '" + path + ".n' must be >= 8");
    }
    if (a.contains("metrics")) {
        spec.metrics = want_string_array(a["metrics"], path + ".metrics");
        if (spec.metrics.empty()) {
            throw argument_error("config: '" + path + ".metrics' must be nonempty");
        }
    }
    return spec;
}

} // namespace detail

// Builds a concrete encoder for one dataset's factor space. Validation that
// needs the cardinalities (permutation size, merge group indices) happens
// here rather than at parse time.
inline OracleEncoder build_encoder(const EncoderSpec& spec, const FactorSpace& space) {
    OracleEncoder enc;
    if (spec.kind == "identity") {
        enc = identity_encoder(space, spec.sigma);
    } else if (spec.kind == "permute_scale") {
        std::vector<int> perm = spec.perm;
        if (perm.empty()) {
            perm.resize(space.size());
            for (int i = 0; i < space.size(); ++i) perm[i] = (i + 1) % space.size();
        }
        std::vector<double> scale = spec.scale;
        if (scale.empty()) scale.assign(perm.size(), 1.0);
        enc = permute_scale_encoder(space, perm, scale, spec.sigma);
    } else if (spec.kind == "merge") {
        enc = merge_encoder(space, spec.groups, spec.sigma);
    } else if (spec.kind == "duplicate") {
        enc = duplicate_encoder(space, spec.copies, spec.sigma);
    } else if (spec.kind == "noise_channels") {
        enc = noise_channels_encoder(space, spec.extra, spec.noise_sd, spec.sigma);
    } else if (spec.kind == "collapsed") {
        enc = collapsed_encoder(space, spec.constant_dims, spec.keep_factors, spec.constant_value,
                                spec.sigma);
    } else if (spec.kind == "rotation") {
        enc = rotation_encoder(space, spec.alpha,
                               spec.marginal == "normal" ? Marginal::standard_normal
                                                         : Marginal::uniform01,
                               spec.sigma);
    } else {
        throw argument_error("build_encoder: unknown kind '" + spec.kind + "'");
    }
    enc.id = spec.id;
    return enc;
}

// Strict parse: every key is checked, unknown keys are rejected by name, and
// range errors carry the JSON path of the offending value.
inline RunConfig parse_config(const std::string& text) {
    detail::json root;
    try {
        root = detail::json::parse(text);
    } catch (const std::exception& e) {
        throw argument_error(std::string("config: invalid JSON: ") + e.what());
    }
    if (!root.is_object()) throw argument_error("config: top level must be an object");
    detail::reject_unknown_keys(root, "$",
                                {"seed", "output_dir", "datasets", "encoders", "external",
                                 "metrics", "eval_seeds", "budget", "analyses",
                                 "modularity_dead_code"});

    RunConfig cfg;
    cfg.seed = detail::want_uint(detail::require_key(root, "$", "seed"), "$.seed");
    if (root.contains("output_dir")) {
        cfg.output_dir = detail::want_string(root["output_dir"], "$.output_dir");
    }

    const detail::json& ds = detail::want_array(detail::require_key(root, "$", "datasets"),
                                                "$.datasets");
    if (ds.empty()) throw argument_error("config: '$.datasets' must be nonempty");
    std::set<std::string> ds_ids;
    for (std::size_t i = 0; i < ds.size(); ++i) {
        std::string path = "$.datasets[" + std::to_string(i) + "]";
        if (!ds[i].is_object()) throw argument_error("config: '" + path + "' must be an object");
        detail::reject_unknown_keys(ds[i], path, {"id", "cardinalities"});
        DatasetSpec d;
        d.id = detail::want_string(detail::require_key(ds[i], path, "id"), path + ".id");
        d.cardinalities = detail::want_int_array(
            detail::require_key(ds[i], path, "cardinalities"), path + ".cardinalities");
        if (d.cardinalities.size() < 2) {
            throw argument_error("config: '" + path + ".cardinalities' needs >= 2 factors");
        }
        for (int c : d.cardinalities) {
            if (c < 2) {
                throw argument_error("config: '" + path + ".cardinalities' entries must be >= 2");
            }
        }
        if (!ds_ids.insert(d.id).second) {
            throw argument_error("config: duplicate dataset id '" + d.id + "'");
        }
        cfg.datasets.push_back(std::move(d));
    }

    std::set<std::string> enc_ids;
    if (root.contains("encoders")) {
        const detail::json& es = detail::want_array(root["encoders"], "$.encoders");
        for (std::size_t i = 0; i < es.size(); ++i) {
            EncoderSpec spec =
                detail::parse_encoder_spec(es[i], "$.encoders[" + std::to_string(i) + "]");
            if (!enc_ids.insert(spec.id).second) {
                throw argument_error("config: duplicate encoder id '" + spec.id + "'");
            }
            cfg.encoders.push_back(std::move(spec));
        }
    }
    if (root.contains("external")) {
        const detail::json& xs = detail::want_array(root["external"], "$.external");
        for (std::size_t i = 0; i < xs.size(); ++i) {
            std::string path = "$.external[" + std::to_string(i) + "]";
            if (!xs[i].is_object()) {
                throw argument_error("config: '" + path + "' must be an object");
            }
            detail::reject_unknown_keys(xs[i], path, {"id", "dataset", "factors_csv", "codes_csv"});
            ExternalSpec x;
            x.id = detail::want_string(detail::require_key(xs[i], path, "id"), path + ".id");
            x.dataset = detail::want_string(detail::require_key(xs[i], path, "dataset"),
                                            path + ".dataset");
            x.factors_csv = detail::want_string(detail::require_key(xs[i], path, "factors_csv"),
                                                path + ".factors_csv");
            x.codes_csv = detail::want_string(detail::require_key(xs[i], path, "codes_csv"),
                                              path + ".codes_csv");
            if (!ds_ids.count(x.dataset)) {
                throw argument_error("config: '" + path + ".dataset' references unknown dataset '" +
                                     x.dataset + "'");
            }
            if (!enc_ids.insert(x.id).second) {
                throw argument_error("config: duplicate encoder id '" + x.id + "'");
            }
            cfg.external.push_back(std::move(x));
        }
    }
    if (cfg.encoders.empty() && cfg.external.empty()) {
        throw argument_error("config: need at least one entry in '$.encoders' or '$.external'");
    }

    const detail::json& ms = detail::want_array(detail::require_key(root, "$", "metrics"),
                                                "$.metrics");
    if (ms.empty()) throw argument_error("config: '$.metrics' must be nonempty");
    for (std::size_t i = 0; i < ms.size(); ++i) {
        std::string path = "$.metrics[" + std::to_string(i) + "]";
        MetricSpec m;
        if (ms[i].is_string()) {
            m.name = ms[i].get<std::string>();
        } else if (ms[i].is_object()) {
            detail::reject_unknown_keys(ms[i], path, {"name", "n_train", "n_test"});
            m.name = detail::want_string(detail::require_key(ms[i], path, "name"), path + ".name");
            if (ms[i].contains("n_train")) {
                m.n_train = detail::want_int(ms[i]["n_train"], path + ".n_train");
                if (*m.n_train < 2) {
                    throw argument_error("config: '" + path + ".n_train' must be >= 2");
                }
            }
            if (ms[i].contains("n_test")) {
                m.n_test = detail::want_int(ms[i]["n_test"], path + ".n_test");
                if (*m.n_test < 2) {
                    throw argument_error("config: '" + path + ".n_test' must be >= 2");
                }
            }
        } else {
            throw argument_error("config: '" + path + "' must be a string or object");
        }
        cfg.metrics.push_back(std::move(m));
    }

    if (root.contains("eval_seeds")) {
        const detail::json& ss = detail::want_array(root["eval_seeds"], "$.eval_seeds");
        if (ss.empty()) throw argument_error("config: '$.eval_seeds' must be nonempty");
        cfg.eval_seeds.clear();
        std::set<std::uint64_t> seen;
        for (std::size_t i = 0; i < ss.size(); ++i) {
            std::uint64_t s = detail::want_uint(ss[i], "$.eval_seeds[" + std::to_string(i) + "]");
            if (!seen.insert(s).second) {
                throw argument_error("config: duplicate value in '$.eval_seeds'");
            }
            cfg.eval_seeds.push_back(s);
        }
    }

    if (root.contains("budget")) {
        const detail::json& b = root["budget"];
        if (!b.is_object()) throw argument_error("config: '$.budget' must be an object");
        detail::reject_unknown_keys(b, "$.budget", {"n_train", "n_test", "batch", "bins"});
        if (b.contains("n_train")) {
            cfg.default_budget.n_train = detail::want_int(b["n_train"], "$.budget.n_train");
            if (cfg.default_budget.n_train < 2) {
                throw argument_error("config: '$.budget.n_train' must be >= 2");
            }
        }
        if (b.contains("n_test")) {
            cfg.default_budget.n_test = detail::want_int(b["n_test"], "$.budget.n_test");
            if (cfg.default_budget.n_test < 2) {
                throw argument_error("config: '$.budget.n_test' must be >= 2");
            }
        }
        if (b.contains("batch")) {
            cfg.default_budget.batch = detail::want_int(b["batch"], "$.budget.batch");
            if (cfg.default_budget.batch < 2) {
                throw argument_error("config: '$.budget.batch' must be >= 2");
            }
        }
        if (b.contains("bins")) {
            cfg.default_budget.bins = detail::want_int(b["bins"], "$.budget.bins");
            if (cfg.default_budget.bins < 2) {
                throw argument_error("config: '$.budget.bins' must be >= 2");
            }
        }
    }
    if (root.contains("modularity_dead_code")) {
        std::string v = detail::want_string(root["modularity_dead_code"],
                                            "$.modularity_dead_code");
        if (v == "modular") {
            cfg.default_budget.dead_code_modular = true;
        } else if (v == "entangled") {
            cfg.default_budget.dead_code_modular = false;
        } else {
            throw argument_error(
                "config: '$.modularity_dead_code' must be 'modular' or 'entangled'");
        }
    }

    if (root.contains("analyses")) {
        const detail::json& as = detail::want_array(root["analyses"], "$.analyses");
        for (std::size_t i = 0; i < as.size(); ++i) {
            cfg.analyses.push_back(
                detail::parse_analysis_spec(as[i], "$.analyses[" + std::to_string(i) + "]"));
        }
    }

    // cross checks that need the whole document
    for (const auto& a : cfg.analyses) {
        if (a.name != "downstream") continue;
        for (const auto& id : a.encoders) {
            if (!enc_ids.count(id)) {
                throw argument_error("config: downstream analysis references unknown encoder '" +
                                     id + "'");
            }
        }
    }
    return cfg;
}

// Reads and parses a config file; missing referenced external CSVs are
// reported here so a bad path fails before any work starts.
inline RunConfig load_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw argument_error("config: cannot open '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    RunConfig cfg = parse_config(ss.str());
    for (const auto& x : cfg.external) {
        for (const std::string& p : {x.factors_csv, x.codes_csv}) {
            if (!std::filesystem::exists(p)) {
                throw argument_error("config: referenced file '" + p + "' does not exist");
            }
        }
    }
    return cfg;
}

} // namespace disent
