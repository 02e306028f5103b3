#include <catch2/catch_amalgamated.hpp>

#include <disent/runner.hpp>

#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <map>
#include <string>

using namespace disent;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& tag) {
    fs::path p = fs::temp_directory_path() / ("disent_runner_" + tag);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// every regular file in the directory, keyed by name
std::map<std::string, std::string> dir_contents(const fs::path& dir) {
    std::map<std::string, std::string> out;
    for (const auto& e : fs::directory_iterator(dir)) {
        if (e.is_regular_file()) out[e.path().filename().string()] = slurp(e.path());
    }
    return out;
}

const char* small_config_text = R"({
    "seed": 11,
    "datasets": [{"id": "d0", "cardinalities": [3, 4]}],
    "encoders": [
        {"id": "id0", "kind": "identity"},
        {"id": "rot", "kind": "rotation", "alpha": 0.3}
    ],
    "metrics": ["mig", "sap", "modularity"],
    "eval_seeds": [0, 1],
    "budget": {"n_train": 300, "n_test": 150},
    "analyses": [
        {"name": "rank_correlation", "axis": "metric_vs_metric"},
        {"name": "independent_groups", "thresholds": [0.1, 0.3, 0.5, 0.7]}
    ]
})";

RunContext make_ctx(const std::string& text, const fs::path& out, int jobs = 1) {
    RunContext ctx;
    ctx.cfg = parse_config(text);
    ctx.config_text = text;
    ctx.out_dir = out;
    ctx.master_seed = ctx.cfg.seed;
    ctx.jobs = jobs;
    return ctx;
}

} // namespace

TEST_CASE("repeated runs produce byte-identical files") {
    fs::path a = fresh_dir("rep_a"), b = fresh_dir("rep_b");
    REQUIRE(Runner(make_ctx(small_config_text, a)).run());
    REQUIRE(Runner(make_ctx(small_config_text, b)).run());

    auto fa = dir_contents(a), fb = dir_contents(b);
    REQUIRE(fa.size() == fb.size());
    CHECK(fa.count("scores.csv") == 1);
    for (const auto& [name, bytes] : fa) {
        if (name == "manifest.json") continue; // differs only by timestamp
        INFO(name);
        CHECK(bytes == fb.at(name));
    }

    auto ma = nlohmann::json::parse(fa.at("manifest.json"));
    auto mb = nlohmann::json::parse(fb.at("manifest.json"));
    ma.erase("timestamp");
    mb.erase("timestamp");
    CHECK(ma == mb);
}

TEST_CASE("worker count does not change any output") {
    fs::path a = fresh_dir("jobs_1"), b = fresh_dir("jobs_4");
    REQUIRE(Runner(make_ctx(small_config_text, a, 1)).run());
    REQUIRE(Runner(make_ctx(small_config_text, b, 4)).run());
    auto fa = dir_contents(a), fb = dir_contents(b);
    for (const auto& [name, bytes] : fa) {
        if (name == "manifest.json") continue; // records the jobs flag
        INFO(name);
        CHECK(bytes == fb.at(name));
    }
}

TEST_CASE("evaluate then analyze from disk equals a single run") {
    fs::path a = fresh_dir("split"), b = fresh_dir("whole");
    {
        Runner r(make_ctx(small_config_text, a));
        REQUIRE(r.evaluate());
    }
    {
        // a fresh runner picking scores up from disk, as the analyze verb does
        Runner r(make_ctx(small_config_text, a));
        REQUIRE(r.analyze(true));
    }
    {
        Runner r(make_ctx(small_config_text, a));
        REQUIRE(r.report());
    }
    REQUIRE(Runner(make_ctx(small_config_text, b)).run());

    auto fa = dir_contents(a), fb = dir_contents(b);
    for (const auto& [name, bytes] : fb) {
        if (name == "manifest.json") continue;
        INFO(name);
        CHECK(fa.at(name) == bytes);
    }
}

TEST_CASE("analyze from disk is idempotent when downstream rows are present") {
    const char* text = R"({
        "seed": 4,
        "datasets": [{"id": "d0", "cardinalities": [3, 4]}],
        "encoders": [{"id": "id0", "kind": "identity"}],
        "metrics": ["mig"],
        "budget": {"n_train": 300, "n_test": 150},
        "analyses": [
            {"name": "downstream", "learner": "gbt", "sizes": [10, 50]}
        ]
    })";
    fs::path a = fresh_dir("idem");
    REQUIRE(Runner(make_ctx(text, a)).run());
    std::string first = slurp(a / "scores.csv");
    CHECK(first.find("downstream_gbt_10") != std::string::npos);

    REQUIRE(Runner(make_ctx(text, a)).analyze(true));
    CHECK(slurp(a / "scores.csv") == first);
}

TEST_CASE("generated factor and code csvs ingest back losslessly") {
    fs::path a = fresh_dir("gen");
    RunContext ctx = make_ctx(small_config_text, a);
    REQUIRE(Runner(std::move(ctx)).generate());

    ExternalData x = ingest_external((a / "factors_d0_id0.csv").string(),
                                     (a / "codes_d0_id0.csv").string());
    CHECK(x.factors.rows() == 300 + 150);
    CHECK(x.factors.cols() == 2);
    CHECK(x.cardinalities == std::vector<int>{3, 4});
    CHECK(x.codes.cols() == 2);
    CHECK(x.warnings.empty());
}

TEST_CASE("external data flows through evaluation with per-metric failures") {
    fs::path gen = fresh_dir("ext_gen");
    REQUIRE(Runner(make_ctx(small_config_text, gen)).generate());

    std::string text = std::string(R"({
        "seed": 2,
        "datasets": [{"id": "d0", "cardinalities": [3, 4]}],
        "external": [{"id": "xd", "dataset": "d0",
                      "factors_csv": ")") + (gen / "factors_d0_rot.csv").string() +
                       R"(", "codes_csv": ")" + (gen / "codes_d0_rot.csv").string() +
                       R"("}],
        "metrics": ["mig", "sap", "beta_vae"],
        "budget": {"n_train": 300, "n_test": 150}
    })";
    fs::path a = fresh_dir("ext_eval");
    Runner r(make_ctx(text, a));
    CHECK(!r.evaluate()); // beta_vae cannot run on a fixed sample

    ScoreTable t = read_scores_csv((a / "scores.csv").string());
    bool saw_mig = false, saw_sap = false;
    for (const auto& row : t.rows()) {
        CHECK(row.encoder_id == "xd");
        if (row.metric_name == "mig") saw_mig = true;
        if (row.metric_name == "sap") saw_sap = true;
        CHECK(row.metric_name != "beta_vae");
    }
    CHECK(saw_mig);
    CHECK(saw_sap);

    auto m = nlohmann::json::parse(slurp(a / "manifest.json"));
    bool failure_recorded = false;
    for (const auto& task : m["tasks"]) {
        if (task["status"] == "failed" &&
            task["error"].get<std::string>().find("beta_vae") != std::string::npos) {
            failure_recorded = true;
        }
    }
    CHECK(failure_recorded);
}

TEST_CASE("a degenerate encoder fails its task without poisoning the rest") {
    const char* text = R"({
        "seed": 9,
        "datasets": [{"id": "d0", "cardinalities": [3, 4]}],
        "encoders": [
            {"id": "good", "kind": "identity"},
            {"id": "flat", "kind": "collapsed", "constant_dims": 2, "keep_factors": false}
        ],
        "metrics": ["mig"],
        "budget": {"n_train": 300, "n_test": 150}
    })";
    fs::path a = fresh_dir("degenerate");
    Runner r(make_ctx(text, a));
    CHECK(!r.evaluate());

    ScoreTable t = read_scores_csv((a / "scores.csv").string());
    REQUIRE(t.rows().size() == 1);
    CHECK(t.rows()[0].encoder_id == "good");

    auto m = nlohmann::json::parse(slurp(a / "manifest.json"));
    int ok = 0, failed = 0;
    for (const auto& task : m["tasks"]) {
        (task["status"] == "ok" ? ok : failed)++;
    }
    CHECK(ok == 1);
    CHECK(failed == 1);
}

TEST_CASE("manifest records the config hash, seeds, and files") {
    fs::path a = fresh_dir("manifest");
    REQUIRE(Runner(make_ctx(small_config_text, a)).run());
    auto m = nlohmann::json::parse(slurp(a / "manifest.json"));

    std::string hash = m["config_hash"].get<std::string>();
    CHECK(hash.rfind("fnv1a64:", 0) == 0);
    CHECK(hash.size() == 8 + 16);
    CHECK(m["master_seed"].get<std::uint64_t>() == 11);
    CHECK(m["tool"].get<std::string>() == "disent");

    // a one-byte config change moves the hash
    std::string other = std::string(small_config_text);
    other.replace(other.find("11"), 2, "12");
    fs::path b = fresh_dir("manifest2");
    REQUIRE(Runner(make_ctx(other, b)).run());
    auto mb = nlohmann::json::parse(slurp(b / "manifest.json"));
    CHECK(mb["config_hash"].get<std::string>() != hash);

    // every listed file exists; every produced file is listed
    auto files = dir_contents(a);
    files.erase("manifest.json");
    REQUIRE(m["files"].size() == files.size());
    for (const auto& f : m["files"]) {
        CHECK(files.count(f.get<std::string>()) == 1);
    }

    // per-task seeds are stable across runs
    fs::path c = fresh_dir("manifest3");
    REQUIRE(Runner(make_ctx(small_config_text, c)).run());
    auto mc = nlohmann::json::parse(slurp(c / "manifest.json"));
    CHECK(m["tasks"] == mc["tasks"]);
}

TEST_CASE("ingestion warnings surface in the manifest") {
    fs::path gen = fresh_dir("warn_gen");
    fs::create_directories(gen);
    {
        std::ofstream f(gen / "f.csv", std::ios::binary);
        f << "factor_0,factor_1\n0,0\n1,3\n0,3\n1,0\n";
        std::ofstream c(gen / "c.csv", std::ios::binary);
        c << "code_0\n0.5\n0.25\n0.125\n0.75\n";
    }
    std::string text = std::string(R"({
        "seed": 2,
        "datasets": [{"id": "d0", "cardinalities": [2, 4]}],
        "external": [{"id": "xd", "dataset": "d0",
                      "factors_csv": ")") + (gen / "f.csv").string() +
                       R"(", "codes_csv": ")" + (gen / "c.csv").string() + R"("}],
        "metrics": ["modularity"],
        "budget": {"n_train": 2, "n_test": 2, "bins": 2}
    })";
    fs::path a = fresh_dir("warn_out");
    Runner r(make_ctx(text, a));
    r.evaluate();
    auto m = nlohmann::json::parse(slurp(a / "manifest.json"));
    REQUIRE(m["warnings"].size() >= 1);
    std::string w = m["warnings"][0].get<std::string>();
    CHECK(w.find("factor_1") != std::string::npos);
}
