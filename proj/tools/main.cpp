#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "disent/runner.hpp"

using namespace disent;

namespace {

struct CommonOpts {
    std::string config;
    std::string out;
    std::optional<std::uint64_t> seed;
    int jobs = 1;
};

void add_common(CLI::App* cmd, CommonOpts& o) {
    cmd->add_option("--config", o.config, "run configuration JSON file")->required();
    cmd->add_option("--out", o.out, "output directory (overrides DISENT_OUT and the config)");
    cmd->add_option("--seed", o.seed, "master seed, overriding the config value");
    cmd->add_option("--jobs", o.jobs, "worker threads; results never depend on this")
        ->check(CLI::PositiveNumber);
}

// precedence: --out, then DISENT_OUT, then the config's output_dir
RunContext make_context(const CommonOpts& o) {
    std::ifstream in(o.config, std::ios::binary);
    if (!in) throw argument_error("config: cannot open '" + o.config + "'");
    std::stringstream ss;
    ss << in.rdbuf();

    RunContext ctx;
    ctx.config_text = ss.str();
    ctx.cfg = parse_config(ctx.config_text);
    for (const auto& x : ctx.cfg.external) {
        for (const std::string& p : {x.factors_csv, x.codes_csv}) {
            if (!std::filesystem::exists(p)) {
                throw argument_error("config: referenced file '" + p + "' does not exist");
            }
        }
    }

    std::string out = o.out;
    if (out.empty()) {
        const char* env = std::getenv("DISENT_OUT");
        if (env && *env) out = env;
    }
    if (out.empty()) out = ctx.cfg.output_dir;
    if (out.empty()) {
        throw argument_error(
            "no output directory: pass --out, set DISENT_OUT, or set output_dir in the config");
    }
    ctx.out_dir = out;
    ctx.master_seed = o.seed.value_or(ctx.cfg.seed);
    ctx.jobs = o.jobs;
    return ctx;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"synthetic ground-truth evaluation of disentangled representations"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(tool_name) + " " + tool_version);

    CommonOpts o;
    CLI::App* generate = app.add_subcommand("generate", "write sampled factor/code CSV pairs");
    CLI::App* evaluate = app.add_subcommand("evaluate", "score every encoder into scores.csv");
    CLI::App* analyze = app.add_subcommand("analyze", "derive analysis tables from scores.csv");
    CLI::App* report = app.add_subcommand("report", "render SVG figures from analysis CSVs");
    CLI::App* run = app.add_subcommand("run", "evaluate, analyze and report in one pass");
    for (CLI::App* cmd : {generate, evaluate, analyze, report, run}) add_common(cmd, o);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2; // --help and --version exit 0, bad flags are config errors
    }

    try {
        Runner runner(make_context(o));
        bool ok;
        if (generate->parsed()) ok = runner.generate();
        else if (evaluate->parsed()) ok = runner.evaluate();
        else if (analyze->parsed()) ok = runner.analyze(true);
        else if (report->parsed()) ok = runner.report();
        else ok = runner.run();
        if (!ok) {
            std::cerr << "completed with per-task failures; see manifest.json\n";
            return 4;
        }
        return 0;
    } catch (const argument_error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const degenerate_error& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 3;
    }
}
