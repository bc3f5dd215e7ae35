// Command line front end: run, evaluate, sweep, replay, gen-profiles.
//
// Exit codes: 0 success, 1 configuration error, 2 tick budget exhausted,
// 3 replay mismatch or internal error.

#include <CLI11.hpp>

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "vppsched/config.hpp"
#include "vppsched/errors.hpp"
#include "vppsched/evaluation.hpp"
#include "vppsched/profiles.hpp"
#include "vppsched/scenarios.hpp"
#include "vppsched/simnet.hpp"

namespace {

using namespace vppsched;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitBudget = 2;
constexpr int kExitFailure = 3;

/// A scenario file, or the name of a built-in scenario.
ScenarioConfig resolve_scenario(const std::string& arg)
{
    if (std::filesystem::exists(arg))
        return load_scenario(arg);
    return build_scenario(arg);
}

void write_text(const std::string& path, const std::string& text)
{
    if (path.empty() || path == "-") {
        std::cout << text;
        return;
    }
    std::ofstream f(path, std::ios::binary);
    if (!f)
        throw ConfigError("cannot write '" + path + "'");
    f << text;
}

std::string metrics_line(const RunMetrics& m)
{
    return detail::metrics_json(m).dump();
}

struct RunArgs {
    std::string scenario;
    std::optional<std::string> method;
    std::optional<std::uint64_t> seed;
    std::optional<long> budget;
    std::string out;
    std::string history;
};

int cmd_run(const RunArgs& a)
{
    ScenarioConfig cfg = resolve_scenario(a.scenario);
    if (a.method)
        cfg.method = method_from_string(*a.method);
    RunOptions opts;
    opts.seed = a.seed;
    opts.budget_ticks = a.budget;
    const RunRecord rec = run_negotiation(cfg, opts);
    if (!a.out.empty())
        write_record(rec, a.out);
    if (!a.history.empty())
        write_text(a.history, history_csv(rec));
    std::cout << metrics_line(rec.metrics) << '\n';
    return rec.metrics.budget_exhausted ? kExitBudget : kExitOk;
}

struct EvaluateArgs {
    std::string scenario;
    std::optional<int> trials;
    std::vector<std::string> methods;
    std::string out;
    std::string csv;
    unsigned threads = 1;
};

int cmd_evaluate(const EvaluateArgs& a)
{
    const ScenarioConfig cfg = resolve_scenario(a.scenario);
    EvaluateOptions opts;
    opts.trials = a.trials;
    opts.threads = a.threads;
    if (!a.methods.empty()) {
        opts.methods.clear();
        for (const auto& m : a.methods)
            opts.methods.push_back(method_from_string(m));
    }
    const MetricsReport report = evaluate(cfg, opts);
    if (!a.out.empty())
        write_text(a.out, report_jsonl(report));
    const std::string table = summary_csv(report);
    if (!a.csv.empty())
        write_text(a.csv, table);
    std::cout << table;
    const bool exhausted = std::any_of(report.trials.begin(), report.trials.end(),
                                       [](const TrialResult& t) { return t.budget_exhausted; });
    return exhausted ? kExitBudget : kExitOk;
}

struct SweepArgs {
    std::string param = "kappa";
    std::vector<int> values;
    int repeats = 50;
    std::optional<int> kappa;
    std::uint64_t seed = 1;
    std::string out;
    std::string series;
    unsigned threads = 1;
};

int cmd_sweep(const SweepArgs& a)
{
    SweepSpec s;
    s.param = sweep_param_from_string(a.param);
    s.values = a.values;
    s.repeats = a.repeats;
    s.seed = a.seed;
    s.threads = a.threads;
    if (a.kappa)
        s.base.kappa = *a.kappa;
    const SweepReport r = parameter_sweep(s);
    write_text(a.out, sweep_csv(r));
    if (!a.series.empty())
        write_text(a.series, sweep_series_csv(r));
    return kExitOk;
}

int cmd_replay(const std::string& record)
{
    const auto lines = read_record_lines(record);
    const ReplayResult r = replay(lines);
    std::cout << metrics_line(r.rerun.metrics) << '\n';
    if (r.identical) {
        std::cout << "replay: identical (" << lines.size() << " lines)\n";
        return kExitOk;
    }
    std::cout << "replay: differs at line " << r.first_difference + 1
              << (r.metrics_identical ? ", final metrics identical\n" : ", final metrics differ\n");
    return kExitFailure;
}

struct ProfileArgs {
    std::string kind = "household";
    std::optional<std::string> scenario;
    std::uint64_t seed = 0;
    double scale = 1.0;
    double noise = 0.05;
    int intervals = 96;
    double minutes = 15.0;
    std::string out;
};

int cmd_gen_profiles(const ProfileArgs& a)
{
    if (a.scenario) {
        if (a.out.empty())
            throw ConfigError("gen-profiles --scenario needs --out <directory>");
        std::cout << write_scenario_bundle(build_scenario(*a.scenario), a.out).string() << '\n';
        return kExitOk;
    }
    SyntheticSpec s;
    s.kind = profile_kind_from_string(a.kind);
    s.seed = a.seed;
    s.scale = a.scale;
    s.noise = a.noise;
    write_text(a.out, profile_to_csv(generate_profile(s, IntervalSpec{a.intervals, a.minutes})));
    return kExitOk;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Multi-agent storage scheduling: GABHYME schedule generation with COHDA negotiation"};
    app.require_subcommand(1);

    RunArgs run;
    auto* run_cmd = app.add_subcommand("run", "Run one negotiation and write its record");
    run_cmd->add_option("--scenario", run.scenario, "Scenario file or built-in name (scenario_1, scenario_2, reduced)")
        ->required();
    run_cmd->add_option("--method", run.method, "gabhyme_n, gabhyme_p, ea_n, ea_p or sampling");
    run_cmd->add_option("--seed", run.seed, "Seed overriding the scenario seed");
    run_cmd->add_option("--budget", run.budget, "Tick budget overriding the scenario budget");
    run_cmd->add_option("--out", run.out, "Run record (JSON lines)");
    run_cmd->add_option("--history", run.history, "Fitness history CSV");

    EvaluateArgs ev;
    auto* ev_cmd = app.add_subcommand("evaluate", "Repeated trials per method with aggregate metrics");
    ev_cmd->add_option("--scenario", ev.scenario, "Scenario file or built-in name")->required();
    ev_cmd->add_option("--trials", ev.trials, "Trials per method (default from scenario)");
    ev_cmd->add_option("--methods", ev.methods, "Methods to compare (default all)");
    ev_cmd->add_option("--out", ev.out, "Per-trial and summary records (JSON lines)");
    ev_cmd->add_option("--csv", ev.csv, "Summary table CSV");
    ev_cmd->add_option("--threads", ev.threads, "Worker threads");

    SweepArgs sw;
    auto* sw_cmd = app.add_subcommand("sweep", "Parameter sweep on the local test cases");
    sw_cmd->add_option("--param", sw.param, "kappa, mu or rho");
    sw_cmd->add_option("--values", sw.values, "Parameter values")->required();
    sw_cmd->add_option("--repeats", sw.repeats, "Seeded runs per value");
    sw_cmd->add_option("--kappa", sw.kappa, "Generations when sweeping another parameter");
    sw_cmd->add_option("--seed", sw.seed, "Base seed");
    sw_cmd->add_option("--out", sw.out, "Final fitness CSV (default stdout)");
    sw_cmd->add_option("--series", sw.series, "Mean fitness per generation CSV");
    sw_cmd->add_option("--threads", sw.threads, "Worker threads");

    std::string record;
    auto* rp_cmd = app.add_subcommand("replay", "Re-run a recorded negotiation and compare");
    rp_cmd->add_option("--record", record, "Run record written by run --out")->required();

    ProfileArgs gp;
    auto* gp_cmd = app.add_subcommand("gen-profiles", "Write a synthetic profile or a built-in scenario bundle");
    gp_cmd->add_option("--kind", gp.kind, "household, industry, spp, market_prices or flat");
    gp_cmd->add_option("--scenario", gp.scenario, "Write this built-in scenario with CSV profiles into --out");
    gp_cmd->add_option("--seed", gp.seed, "Seed");
    gp_cmd->add_option("--scale", gp.scale, "Multiplier");
    gp_cmd->add_option("--noise", gp.noise, "Relative noise level");
    gp_cmd->add_option("--intervals", gp.intervals, "Number of intervals");
    gp_cmd->add_option("--minutes", gp.minutes, "Interval length in minutes");
    gp_cmd->add_option("--out", gp.out, "Output file (default stdout) or directory with --scenario");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (*run_cmd)
            return cmd_run(run);
        if (*ev_cmd)
            return cmd_evaluate(ev);
        if (*sw_cmd)
            return cmd_sweep(sw);
        if (*rp_cmd)
            return cmd_replay(record);
        if (*gp_cmd)
            return cmd_gen_profiles(gp);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitFailure;
    }
    return kExitFailure;
}
