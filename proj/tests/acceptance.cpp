// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
// criterion fails. Tolerances and runtime budgets are fixed below.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "vppsched/evaluation.hpp"
#include "vppsched/mgbm.hpp"
#include "vppsched/nsga2.hpp"
#include "vppsched/scenarios.hpp"
#include "vppsched/simnet.hpp"
#include "cohda_harness.hpp"
#include "toy_arbitrage.hpp"

using namespace vppsched;

namespace {

constexpr double kEulerTolerance = 1e-6;
constexpr int kEulerSequences = 1000;
constexpr long kValidityInvocations = 100000;
constexpr int kNsgaPools = 500;
constexpr std::size_t kNsgaMaxPool = 50;
constexpr int kToyRuns = 20;
constexpr int kToyRequired = 18;
constexpr int kToyKappa = 200;
constexpr double kToyGap = 0.05;
constexpr int kCohdaInstances = 3000;
constexpr double kCohdaOptimumTolerance = 1e-9;
constexpr int kRankingTrials = 10;
constexpr int kSweepRepeats = 50;
constexpr double kSlopeTolerance = 0.01;

struct Outcome {
    bool pass = false;
    std::string detail;
};

struct Criterion {
    int number;
    std::string title;
    double budget_seconds; // 0 when the criterion has no runtime bound
    std::function<Outcome()> check;
};

std::string fmt(const char* format, auto... args)
{
    char buf[512];
    std::snprintf(buf, sizeof buf, format, args...);
    return buf;
}

// 1 ----------------------------------------------------------------------

double euler_soc(double soc, double p_kw, const StorageParams& p, const IntervalSpec& spec)
{
    const double seconds = spec.minutes_per_interval * 60.0;
    const double tau_s = p.self_discharge_tau ? *p.self_discharge_tau * seconds : std::numeric_limits<double>::infinity();
    const double internal = p_kw > 0.0 ? p_kw * p.eta_charge : p_kw / p.eta_discharge;
    for (int s = 0; s < static_cast<int>(seconds); ++s)
        soc += -soc / tau_s + internal / (p.capacity_kwh * 3600.0);
    return soc;
}

Outcome storage_model_matches_euler()
{
    const IntervalSpec spec{96, 15.0};
    const std::vector<std::pair<std::string, StorageParams>> rows{{"psp", psp_storage()},
                                                                  {"industry_big", industry_big_storage()},
                                                                  {"industry_small", industry_small_storage()},
                                                                  {"household", household_storage()}};
    Rng rng(1);
    double worst = 0.0;
    long steps = 0;
    for (int k = 0; k < kEulerSequences; ++k) {
        const auto& p = rows[static_cast<std::size_t>(k) % rows.size()].second;
        StorageState state{p.initial_soc};
        for (int i = 0; i < spec.n_intervals; ++i) {
            const auto range = feasible_soc_range(state, p, spec);
            const double target = uniform_real(rng, range.lower, range.upper);
            const double power = clip_power(state.soc, power_for_transition(state.soc, target, p, spec), p);
            const auto next = step_soc(state, power, p, spec);
            worst = std::max(worst, std::abs(next.soc - euler_soc(state.soc, power, p, spec)));
            state = next;
            ++steps;
        }
    }
    return {worst <= kEulerTolerance,
            fmt("max |closed form - Euler| = %.3g over %ld intervals (limit %.0e)", worst, steps, kEulerTolerance)};
}

// 2 ----------------------------------------------------------------------

PowerSchedule random_raw(const EaEnvironment& env, Rng& rng)
{
    PowerSchedule g;
    for (int i = 0; i < env.interval.n_intervals; ++i)
        g.entries.push_back({pick(rng, std::span<const Strategy>(kAllStrategies)),
                             uniform_real(rng, -3.0 * env.storage.p_max_discharge_kw, 3.0 * env.storage.p_max_charge_kw)});
    return g;
}

Outcome operators_keep_schedules_valid()
{
    std::vector<EaEnvironment> envs;
    for (const auto& c : local_test_cases())
        envs.push_back(c.env);
    envs.push_back(toy::environment());
    for (const auto& a : build_reduced_scenario().agents)
        if (a.role != AgentRole::fixed_generator)
            envs.push_back(environment_for(a, build_reduced_scenario().interval));

    Rng rng(2);
    std::vector<std::vector<Individual>> pools;
    for (const auto& env : envs)
        pools.push_back(init_pop(10, env, rng));

    std::array<long, 4> invocations{};
    std::array<long, 4> invalid{};
    for (long k = 0; k < kValidityInvocations; ++k) {
        const std::size_t e = static_cast<std::size_t>(k) % envs.size();
        const auto& env = envs[e];
        auto& pool = pools[e];
        const std::size_t op = static_cast<std::size_t>(k / static_cast<long>(envs.size())) % 4;
        PowerSchedule produced;
        switch (op) {
        case 0: produced = init_individual(env, rng).power; break;
        case 1: {
            const std::size_t slot = uniform_index(rng, pool.size());
            const auto mode = uniform01(rng) < 0.5 ? SelectionMode::single_objective : SelectionMode::pareto;
            const auto ops = uniform01(rng) < 0.8 ? OperatorSet::gabhyme : OperatorSet::baseline;
            pool[slot] = mutate(pool[slot], mode, ops, env, rng);
            produced = pool[slot].power;
            break;
        }
        case 2: {
            const int rho = 1 + static_cast<int>(uniform_index(rng, 3));
            const auto parents = select_parents(pool, rho, rng);
            auto child = recombine(parents, rho, env, rng);
            produced = child.power;
            pool[uniform_index(rng, pool.size())] = std::move(child);
            break;
        }
        default: produced = repair(random_raw(env, rng), env.storage, env.interval, env.coupled, rng); break;
        }
        ++invocations[op];
        if (!validate(produced, env.storage, env.interval, env.coupled).ok())
            ++invalid[op];
    }
    const long bad = invalid[0] + invalid[1] + invalid[2] + invalid[3];
    return {bad == 0, fmt("invalid: init %ld/%ld, mutate %ld/%ld, recombine %ld/%ld, repair %ld/%ld", invalid[0],
                          invocations[0], invalid[1], invocations[1], invalid[2], invocations[2], invalid[3],
                          invocations[3])};
}

// 3 ----------------------------------------------------------------------

Outcome nondominated_front_matches_oracle()
{
    Rng rng(3);
    int mismatches = 0;
    for (int k = 0; k < kNsgaPools; ++k) {
        const std::size_t n = 1 + uniform_index(rng, kNsgaMaxPool);
        std::vector<Objectives> pts(n);
        for (auto& p : pts)
            p = k % 2 == 0 ? Objectives{static_cast<double>(uniform_index(rng, 6)), static_cast<double>(uniform_index(rng, 6))}
                           : Objectives{uniform_real(rng, -1.0, 1.0), uniform_real(rng, -1.0, 1.0)};
        std::vector<std::size_t> oracle;
        for (std::size_t i = 0; i < n; ++i) {
            bool dominated = false;
            for (std::size_t j = 0; j < n && !dominated; ++j)
                dominated = pts[j][0] >= pts[i][0] && pts[j][1] >= pts[i][1]
                            && (pts[j][0] > pts[i][0] || pts[j][1] > pts[i][1]);
            if (!dominated)
                oracle.push_back(i);
        }
        auto front = fast_nondominated_sort(pts).front();
        std::sort(front.begin(), front.end());
        if (front != oracle)
            ++mismatches;
    }
    return {mismatches == 0, fmt("%d of %d pools differ from the dominance oracle", mismatches, kNsgaPools)};
}

// 4 ----------------------------------------------------------------------

Outcome toy_arbitrage_near_optimum()
{
    const double optimum = toy::exhaustive_optimum();
    int within = 0;
    double worst = std::numeric_limits<double>::infinity();
    double best = -std::numeric_limits<double>::infinity();
    for (int seed = 0; seed < kToyRuns; ++seed) {
        EaParams p;
        p.n_intervals = toy::kSpec.n_intervals;
        p.kappa = kToyKappa;
        p.use_mgbm = false;
        Gabhyme ea(p, toy::environment(), Rng(derive_seed(4, static_cast<std::uint64_t>(seed))));
        ea.run();
        const double profit = ea.best().fitness.local;
        worst = std::min(worst, profit);
        best = std::max(best, profit);
        if (profit >= (1.0 - kToyGap) * optimum && profit <= optimum + 1e-9)
            ++within;
    }
    return {within >= kToyRequired && optimum > 0.0,
            fmt("%d of %d runs within %.0f%% of optimum %.6f (kappa %d, runs span %.6f to %.6f)", within, kToyRuns,
                kToyGap * 100, optimum, kToyKappa, worst, best)};
}

// 5 ----------------------------------------------------------------------

Outcome cohda_reaches_optimum_with_agreement()
{
    using namespace cohda_harness;
    Rng rng(5);
    int not_quiescent = 0;
    int disagreeing = 0;
    int suboptimal = 0;
    double worst_gap = 0.0;
    for (int k = 0; k < kCohdaInstances; ++k) {
        const std::size_t n_agents = 1 + uniform_index(rng, 3);
        Sets sets(n_agents);
        for (auto& s : sets) {
            const std::size_t count = 1 + uniform_index(rng, 4);
            s = random_sets(1, count, 4, rng)[0];
        }
        std::vector<double> target(4);
        for (auto& x : target)
            x = uniform_real(rng, -10.0, 10.0);
        const auto out = negotiate(target, sets);
        if (!out.quiescent) {
            ++not_quiescent;
            continue;
        }
        const auto& best = out.agents[0].memory().best;
        bool agree = best.schedules.size() == n_agents;
        for (const auto& a : out.agents)
            agree = agree && a.memory().best == best;
        if (!agree)
            ++disagreeing;
        const double gap = exhaustive_optimum(target, sets) - best.fitness;
        if (gap > kCohdaOptimumTolerance) {
            ++suboptimal;
            worst_gap = std::max(worst_gap, gap);
        }
    }
    return {not_quiescent == 0 && disagreeing == 0 && suboptimal == 0,
            fmt("%d instances: %d not quiescent, %d disagreeing, %d below the exhaustive optimum (worst gap %.3g)",
                kCohdaInstances, not_quiescent, disagreeing, suboptimal, worst_gap)};
}

// 6, 7, 9 ------------------------------------------------------------------

struct LoggedRun {
    std::string label;
    RunRecord record;
};

std::vector<LoggedRun> logged_runs()
{
    std::vector<LoggedRun> runs;
    for (Method m : kAllMethods)
        for (std::uint64_t seed : {1u, 2u}) {
            auto cfg = build_reduced_scenario();
            cfg.method = m;
            RunOptions opts;
            opts.seed = seed;
            runs.push_back({fmt("reduced/%s/seed %llu", std::string(to_string(m)).c_str(),
                                static_cast<unsigned long long>(seed)),
                            run_negotiation(cfg, opts)});
        }
    auto ring = build_reduced_scenario();
    ring.topology.kind = TopologyKind::ring;
    ring.delivery.latency = 3;
    runs.push_back({"reduced/ring/latency 3", run_negotiation(ring)});
    auto world = build_reduced_scenario();
    world.topology = {TopologyKind::small_world, 1, 0.5};
    world.method = Method::gabhyme_p;
    runs.push_back({"reduced/small world", run_negotiation(world)});
    auto s2 = build_scenario_2();
    s2.method = Method::gabhyme_n;
    runs.push_back({"scenario_2/gabhyme_n", run_negotiation(s2)});
    return runs;
}

const std::vector<LoggedRun>& suite_runs()
{
    static const std::vector<LoggedRun> runs = logged_runs();
    return runs;
}

Outcome best_candidate_monotone()
{
    long checked = 0;
    std::string failures;
    for (const auto& run : suite_runs()) {
        const auto n = run.record.agents.size();
        std::map<long, double> last;
        bool ok = true;
        for (const auto& line : run.record.lines) {
            const Json j = Json::parse(line);
            if (j.at("type") != "candidate" || j.at("size").get<std::size_t>() != n)
                continue;
            const long agent = j.at("agent").get<long>();
            const double f = detail::number_from(j.at("fitness"));
            if (last.contains(agent) && f < last[agent])
                ok = false;
            last[agent] = f;
            ++checked;
        }
        if (!ok)
            failures += " " + run.label;
    }
    return {failures.empty() && checked > 0,
            fmt("%zu records, %ld complete-candidate updates checked%s%s", suite_runs().size(), checked,
                failures.empty() ? "" : ", decreasing in:", failures.c_str())};
}

Outcome decider_gate_holds()
{
    long checked = 0;
    long violations = 0;
    for (const auto& run : suite_runs()) {
        for (const auto& line : run.record.lines) {
            const Json j = Json::parse(line);
            if (j.at("type") == "insert") {
                ++checked;
                if (!(detail::number_from(j.at("local_fitness")) > detail::number_from(j.at("phi"))))
                    ++violations;
            } else if (j.at("type") == "seed_set") {
                checked += j.at("count").get<long>();
                if (!(detail::number_from(j.at("min_local_fitness")) > detail::number_from(j.at("phi"))))
                    ++violations;
            }
        }
        for (const auto& a : run.record.agents)
            if (a.has_storage && !(a.local_fitness > a.phi))
                ++violations;
    }
    return {violations == 0 && checked > 0,
            fmt("%ld schedule-set members over %zu records, %ld at or below phi", checked, suite_runs().size(),
                violations)};
}

Outcome runs_are_deterministic()
{
    int mismatched = 0;
    int replay_failed = 0;
    int total = 0;
    for (Method m : {Method::gabhyme_n, Method::sampling, Method::ea_p}) {
        auto cfg = build_reduced_scenario();
        cfg.method = m;
        cfg.seed = 9;
        const auto first = run_negotiation(cfg);
        const auto second = run_negotiation(cfg);
        ++total;
        if (first.text() != second.text())
            ++mismatched;
        const auto r = replay(first.lines);
        if (!r.identical || !r.metrics_identical)
            ++replay_failed;
    }
    return {mismatched == 0 && replay_failed == 0,
            fmt("%d scenario/seed pairs: %d differ between runs, %d not reproduced by replay", total, mismatched,
                replay_failed)};
}

// 8 ----------------------------------------------------------------------

Outcome method_ranking()
{
    EvaluateOptions opts;
    opts.trials = kRankingTrials;
    const auto report = evaluate(build_reduced_scenario(), opts);
    std::map<Method, MethodSummary> s;
    for (const auto& row : report.summary)
        s[row.method] = row;
    const double gab = std::min(s[Method::gabhyme_n].median, s[Method::gabhyme_p].median);
    const double ea_hi = std::max(s[Method::ea_n].median, s[Method::ea_p].median);
    const double ea_lo = std::min(s[Method::ea_n].median, s[Method::ea_p].median);
    const bool gab_over_ea = gab > ea_hi;
    const bool ea_over_sampling = ea_lo > s[Method::sampling].median;
    const bool lq = s[Method::gabhyme_p].lq >= s[Method::gabhyme_n].lq;
    return {gab_over_ea && ea_over_sampling && lq,
            fmt("medians gabhyme_n %.4f gabhyme_p %.4f ea_n %.4f ea_p %.4f sampling %.4f; LQ gabhyme_p %.4f "
                "gabhyme_n %.4f; GABHYME > EA %s, EA > Sampling %s, LQ order %s",
                s[Method::gabhyme_n].median, s[Method::gabhyme_p].median, s[Method::ea_n].median,
                s[Method::ea_p].median, s[Method::sampling].median, s[Method::gabhyme_p].lq, s[Method::gabhyme_n].lq,
                gab_over_ea ? "yes" : "no", ea_over_sampling ? "yes" : "no", lq ? "yes" : "no")};
}

// 10 ---------------------------------------------------------------------

Outcome sweep_trends()
{
    SweepSpec kappa;
    kappa.param = SweepParam::kappa;
    kappa.values = {10, 50, 200};
    kappa.repeats = kSweepRepeats;
    const auto kr = parameter_sweep(kappa);
    bool kappa_ok = true;
    std::string kappa_detail;
    for (std::size_t c = 0; c < kr.cases.size(); ++c) {
        kappa_detail += " " + kr.cases[c] + ":";
        double previous = kNegInf;
        for (int v : kappa.values) {
            const double m = mean_of(kr.finals(v, c));
            kappa_ok = kappa_ok && m >= previous;
            previous = m;
            kappa_detail += fmt(" %.6g", m);
        }
    }

    SweepSpec mu;
    mu.param = SweepParam::mu;
    mu.values = {5, 15, 30};
    mu.repeats = kSweepRepeats;
    mu.base.kappa = 50;
    const auto mr = parameter_sweep(mu);
    std::vector<double> pooled(mu.values.size(), 0.0);
    for (std::size_t c = 0; c < mr.cases.size(); ++c) {
        std::vector<double> all;
        for (const auto& row : mr.rows)
            all.push_back(row.final_fitness[c]);
        const double scale = std::abs(median_of(all));
        for (std::size_t v = 0; v < mu.values.size(); ++v)
            pooled[v] += iqr_of(mr.finals(mu.values[v], c)) / (scale > 0.0 ? scale : 1.0);
    }
    const bool mu_ok = pooled[1] <= pooled[0] && pooled[2] <= pooled[1];
    return {kappa_ok && mu_ok, fmt("kappa means%s (non-decreasing %s); mu pooled IQR %.4g %.4g %.4g (non-increasing %s)",
                                   kappa_detail.c_str(), kappa_ok ? "yes" : "no", pooled[0], pooled[1], pooled[2],
                                   mu_ok ? "yes" : "no")};
}

// 11 ---------------------------------------------------------------------

Outcome mgbm_filter_sanity()
{
    const MgbmConfig cfg;
    const double slope = 0.02;
    auto state = MgbmState::from(cfg);
    double previous = 0.0;
    for (int g = 1; g <= 50; ++g) {
        const double indicator = slope * g;
        state = mgbm_should_stop(state, indicator - previous).first;
        previous = indicator;
    }
    const double error = std::abs(state.estimate - slope) / slope;

    auto zero = MgbmState::from(cfg);
    int fired_at = -1;
    for (int g = 1; g <= cfg.min_generations + 10 && fired_at < 0; ++g) {
        const auto [next, stop] = mgbm_should_stop(zero, 0.0);
        zero = next;
        if (stop)
            fired_at = g;
    }
    return {error <= kSlopeTolerance && fired_at > 0,
            fmt("ramp slope relative error %.3g after 50 samples (limit %.2g); zero stream stops at sample %d "
                "(limit %d)",
                error, kSlopeTolerance, fired_at, cfg.min_generations + 10)};
}

} // namespace

int main()
{
    const std::vector<Criterion> criteria{
        {1, "storage model matches Euler integration", 30, storage_model_matches_euler},
        {2, "operators only produce valid schedules", 120, operators_keep_schedules_valid},
        {3, "nondominated sorting front 1 matches oracle", 10, nondominated_front_matches_oracle},
        {4, "GABHYME near exhaustive optimum on toy arbitrage", 120, toy_arbitrage_near_optimum},
        {5, "COHDA reaches optimum with agreement", 60, cohda_reaches_optimum_with_agreement},
        {6, "best candidate fitness monotone in logged runs", 0, best_candidate_monotone},
        {7, "decider gate holds in logged runs", 0, decider_gate_holds},
        {8, "method ranking on reduced scenario", 900, method_ranking},
        {9, "runs deterministic and replayable", 0, runs_are_deterministic},
        {10, "kappa and mu sweep trends", 1200, sweep_trends},
        {11, "MGBM filter sanity", 0, mgbm_filter_sanity},
    };

    int failed = 0;
    for (const auto& c : criteria) {
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.check();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        const bool in_time = c.budget_seconds <= 0.0 || seconds <= c.budget_seconds;
        const bool pass = o.pass && in_time;
        if (!pass)
            ++failed;
        std::printf("criterion %2d %s  %s: %s [%.1f s%s]\n", c.number, pass ? "PASS" : "FAIL", c.title.c_str(),
                    o.detail.c_str(), seconds,
                    c.budget_seconds > 0.0 ? fmt(", budget %.0f s", c.budget_seconds).c_str() : "");
        std::fflush(stdout);
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
