#ifndef VPPSCHED_EVALUATION_HPP
#define VPPSCHED_EVALUATION_HPP

// Repeated trials, method comparison and parameter sweeps.
//
// evaluate() runs every configured method for `trials` seeds (trial k uses
// seed cfg.seed + k for all methods, so trials are paired across methods)
// and reports per trial the fulfillment rate g_norm of the final cluster
// schedule. Aggregates per method are median, mean, sample standard
// deviation and the local quality
//
//   LQ(m, a, k) = f_local(a, m, k) / max_x f_local(a, x, k)
//
// averaged over storage agents and trials. Pairs whose maximum is zero or
// not finite are skipped.
//
// parameter_sweep() runs single-objective GABHYME on the three local test
// cases for every value of one parameter and records the final fitness per
// (value, repeat) and the mean best-fitness series per generation.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <exception>
#include <iomanip>
#include <limits>
#include <numeric>
#include <sstream>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "config.hpp"
#include "errors.hpp"
#include "gabhyme.hpp"
#include "scenarios.hpp"
#include "simnet.hpp"

namespace vppsched {

struct TrialResult {
    Method method = Method::gabhyme_n;
    int trial = 0;
    std::uint64_t seed = 0;
    double fulfillment = kNegInf;
    double global_fitness = kNegInf;
    long ticks = 0;
    bool budget_exhausted = false;
    std::vector<double> local_fitness; // per agent, NaN for fixed generators
};

struct MethodSummary {
    Method method = Method::gabhyme_n;
    int trials = 0;
    double mean = 0.0;
    double median = 0.0;
    double stddev = 0.0;
    double lq = std::numeric_limits<double>::quiet_NaN();
};

struct MetricsReport {
    std::string scenario;
    std::vector<std::string> agent_names;
    std::vector<TrialResult> trials;
    std::vector<MethodSummary> summary;
};

struct EvaluateOptions {
    std::vector<Method> methods{kAllMethods.begin(), kAllMethods.end()};
    std::optional<int> trials; // overrides cfg.trials
    unsigned threads = 1;
};

inline double median_of(std::vector<double> v)
{
    if (v.empty())
        throw ContractError("median of an empty sample");
    std::sort(v.begin(), v.end());
    const std::size_t m = v.size() / 2;
    return v.size() % 2 == 1 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

inline double mean_of(const std::vector<double>& v)
{
    if (v.empty())
        throw ContractError("mean of an empty sample");
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

/// Sample standard deviation (n - 1 denominator); 0 for a single value.
inline double stddev_of(const std::vector<double>& v)
{
    if (v.size() < 2)
        return 0.0;
    const double m = mean_of(v);
    double ss = 0.0;
    for (double x : v)
        ss += (x - m) * (x - m);
    return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

/// Linear-interpolated quantile (type 7), q in [0, 1].
inline double quantile_of(std::vector<double> v, double q)
{
    if (v.empty())
        throw ContractError("quantile of an empty sample");
    std::sort(v.begin(), v.end());
    const double h = q * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

inline double iqr_of(const std::vector<double>& v) { return quantile_of(v, 0.75) - quantile_of(v, 0.25); }

inline TrialResult run_trial(const ScenarioConfig& base, Method method, int trial)
{
    ScenarioConfig cfg = base;
    cfg.method = method;
    RunOptions opts;
    opts.seed = base.seed + static_cast<std::uint64_t>(trial);
    opts.record_history = false;
    const RunRecord rec = run_negotiation(cfg, opts);
    TrialResult r;
    r.method = method;
    r.trial = trial;
    r.seed = *opts.seed;
    r.fulfillment = rec.metrics.fulfillment;
    r.global_fitness = rec.metrics.global_fitness;
    r.ticks = rec.metrics.ticks;
    r.budget_exhausted = rec.metrics.budget_exhausted;
    for (const auto& a : rec.agents)
        r.local_fitness.push_back(a.has_storage ? a.local_fitness : std::numeric_limits<double>::quiet_NaN());
    return r;
}

/// Aggregate table from raw trials; independent of how they were produced.
inline std::vector<MethodSummary> summarize(const std::vector<TrialResult>& trials, const std::vector<Method>& methods)
{
    std::vector<MethodSummary> out;
    for (Method m : methods) {
        std::vector<double> f;
        for (const auto& t : trials)
            if (t.method == m)
                f.push_back(t.fulfillment);
        if (f.empty())
            continue;
        MethodSummary s;
        s.method = m;
        s.trials = static_cast<int>(f.size());
        s.mean = mean_of(f);
        s.median = median_of(f);
        s.stddev = stddev_of(f);

        double lq_sum = 0.0;
        long lq_count = 0;
        for (const auto& t : trials) {
            if (t.method != m)
                continue;
            for (std::size_t a = 0; a < t.local_fitness.size(); ++a) {
                const double own = t.local_fitness[a];
                if (!std::isfinite(own))
                    continue;
                double best = kNegInf;
                for (const auto& other : trials)
                    if (other.trial == t.trial && a < other.local_fitness.size()
                        && std::isfinite(other.local_fitness[a]))
                        best = std::max(best, other.local_fitness[a]);
                if (!std::isfinite(best) || best == 0.0)
                    continue;
                lq_sum += own / best;
                ++lq_count;
            }
        }
        if (lq_count > 0)
            s.lq = lq_sum / static_cast<double>(lq_count);
        out.push_back(s);
    }
    return out;
}

inline MetricsReport evaluate(const ScenarioConfig& cfg, const EvaluateOptions& opts = {})
{
    check(cfg);
    const int trials = opts.trials.value_or(cfg.trials);
    if (trials < 1)
        throw ConfigError("evaluate: trials must be at least 1");
    if (opts.methods.empty())
        throw ConfigError("evaluate: no methods selected");

    struct Job {
        Method method;
        int trial;
    };
    std::vector<Job> jobs;
    for (Method m : opts.methods)
        for (int k = 0; k < trials; ++k)
            jobs.push_back({m, k});

    MetricsReport report;
    report.scenario = cfg.name;
    for (const auto& a : cfg.agents)
        report.agent_names.push_back(a.name);
    report.trials.resize(jobs.size());

    const unsigned workers = std::max(1u, std::min<unsigned>(opts.threads, static_cast<unsigned>(jobs.size())));
    if (workers == 1) {
        for (std::size_t j = 0; j < jobs.size(); ++j)
            report.trials[j] = run_trial(cfg, jobs[j].method, jobs[j].trial);
    } else {
        std::vector<std::exception_ptr> errors(workers);
        {
            std::vector<std::jthread> pool;
            for (unsigned w = 0; w < workers; ++w)
                pool.emplace_back([&, w] {
                    try {
                        for (std::size_t j = w; j < jobs.size(); j += workers)
                            report.trials[j] = run_trial(cfg, jobs[j].method, jobs[j].trial);
                    } catch (...) {
                        errors[w] = std::current_exception();
                    }
                });
        }
        for (const auto& e : errors)
            if (e)
                std::rethrow_exception(e);
    }
    report.summary = summarize(report.trials, opts.methods);
    return report;
}

inline Json trial_json(const TrialResult& t)
{
    Json lf = Json::array();
    for (double x : t.local_fitness)
        lf.push_back(std::isnan(x) ? Json(nullptr) : detail::number(x));
    return {{"type", "trial"},
            {"method", std::string(to_string(t.method))},
            {"trial", t.trial},
            {"seed", t.seed},
            {"fulfillment", detail::number(t.fulfillment)},
            {"global_fitness", detail::number(t.global_fitness)},
            {"ticks", t.ticks},
            {"budget_exhausted", t.budget_exhausted},
            {"local_fitness", lf}};
}

inline TrialResult trial_from_json(const Json& j)
{
    TrialResult t;
    t.method = method_from_string(j.at("method").get<std::string>());
    t.trial = j.at("trial").get<int>();
    t.seed = j.at("seed").get<std::uint64_t>();
    t.fulfillment = detail::number_from(j.at("fulfillment"));
    t.global_fitness = detail::number_from(j.at("global_fitness"));
    t.ticks = j.at("ticks").get<long>();
    t.budget_exhausted = j.at("budget_exhausted").get<bool>();
    for (const auto& x : j.at("local_fitness"))
        t.local_fitness.push_back(x.is_null() ? std::numeric_limits<double>::quiet_NaN() : detail::number_from(x));
    return t;
}

inline Json summary_json(const MethodSummary& s)
{
    return {{"type", "summary"},
            {"method", std::string(to_string(s.method))},
            {"trials", s.trials},
            {"mean", detail::number(s.mean)},
            {"median", detail::number(s.median)},
            {"stddev", detail::number(s.stddev)},
            {"lq", std::isnan(s.lq) ? Json(nullptr) : detail::number(s.lq)}};
}

/// Raw trials followed by the aggregate rows, one JSON object per line.
inline std::string report_jsonl(const MetricsReport& r)
{
    std::string out;
    for (const auto& t : r.trials)
        out += trial_json(t).dump() + '\n';
    for (const auto& s : r.summary)
        out += summary_json(s).dump() + '\n';
    return out;
}

/// Trials back from report_jsonl output; summary lines are skipped.
inline std::vector<TrialResult> parse_trials_jsonl(std::string_view text)
{
    std::vector<TrialResult> out;
    std::istringstream in{std::string(text)};
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty())
            continue;
        try {
            const Json j = Json::parse(line);
            if (j.value("type", "") == "trial")
                out.push_back(trial_from_json(j));
        } catch (const Json::exception& e) {
            throw ConfigError(std::string("metrics file: ") + e.what());
        }
    }
    return out;
}

inline std::string format_number(double x)
{
    if (std::isnan(x))
        return "";
    if (std::isinf(x))
        return x > 0 ? "inf" : "-inf";
    std::ostringstream s;
    s << std::setprecision(17) << x;
    return s.str();
}

/// Results table: method, mean, median, sigma, LQ.
inline std::string summary_csv(const MetricsReport& r)
{
    std::string out = "method,mean,median,sigma,lq\n";
    for (const auto& s : r.summary)
        out += std::string(to_string(s.method)) + ',' + format_number(s.mean) + ',' + format_number(s.median) + ','
               + format_number(s.stddev) + ',' + format_number(s.lq) + '\n';
    return out;
}

/// Fitness history of one run: tick, global fitness and the combined
/// fitness of every agent.
inline std::string history_csv(const RunRecord& rec)
{
    std::vector<std::string> names;
    for (const auto& a : rec.agents)
        names.push_back(a.name);
    std::string out = "tick,global_fitness";
    for (const auto& n : names)
        out += ',' + n;
    out += '\n';
    for (const auto& line : rec.lines) {
        const Json j = Json::parse(line);
        if (j.value("type", "") != "history")
            continue;
        out += std::to_string(j.at("tick").get<long>()) + ',' + format_number(detail::number_from(j.at("global_fitness")));
        for (const auto& c : j.at("combined"))
            out += ',' + format_number(detail::number_from(c));
        out += '\n';
    }
    return out;
}

// Parameter sweeps -------------------------------------------------------

enum class SweepParam : std::uint8_t { kappa, mu, rho };

inline constexpr std::string_view to_string(SweepParam p)
{
    switch (p) {
    case SweepParam::kappa: return "kappa";
    case SweepParam::mu: return "mu";
    case SweepParam::rho: return "rho";
    }
    return "?";
}

inline SweepParam sweep_param_from_string(std::string_view name)
{
    for (auto p : {SweepParam::kappa, SweepParam::mu, SweepParam::rho})
        if (to_string(p) == name)
            return p;
    throw ConfigError("unknown sweep parameter '" + std::string(name) + "'");
}

struct LocalTestCase {
    std::string name;
    EaEnvironment env;
};

/// Arbitrage (full PSP), peak shaving (big industry) and local SDM
/// (household with PV) on the 96 x 15 min horizon.
inline std::vector<LocalTestCase> local_test_cases()
{
    const IntervalSpec spec{96, 15.0};
    std::vector<LocalTestCase> out;
    auto add = [&](std::string name, const AgentSpec& a) {
        out.push_back({std::move(name), environment_for(a, spec)});
    };
    add("arbitrage", detail::psp_agent(1.0, spec));
    add("peak_shaving", detail::industry_agent("industry", true, 100, spec));
    add("local_sdm", detail::household_agent("household", 300, spec));
    return out;
}

struct SweepSpec {
    SweepParam param = SweepParam::kappa;
    std::vector<int> values;
    int repeats = 50;
    EaParams base; // mode forced to single_objective, MGBM off
    std::uint64_t seed = 1;
    unsigned threads = 1;
};

struct SweepRow {
    int value = 0;
    int repeat = 0;
    std::vector<double> final_fitness; // one per local test case
};

struct SweepReport {
    SweepSpec spec;
    std::vector<std::string> cases;
    std::vector<SweepRow> rows;
    // mean_series[value index][case index][generation]
    std::vector<std::vector<std::vector<double>>> mean_series;

    /// Final fitness of one case over all repeats of one value.
    [[nodiscard]] std::vector<double> finals(int value, std::size_t case_index) const
    {
        std::vector<double> out;
        for (const auto& r : rows)
            if (r.value == value)
                out.push_back(r.final_fitness.at(case_index));
        return out;
    }
};

inline EaParams sweep_params(const SweepSpec& s, int value)
{
    EaParams p = s.base;
    p.mode = SelectionMode::single_objective;
    p.operators = OperatorSet::gabhyme;
    p.use_mgbm = false;
    switch (s.param) {
    case SweepParam::kappa: p.kappa = value; break;
    case SweepParam::mu: p.mu = value; break;
    case SweepParam::rho: p.rho = value; break;
    }
    return p;
}

inline SweepReport parameter_sweep(const SweepSpec& s)
{
    if (s.values.empty() || s.repeats < 1)
        throw ConfigError("sweep: need at least one value and one repeat");
    const auto cases = local_test_cases();
    for (int v : s.values) {
        EaParams p = sweep_params(s, v);
        p.n_intervals = cases.front().env.interval.n_intervals;
        try {
            p.check();
        } catch (const ContractError& e) {
            throw ConfigError(std::string("sweep: ") + e.what());
        }
    }

    SweepReport report;
    report.spec = s;
    for (const auto& c : cases)
        report.cases.push_back(c.name);

    struct Job {
        std::size_t value_index;
        int repeat;
    };
    std::vector<Job> jobs;
    for (std::size_t v = 0; v < s.values.size(); ++v)
        for (int r = 0; r < s.repeats; ++r)
            jobs.push_back({v, r});

    report.rows.resize(jobs.size());
    std::vector<std::vector<std::vector<double>>> histories(jobs.size());
    auto run_job = [&](std::size_t j) {
        const int value = s.values[jobs[j].value_index];
        EaParams p = sweep_params(s, value);
        SweepRow row{value, jobs[j].repeat, {}};
        for (std::size_t c = 0; c < cases.size(); ++c) {
            p.n_intervals = cases[c].env.interval.n_intervals;
            p.seed = derive_seed(s.seed, static_cast<std::uint64_t>(jobs[j].repeat) * 16 + c);
            Gabhyme ea(p, cases[c].env, Rng(p.seed));
            ea.run();
            row.final_fitness.push_back(ea.best().fitness.local);
            histories[j].push_back(ea.best_history());
        }
        report.rows[j] = std::move(row);
    };

    const unsigned workers = std::max(1u, std::min<unsigned>(s.threads, static_cast<unsigned>(jobs.size())));
    if (workers == 1) {
        for (std::size_t j = 0; j < jobs.size(); ++j)
            run_job(j);
    } else {
        std::vector<std::exception_ptr> errors(workers);
        {
            std::vector<std::jthread> pool;
            for (unsigned w = 0; w < workers; ++w)
                pool.emplace_back([&, w] {
                    try {
                        for (std::size_t j = w; j < jobs.size(); j += workers)
                            run_job(j);
                    } catch (...) {
                        errors[w] = std::current_exception();
                    }
                });
        }
        for (const auto& e : errors)
            if (e)
                std::rethrow_exception(e);
    }

    report.mean_series.resize(s.values.size(), std::vector<std::vector<double>>(cases.size()));
    for (std::size_t v = 0; v < s.values.size(); ++v) {
        for (std::size_t c = 0; c < cases.size(); ++c) {
            auto& series = report.mean_series[v][c];
            int count = 0;
            for (std::size_t j = 0; j < jobs.size(); ++j) {
                if (jobs[j].value_index != v)
                    continue;
                const auto& h = histories[j][c];
                if (series.size() < h.size())
                    series.resize(h.size(), 0.0);
                for (std::size_t g = 0; g < h.size(); ++g)
                    series[g] += h[g];
                ++count;
            }
            for (double& x : series)
                x /= count;
        }
    }
    return report;
}

/// One row per (value, repeat): value, repeat, final fitness per case.
inline std::string sweep_csv(const SweepReport& r)
{
    std::string out = std::string(to_string(r.spec.param)) + ",repeat";
    for (const auto& c : r.cases)
        out += ',' + c;
    out += '\n';
    for (const auto& row : r.rows) {
        out += std::to_string(row.value) + ',' + std::to_string(row.repeat);
        for (double f : row.final_fitness)
            out += ',' + format_number(f);
        out += '\n';
    }
    return out;
}

/// Mean best fitness per generation: value, case, generation, mean.
inline std::string sweep_series_csv(const SweepReport& r)
{
    std::string out = std::string(to_string(r.spec.param)) + ",case,generation,mean_fitness\n";
    for (std::size_t v = 0; v < r.mean_series.size(); ++v)
        for (std::size_t c = 0; c < r.mean_series[v].size(); ++c)
            for (std::size_t g = 0; g < r.mean_series[v][c].size(); ++g)
                out += std::to_string(r.spec.values[v]) + ',' + r.cases[c] + ',' + std::to_string(g + 1) + ','
                       + format_number(r.mean_series[v][c][g]) + '\n';
    return out;
}

} // namespace vppsched

#endif
