#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "vppsched/agent.hpp"
#include "vppsched/scenarios.hpp"
#include "vppsched/simnet.hpp"

using namespace vppsched;

namespace {

ScenarioConfig quick_reduced(Method m = Method::gabhyme_n)
{
    auto cfg = build_reduced_scenario();
    cfg.method = m;
    cfg.ea.kappa = 15;
    cfg.sampling_count = 50;
    return cfg;
}

std::vector<Json> parse_lines(const RunRecord& rec)
{
    std::vector<Json> out;
    for (const auto& l : rec.lines)
        out.push_back(Json::parse(l));
    return out;
}

/// Each agent's complete-candidate fitness never decreases over the record.
bool monotone_candidates(const std::vector<Json>& lines, std::size_t n_agents)
{
    std::map<long, double> last;
    for (const auto& j : lines) {
        if (j.at("type") != "candidate" || j.at("size").get<std::size_t>() != n_agents)
            continue;
        const long agent = j.at("agent").get<long>();
        const double f = detail::number_from(j.at("fitness"));
        if (last.contains(agent) && f < last[agent])
            return false;
        last[agent] = f;
    }
    return true;
}

/// Every decider-admitted and every pre-optimised schedule lies above phi.
bool decider_gate_holds(const std::vector<Json>& lines)
{
    for (const auto& j : lines) {
        if (j.at("type") == "insert"
            && !(detail::number_from(j.at("local_fitness")) > detail::number_from(j.at("phi"))))
            return false;
        if (j.at("type") == "seed_set"
            && !(detail::number_from(j.at("min_local_fitness")) > detail::number_from(j.at("phi"))))
            return false;
    }
    return true;
}

} // namespace

TEST(Simnet, SingleFixedAgentMatchingTarget)
{
    ScenarioConfig cfg;
    cfg.interval = {4, 15.0};
    AgentSpec gen;
    gen.name = "pv";
    gen.role = AgentRole::fixed_generator;
    gen.generator_kw = {1.0, 2.0, 3.0, 4.0};
    cfg.agents.push_back(gen);
    cfg.target = {1.0, 2.0, 3.0, 4.0};
    cfg.method = Method::sampling;
    const auto rec = run_negotiation(cfg);
    EXPECT_TRUE(rec.metrics.quiescent);
    EXPECT_LE(rec.metrics.ticks, 2);
    EXPECT_TRUE(rec.metrics.agreement);
    EXPECT_DOUBLE_EQ(rec.metrics.fulfillment, 1.0);
}

TEST(Simnet, DeterministicRecord)
{
    const auto cfg = quick_reduced();
    const auto a = run_negotiation(cfg);
    const auto b = run_negotiation(cfg);
    EXPECT_EQ(a.text(), b.text());
    EXPECT_TRUE(a.metrics.quiescent);
}

TEST(Simnet, ReplayReproducesRecord)
{
    const auto rec = run_negotiation(quick_reduced(Method::ea_p), {.seed = 99, .budget_ticks = std::nullopt});
    const auto r = replay(rec.lines);
    EXPECT_TRUE(r.identical);
    EXPECT_TRUE(r.metrics_identical);
    EXPECT_EQ(r.rerun.metrics.global_fitness, rec.metrics.global_fitness);
}

TEST(Simnet, ReplayDetectsTampering)
{
    auto rec = run_negotiation(quick_reduced(Method::sampling));
    auto lines = rec.lines;
    lines.back() = "{}";
    const auto r = replay(lines);
    EXPECT_FALSE(r.identical);
    EXPECT_FALSE(r.metrics_identical);
    EXPECT_EQ(r.first_difference, lines.size() - 1);
    EXPECT_THROW(replay({}), ConfigError);
    EXPECT_THROW(replay({"{\"type\":\"final\"}"}), ConfigError);
}

TEST(Simnet, ExactlyOnceDeliveryAndAgreementAtQuiescence)
{
    for (auto m : kAllMethods) {
        for (auto mode : {DeliveryMode::round_robin, DeliveryMode::random_order}) {
            auto cfg = quick_reduced(m);
            cfg.delivery.mode = mode;
            cfg.delivery.latency = 2;
            cfg.topology = {TopologyKind::ring};
            const auto rec = run_negotiation(cfg);
            ASSERT_TRUE(rec.metrics.quiescent) << to_string(m);
            EXPECT_EQ(rec.metrics.messages_sent, rec.metrics.messages_delivered);
            EXPECT_TRUE(rec.metrics.agreement) << to_string(m);
            EXPECT_TRUE(std::isfinite(rec.metrics.fulfillment));
        }
    }
}

TEST(Simnet, LoggedRunsMonotoneAndGated)
{
    for (auto m : kAllMethods) {
        const auto cfg = quick_reduced(m);
        const auto rec = run_negotiation(cfg);
        const auto lines = parse_lines(rec);
        EXPECT_TRUE(monotone_candidates(lines, cfg.agents.size())) << to_string(m);
        EXPECT_TRUE(decider_gate_holds(lines)) << to_string(m);
    }
}

TEST(Simnet, HistoryHasOneCombinedValuePerAgent)
{
    const auto cfg = quick_reduced();
    const auto lines = parse_lines(run_negotiation(cfg));
    int histories = 0;
    for (const auto& j : lines)
        if (j.at("type") == "history") {
            ++histories;
            EXPECT_EQ(j.at("combined").size(), cfg.agents.size());
        }
    EXPECT_GT(histories, 1);
    const auto quiet = run_negotiation(cfg, {.seed = std::nullopt, .budget_ticks = std::nullopt, .record_history = false});
    for (const auto& l : quiet.lines)
        EXPECT_EQ(l.find("\"history\""), std::string::npos);
}

TEST(Simnet, BudgetExhaustion)
{
    const auto rec = run_negotiation(build_reduced_scenario(), {.seed = std::nullopt, .budget_ticks = 3});
    EXPECT_TRUE(rec.metrics.budget_exhausted);
    EXPECT_FALSE(rec.metrics.quiescent);
    EXPECT_EQ(rec.metrics.ticks, 3);
}

TEST(Simnet, SamplingEquilibriumOverReconstructedSets)
{
    auto cfg = quick_reduced(Method::sampling);
    cfg.agents.resize(3);
    cfg.sampling_count = 3;
    cfg.target = generate_target(cfg);
    const auto rec = run_negotiation(cfg);
    ASSERT_TRUE(rec.metrics.quiescent);

    std::vector<std::vector<std::vector<double>>> sets;
    for (std::size_t a = 0; a < 3; ++a) {
        Rng rng(derive_seed(cfg.seed, a));
        std::vector<std::vector<double>> s;
        for (const auto& os : run_baseline_sampling(environment_for(cfg.agents[a], cfg.interval), 3, rng).schedules)
            s.push_back(os.power_kw);
        sets.push_back(s);
    }
    auto fitness_of = [&](const std::vector<std::size_t>& pick) {
        std::vector<double> sum(cfg.target.size(), 0.0);
        for (std::size_t a = 0; a < 3; ++a)
            for (std::size_t i = 0; i < sum.size(); ++i)
                sum[i] += sets[a][pick[a]][i];
        return global_fitness_of_sum(sum, cfg.target);
    };
    std::vector<std::size_t> chosen(3, 99);
    double optimum = kNegInf;
    for (std::size_t a = 0; a < 3; ++a)
        for (std::size_t s = 0; s < 3; ++s)
            if (sets[a][s] == rec.agents[a].power_kw)
                chosen[a] = s;
    for (std::size_t x = 0; x < 27; ++x)
        optimum = std::max(optimum, fitness_of({x % 3, (x / 3) % 3, x / 9}));
    for (auto c : chosen)
        ASSERT_LT(c, 3u);
    EXPECT_DOUBLE_EQ(fitness_of(chosen), rec.metrics.global_fitness);
    EXPECT_LE(rec.metrics.global_fitness, optimum);
    for (std::size_t a = 0; a < 3; ++a)
        for (std::size_t s = 0; s < 3; ++s) {
            auto alt = chosen;
            alt[a] = s;
            EXPECT_LE(fitness_of(alt), rec.metrics.global_fitness + 1e-9);
        }
}

TEST(Simnet, SeedIsolationAcrossAgents)
{
    const auto cfg = quick_reduced(Method::sampling);
    auto changed = cfg;
    changed.agents[1].storage->capacity_kwh *= 2.0;
    auto schedules = [](const ScenarioConfig& c, AgentId id) {
        Agent agent(id, c.agents[id], c, {});
        agent.bootstrap(c.target);
        std::vector<std::vector<double>> out;
        for (const auto& os : agent.negotiation().schedule_set().schedules)
            out.push_back(os.power_kw);
        return out;
    };
    EXPECT_EQ(schedules(cfg, 0), schedules(changed, 0));
    EXPECT_EQ(schedules(cfg, 3), schedules(changed, 3));
    EXPECT_NE(schedules(cfg, 1), schedules(changed, 1));
}

TEST(Simnet, ConcurrentModeAgrees)
{
    for (auto m : {Method::gabhyme_n, Method::sampling}) {
        const auto r = run_concurrent(quick_reduced(m));
        EXPECT_TRUE(r.agreement) << to_string(m);
        EXPECT_TRUE(std::isfinite(r.global_fitness));
        EXPECT_GT(r.messages, 0);
    }
}
