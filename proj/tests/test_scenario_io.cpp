#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <set>
#include <string>
#include <vector>

#include "vppsched/agent.hpp"
#include "vppsched/config.hpp"
#include "vppsched/profiles.hpp"
#include "vppsched/scenarios.hpp"
#include "toy_arbitrage.hpp"

using namespace vppsched;

namespace {

const IntervalSpec kDay{96, 15.0};

std::string csv_rows(int n)
{
    std::string s = "interval_index,value\n";
    for (int i = 0; i < n; ++i)
        s += std::to_string(i) + ",1.5\n";
    return s;
}

double median(std::vector<double> v)
{
    std::sort(v.begin(), v.end());
    const std::size_t m = v.size() / 2;
    return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

} // namespace

TEST(Profiles, SppZeroOutsideDaylight)
{
    const auto v = generate_profile({ProfileKind::spp, 3, 10.0, 0.1}, kDay);
    for (int i = 0; i < 96; ++i) {
        const double t = (i + 0.5) * 0.25;
        if (t < 6.0 || t > 18.0) {
            EXPECT_EQ(v[static_cast<std::size_t>(i)], 0.0) << i;
        }
    }
    EXPECT_GT(*std::max_element(v.begin(), v.end()), 5.0);
}

TEST(Profiles, HouseholdDailyEnergyInBand)
{
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        const double e = profile_energy_kwh(generate_profile({ProfileKind::household, seed}, kDay), kDay);
        EXPECT_GE(e, 8.0);
        EXPECT_LE(e, 12.0);
    }
}

TEST(Profiles, SeededAndNonNegative)
{
    for (auto kind : {ProfileKind::household, ProfileKind::industry, ProfileKind::spp, ProfileKind::market_prices}) {
        const SyntheticSpec s{kind, 9, 2.0, 0.3};
        const auto a = generate_profile(s, kDay);
        EXPECT_EQ(a, generate_profile(s, kDay));
        EXPECT_NE(a, generate_profile({kind, 10, 2.0, 0.3}, kDay));
        for (double x : a)
            EXPECT_GE(x, 0.0);
    }
    EXPECT_THROW(generate_profile({ProfileKind::flat, 0, -1.0}, kDay), ConfigError);
    EXPECT_THROW(profile_kind_from_string("wind"), ConfigError);
}

TEST(ProfileCsv, RoundTripExact)
{
    const auto v = generate_profile({ProfileKind::industry, 4}, kDay);
    EXPECT_EQ(parse_profile_csv(profile_to_csv(v), 96), v);
}

TEST(ProfileCsv, Errors)
{
    EXPECT_NO_THROW(parse_profile_csv(csv_rows(96), 96));
    EXPECT_THROW(parse_profile_csv(csv_rows(95), 96), ConfigError);
    EXPECT_THROW(parse_profile_csv("", 1), ConfigError);
    EXPECT_THROW(parse_profile_csv("i,v\n0,abc\n", 1), ConfigError);
    EXPECT_THROW(parse_profile_csv("i,v\n0,1.0x\n", 1), ConfigError);
    EXPECT_THROW(parse_profile_csv("i,v\n1,1.0\n", 1), ConfigError);
    EXPECT_THROW(parse_profile_csv("i,v\n0;1.0\n", 1), ConfigError);
    EXPECT_THROW(parse_profile_csv("i,v\n0,inf\n", 1), ConfigError);
    EXPECT_EQ(parse_profile_csv("i,v\r\n0,2.5\r\n", 1), std::vector<double>{2.5});
    EXPECT_THROW(load_profile_csv("/nonexistent/profile.csv", 96), ConfigError);
}

TEST(Scenarios, AgentCountsAndStorage)
{
    const auto s1 = build_scenario_1();
    const auto s2 = build_scenario_2();
    EXPECT_EQ(s1.agents.size(), 8u);
    EXPECT_EQ(s2.agents.size(), 6u);
    bool found_psp = false;
    for (const auto& a : s1.agents)
        if (a.role == AgentRole::psp_arbitrage) {
            found_psp = true;
            EXPECT_DOUBLE_EQ(a.effective_storage().capacity_kwh, 600.0);
        }
    EXPECT_TRUE(found_psp);
    for (const auto& a : s2.agents) {
        if (a.storage) {
            EXPECT_DOUBLE_EQ(a.storage->initial_soc, 0.1);
        }
    }
    const auto r = build_reduced_scenario();
    EXPECT_EQ(r.interval.n_intervals, 24);
    EXPECT_EQ(r.agents.size(), 4u);
    EXPECT_THROW(build_scenario("scenario_3"), ConfigError);
}

TEST(Scenarios, TargetIsNonZeroAndFeasibleLength)
{
    for (const auto& c : {build_scenario_1(), build_scenario_2(), build_reduced_scenario()}) {
        EXPECT_EQ(c.target.size(), static_cast<std::size_t>(c.interval.n_intervals));
        EXPECT_GT(l1_norm(c.target), 0.0);
        EXPECT_NO_THROW(check(c));
    }
}

TEST(Config, SerializeRoundTrip)
{
    for (const auto& c : {build_scenario_1(), build_scenario_2(), build_reduced_scenario()}) {
        const auto back = parse_scenario(serialize(c));
        EXPECT_EQ(back, c);
        EXPECT_EQ(serialize(back), serialize(c));
    }
}

TEST(Config, BundleWithCsvProfilesRoundTrip)
{
    const auto dir = std::filesystem::temp_directory_path() / "vppsched_bundle_test";
    std::filesystem::remove_all(dir);
    for (const auto& c : {build_scenario_2(), build_reduced_scenario()}) {
        const auto file = write_scenario_bundle(c, dir);
        EXPECT_EQ(load_scenario(file), c);
    }
    std::filesystem::remove_all(dir);
}

TEST(Config, ShippedScenarioFilesMatchBuilders)
{
    const std::filesystem::path data(VPPSCHED_SCENARIO_DIR);
    for (const std::string name : {"scenario_1", "scenario_2", "reduced"})
        EXPECT_EQ(load_scenario(data / (name + ".json")), build_scenario(name)) << name;
}

TEST(Config, RejectsInvalid)
{
    EXPECT_THROW(parse_scenario("{"), ConfigError);
    EXPECT_THROW(load_scenario("/nonexistent/scenario.json"), ConfigError);
    auto c = build_reduced_scenario();
    c.target.pop_back();
    EXPECT_THROW(check(c), ConfigError);
    c = build_reduced_scenario();
    c.agents.clear();
    EXPECT_THROW(check(c), ConfigError);
    c = build_reduced_scenario();
    c.phi_relative = 0.0;
    EXPECT_THROW(check(c), ConfigError);
    c = build_reduced_scenario();
    c.agents[0].storage.reset();
    EXPECT_THROW(check(c), ConfigError);
    EXPECT_THROW(method_from_string("gabhyme"), ConfigError);
    EXPECT_THROW(agent_role_from_string("wind"), ConfigError);

    auto j = to_json(build_reduced_scenario());
    j["agents"][0]["load"] = Json{{"csv", "missing.csv"}};
    EXPECT_THROW(scenario_from_json(j, "/nonexistent"), ConfigError);
}

TEST(BaselineSampling, ValidDeterministicDistinct)
{
    const auto c = build_scenario_2();
    const auto env = environment_for(c.agents[1], c.interval);
    Rng a(5);
    Rng b(5);
    const auto set = run_baseline_sampling(env, 10000, a);
    ASSERT_EQ(set.size(), 10000u);
    std::set<std::vector<double>> unique;
    for (const auto& os : set.schedules)
        unique.insert(os.power_kw);
    EXPECT_GE(unique.size(), 9900u);
    const auto again = run_baseline_sampling(env, 100, b);
    for (std::size_t k = 0; k < again.size(); ++k)
        EXPECT_EQ(again.schedules[k].power_kw, set.schedules[k].power_kw);

    Rng c2(6);
    for (int k = 0; k < 10000; ++k) {
        const auto gl = sample_load_state_schedule(env.storage, env.interval, env.coupled, c2);
        const auto g = repair(detail::to_power_unchecked(gl, env.storage, env.interval), env.storage, env.interval,
                              env.coupled, c2);
        ASSERT_TRUE(validate(g, env.storage, env.interval, env.coupled).ok());
    }
}

TEST(BaselineEa, GabhymeMedianAtLeastBaselineOnToy)
{
    std::vector<double> ours;
    std::vector<double> theirs;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        EaParams p;
        p.n_intervals = 8;
        p.kappa = 100;
        p.use_mgbm = false;
        Gabhyme g(p, toy::environment(), Rng(seed));
        g.run();
        ours.push_back(g.best().fitness.local);
        p.operators = OperatorSet::baseline;
        Gabhyme e(p, toy::environment(), Rng(seed));
        e.run();
        theirs.push_back(e.best().fitness.local);
        EXPECT_EQ(e.counters().recombinations, 0);
        EXPECT_EQ(e.counters().restarts, 0);
    }
    EXPECT_GE(median(ours), median(theirs));
}
