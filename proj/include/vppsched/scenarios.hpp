#ifndef VPPSCHED_SCENARIOS_HPP
#define VPPSCHED_SCENARIOS_HPP

// Built-in scenarios, target generation and the local test cases.
//
// Storage data (all without self-discharge):
//
//   unit                C_E kWh   P_ch kW  P_dis kW  eta_ch = eta_dis  initial
//   PSP                  6000      1300     1300      sqrt(0.80)        50 %
//   industry (big)        177.7     117.6    117.6    sqrt(0.92)        10 %
//   industry (small)       33.3       8.25     8.25   sqrt(0.92)        10 %
//   household battery       5.12      1.65     2.4    sqrt(0.81)        10 %
//
// Profiles are synthetic (see profiles.hpp). The peak tariff of the
// industry agents is a placeholder value, not a measured tariff.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

#include "config.hpp"
#include "objectives.hpp"
#include "profiles.hpp"
#include "storage.hpp"

namespace vppsched {

inline constexpr double kHouseholdPrice = 0.2947;   // per kWh
inline constexpr double kIndustryPrice = 0.1649;    // per kWh
inline constexpr double kFeedInPrice = 0.08;        // per kWh
inline constexpr double kPeakTariffPlaceholder = 10.0; // per kW of peak over the horizon
inline constexpr double kDefaultTargetFraction = 0.4;

inline StorageParams psp_storage()
{
    return {6000.0, std::sqrt(0.8), std::sqrt(0.8), 1300.0, 1300.0, std::nullopt, 0.5};
}

inline StorageParams industry_big_storage()
{
    return {177.7, std::sqrt(0.92), std::sqrt(0.92), 117.6, 117.6, std::nullopt, 0.1};
}

inline StorageParams industry_small_storage()
{
    return {33.3, std::sqrt(0.92), std::sqrt(0.92), 8.25, 8.25, std::nullopt, 0.1};
}

inline StorageParams household_storage()
{
    return {5.12, std::sqrt(0.81), std::sqrt(0.81), 1.65, 2.4, std::nullopt, 0.1};
}

/// Grid injection of a storage that absorbs at constant power during the
/// first half of the horizon and feeds the stored energy back during the
/// second half.
inline std::vector<double> reference_injection(const StorageParams& p, const IntervalSpec& spec)
{
    const int n = spec.n_intervals;
    const int half = n / 2;
    const double half_hours = half * spec.hours();
    const double tail_hours = (n - half) * spec.hours();
    std::vector<double> out(static_cast<std::size_t>(n), 0.0);
    if (half == 0)
        return out;
    const double absorb = std::min(p.p_max_charge_kw, (1.0 - p.initial_soc) * p.capacity_kwh / (p.eta_charge * half_hours));
    const double stored = p.initial_soc * p.capacity_kwh + absorb * p.eta_charge * half_hours;
    const double inject = std::min(p.p_max_discharge_kw, stored * p.eta_discharge / tail_hours);
    for (int i = 0; i < n; ++i)
        out[static_cast<std::size_t>(i)] = i < half ? -absorb : inject;
    return out;
}

/// Target as a fraction of the cluster's aggregate reference injection.
inline std::vector<double> generate_target(const ScenarioConfig& c, double fraction = kDefaultTargetFraction)
{
    std::vector<double> target(static_cast<std::size_t>(c.interval.n_intervals), 0.0);
    for (const auto& a : c.agents) {
        const std::vector<double> contrib = a.role == AgentRole::fixed_generator
                                                ? a.generator_kw
                                                : reference_injection(a.effective_storage(), c.interval);
        for (std::size_t i = 0; i < target.size(); ++i)
            target[i] += fraction * contrib[i];
    }
    return target;
}

namespace detail {

    inline std::vector<double> synth(ProfileKind kind, std::uint64_t seed, double scale, const IntervalSpec& spec,
                                     double noise = 0.05)
    {
        SyntheticSpec s;
        s.kind = kind;
        s.seed = seed;
        s.scale = scale;
        s.noise = noise;
        return generate_profile(s, spec);
    }

    inline MarketPrices market_prices(std::uint64_t seed, const IntervalSpec& spec)
    {
        auto p = synth(ProfileKind::market_prices, seed, 1.0, spec);
        return {p, p};
    }

    inline MarketPrices household_prices(const IntervalSpec& spec)
    {
        const auto n = static_cast<std::size_t>(spec.n_intervals);
        return {std::vector<double>(n, kHouseholdPrice), std::vector<double>(n, kFeedInPrice)};
    }

    inline AgentSpec industry_agent(std::string name, bool big, std::uint64_t seed, const IntervalSpec& spec)
    {
        AgentSpec a;
        a.name = std::move(name);
        a.role = big ? AgentRole::industry_peak_big : AgentRole::industry_peak_small;
        a.storage = big ? industry_big_storage() : industry_small_storage();
        a.load_kw = synth(ProfileKind::industry, seed, big ? 1.0 : 0.2, spec);
        a.tariff.peak_price = kPeakTariffPlaceholder;
        return a;
    }

    inline AgentSpec household_agent(std::string name, std::uint64_t seed, const IntervalSpec& spec)
    {
        AgentSpec a;
        a.name = std::move(name);
        a.role = AgentRole::household_sdm;
        a.storage = household_storage();
        a.load_kw = synth(ProfileKind::household, seed, 1.0, spec, 0.1);
        a.generator_kw = synth(ProfileKind::spp, seed + 1000, 3.0, spec);
        a.prices = household_prices(spec);
        return a;
    }

    inline AgentSpec spp_agent(std::string name, double peak_kw, std::uint64_t seed, const IntervalSpec& spec)
    {
        AgentSpec a;
        a.name = std::move(name);
        a.role = AgentRole::fixed_generator;
        a.generator_kw = synth(ProfileKind::spp, seed, peak_kw, spec);
        return a;
    }

    inline AgentSpec psp_agent(double scale, const IntervalSpec& spec)
    {
        AgentSpec a;
        a.name = "psp";
        a.role = AgentRole::psp_arbitrage;
        a.storage = psp_storage();
        a.capacity_scale = scale;
        a.prices = market_prices(7, spec);
        return a;
    }

    inline ScenarioConfig base_config(std::string name, IntervalSpec spec)
    {
        ScenarioConfig c;
        c.name = std::move(name);
        c.interval = spec;
        c.ea.n_intervals = spec.n_intervals;
        return c;
    }

} // namespace detail

/// Eight agents: five big industry storages (peak shaving), the PSP scaled
/// to 10 % capacity (arbitrage) and two solar plants.
inline ScenarioConfig build_scenario_1()
{
    const IntervalSpec spec{96, 15.0};
    ScenarioConfig c = detail::base_config("scenario_1", spec);
    for (int k = 0; k < 5; ++k)
        c.agents.push_back(detail::industry_agent("industry_" + std::to_string(k), true, 100 + k, spec));
    c.agents.push_back(detail::psp_agent(0.1, spec));
    c.agents.push_back(detail::spp_agent("spp_0", 500.0, 200, spec));
    c.agents.push_back(detail::spp_agent("spp_1", 300.0, 201, spec));
    c.target = generate_target(c);
    return c;
}

/// Six agents: one small industry storage, three household batteries and
/// two solar plants.
inline ScenarioConfig build_scenario_2()
{
    const IntervalSpec spec{96, 15.0};
    ScenarioConfig c = detail::base_config("scenario_2", spec);
    c.agents.push_back(detail::industry_agent("industry_0", false, 110, spec));
    for (int k = 0; k < 3; ++k)
        c.agents.push_back(detail::household_agent("household_" + std::to_string(k), 300 + k, spec));
    c.agents.push_back(detail::spp_agent("spp_0", 20.0, 210, spec));
    c.agents.push_back(detail::spp_agent("spp_1", 10.0, 211, spec));
    c.target = generate_target(c);
    return c;
}

/// Desk-scale scenario: 24 hourly intervals, two small industry storages,
/// the PSP scaled to 1 % (capacity and power) and one household.
inline ScenarioConfig build_reduced_scenario()
{
    const IntervalSpec spec{24, 60.0};
    ScenarioConfig c = detail::base_config("reduced", spec);
    c.agents.push_back(detail::industry_agent("industry_0", false, 120, spec));
    c.agents.push_back(detail::industry_agent("industry_1", false, 121, spec));
    AgentSpec psp = detail::psp_agent(0.01, spec);
    psp.storage->p_max_charge_kw *= 0.01;
    psp.storage->p_max_discharge_kw *= 0.01;
    c.agents.push_back(std::move(psp));
    c.agents.push_back(detail::household_agent("household_0", 320, spec));
    c.target = generate_target(c);
    return c;
}

inline ScenarioConfig build_scenario(std::string_view name)
{
    if (name == "scenario_1")
        return build_scenario_1();
    if (name == "scenario_2")
        return build_scenario_2();
    if (name == "reduced")
        return build_reduced_scenario();
    throw ConfigError("unknown built-in scenario '" + std::string(name) + "'");
}

/// Write `<dir>/<name>.json` with every profile stored as a CSV file under
/// `<dir>/profiles/<name>/` and referenced by relative path.
inline std::filesystem::path write_scenario_bundle(const ScenarioConfig& c, const std::filesystem::path& dir)
{
    namespace fs = std::filesystem;
    const fs::path rel = fs::path("profiles") / c.name;
    fs::create_directories(dir / rel);
    auto dump = [&](const std::vector<double>& v, const std::string& file) {
        std::ofstream f(dir / rel / file, std::ios::binary);
        if (!f)
            throw ConfigError("cannot write profile '" + (dir / rel / file).string() + "'");
        f << profile_to_csv(v);
        return Json{{"csv", (rel / file).generic_string()}};
    };
    Json j = to_json(c);
    j["target"] = dump(c.target, "target.csv");
    for (std::size_t k = 0; k < c.agents.size(); ++k) {
        const auto& a = c.agents[k];
        Json& ja = j["agents"][k];
        if (!a.load_kw.empty())
            ja["load"] = dump(a.load_kw, a.name + "_load.csv");
        if (!a.generator_kw.empty())
            ja["generator"] = dump(a.generator_kw, a.name + "_generator.csv");
        if (ja.contains("prices"))
            ja["prices"] = {{"buy", dump(a.prices.buy_price, a.name + "_buy_price.csv")},
                            {"sell", dump(a.prices.sell_price, a.name + "_sell_price.csv")}};
    }
    const fs::path out = dir / (c.name + ".json");
    std::ofstream f(out, std::ios::binary);
    if (!f)
        throw ConfigError("cannot write scenario '" + out.string() + "'");
    f << j.dump(2) << '\n';
    return out;
}

} // namespace vppsched

#endif
