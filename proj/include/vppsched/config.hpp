#ifndef VPPSCHED_CONFIG_HPP
#define VPPSCHED_CONFIG_HPP

// Scenario description and its JSON form.
//
// Profiles in a scenario file are either inline arrays, {"csv": path}
// (relative to the scenario file) or {"synthetic": {...}}. Serialisation
// always writes resolved inline arrays, so a serialised scenario is
// self-contained and parses back to an equal configuration.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <array>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "errors.hpp"
#include "gabhyme.hpp"
#include "objectives.hpp"
#include "profiles.hpp"
#include "storage.hpp"
#include "topology.hpp"

namespace vppsched {

using Json = nlohmann::json;

enum class AgentRole : std::uint8_t {
    psp_arbitrage,
    industry_peak_big,
    industry_peak_small,
    household_sdm,
    fixed_generator,
};

inline constexpr std::string_view to_string(AgentRole r)
{
    switch (r) {
    case AgentRole::psp_arbitrage: return "psp_arbitrage";
    case AgentRole::industry_peak_big: return "industry_peak_big";
    case AgentRole::industry_peak_small: return "industry_peak_small";
    case AgentRole::household_sdm: return "household_sdm";
    case AgentRole::fixed_generator: return "fixed_generator";
    }
    return "?";
}

inline constexpr std::array<AgentRole, 5> kAllRoles{AgentRole::psp_arbitrage, AgentRole::industry_peak_big,
                                                   AgentRole::industry_peak_small, AgentRole::household_sdm,
                                                   AgentRole::fixed_generator};

inline AgentRole agent_role_from_string(std::string_view name)
{
    for (auto r : kAllRoles)
        if (to_string(r) == name)
            return r;
    throw ConfigError("unknown agent role '" + std::string(name) + "'");
}

enum class Method : std::uint8_t { gabhyme_n, gabhyme_p, ea_n, ea_p, sampling };

inline constexpr std::array<Method, 5> kAllMethods{Method::gabhyme_n, Method::gabhyme_p, Method::ea_n, Method::ea_p,
                                                  Method::sampling};

inline constexpr std::string_view to_string(Method m)
{
    switch (m) {
    case Method::gabhyme_n: return "gabhyme_n";
    case Method::gabhyme_p: return "gabhyme_p";
    case Method::ea_n: return "ea_n";
    case Method::ea_p: return "ea_p";
    case Method::sampling: return "sampling";
    }
    return "?";
}

inline Method method_from_string(std::string_view name)
{
    for (auto m : kAllMethods)
        if (to_string(m) == name)
            return m;
    throw ConfigError("unknown method '" + std::string(name) + "'");
}

inline SelectionMode method_mode(Method m)
{
    return m == Method::gabhyme_p || m == Method::ea_p ? SelectionMode::pareto : SelectionMode::normalized;
}

inline OperatorSet method_operators(Method m)
{
    return m == Method::ea_n || m == Method::ea_p ? OperatorSet::baseline : OperatorSet::gabhyme;
}

enum class DeliveryMode : std::uint8_t { round_robin, random_order };

inline constexpr std::string_view to_string(DeliveryMode m)
{
    return m == DeliveryMode::round_robin ? "round_robin" : "random_order";
}

inline DeliveryMode delivery_mode_from_string(std::string_view name)
{
    if (name == "round_robin")
        return DeliveryMode::round_robin;
    if (name == "random_order")
        return DeliveryMode::random_order;
    throw ConfigError("unknown delivery mode '" + std::string(name) + "'");
}

struct DeliverySpec {
    DeliveryMode mode = DeliveryMode::round_robin;
    int latency = 1; // ticks
    friend bool operator==(const DeliverySpec&, const DeliverySpec&) = default;
};

struct AgentSpec {
    std::string name;
    AgentRole role = AgentRole::fixed_generator;
    std::optional<StorageParams> storage;
    double capacity_scale = 1.0;
    std::vector<double> load_kw;      // local demand H
    std::vector<double> generator_kw; // coupled generator, or the output of a fixed generator
    MarketPrices prices;
    PeakTariff tariff;
    PeakFormula peak_formula = PeakFormula::corrected;
    std::optional<double> phi_relative;

    /// Storage with capacity_scale applied.
    [[nodiscard]] StorageParams effective_storage() const
    {
        if (!storage)
            throw ConfigError("agent '" + name + "' has no storage");
        StorageParams p = *storage;
        p.capacity_kwh *= capacity_scale;
        return p;
    }

    friend bool operator==(const AgentSpec&, const AgentSpec&) = default;
};

struct ScenarioConfig {
    std::string name = "scenario";
    IntervalSpec interval;
    std::vector<AgentSpec> agents;
    TopologySpec topology;
    DeliverySpec delivery;
    std::vector<double> target;
    int trials = 10;
    Method method = Method::gabhyme_n;
    EaParams ea;
    bool seed_from_preopt = true;
    double phi_relative = 0.5;
    std::uint64_t seed = 1;
    int sampling_count = 10000;
    long budget_ticks = 5000;

    friend bool operator==(const ScenarioConfig&, const ScenarioConfig&) = default;
};

/// Structural checks: lengths, role-specific inputs, parameter ranges.
inline void check(const ScenarioConfig& c)
{
    try {
        c.interval.check();
        c.ea.check();
    } catch (const ContractError& e) {
        throw ConfigError(e.what());
    }
    const auto n = static_cast<std::size_t>(c.interval.n_intervals);
    if (c.agents.empty())
        throw ConfigError("scenario has no agents");
    if (c.target.size() != n)
        throw ConfigError("target length differs from horizon");
    if (c.trials < 1 || c.sampling_count < 1 || c.budget_ticks < 1 || c.delivery.latency < 1)
        throw ConfigError("trials, sampling_count, budget_ticks and latency must be positive");
    if (!(c.phi_relative > 0.0 && c.phi_relative <= 1.0))
        throw ConfigError("phi_relative must lie in (0, 1]");
    for (const auto& a : c.agents) {
        const std::string who = "agent '" + a.name + "'";
        auto need = [&](const std::vector<double>& v, std::string_view what) {
            if (v.size() != n)
                throw ConfigError(who + ": " + std::string(what) + " length differs from horizon");
        };
        if (a.phi_relative && !(*a.phi_relative > 0.0 && *a.phi_relative <= 1.0))
            throw ConfigError(who + ": phi_relative must lie in (0, 1]");
        if (a.role == AgentRole::fixed_generator) {
            need(a.generator_kw, "generator profile");
            check_generator_profile(a.generator_kw, who);
            continue;
        }
        if (!a.storage)
            throw ConfigError(who + ": storage parameters required");
        if (!(a.capacity_scale > 0.0))
            throw ConfigError(who + ": capacity_scale must be positive");
        try {
            a.effective_storage().check();
        } catch (const ContractError& e) {
            throw ConfigError(who + ": " + e.what());
        }
        if (!a.generator_kw.empty()) {
            need(a.generator_kw, "generator profile");
            check_generator_profile(a.generator_kw, who);
        }
        switch (a.role) {
        case AgentRole::psp_arbitrage:
            need(a.prices.buy_price, "buy price");
            need(a.prices.sell_price, "sell price");
            break;
        case AgentRole::industry_peak_big:
        case AgentRole::industry_peak_small:
            need(a.load_kw, "load profile");
            if (!(a.tariff.peak_price >= 0.0))
                throw ConfigError(who + ": peak tariff must be non-negative");
            break;
        case AgentRole::household_sdm:
            need(a.load_kw, "load profile");
            need(a.generator_kw, "generator profile");
            need(a.prices.buy_price, "buy price");
            break;
        case AgentRole::fixed_generator: break;
        }
    }
}

namespace detail {

    inline std::vector<double> resolve_profile(const Json& j, const IntervalSpec& spec,
                                               const std::filesystem::path& base, std::string_view what)
    {
        if (j.is_array()) {
            std::vector<double> v;
            for (const auto& x : j) {
                if (!x.is_number())
                    throw ConfigError(std::string(what) + ": non-numeric entry");
                v.push_back(x.get<double>());
            }
            return v;
        }
        if (j.is_object() && j.contains("csv")) {
            const std::filesystem::path p = j.at("csv").get<std::string>();
            return load_profile_csv((p.is_absolute() ? p : base / p).string(), spec.n_intervals);
        }
        if (j.is_object() && j.contains("synthetic")) {
            const Json& s = j.at("synthetic");
            SyntheticSpec syn;
            syn.kind = profile_kind_from_string(s.at("kind").get<std::string>());
            syn.seed = s.value("seed", std::uint64_t{0});
            syn.scale = s.value("scale", 1.0);
            syn.noise = s.value("noise", 0.05);
            syn.day_price = s.value("day_price", syn.day_price);
            syn.night_price = s.value("night_price", syn.night_price);
            return generate_profile(syn, spec);
        }
        throw ConfigError(std::string(what) + ": expected array, {\"csv\": ...} or {\"synthetic\": ...}");
    }

    inline Json storage_to_json(const StorageParams& p)
    {
        Json j;
        j["capacity_kwh"] = p.capacity_kwh;
        j["eta_charge"] = p.eta_charge;
        j["eta_discharge"] = p.eta_discharge;
        j["p_max_charge_kw"] = p.p_max_charge_kw;
        j["p_max_discharge_kw"] = p.p_max_discharge_kw;
        j["self_discharge_tau"] = p.self_discharge_tau ? Json(*p.self_discharge_tau) : Json(nullptr);
        j["initial_soc"] = p.initial_soc;
        return j;
    }

    inline StorageParams storage_from_json(const Json& j)
    {
        StorageParams p;
        p.capacity_kwh = j.at("capacity_kwh").get<double>();
        p.eta_charge = j.at("eta_charge").get<double>();
        p.eta_discharge = j.at("eta_discharge").get<double>();
        p.p_max_charge_kw = j.at("p_max_charge_kw").get<double>();
        p.p_max_discharge_kw = j.at("p_max_discharge_kw").get<double>();
        if (j.contains("self_discharge_tau") && !j.at("self_discharge_tau").is_null())
            p.self_discharge_tau = j.at("self_discharge_tau").get<double>();
        p.initial_soc = j.at("initial_soc").get<double>();
        return p;
    }

    inline Json ea_to_json(const EaParams& p, bool seed_from_preopt)
    {
        Json j;
        j["mu"] = p.mu;
        j["lambda"] = p.lambda;
        j["kappa"] = p.kappa;
        j["rho"] = p.rho;
        j["restart_window"] = p.restart_window ? Json(*p.restart_window) : Json(nullptr);
        j["restart_epsilon"] = p.restart_epsilon;
        j["use_mgbm"] = p.use_mgbm;
        j["seed_from_preopt"] = seed_from_preopt;
        j["mgbm"] = {{"process_noise", p.mgbm.process_noise},
                     {"measurement_noise", p.mgbm.measurement_noise},
                     {"stop_threshold", p.mgbm.stop_threshold},
                     {"min_generations", p.mgbm.min_generations},
                     {"initial_variance", p.mgbm.initial_variance}};
        return j;
    }

    inline void ea_from_json(const Json& j, EaParams& p, bool& seed_from_preopt)
    {
        p.mu = j.value("mu", p.mu);
        p.lambda = j.value("lambda", p.lambda);
        p.kappa = j.value("kappa", p.kappa);
        p.rho = j.value("rho", p.rho);
        if (j.contains("restart_window") && !j.at("restart_window").is_null())
            p.restart_window = j.at("restart_window").get<int>();
        p.restart_epsilon = j.value("restart_epsilon", p.restart_epsilon);
        p.use_mgbm = j.value("use_mgbm", p.use_mgbm);
        seed_from_preopt = j.value("seed_from_preopt", seed_from_preopt);
        if (j.contains("mgbm")) {
            const Json& m = j.at("mgbm");
            p.mgbm.process_noise = m.value("process_noise", p.mgbm.process_noise);
            p.mgbm.measurement_noise = m.value("measurement_noise", p.mgbm.measurement_noise);
            p.mgbm.stop_threshold = m.value("stop_threshold", p.mgbm.stop_threshold);
            p.mgbm.min_generations = m.value("min_generations", p.mgbm.min_generations);
            p.mgbm.initial_variance = m.value("initial_variance", p.mgbm.initial_variance);
        }
    }

} // namespace detail

inline Json to_json(const ScenarioConfig& c)
{
    Json j;
    j["name"] = c.name;
    j["horizon"] = {{"n_intervals", c.interval.n_intervals}, {"minutes_per_interval", c.interval.minutes_per_interval}};
    j["topology"] = {{"kind", std::string(to_string(c.topology.kind))}, {"k", c.topology.k}, {"p", c.topology.p}};
    j["delivery"] = {{"mode", std::string(to_string(c.delivery.mode))}, {"latency", c.delivery.latency}};
    j["target"] = c.target;
    j["trials"] = c.trials;
    j["method"] = std::string(to_string(c.method));
    j["ea"] = detail::ea_to_json(c.ea, c.seed_from_preopt);
    j["phi_relative"] = c.phi_relative;
    j["seed"] = c.seed;
    j["sampling_count"] = c.sampling_count;
    j["budget_ticks"] = c.budget_ticks;
    Json agents = Json::array();
    for (const auto& a : c.agents) {
        Json ja;
        ja["name"] = a.name;
        ja["role"] = std::string(to_string(a.role));
        if (a.storage)
            ja["storage"] = detail::storage_to_json(*a.storage);
        ja["capacity_scale"] = a.capacity_scale;
        if (!a.load_kw.empty())
            ja["load"] = a.load_kw;
        if (!a.generator_kw.empty())
            ja["generator"] = a.generator_kw;
        if (!a.prices.buy_price.empty() || !a.prices.sell_price.empty())
            ja["prices"] = {{"buy", a.prices.buy_price}, {"sell", a.prices.sell_price}};
        ja["peak_tariff"] = a.tariff.peak_price;
        ja["peak_formula"] = a.peak_formula == PeakFormula::corrected ? "corrected" : "as_printed";
        if (a.phi_relative)
            ja["phi_relative"] = *a.phi_relative;
        agents.push_back(std::move(ja));
    }
    j["agents"] = std::move(agents);
    return j;
}

/// Parse a scenario; relative CSV paths resolve against `base_dir`.
inline ScenarioConfig scenario_from_json(const Json& j, const std::filesystem::path& base_dir = {})
{
    ScenarioConfig c;
    try {
        c.name = j.value("name", c.name);
        const Json& h = j.at("horizon");
        c.interval.n_intervals = h.at("n_intervals").get<int>();
        c.interval.minutes_per_interval = h.at("minutes_per_interval").get<double>();
        c.interval.check();
        c.ea.n_intervals = c.interval.n_intervals;
        if (j.contains("topology")) {
            const Json& t = j.at("topology");
            c.topology.kind = topology_kind_from_string(t.at("kind").get<std::string>());
            c.topology.k = t.value("k", c.topology.k);
            c.topology.p = t.value("p", c.topology.p);
        }
        if (j.contains("delivery")) {
            const Json& d = j.at("delivery");
            c.delivery.mode = delivery_mode_from_string(d.value("mode", std::string("round_robin")));
            c.delivery.latency = d.value("latency", 1);
        }
        c.trials = j.value("trials", c.trials);
        c.method = method_from_string(j.value("method", std::string(to_string(c.method))));
        if (j.contains("ea"))
            detail::ea_from_json(j.at("ea"), c.ea, c.seed_from_preopt);
        c.phi_relative = j.value("phi_relative", c.phi_relative);
        c.seed = j.value("seed", c.seed);
        c.sampling_count = j.value("sampling_count", c.sampling_count);
        c.budget_ticks = j.value("budget_ticks", c.budget_ticks);

        for (const Json& ja : j.at("agents")) {
            AgentSpec a;
            a.name = ja.at("name").get<std::string>();
            a.role = agent_role_from_string(ja.at("role").get<std::string>());
            if (ja.contains("storage"))
                a.storage = detail::storage_from_json(ja.at("storage"));
            a.capacity_scale = ja.value("capacity_scale", 1.0);
            if (ja.contains("load"))
                a.load_kw = detail::resolve_profile(ja.at("load"), c.interval, base_dir, a.name + " load");
            if (ja.contains("generator"))
                a.generator_kw = detail::resolve_profile(ja.at("generator"), c.interval, base_dir, a.name + " generator");
            if (ja.contains("prices")) {
                const Json& p = ja.at("prices");
                a.prices.buy_price = detail::resolve_profile(p.at("buy"), c.interval, base_dir, a.name + " buy price");
                a.prices.sell_price = detail::resolve_profile(p.at("sell"), c.interval, base_dir, a.name + " sell price");
            }
            a.tariff.peak_price = ja.value("peak_tariff", 0.0);
            const std::string formula = ja.value("peak_formula", std::string("corrected"));
            if (formula == "corrected")
                a.peak_formula = PeakFormula::corrected;
            else if (formula == "as_printed")
                a.peak_formula = PeakFormula::as_printed;
            else
                throw ConfigError("unknown peak formula '" + formula + "'");
            if (ja.contains("phi_relative"))
                a.phi_relative = ja.at("phi_relative").get<double>();
            c.agents.push_back(std::move(a));
        }
        c.target = detail::resolve_profile(j.at("target"), c.interval, base_dir, "target");
    } catch (const Json::exception& e) {
        throw ConfigError(std::string("scenario: ") + e.what());
    } catch (const ContractError& e) {
        throw ConfigError(std::string("scenario: ") + e.what());
    }
    check(c);
    return c;
}

inline ScenarioConfig parse_scenario(std::string_view text, const std::filesystem::path& base_dir = {})
{
    Json j;
    try {
        j = Json::parse(text);
    } catch (const Json::parse_error& e) {
        throw ConfigError(std::string("scenario: ") + e.what());
    }
    return scenario_from_json(j, base_dir);
}

inline ScenarioConfig load_scenario(const std::filesystem::path& path)
{
    std::ifstream f(path);
    if (!f)
        throw ConfigError("cannot open scenario '" + path.string() + "'");
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_scenario(ss.str(), path.parent_path());
}

inline std::string serialize(const ScenarioConfig& c)
{
    return to_json(c).dump(2) + "\n";
}

} // namespace vppsched

#endif
