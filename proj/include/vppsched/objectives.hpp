#ifndef VPPSCHED_OBJECTIVES_HPP
#define VPPSCHED_OBJECTIVES_HPP

// Global cluster objective, the three local storage objectives, fitness
// normalisation, the death penalty and evaluation metrics.
//
// Prices are per kWh and schedules are in kW, so every per-interval term of
// the money-valued objectives is multiplied by the interval length in hours.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include "errors.hpp"
#include "schedule.hpp"
#include "storage.hpp"

namespace vppsched {

using AgentId = std::uint32_t;

struct MarketPrices {
    std::vector<double> buy_price;  // cost per kWh bought
    std::vector<double> sell_price; // revenue per kWh sold
    friend bool operator==(const MarketPrices&, const MarketPrices&) = default;
};

struct LoadProfile {
    std::vector<double> demand_kw;
    friend bool operator==(const LoadProfile&, const LoadProfile&) = default;
};

struct PeakTariff {
    double peak_price = 0.0; // currency per kW of peak
    friend bool operator==(const PeakTariff&, const PeakTariff&) = default;
};

/// Local and global fitness. Both are -inf for an invalid schedule.
struct FitnessPair {
    double local = 0.0;
    double global = 0.0;
    friend bool operator==(const FitnessPair&, const FitnessPair&) = default;
};

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

/// Negative L1 distance between the target and the sum of the chosen schedules.
inline double global_fitness(std::span<const OperationalSchedule> cluster, std::span<const double> target)
{
    std::vector<double> sum(target.size(), 0.0);
    for (const auto& os : cluster) {
        if (os.power_kw.size() != target.size())
            throw ContractError("global_fitness: schedule length differs from target");
        for (std::size_t i = 0; i < sum.size(); ++i)
            sum[i] += os.power_kw[i];
    }
    double dist = 0.0;
    for (std::size_t i = 0; i < sum.size(); ++i)
        dist += std::abs(target[i] - sum[i]);
    return -dist;
}

/// Same objective for an already aggregated cluster sum.
inline double global_fitness_of_sum(std::span<const double> cluster_sum, std::span<const double> target)
{
    if (cluster_sum.size() != target.size())
        throw ContractError("global_fitness: schedule length differs from target");
    double dist = 0.0;
    for (std::size_t i = 0; i < target.size(); ++i)
        dist += std::abs(target[i] - cluster_sum[i]);
    return -dist;
}

inline double l1_norm(std::span<const double> v)
{
    return std::accumulate(v.begin(), v.end(), 0.0, [](double acc, double x) { return acc + std::abs(x); });
}

/// Market revenue from sell intervals minus cost of buy intervals.
inline double arbitrage_fitness(const PowerSchedule& g, const MarketPrices& prices, const IntervalSpec& spec)
{
    if (prices.buy_price.size() < g.size() || prices.sell_price.size() < g.size())
        throw ContractError("arbitrage_fitness: price series shorter than schedule");
    const double h = spec.hours();
    double total = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        const auto& e = g.entries[i];
        if (e.strategy == Strategy::sell)
            total += prices.sell_price[i] * std::abs(e.power_kw) * h;
        else if (e.strategy == Strategy::buy)
            total -= prices.buy_price[i] * e.power_kw * h;
    }
    return total;
}

/// Money saved by covering the local demand from storage instead of buying it.
inline double local_sdm_fitness(const PowerSchedule& g, const LoadProfile& household, const MarketPrices& prices,
                                const IntervalSpec& spec)
{
    if (household.demand_kw.size() < g.size() || prices.buy_price.size() < g.size())
        throw ContractError("local_sdm_fitness: profile shorter than schedule");
    const double h = spec.hours();
    double total = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        const auto& e = g.entries[i];
        const double used = e.strategy == Strategy::local_sdm ? std::abs(e.power_kw) : 0.0;
        const double demand = std::max(household.demand_kw[i], 0.0);
        total += prices.buy_price[i] * (demand - std::abs(used - demand)) * h;
    }
    return total;
}

enum class PeakFormula : std::uint8_t {
    corrected,  // (max(H) - max(H + D)) * p_cost
    as_printed, // (max(D) - max(H + D)) * p_cost
};

/// Per-interval storage contribution to the local load: discharge and
/// local_sdm power (negative), zero otherwise.
inline std::vector<double> peak_discharge_profile(const PowerSchedule& g)
{
    std::vector<double> d(g.size(), 0.0);
    for (std::size_t i = 0; i < g.size(); ++i) {
        const auto& e = g.entries[i];
        if (e.strategy == Strategy::discharge || e.strategy == Strategy::local_sdm)
            d[i] = e.power_kw;
    }
    return d;
}

inline double peak_shaving_value(std::span<const double> load, std::span<const double> discharge,
                                 const PeakTariff& tariff, PeakFormula formula = PeakFormula::corrected)
{
    if (load.empty() || load.size() != discharge.size())
        throw ContractError("peak_shaving: load and discharge profiles must be non-empty and equally long");
    double max_load = load[0];
    double max_d = discharge[0];
    double max_combined = load[0] + discharge[0];
    for (std::size_t i = 1; i < load.size(); ++i) {
        max_load = std::max(max_load, load[i]);
        max_d = std::max(max_d, discharge[i]);
        max_combined = std::max(max_combined, load[i] + discharge[i]);
    }
    const double reference = formula == PeakFormula::corrected ? max_load : max_d;
    return (reference - max_combined) * tariff.peak_price;
}

inline double peak_shaving_fitness(const PowerSchedule& g, const LoadProfile& industry, const PeakTariff& tariff,
                                   PeakFormula formula = PeakFormula::corrected)
{
    if (industry.demand_kw.size() < g.size())
        throw ContractError("peak_shaving_fitness: load profile shorter than schedule");
    const auto d = peak_discharge_profile(g);
    return peak_shaving_value(std::span<const double>(industry.demand_kw).first(g.size()), d, tariff, formula);
}

/// 1 - |g / ||target||_1|; this is also the fulfillment rate.
inline double normalize_global(double g_value, std::span<const double> target)
{
    const double norm = l1_norm(target);
    if (!(norm > 0.0))
        throw ContractError("normalize_global: target has zero norm");
    return 1.0 - std::abs(g_value / norm);
}

inline double normalize_local(double f_value, double phi)
{
    if (phi == 0.0)
        throw ContractError("normalize_local: threshold must be non-zero");
    return std::min(f_value / phi, 1.0);
}

/// Mean over agents of achieved / best local fitness (signed division).
inline double lq_metric(const std::map<AgentId, double>& per_agent_local, const std::map<AgentId, double>& per_agent_best)
{
    if (per_agent_local.empty())
        throw ContractError("lq_metric: empty agent set");
    double sum = 0.0;
    for (const auto& [agent, local] : per_agent_local) {
        const auto it = per_agent_best.find(agent);
        if (it == per_agent_best.end())
            throw ContractError("lq_metric: missing best value for agent " + std::to_string(agent));
        if (it->second == 0.0)
            throw ContractError("lq_metric: best value is zero for agent " + std::to_string(agent));
        sum += local / it->second;
    }
    return sum / static_cast<double>(per_agent_local.size());
}

struct ArbitrageObjective {
    MarketPrices prices;
};

struct LocalSdmObjective {
    LoadProfile household;
    MarketPrices prices;
};

struct PeakShavingObjective {
    LoadProfile industry;
    PeakTariff tariff;
    PeakFormula formula = PeakFormula::corrected;
};

struct NoLocalObjective {};

using LocalObjective = std::variant<NoLocalObjective, ArbitrageObjective, LocalSdmObjective, PeakShavingObjective>;

inline double local_fitness(const PowerSchedule& g, const LocalObjective& objective, const IntervalSpec& spec)
{
    return std::visit(
        [&](const auto& o) -> double {
            using T = std::decay_t<decltype(o)>;
            if constexpr (std::is_same_v<T, ArbitrageObjective>)
                return arbitrage_fitness(g, o.prices, spec);
            else if constexpr (std::is_same_v<T, LocalSdmObjective>)
                return local_sdm_fitness(g, o.household, o.prices, spec);
            else if constexpr (std::is_same_v<T, PeakShavingObjective>)
                return peak_shaving_fitness(g, o.industry, o.tariff, o.formula);
            else
                return 0.0;
        },
        objective);
}

inline FitnessPair death_penalty_wrap(const PowerSchedule& g, FitnessPair base, const StorageParams& params,
                                      const IntervalSpec& spec,
                                      const std::optional<CoupledGeneratorProfile>& coupled = std::nullopt)
{
    if (!validate(g, params, spec, coupled).ok())
        return {kNegInf, kNegInf};
    return base;
}

} // namespace vppsched

#endif
