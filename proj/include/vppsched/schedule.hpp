#ifndef VPPSCHED_SCHEDULE_HPP
#define VPPSCHED_SCHEDULE_HPP

// Solution representations of a storage schedule.
//
//   PowerSchedule      (strategy, grid-side power) per interval
//   LoadStateSchedule  (strategy, SoC at the end of the interval) per interval
//
// plus constraint validation, repair, and the projection onto the
// grid-visible operational schedule negotiated in the cluster.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "errors.hpp"
#include "rng.hpp"
#include "storage.hpp"

namespace vppsched {

enum class Strategy : std::uint8_t { buy, sell, charge, discharge, local_sdm };

inline constexpr std::array<Strategy, 5> kAllStrategies{Strategy::buy, Strategy::sell, Strategy::charge,
                                                        Strategy::discharge, Strategy::local_sdm};
inline constexpr std::array<Strategy, 2> kChargingStrategies{Strategy::buy, Strategy::charge};
inline constexpr std::array<Strategy, 3> kDischargingStrategies{Strategy::sell, Strategy::discharge,
                                                                Strategy::local_sdm};

inline constexpr std::string_view to_string(Strategy s)
{
    switch (s) {
    case Strategy::buy: return "buy";
    case Strategy::sell: return "sell";
    case Strategy::charge: return "charge";
    case Strategy::discharge: return "discharge";
    case Strategy::local_sdm: return "local_sdm";
    }
    return "?";
}

inline Strategy strategy_from_string(std::string_view name)
{
    for (auto s : kAllStrategies)
        if (to_string(s) == name)
            return s;
    throw ConfigError("unknown strategy '" + std::string(name) + "'");
}

inline constexpr bool is_charging(Strategy s) { return s == Strategy::buy || s == Strategy::charge; }

/// Sign rule: positive power only under buy/charge, negative only under
/// sell/discharge/local_sdm. Zero is consistent with everything.
inline constexpr bool is_consistent(Strategy s, double power_kw)
{
    if (power_kw > 0.0)
        return is_charging(s);
    if (power_kw < 0.0)
        return !is_charging(s);
    return true;
}

struct PowerEntry {
    Strategy strategy = Strategy::buy;
    double power_kw = 0.0;
    friend bool operator==(const PowerEntry&, const PowerEntry&) = default;
};

struct PowerSchedule {
    std::vector<PowerEntry> entries;
    [[nodiscard]] std::size_t size() const { return entries.size(); }
    friend bool operator==(const PowerSchedule&, const PowerSchedule&) = default;
};

struct SocEntry {
    Strategy strategy = Strategy::buy;
    double soc = 0.0;
    friend bool operator==(const SocEntry&, const SocEntry&) = default;
};

struct LoadStateSchedule {
    std::vector<SocEntry> entries;
    [[nodiscard]] std::size_t size() const { return entries.size(); }
    friend bool operator==(const LoadStateSchedule&, const LoadStateSchedule&) = default;
};

/// Grid-visible injection per interval (positive = supplied to the VPP product).
struct OperationalSchedule {
    std::vector<double> power_kw;
    double local_fitness = 0.0;
    friend bool operator==(const OperationalSchedule&, const OperationalSchedule&) = default;
};

struct CoupledGeneratorProfile {
    std::vector<double> output_kw;
    friend bool operator==(const CoupledGeneratorProfile&, const CoupledGeneratorProfile&) = default;
};

enum class ViolationKind : std::uint8_t { limits, consistency, satisfiability, coupling };

inline constexpr std::string_view to_string(ViolationKind k)
{
    switch (k) {
    case ViolationKind::limits: return "limits";
    case ViolationKind::consistency: return "consistency";
    case ViolationKind::satisfiability: return "satisfiability";
    case ViolationKind::coupling: return "coupling";
    }
    return "?";
}

struct Violation {
    ViolationKind kind;
    std::size_t index;
    friend bool operator==(const Violation&, const Violation&) = default;
};

struct ValidationReport {
    std::vector<Violation> violations;

    [[nodiscard]] bool ok() const { return violations.empty(); }
    [[nodiscard]] bool has(ViolationKind kind) const
    {
        return std::any_of(violations.begin(), violations.end(), [&](const Violation& v) { return v.kind == kind; });
    }
};

namespace detail {

    inline double power_tolerance(double limit) { return 1e-9 * std::max(1.0, limit); }

    /// Charge power available from the coupled generator. A storage without
    /// a generator has nothing to draw from under the charge strategy.
    inline double charge_cap(const std::optional<CoupledGeneratorProfile>& coupled, std::size_t i)
    {
        if (!coupled || i >= coupled->output_kw.size())
            return 0.0;
        return std::max(0.0, coupled->output_kw[i]);
    }

    /// Power form of a load-state genome without feasibility checks. SoC
    /// values are clamped to [0, 1] first; the result generally needs repair.
    inline PowerSchedule to_power_unchecked(const LoadStateSchedule& gl, const StorageParams& params,
                                            const IntervalSpec& spec)
    {
        PowerSchedule g;
        g.entries.reserve(gl.size());
        double soc = params.initial_soc;
        for (const auto& e : gl.entries) {
            const double next = std::isfinite(e.soc) ? std::clamp(e.soc, 0.0, 1.0) : soc;
            g.entries.push_back({e.strategy, invert(soc, next, params, spec)});
            soc = next;
        }
        return g;
    }

    /// SoC trajectory of a (valid) power schedule with residue clamping only.
    inline LoadStateSchedule trajectory(const PowerSchedule& g, const StorageParams& params, const IntervalSpec& spec)
    {
        LoadStateSchedule gl;
        gl.entries.reserve(g.size());
        double soc = params.initial_soc;
        for (const auto& e : g.entries) {
            soc = std::clamp(advance(soc, e.power_kw, params, spec), 0.0, 1.0);
            gl.entries.push_back({e.strategy, soc});
        }
        return gl;
    }

} // namespace detail

inline ValidationReport validate(const PowerSchedule& g, const StorageParams& params, const IntervalSpec& spec,
                                 const std::optional<CoupledGeneratorProfile>& coupled = std::nullopt)
{
    ValidationReport report;
    const double tol_ch = detail::power_tolerance(params.p_max_charge_kw);
    const double tol_dis = detail::power_tolerance(params.p_max_discharge_kw);
    if (g.size() != static_cast<std::size_t>(spec.n_intervals))
        report.violations.push_back({ViolationKind::satisfiability, std::min(g.size(), std::size_t(spec.n_intervals))});

    double soc = params.initial_soc;
    for (std::size_t i = 0; i < g.size(); ++i) {
        const auto& e = g.entries[i];
        double p = e.power_kw;
        if (!std::isfinite(p)) {
            report.violations.push_back({ViolationKind::limits, i});
            p = 0.0;
        } else if (p > params.p_max_charge_kw + tol_ch || p < -params.p_max_discharge_kw - tol_dis
                   || (p > 0.0 && soc >= 1.0) || (p < 0.0 && soc <= 0.0)) {
            report.violations.push_back({ViolationKind::limits, i});
        }
        if (!is_consistent(e.strategy, p))
            report.violations.push_back({ViolationKind::consistency, i});
        if (e.strategy == Strategy::charge && p > detail::charge_cap(coupled, i) + tol_ch)
            report.violations.push_back({ViolationKind::coupling, i});

        const double next = detail::advance(soc, p, params, spec);
        if (next < -kSocTolerance || next > 1.0 + kSocTolerance)
            report.violations.push_back({ViolationKind::satisfiability, i});
        soc = std::clamp(next, 0.0, 1.0);
    }
    return report;
}

/// Make any schedule valid. Per interval, in order: clip to power limits, fix
/// the strategy sign (uniformly among the allowed strategies), cap charging
/// at the coupled generator output, then forward-clip so the SoC stays in
/// [0, 1]. A valid schedule comes back bit-identical.
inline PowerSchedule repair(const PowerSchedule& g, const StorageParams& params, const IntervalSpec& spec,
                            const std::optional<CoupledGeneratorProfile>& coupled, Rng& rng)
{
    PowerSchedule out = g;
    out.entries.resize(static_cast<std::size_t>(spec.n_intervals), PowerEntry{Strategy::buy, 0.0});
    const double tol_ch = detail::power_tolerance(params.p_max_charge_kw);
    const double tol_dis = detail::power_tolerance(params.p_max_discharge_kw);

    double soc = params.initial_soc;
    for (std::size_t i = 0; i < out.size(); ++i) {
        auto& e = out.entries[i];
        double p = std::isfinite(e.power_kw) ? e.power_kw : 0.0;

        if (p > params.p_max_charge_kw + tol_ch)
            p = params.p_max_charge_kw;
        else if (p < -params.p_max_discharge_kw - tol_dis)
            p = -params.p_max_discharge_kw;

        if (!is_consistent(e.strategy, p)) {
            e.strategy = p > 0.0 ? pick(rng, std::span<const Strategy>(kChargingStrategies))
                                 : pick(rng, std::span<const Strategy>(kDischargingStrategies));
        }

        if (e.strategy == Strategy::charge) {
            const double cap = detail::charge_cap(coupled, i);
            if (p > cap + tol_ch)
                p = cap;
        }

        if ((p > 0.0 && soc >= 1.0) || (p < 0.0 && soc <= 0.0))
            p = 0.0;

        double next = detail::advance(soc, p, params, spec);
        if (next > 1.0 + kSocTolerance) {
            p = detail::invert(soc, 1.0, params, spec);
            next = detail::advance(soc, p, params, spec);
        } else if (next < -kSocTolerance) {
            p = detail::invert(soc, 0.0, params, spec);
            next = detail::advance(soc, p, params, spec);
        }
        e.power_kw = p;
        soc = std::clamp(next, 0.0, 1.0);
    }
    return out;
}

/// SoC view of a valid power schedule.
inline LoadStateSchedule to_load_state(const PowerSchedule& g, const StorageParams& params, const IntervalSpec& spec)
{
    LoadStateSchedule gl;
    gl.entries.reserve(g.size());
    StorageState state{params.initial_soc};
    for (std::size_t i = 0; i < g.size(); ++i) {
        try {
            state = step_soc(state, g.entries[i].power_kw, params, spec);
        } catch (const InfeasibleError&) {
            throw InfeasibleError("to_load_state: SoC leaves [0, 1] at interval " + std::to_string(i));
        }
        gl.entries.push_back({g.entries[i].strategy, state.soc});
    }
    return gl;
}

/// Power view of a load-state schedule whose consecutive states are reachable.
inline PowerSchedule to_power(const LoadStateSchedule& gl, const StorageParams& params, const IntervalSpec& spec)
{
    PowerSchedule g;
    g.entries.reserve(gl.size());
    double soc = params.initial_soc;
    for (std::size_t i = 0; i < gl.size(); ++i) {
        const auto& e = gl.entries[i];
        if (!feasible_soc_range({soc}, params, spec).contains(e.soc))
            throw InfeasibleError("to_power: unreachable transition at interval " + std::to_string(i));
        const double target = std::clamp(e.soc, 0.0, 1.0);
        const double p = power_for_transition(soc, target, params, spec);
        if (!is_consistent(e.strategy, p))
            throw InfeasibleError("to_power: strategy inconsistent with power at interval " + std::to_string(i));
        g.entries.push_back({e.strategy, p});
        soc = target;
    }
    return g;
}

/// Grid-visible injection: -power for buy/sell/charge/discharge, zero for
/// local_sdm (consumed behind the meter).
inline OperationalSchedule to_operational_schedule(const PowerSchedule& g, double local_fitness)
{
    OperationalSchedule os;
    os.local_fitness = local_fitness;
    os.power_kw.reserve(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) {
        const auto& e = g.entries[i];
        if (!std::isfinite(e.power_kw) || !is_consistent(e.strategy, e.power_kw))
            throw ContractError("to_operational_schedule: invalid entry at interval " + std::to_string(i));
        os.power_kw.push_back(e.strategy == Strategy::local_sdm ? 0.0 : 0.0 - e.power_kw);
    }
    return os;
}

/// One random valid schedule: per interval a uniform strategy and a uniform
/// SoC target within the part of the reachable window matching its sign.
inline LoadStateSchedule sample_load_state_schedule(const StorageParams& params, const IntervalSpec& spec,
                                                    const std::optional<CoupledGeneratorProfile>& coupled, Rng& rng)
{
    LoadStateSchedule gl;
    gl.entries.reserve(static_cast<std::size_t>(spec.n_intervals));
    double soc = params.initial_soc;
    for (std::size_t i = 0; i < static_cast<std::size_t>(spec.n_intervals); ++i) {
        const Strategy s = pick(rng, std::span<const Strategy>(kAllStrategies));
        const double idle = std::clamp(detail::advance(soc, 0.0, params, spec), 0.0, 1.0);
        double target = idle;
        if (is_charging(s)) {
            double cap = params.p_max_charge_kw;
            if (s == Strategy::charge)
                cap = std::min(cap, detail::charge_cap(coupled, i));
            const auto range = detail::reachable(soc, cap, 0.0, params, spec);
            target = uniform_real(rng, idle, range.upper);
        } else {
            const auto range = detail::reachable(soc, 0.0, params.p_max_discharge_kw, params, spec);
            target = uniform_real(rng, range.lower, idle);
        }
        gl.entries.push_back({s, target});
        soc = target;
    }
    return gl;
}

} // namespace vppsched

#endif
