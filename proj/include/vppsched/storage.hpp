#ifndef VPPSCHED_STORAGE_HPP
#define VPPSCHED_STORAGE_HPP

// Abstract, technology-independent energy storage model.
//
// Sign convention: positive power charges the storage, negative power
// discharges it. SoC is a fraction of capacity in [0, 1]. The continuous
// dynamics
//
//     C dL/dt = -C L / tau + P * (eta_ch  if P > 0, 1 / eta_dis if P < 0)
//
// are integrated exactly per interval under piecewise-constant power.

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>

#include "errors.hpp"

namespace vppsched {

/// Absolute tolerance for floating-point SoC residue at the [0, 1] bounds.
inline constexpr double kSocTolerance = 1e-9;

struct StorageParams {
    double capacity_kwh = 1.0;
    double eta_charge = 1.0;
    double eta_discharge = 1.0;
    double p_max_charge_kw = 0.0;
    double p_max_discharge_kw = 0.0;
    /// Self-discharge time constant in interval units; nullopt means no self-discharge.
    std::optional<double> self_discharge_tau;
    double initial_soc = 0.0;

    void check() const
    {
        if (!(capacity_kwh > 0.0) || !std::isfinite(capacity_kwh))
            throw ContractError("storage capacity must be positive");
        if (!(eta_charge > 0.0 && eta_charge <= 1.0) || !(eta_discharge > 0.0 && eta_discharge <= 1.0))
            throw ContractError("storage efficiencies must lie in (0, 1]");
        if (!(p_max_charge_kw >= 0.0) || !(p_max_discharge_kw >= 0.0))
            throw ContractError("storage power limits must be non-negative");
        if (!(initial_soc >= 0.0 && initial_soc <= 1.0))
            throw ContractError("initial SoC must lie in [0, 1]");
        if (self_discharge_tau && !(*self_discharge_tau > 0.0))
            throw ContractError("self-discharge time constant must be positive");
    }

    friend bool operator==(const StorageParams&, const StorageParams&) = default;
};

struct StorageState {
    double soc = 0.0;
};

struct IntervalSpec {
    int n_intervals = 96;
    double minutes_per_interval = 15.0;

    [[nodiscard]] double hours() const { return minutes_per_interval / 60.0; }

    void check() const
    {
        if (n_intervals < 1 || !(minutes_per_interval > 0.0))
            throw ContractError("interval spec must have positive count and duration");
    }

    friend bool operator==(const IntervalSpec&, const IntervalSpec&) = default;
};

struct SocRange {
    double lower = 0.0;
    double upper = 0.0;

    [[nodiscard]] bool contains(double soc, double tol = kSocTolerance) const
    {
        return soc >= lower - tol && soc <= upper + tol;
    }
};

/// Storage power actually realised for a set point (five-case piecewise rule).
inline double clip_power(double soc, double p_set_kw, const StorageParams& params)
{
    if (!(soc >= 0.0 && soc <= 1.0))
        throw ContractError("clip_power: soc outside [0, 1]");
    if (!std::isfinite(p_set_kw))
        throw ContractError("clip_power: non-finite set power");

    const bool can_charge = soc >= 0.0 && soc < 1.0;
    const bool can_discharge = soc > 0.0 && soc <= 1.0;
    if (can_charge && p_set_kw > params.p_max_charge_kw)
        return params.p_max_charge_kw;
    if (can_charge && p_set_kw > 0.0)
        return p_set_kw;
    if (can_discharge && p_set_kw < 0.0 && p_set_kw >= -params.p_max_discharge_kw)
        return p_set_kw;
    if (can_discharge && p_set_kw < -params.p_max_discharge_kw)
        return -params.p_max_discharge_kw;
    return 0.0;
}

namespace detail {

    /// SoC retention factor over one interval.
    inline double decay(const StorageParams& params)
    {
        return params.self_discharge_tau ? std::exp(-1.0 / *params.self_discharge_tau) : 1.0;
    }

    /// Weight of a constant per-interval forcing term after one interval.
    inline double forcing_gain(const StorageParams& params)
    {
        if (!params.self_discharge_tau)
            return 1.0;
        const double tau = *params.self_discharge_tau;
        return tau * -std::expm1(-1.0 / tau);
    }

    /// Grid-side power to internal SoC rate (fraction per interval).
    inline double soc_rate(double p_kw, const StorageParams& params, const IntervalSpec& spec)
    {
        const double p_internal = p_kw > 0.0 ? p_kw * params.eta_charge : p_kw / params.eta_discharge;
        return p_internal * spec.hours() / params.capacity_kwh;
    }

    /// Unclamped SoC after one interval of constant power.
    inline double advance(double soc, double p_kw, const StorageParams& params, const IntervalSpec& spec)
    {
        return soc * decay(params) + forcing_gain(params) * soc_rate(p_kw, params, spec);
    }

    /// Algebraic inverse of advance(); no domain or limit checks.
    inline double invert(double soc_from, double soc_to, const StorageParams& params, const IntervalSpec& spec)
    {
        const double rate = (soc_to - soc_from * decay(params)) / forcing_gain(params);
        const double p_internal = rate * params.capacity_kwh / spec.hours();
        if (p_internal > 0.0)
            return p_internal / params.eta_charge;
        if (p_internal < 0.0)
            return p_internal * params.eta_discharge;
        return 0.0;
    }

    inline double clamp_residue(double soc)
    {
        return std::clamp(soc, 0.0, 1.0);
    }

    /// Reachable SoC window with explicit power caps (used for generator coupling).
    inline SocRange reachable(double soc, double p_ch_cap, double p_dis_cap, const StorageParams& params,
                              const IntervalSpec& spec)
    {
        const double idle = advance(soc, 0.0, params, spec);
        const double up = (soc < 1.0 && p_ch_cap > 0.0) ? advance(soc, p_ch_cap, params, spec) : idle;
        const double down = (soc > 0.0 && p_dis_cap > 0.0) ? advance(soc, -p_dis_cap, params, spec) : idle;
        return {std::clamp(down, 0.0, 1.0), std::clamp(up, 0.0, 1.0)};
    }

} // namespace detail

/// Advance the SoC by one interval with an already-clipped power.
inline StorageState step_soc(StorageState state, double p_actual_kw, const StorageParams& params,
                             const IntervalSpec& spec)
{
    const double next = detail::advance(state.soc, p_actual_kw, params, spec);
    if (next < -kSocTolerance || next > 1.0 + kSocTolerance)
        throw InfeasibleError("step_soc: SoC leaves [0, 1] (" + std::to_string(next) + ")");
    return {detail::clamp_residue(next)};
}

/// Tightest SoC window reachable from `state` in one interval.
inline SocRange feasible_soc_range(StorageState state, const StorageParams& params, const IntervalSpec& spec)
{
    return detail::reachable(state.soc, params.p_max_charge_kw, params.p_max_discharge_kw, params, spec);
}

/// Grid-side power that moves the SoC from `soc_from` to `soc_to` in one interval.
///
/// Power limits are not enforced here (schedule validation owns those); the
/// transition is rejected only when it is physically unreachable: endpoints
/// outside [0, 1], or a charge from a full / discharge from an empty storage.
inline double power_for_transition(double soc_from, double soc_to, const StorageParams& params,
                                   const IntervalSpec& spec)
{
    if (!(soc_from >= 0.0 && soc_from <= 1.0) || !(soc_to >= 0.0 && soc_to <= 1.0))
        throw InfeasibleError("power_for_transition: SoC outside [0, 1]");
    const double p = detail::invert(soc_from, soc_to, params, spec);
    if (p > 0.0 && soc_from >= 1.0 && soc_to - detail::advance(soc_from, 0.0, params, spec) > kSocTolerance)
        throw InfeasibleError("power_for_transition: cannot charge a full storage");
    if (p < 0.0 && soc_from <= 0.0 && detail::advance(soc_from, 0.0, params, spec) - soc_to > kSocTolerance)
        throw InfeasibleError("power_for_transition: cannot discharge an empty storage");
    return p;
}

} // namespace vppsched

#endif
