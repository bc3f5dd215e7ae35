#ifndef VPPSCHED_COHDA_HPP
#define VPPSCHED_COHDA_HPP

// Distributed negotiation over one operational schedule per agent.
//
// Each agent keeps a working memory with its belief about everybody's
// current choice (system_config, with per-agent selection counters for
// recency) and the best complete-or-partial cluster schedule it knows
// (best). Events run the perceive / decide / act chain: merge received
// memories, choose the own schedule that maximises the global objective of
// the believed configuration, and broadcast the memory when it changed.
//
// Candidates are ordered by (number of agents, global fitness, creator id),
// so a candidate covering more agents always wins over a smaller one and
// every agent converges on the same total order.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <tuple>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "gabhyme.hpp"
#include "objectives.hpp"
#include "schedule.hpp"

namespace vppsched {

/// R_a: append-only set of operational schedules an agent may choose from.
struct ScheduleSet {
    std::vector<OperationalSchedule> schedules;
    std::uint64_t version = 0;

    void insert(OperationalSchedule os)
    {
        schedules.push_back(std::move(os));
        ++version;
    }

    [[nodiscard]] std::size_t size() const { return schedules.size(); }
    [[nodiscard]] bool empty() const { return schedules.empty(); }

    [[nodiscard]] std::optional<std::size_t> find(const std::vector<double>& power) const
    {
        for (std::size_t k = 0; k < schedules.size(); ++k)
            if (schedules[k].power_kw == power)
                return k;
        return std::nullopt;
    }
};

struct ConfigEntry {
    std::vector<double> power_kw;
    std::uint64_t counter = 0;
    friend bool operator==(const ConfigEntry&, const ConfigEntry&) = default;
};

using SystemConfig = std::map<AgentId, ConfigEntry>;

struct Candidate {
    std::map<AgentId, std::vector<double>> schedules;
    double fitness = kNegInf;
    AgentId creator = 0;
    friend bool operator==(const Candidate&, const Candidate&) = default;
};

struct WorkingMemory {
    std::vector<double> target;
    SystemConfig system_config;
    Candidate best;
    friend bool operator==(const WorkingMemory&, const WorkingMemory&) = default;
};

/// Gossip payload. Fitness values are not transmitted; receivers recompute
/// them against their own copy of the target.
struct NegotiationMessage {
    AgentId sender = 0;
    std::vector<double> target;
    SystemConfig system_config;
    AgentId best_creator = 0;
    std::map<AgentId, std::vector<double>> best_schedules;
    friend bool operator==(const NegotiationMessage&, const NegotiationMessage&) = default;
};

struct Decider {
    double phi = kNegInf;
    double phi_relative = 0.5;
};

inline constexpr double kDefaultPhiRelative = 0.5;

/// Strict gate: only schedules whose local fitness is above phi enter R_a.
inline bool decider_accept(const Decider& d, const OperationalSchedule& candidate)
{
    return candidate.local_fitness > d.phi;
}

/// phi from the best pre-optimisation fitness. For a positive best this is
/// phi_r * f_b; otherwise the threshold is placed below f_b by the same
/// relative margin so the best solution still passes.
inline double decider_threshold(double best_local, double phi_relative)
{
    if (!(phi_relative > 0.0 && phi_relative <= 1.0))
        throw ContractError("decider: relative threshold must lie in (0, 1]");
    if (best_local > 0.0)
        return phi_relative * best_local;
    return best_local - (1.0 - phi_relative) * std::max(std::abs(best_local), 1e-9);
}

inline std::vector<double> sum_schedules(const std::map<AgentId, std::vector<double>>& schedules, std::size_t n)
{
    std::vector<double> sum(n, 0.0);
    for (const auto& [agent, power] : schedules) {
        if (power.size() != n)
            throw ContractError("schedule length differs from target");
        for (std::size_t i = 0; i < n; ++i)
            sum[i] += power[i];
    }
    return sum;
}

inline double candidate_fitness(const std::map<AgentId, std::vector<double>>& schedules, std::span<const double> target)
{
    return global_fitness_of_sum(sum_schedules(schedules, target.size()), target);
}

/// Total order on candidates: more agents first, then fitness, then creator.
inline bool better_candidate(const Candidate& a, const Candidate& b)
{
    return std::make_tuple(a.schedules.size(), a.fitness, a.creator)
           > std::make_tuple(b.schedules.size(), b.fitness, b.creator);
}

/// Negotiation state of one agent.
class CohdaAgent {
public:
    CohdaAgent(AgentId id, std::vector<AgentId> neighbours, Decider decider = {})
        : id_(id)
        , neighbours_(std::move(neighbours))
        , decider_(decider)
    {
    }

    [[nodiscard]] AgentId id() const { return id_; }
    [[nodiscard]] const std::vector<AgentId>& neighbours() const { return neighbours_; }
    [[nodiscard]] const WorkingMemory& memory() const { return memory_; }
    [[nodiscard]] const ScheduleSet& schedule_set() const { return set_; }
    [[nodiscard]] const Decider& decider() const { return decider_; }
    [[nodiscard]] std::optional<std::size_t> choice() const { return choice_; }

    void set_decider(Decider d) { decider_ = d; }

    /// Append through the decider. Returns whether the schedule was taken.
    bool offer(const OperationalSchedule& os)
    {
        if (!decider_accept(decider_, os))
            return false;
        set_.insert(os);
        return true;
    }

    /// Append without the decider (initial set from pre-optimisation or
    /// fixed / sampled sets).
    void seed(OperationalSchedule os) { set_.insert(std::move(os)); }

    /// Merge one received message into the working memory.
    void update(const NegotiationMessage& msg)
    {
        if (memory_.target.empty())
            memory_.target = msg.target;
        else if (!msg.target.empty() && msg.target != memory_.target)
            throw ContractError("update: conflicting target schedules");

        for (const auto& [agent, entry] : msg.system_config) {
            if (agent == id_)
                continue;
            auto it = memory_.system_config.find(agent);
            if (it == memory_.system_config.end() || entry.counter > it->second.counter)
                memory_.system_config[agent] = entry;
        }

        if (msg.best_schedules.empty() || memory_.target.empty())
            return;
        Candidate received{msg.best_schedules, candidate_fitness(msg.best_schedules, memory_.target), msg.best_creator};
        if (better_candidate(received, memory_.best)) {
            memory_.best = std::move(received);
            for (const auto& [agent, power] : memory_.best.schedules)
                if (agent != id_ && !memory_.system_config.contains(agent))
                    memory_.system_config[agent] = {power, 0};
        }
    }

    /// Pick the own schedule maximising the believed cluster fitness.
    void choose()
    {
        if (set_.empty() || memory_.target.empty())
            return;
        const std::size_t n = memory_.target.size();
        std::vector<double> others(n, 0.0);
        for (const auto& [agent, entry] : memory_.system_config) {
            if (agent == id_)
                continue;
            if (entry.power_kw.size() != n)
                throw ContractError("choose: schedule length differs from target");
            for (std::size_t i = 0; i < n; ++i)
                others[i] += entry.power_kw[i];
        }

        std::size_t best_k = choice_.value_or(0);
        double best_value = kNegInf;
        std::vector<double> sum(n);
        for (std::size_t k = 0; k < set_.size(); ++k) {
            const auto& power = set_.schedules[k].power_kw;
            if (power.size() != n)
                throw ContractError("choose: schedule length differs from target");
            for (std::size_t i = 0; i < n; ++i)
                sum[i] = others[i] + power[i];
            const double value = global_fitness_of_sum(sum, memory_.target);
            if (value > best_value) {
                best_value = value;
                best_k = k;
            }
        }
        if (choice_ && best_k != *choice_) {
            std::vector<double> sum_current(n);
            const auto& cur = set_.schedules[*choice_].power_kw;
            for (std::size_t i = 0; i < n; ++i)
                sum_current[i] = others[i] + cur[i];
            if (global_fitness_of_sum(sum_current, memory_.target) == best_value)
                best_k = *choice_;
        }

        Candidate proposal;
        proposal.creator = id_;
        for (const auto& [agent, entry] : memory_.system_config)
            if (agent != id_)
                proposal.schedules[agent] = entry.power_kw;
        proposal.schedules[id_] = set_.schedules[best_k].power_kw;
        proposal.fitness = candidate_fitness(proposal.schedules, memory_.target);

        if (better_candidate(proposal, memory_.best)) {
            memory_.best = std::move(proposal);
            set_choice(best_k);
            return;
        }
        const auto it = memory_.best.schedules.find(id_);
        if (it == memory_.best.schedules.end())
            return;
        const auto k = set_.find(it->second);
        if (!k)
            throw ContractError("choose: best candidate holds a schedule outside the own set");
        set_choice(*k);
    }

    [[nodiscard]] NegotiationMessage snapshot() const
    {
        NegotiationMessage m;
        m.sender = id_;
        m.target = memory_.target;
        m.system_config = memory_.system_config;
        m.best_creator = memory_.best.creator;
        m.best_schedules = memory_.best.schedules;
        return m;
    }

    /// Perceive / decide / act on a batch of messages (possibly empty, e.g.
    /// after R_a grew). Returns the message to broadcast when the working
    /// memory changed.
    std::optional<NegotiationMessage> handle(std::span<const NegotiationMessage> inbox)
    {
        const WorkingMemory before = memory_;
        for (const auto& m : inbox)
            update(m);
        choose();
        if (memory_ == before)
            return std::nullopt;
        return snapshot();
    }

    std::optional<NegotiationMessage> handle_event(const NegotiationMessage& msg)
    {
        return handle(std::span<const NegotiationMessage>(&msg, 1));
    }

    std::optional<NegotiationMessage> handle_event() { return handle({}); }

    /// Own entry of the best candidate, as stored in R_a.
    [[nodiscard]] std::optional<OperationalSchedule> result() const
    {
        const auto it = memory_.best.schedules.find(id_);
        if (it == memory_.best.schedules.end())
            return std::nullopt;
        const auto k = set_.find(it->second);
        if (!k)
            return std::nullopt;
        return set_.schedules[*k];
    }

private:
    void set_choice(std::size_t k)
    {
        if (choice_ && *choice_ == k && memory_.system_config.contains(id_))
            return;
        auto& own = memory_.system_config[id_];
        own.power_kw = set_.schedules[k].power_kw;
        ++own.counter;
        choice_ = k;
    }

    AgentId id_;
    std::vector<AgentId> neighbours_;
    Decider decider_;
    WorkingMemory memory_;
    ScheduleSet set_;
    std::optional<std::size_t> choice_;
};

struct PreOptimization {
    ScheduleSet initial;
    double phi = kNegInf;
    double best_local = kNegInf;
    std::vector<Individual> final_population;
    EaCounters counters;
};

/// Single-objective GABHYME on the local objective alone: yields the initial
/// schedule set (the best solution) and the decider threshold.
inline PreOptimization pre_optimize(const EaEnvironment& env, EaParams params, double phi_relative, Rng& rng)
{
    params.mode = SelectionMode::single_objective;
    EaEnvironment local = env;
    local.target.clear();
    local.others_sum.clear();
    Gabhyme ea(params, local, Rng(rng()));
    ea.run();
    const Individual& best = ea.best();
    PreOptimization out;
    out.best_local = best.fitness.local;
    out.phi = decider_threshold(best.fitness.local, phi_relative);
    out.initial.insert(to_operational_schedule(best.power, best.fitness.local));
    out.final_population = ea.population();
    out.counters = ea.counters();
    return out;
}

} // namespace vppsched

#endif
