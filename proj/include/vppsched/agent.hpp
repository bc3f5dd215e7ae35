#ifndef VPPSCHED_AGENT_HPP
#define VPPSCHED_AGENT_HPP

// One negotiating unit: the negotiation state plus, for storage agents
// under an EA method, the local optimiser feeding new schedules through the
// decider.
//
// Lifecycle per agent:
//   bootstrap  pre-optimise (single-objective GABHYME for every EA method),
//              seed R_a, set phi, start the global EA and
//              take part in the first negotiation round
//   tick       run one EA generation, pass newly archived schedules through
//              the decider, then handle the received messages (if any input
//              changed)
// Fixed generators publish their output as the only schedule; sampling
// agents negotiate over a set of random valid schedules. Both accept
// everything (phi = -inf) and run no EA.

#include <cstdint>
#include <deque>
#include <memory>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "cohda.hpp"
#include "config.hpp"
#include "gabhyme.hpp"
#include "objectives.hpp"
#include "rng.hpp"
#include "schedule.hpp"

namespace vppsched {

/// Local objective of a storage agent.
inline LocalObjective objective_for(const AgentSpec& a)
{
    switch (a.role) {
    case AgentRole::psp_arbitrage: return ArbitrageObjective{a.prices};
    case AgentRole::industry_peak_big:
    case AgentRole::industry_peak_small: return PeakShavingObjective{{a.load_kw}, a.tariff, a.peak_formula};
    case AgentRole::household_sdm: return LocalSdmObjective{{a.load_kw}, a.prices};
    case AgentRole::fixed_generator: break;
    }
    return NoLocalObjective{};
}

inline EaEnvironment environment_for(const AgentSpec& a, const IntervalSpec& spec)
{
    EaEnvironment env;
    env.storage = a.effective_storage();
    env.interval = spec;
    if (!a.generator_kw.empty())
        env.coupled = CoupledGeneratorProfile{a.generator_kw};
    env.objective = objective_for(a);
    return env;
}

/// `count` random valid schedules in operational form, each carrying its
/// local fitness.
inline ScheduleSet run_baseline_sampling(const EaEnvironment& env, int count, Rng& rng)
{
    ScheduleSet set;
    for (int k = 0; k < count; ++k) {
        const auto gl = sample_load_state_schedule(env.storage, env.interval, env.coupled, rng);
        const auto g = repair(detail::to_power_unchecked(gl, env.storage, env.interval), env.storage, env.interval,
                              env.coupled, rng);
        set.insert(to_operational_schedule(g, local_fitness(g, env.objective, env.interval)));
    }
    return set;
}

enum class AgentKind : std::uint8_t { storage_ea, sampling, fixed };

struct InsertEvent {
    double local_fitness;
    double phi;
    bool seeded; // part of the initial set rather than offered to the decider
};

class Agent {
public:
    Agent(AgentId id, const AgentSpec& spec, const ScenarioConfig& cfg, std::vector<AgentId> neighbours)
        : cohda_(id, std::move(neighbours))
        , spec_(spec)
        , method_(cfg.method)
        , ea_params_(cfg.ea)
        , phi_relative_(spec.phi_relative.value_or(cfg.phi_relative))
        , seed_from_preopt_(cfg.seed_from_preopt)
        , sampling_count_(cfg.sampling_count)
        , rng_(derive_seed(cfg.seed, id))
        , pending_(std::make_shared<std::deque<std::pair<OperationalSchedule, FitnessPair>>>())
    {
        if (spec.role == AgentRole::fixed_generator)
            kind_ = AgentKind::fixed;
        else if (cfg.method == Method::sampling)
            kind_ = AgentKind::sampling;
        else
            kind_ = AgentKind::storage_ea;
        if (kind_ != AgentKind::fixed)
            env_ = environment_for(spec, cfg.interval);
        ea_params_.n_intervals = cfg.interval.n_intervals;
        ea_params_.seed = derive_seed(cfg.seed, id);
    }

    Agent(const Agent&) = delete;
    Agent& operator=(const Agent&) = delete;

    [[nodiscard]] AgentId id() const { return cohda_.id(); }
    [[nodiscard]] AgentKind kind() const { return kind_; }
    [[nodiscard]] const AgentSpec& spec() const { return spec_; }
    [[nodiscard]] const CohdaAgent& negotiation() const { return cohda_; }
    [[nodiscard]] double phi() const { return cohda_.decider().phi; }
    [[nodiscard]] bool ea_active() const { return ea_ && !ea_->done(); }
    [[nodiscard]] const Gabhyme* ea() const { return ea_ ? &*ea_ : nullptr; }
    [[nodiscard]] const std::optional<PreOptimization>& pre_optimization() const { return preopt_; }

    /// Schedules that entered R_a since the last call.
    std::vector<InsertEvent> take_inserts() { return std::exchange(inserts_, {}); }

    /// Build R_a and phi, start the global EA, then negotiate on the target.
    std::optional<NegotiationMessage> bootstrap(const std::vector<double>& target)
    {
        switch (kind_) {
        case AgentKind::fixed:
            seed(OperationalSchedule{spec_.generator_kw, 0.0});
            break;
        case AgentKind::sampling:
            for (auto& os : run_baseline_sampling(*env_, sampling_count_, rng_).schedules)
                seed(std::move(os));
            break;
        case AgentKind::storage_ea: {
            EaParams pre = ea_params_;
            pre.operators = OperatorSet::gabhyme;
            preopt_ = pre_optimize(*env_, pre, phi_relative_, rng_);
            cohda_.set_decider({preopt_->phi, phi_relative_});
            for (const auto& os : preopt_->initial.schedules)
                seed(os);
            EaEnvironment global = *env_;
            global.target = target;
            global.phi = preopt_->phi > 0.0 ? preopt_->phi : 1.0;
            EaParams p = ea_params_;
            p.mode = method_mode(method_);
            p.operators = method_operators(method_);
            auto pending = pending_;
            ea_.emplace(p, std::move(global), Rng(rng_()),
                        [pending](const OperationalSchedule& os, const FitnessPair& fp) { pending->emplace_back(os, fp); },
                        seed_from_preopt_ ? preopt_->final_population : std::vector<Individual>{});
            break;
        }
        }
        NegotiationMessage start;
        start.target = target;
        auto out = cohda_.handle_event(start);
        sync_context();
        return out;
    }

    /// One scheduler tick: optional EA generation, then the negotiation.
    std::optional<NegotiationMessage> tick(std::span<const NegotiationMessage> inbox, bool run_ea = true)
    {
        bool grew = false;
        if (run_ea && ea_active()) {
            ea_->step();
            grew = drain();
        }
        if (inbox.empty() && !grew)
            return std::nullopt;
        auto out = cohda_.handle(inbox);
        if (out)
            sync_context();
        return out;
    }

    /// Final result: own entry of the best candidate with its local fitness.
    [[nodiscard]] std::optional<OperationalSchedule> result() const { return cohda_.result(); }

private:
    void seed(OperationalSchedule os)
    {
        inserts_.push_back({os.local_fitness, cohda_.decider().phi, true});
        cohda_.seed(std::move(os));
    }

    bool drain()
    {
        bool grew = false;
        while (!pending_->empty()) {
            auto [os, fp] = std::move(pending_->front());
            pending_->pop_front();
            if (cohda_.schedule_set().find(os.power_kw))
                continue;
            if (cohda_.offer(os)) {
                inserts_.push_back({os.local_fitness, cohda_.decider().phi, false});
                grew = true;
            }
        }
        return grew;
    }

    /// Tell the EA what the rest of the cluster currently does.
    void sync_context()
    {
        if (!ea_)
            return;
        const auto& mem = cohda_.memory();
        std::vector<double> others(mem.target.size(), 0.0);
        for (const auto& [agent, entry] : mem.system_config) {
            if (agent == id())
                continue;
            for (std::size_t i = 0; i < others.size() && i < entry.power_kw.size(); ++i)
                others[i] += entry.power_kw[i];
        }
        if (others != ea_->environment().others_sum)
            ea_->set_cluster_context(std::move(others));
    }

    CohdaAgent cohda_;
    AgentSpec spec_;
    Method method_;
    EaParams ea_params_;
    double phi_relative_;
    bool seed_from_preopt_;
    int sampling_count_;
    Rng rng_;
    AgentKind kind_ = AgentKind::fixed;
    std::optional<EaEnvironment> env_;
    std::optional<PreOptimization> preopt_;
    std::optional<Gabhyme> ea_;
    std::shared_ptr<std::deque<std::pair<OperationalSchedule, FitnessPair>>> pending_;
    std::vector<InsertEvent> inserts_;
};

} // namespace vppsched

#endif
