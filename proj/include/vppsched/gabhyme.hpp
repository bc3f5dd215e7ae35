#ifndef VPPSCHED_GABHYME_HPP
#define VPPSCHED_GABHYME_HPP

// (mu + lambda) evolutionary algorithm producing storage schedules.
//
// Individuals carry a self-adaptive step size and a load-state genome. Every
// operator result goes through repair(), so every individual in every
// generation is a valid schedule. Offspring are produced by cut-point
// recombination on the most similar SoC value followed by a hybrid mutation
// (gaussian brush for exploration, sigmoid-stepped local search for
// exploitation). Survivors are chosen by NSGA-II, by the normalised sum of
// local and global fitness, or by local fitness alone.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "mgbm.hpp"
#include "nsga2.hpp"
#include "objectives.hpp"
#include "rng.hpp"
#include "schedule.hpp"
#include "storage.hpp"

namespace vppsched {

enum class SelectionMode : std::uint8_t { pareto, normalized, single_objective };

/// gabhyme: hybrid mutation, recombination and restarts. baseline: gaussian
/// mutation only, no recombination, no restarts.
enum class OperatorSet : std::uint8_t { gabhyme, baseline };

inline constexpr std::string_view to_string(SelectionMode m)
{
    switch (m) {
    case SelectionMode::pareto: return "pareto";
    case SelectionMode::normalized: return "normalized";
    case SelectionMode::single_objective: return "single_objective";
    }
    return "?";
}

struct EaParams {
    int n_intervals = 96;
    int mu = 30;
    int kappa = 500;
    int lambda = 30;
    int rho = 2;
    SelectionMode mode = SelectionMode::single_objective;
    std::optional<int> restart_window; // generations; kappa / 10 when unset
    double restart_epsilon = 0.01;
    std::uint64_t seed = 0;
    OperatorSet operators = OperatorSet::gabhyme;
    bool use_mgbm = true;
    MgbmConfig mgbm;

    [[nodiscard]] int effective_restart_window() const { return restart_window.value_or(kappa / 10); }

    void check() const
    {
        if (mu < 1 || lambda < 1 || kappa < 1 || rho < 1 || rho > mu || n_intervals < 1)
            throw ContractError("EaParams: require mu, lambda, kappa >= 1 and 1 <= rho <= mu");
    }

    friend bool operator==(const EaParams&, const EaParams&) = default;
};

/// Everything the fitness function needs about one agent's storage.
struct EaEnvironment {
    StorageParams storage;
    IntervalSpec interval;
    std::optional<CoupledGeneratorProfile> coupled;
    LocalObjective objective;
    std::vector<double> target;     // cluster target, empty for purely local runs
    std::vector<double> others_sum; // believed sum of the other agents' schedules
    double phi = 1.0;               // decider threshold, scales the local fitness
};

struct Individual {
    double sigma = 1.0;
    LoadStateSchedule genome;
    PowerSchedule power; // derived from genome
    FitnessPair fitness{kNegInf, kNegInf};
};

struct Archive {
    std::vector<Individual> solutions;
};

struct EaCounters {
    long generations = 0;
    long recombinations = 0;
    long mutations = 0;
    long restarts = 0;
    long evaluations = 0;
};

inline constexpr double kSigmaLearningRate = 0.22;

/// Step weight of the local-search probe number x.
inline double sigmoid_step(double x)
{
    return 1.0 / (1.0 + std::exp(1.5 * x - 5.0));
}

inline FitnessPair evaluate(const PowerSchedule& g, const EaEnvironment& env)
{
    if (!validate(g, env.storage, env.interval, env.coupled).ok())
        return {kNegInf, kNegInf};
    FitnessPair fp;
    fp.local = local_fitness(g, env.objective, env.interval);
    if (env.target.empty()) {
        fp.global = 0.0;
        return fp;
    }
    double dist = 0.0;
    for (std::size_t i = 0; i < env.target.size(); ++i) {
        const auto& e = g.entries[i];
        const double injected = e.strategy == Strategy::local_sdm ? 0.0 : 0.0 - e.power_kw;
        const double others = env.others_sum.empty() ? 0.0 : env.others_sum[i];
        dist += std::abs(env.target[i] - others - injected);
    }
    fp.global = -dist;
    return fp;
}

/// Scalar used for ranking in the scalar modes and for picking the
/// generation best. Pareto mode reports the normalised sum as well.
inline double scalar_fitness(const FitnessPair& fp, SelectionMode mode, const EaEnvironment& env)
{
    if (!std::isfinite(fp.local) || !std::isfinite(fp.global))
        return kNegInf;
    if (mode == SelectionMode::single_objective || env.target.empty())
        return fp.local;
    return normalize_local(fp.local, env.phi) + normalize_global(fp.global, env.target);
}

/// Build a valid individual from an arbitrary genome (repair + evaluation).
inline Individual make_individual(const LoadStateSchedule& raw, double sigma, const EaEnvironment& env, Rng& rng)
{
    Individual ind;
    ind.sigma = sigma;
    ind.power = repair(detail::to_power_unchecked(raw, env.storage, env.interval), env.storage, env.interval,
                       env.coupled, rng);
    ind.genome = detail::trajectory(ind.power, env.storage, env.interval);
    ind.fitness = evaluate(ind.power, env);
    return ind;
}

inline double initial_sigma(Rng& rng)
{
    return std::max(std::exp(kSigmaLearningRate * normal(rng)), std::numeric_limits<double>::min());
}

inline double update_sigma(double sigma, Rng& rng)
{
    return std::max(sigma * std::exp(kSigmaLearningRate * normal(rng)), std::numeric_limits<double>::min());
}

inline Individual init_individual(const EaEnvironment& env, Rng& rng)
{
    const double sigma = initial_sigma(rng);
    return make_individual(sample_load_state_schedule(env.storage, env.interval, env.coupled, rng), sigma, env, rng);
}

inline std::vector<Individual> init_pop(int mu, const EaEnvironment& env, Rng& rng)
{
    std::vector<Individual> pop;
    pop.reserve(static_cast<std::size_t>(mu));
    for (int k = 0; k < mu; ++k)
        pop.push_back(init_individual(env, rng));
    return pop;
}

/// Exploration: perturb a run of consecutive SoC values with a gaussian brush
/// and re-draw one strategy. The step size is assumed already updated.
inline Individual explore_mutation(const Individual& ind, double sigma, const EaEnvironment& env, Rng& rng)
{
    LoadStateSchedule gl = ind.genome;
    const std::size_t n = gl.size();
    const std::size_t start = uniform_index(rng, n);
    const double span = std::round(sigma * static_cast<double>(n));
    const std::size_t count = span < 1.0 ? 1 : static_cast<std::size_t>(std::min(span, double(n)));
    for (std::size_t k = 0; k < count && start + k < n; ++k)
        gl.entries[start + k].soc += sigma * normal(rng, 0.0, 0.5);
    gl.entries[uniform_index(rng, n)].strategy = pick(rng, std::span<const Strategy>(kAllStrategies));
    return make_individual(gl, sigma, env, rng);
}

/// SoC window for interval j that keeps both neighbouring transitions within
/// the power limits.
inline SocRange valid_soc_range(const LoadStateSchedule& gl, std::size_t j, const EaEnvironment& env)
{
    const auto& params = env.storage;
    const auto& spec = env.interval;
    const double prev = j == 0 ? params.initial_soc : gl.entries[j - 1].soc;
    SocRange range = feasible_soc_range({prev}, params, spec);
    if (j + 1 < gl.size()) {
        const double next = gl.entries[j + 1].soc;
        const double d = detail::decay(params);
        const double gain = detail::forcing_gain(params);
        const double rate_up = detail::soc_rate(params.p_max_charge_kw, params, spec);
        const double rate_down = detail::soc_rate(-params.p_max_discharge_kw, params, spec);
        const double lo = (next - gain * rate_up) / d;
        const double hi = (next - gain * rate_down) / d;
        const SocRange both{std::max(range.lower, lo), std::min(range.upper, hi)};
        if (both.lower <= both.upper)
            range = both;
    }
    return range;
}

inline bool improves(const FitnessPair& candidate, const FitnessPair& incumbent, SelectionMode mode,
                     const EaEnvironment& env)
{
    if (mode == SelectionMode::pareto && !env.target.empty())
        return dominates({candidate.local, candidate.global}, {incumbent.local, incumbent.global});
    return scalar_fitness(candidate, mode, env) > scalar_fitness(incumbent, mode, env);
}

/// Exploitation: step one SoC value towards each bound of its valid window
/// and keep the best strictly improving probe.
inline Individual exploit_mutation(const Individual& ind, double sigma, SelectionMode mode, const EaEnvironment& env,
                                   Rng& rng, long* evaluations = nullptr)
{
    const std::size_t j = uniform_index(rng, ind.genome.size());
    const double soc = ind.genome.entries[j].soc;
    const Strategy original = ind.genome.entries[j].strategy;
    const double prev = j == 0 ? env.storage.initial_soc : ind.genome.entries[j - 1].soc;
    const SocRange range = valid_soc_range(ind.genome, j, env);

    Individual best = ind;
    best.sigma = sigma;
    for (int step = 0; step < 5; ++step) {
        for (const double bound : {range.lower, range.upper}) {
            const double soc_new = soc + sigmoid_step(step) * (bound - soc);
            const double p = detail::invert(prev, soc_new, env.storage, env.interval);
            Strategy s = original;
            if (!is_consistent(s, p)) {
                s = p > 0.0 ? pick(rng, std::span<const Strategy>(kChargingStrategies))
                            : pick(rng, std::span<const Strategy>(kDischargingStrategies));
            }
            LoadStateSchedule probe = ind.genome;
            probe.entries[j] = {s, soc_new};
            Individual candidate = make_individual(probe, sigma, env, rng);
            if (evaluations)
                ++*evaluations;
            if (improves(candidate.fitness, best.fitness, mode, env))
                best = std::move(candidate);
        }
    }
    return best;
}

inline Individual mutate(const Individual& ind, SelectionMode mode, OperatorSet ops, const EaEnvironment& env,
                         Rng& rng, long* evaluations = nullptr)
{
    const double sigma = update_sigma(ind.sigma, rng);
    if (ops == OperatorSet::baseline || uniform01(rng) >= 0.5) {
        if (evaluations)
            ++*evaluations;
        return explore_mutation(ind, sigma, env, rng);
    }
    return exploit_mutation(ind, sigma, mode, env, rng, evaluations);
}

/// Cut indices for combining `parents`: for each consecutive pair the index
/// of the most similar SoC value inside its window.
inline std::vector<std::size_t> recombination_cut_points(std::span<const Individual> parents, int rho,
                                                         std::size_t n_intervals)
{
    std::vector<std::size_t> cuts;
    const long rn = static_cast<long>(n_intervals) / rho;
    if (rn == 0)
        return cuts;
    for (std::size_t ir = 1; ir < parents.size(); ++ir) {
        const long rm = rn * static_cast<long>(ir);
        const long rs = rm - rn / 2;
        const double re = std::max(static_cast<double>(rm) + static_cast<double>(rn) / 2.0, static_cast<double>(rs) + 1.0);
        const auto& a = parents[ir - 1].genome.entries;
        const auto& b = parents[ir].genome.entries;
        std::size_t best = static_cast<std::size_t>(rs);
        double best_gap = std::numeric_limits<double>::infinity();
        for (long i = rs; static_cast<double>(i) < re && i < static_cast<long>(n_intervals); ++i) {
            const double gap = std::abs(b[static_cast<std::size_t>(i)].soc - a[static_cast<std::size_t>(i)].soc);
            if (gap < best_gap) {
                best_gap = gap;
                best = static_cast<std::size_t>(i);
            }
        }
        cuts.push_back(best);
    }
    return cuts;
}

/// Child takes parent k on (cut[k-1], cut[k]]; step size is the geometric
/// mean of the parents'.
inline Individual recombine(std::span<const Individual> parents, int rho, const EaEnvironment& env, Rng& rng)
{
    if (parents.empty())
        throw ContractError("recombine: no parents");
    const std::size_t n = parents.front().genome.size();
    const auto cuts = recombination_cut_points(parents, rho, n);
    if (parents.size() == 1 || cuts.empty())
        return parents.front();

    LoadStateSchedule child;
    child.entries.reserve(n);
    std::size_t segment = 0;
    for (std::size_t i = 0; i < n; ++i) {
        while (segment < cuts.size() && i > cuts[segment])
            ++segment;
        child.entries.push_back(parents[segment].genome.entries[i]);
    }
    double log_sigma = 0.0;
    for (const auto& p : parents)
        log_sigma += std::log(p.sigma);
    const double sigma = std::exp(log_sigma / static_cast<double>(parents.size()));
    return make_individual(child, sigma, env, rng);
}

/// rho distinct members, uniformly without replacement.
inline std::vector<Individual> select_parents(std::span<const Individual> pop, int rho, Rng& rng)
{
    if (rho < 1 || static_cast<std::size_t>(rho) > pop.size())
        throw ContractError("select_parents: rho exceeds population size");
    std::vector<std::size_t> idx(pop.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::vector<Individual> out;
    out.reserve(static_cast<std::size_t>(rho));
    for (std::size_t k = 0; k < static_cast<std::size_t>(rho); ++k) {
        const std::size_t pick_at = k + uniform_index(rng, idx.size() - k);
        std::swap(idx[k], idx[pick_at]);
        out.push_back(pop[idx[k]]);
    }
    return out;
}

/// Survivor indices of `pool`, best first.
inline std::vector<std::size_t> select_indices(std::span<const Individual> pool, std::size_t mu, SelectionMode mode,
                                               const EaEnvironment& env)
{
    if (pool.empty())
        throw ContractError("select: empty pool");
    mu = std::min(mu, pool.size());
    if (mode == SelectionMode::pareto) {
        std::vector<Objectives> pts;
        pts.reserve(pool.size());
        for (const auto& ind : pool)
            pts.push_back({ind.fitness.local, ind.fitness.global});
        return nsga2_select(pts, mu);
    }
    std::vector<double> score(pool.size());
    for (std::size_t k = 0; k < pool.size(); ++k)
        score[k] = scalar_fitness(pool[k].fitness, mode, env);
    std::vector<std::size_t> order(pool.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return score[a] > score[b]; });
    order.resize(mu);
    return order;
}

inline std::vector<Individual> select(std::span<const Individual> pool, std::size_t mu, SelectionMode mode,
                                      const EaEnvironment& env)
{
    std::vector<Individual> out;
    for (auto k : select_indices(pool, mu, mode, env))
        out.push_back(pool[k]);
    return out;
}

/// Receives each newly archived schedule.
using ScheduleSink = std::function<void(const OperationalSchedule&, const FitnessPair&)>;

/// Generation-steppable EA so that callers can interleave it with message
/// handling. run() drives it to completion.
class Gabhyme {
public:
    Gabhyme(EaParams params, EaEnvironment env, Rng rng, ScheduleSink sink = {},
            std::vector<Individual> seed_population = {})
        : params_(std::move(params))
        , env_(std::move(env))
        , rng_(std::move(rng))
        , sink_(std::move(sink))
        , mgbm_(MgbmState::from(params_.mgbm))
    {
        params_.check();
        env_.storage.check();
        env_.interval.check();
        if (params_.n_intervals != env_.interval.n_intervals)
            throw ContractError("Gabhyme: planning horizon differs from interval spec");
        for (auto& ind : seed_population) {
            if (static_cast<int>(population_.size()) == params_.mu)
                break;
            ind.fitness = evaluate(ind.power, env_);
            population_.push_back(std::move(ind));
        }
        auto fresh = init_pop(params_.mu - static_cast<int>(population_.size()), env_, rng_);
        counters_.evaluations += static_cast<long>(fresh.size());
        std::move(fresh.begin(), fresh.end(), std::back_inserter(population_));
        population_ = select(population_, population_.size(), params_.mode, env_);
        last_indicator_ = indicator();
    }

    /// Replace the believed sum of the other agents' schedules; fitness
    /// values are refreshed before the next generation.
    void set_cluster_context(std::vector<double> others_sum)
    {
        env_.others_sum = std::move(others_sum);
        context_dirty_ = true;
    }

    void set_phi(double phi)
    {
        env_.phi = phi;
        context_dirty_ = true;
    }

    [[nodiscard]] bool done() const { return done_; }
    [[nodiscard]] const EaParams& params() const { return params_; }
    [[nodiscard]] const EaEnvironment& environment() const { return env_; }
    [[nodiscard]] const Archive& archive() const { return archive_; }
    [[nodiscard]] const std::vector<Individual>& population() const { return population_; }
    [[nodiscard]] const EaCounters& counters() const { return counters_; }
    [[nodiscard]] const MgbmState& mgbm() const { return mgbm_; }
    /// Best scalar fitness after each generation.
    [[nodiscard]] const std::vector<double>& best_history() const { return best_history_; }

    [[nodiscard]] const Individual& best() const { return population_[best_index()]; }

    /// One generation. Returns false once the run has terminated.
    bool step()
    {
        if (done_)
            return false;
        if (context_dirty_)
            refresh_fitness();

        std::vector<Individual> offspring;
        offspring.reserve(static_cast<std::size_t>(params_.lambda));
        for (int k = 0; k < params_.lambda; ++k) {
            auto parents = select_parents(population_, params_.rho, rng_);
            Individual child = parents.front();
            if (params_.operators == OperatorSet::gabhyme) {
                child = recombine(parents, params_.rho, env_, rng_);
                ++counters_.recombinations;
                ++counters_.evaluations;
            }
            child = mutate(child, params_.mode, params_.operators, env_, rng_, &counters_.evaluations);
            ++counters_.mutations;
            offspring.push_back(std::move(child));
        }
        std::move(offspring.begin(), offspring.end(), std::back_inserter(population_));
        population_ = select(population_, static_cast<std::size_t>(params_.mu), params_.mode, env_);

        update_archive();

        if (params_.operators == OperatorSet::gabhyme) {
            if (restart_count_ > params_.effective_restart_window()) {
                const double current = indicator();
                if (restart_reference_ && current - *restart_reference_ <= params_.restart_epsilon)
                    restart();
                restart_count_ = 0;
                restart_reference_ = current;
            }
            ++restart_count_;
        }

        const double now = indicator();
        best_history_.push_back(scalar_fitness(best().fitness, params_.mode, env_));
        auto [state, stop] = mgbm_should_stop(mgbm_, progress(last_indicator_, now));
        mgbm_ = state;
        last_indicator_ = now;

        ++counters_.generations;
        if ((params_.use_mgbm && stop) || counters_.generations >= params_.kappa)
            done_ = true;
        return !done_;
    }

    Archive run()
    {
        while (step()) {
        }
        return archive_;
    }

private:
    [[nodiscard]] std::size_t best_index() const
    {
        std::size_t best = 0;
        double best_score = kNegInf;
        for (std::size_t k = 0; k < population_.size(); ++k) {
            const double s = scalar_fitness(population_[k].fitness, params_.mode, env_);
            if (s > best_score) {
                best_score = s;
                best = k;
            }
        }
        return best;
    }

    /// Tracked progress indicator: best local fitness, best normalised sum,
    /// or the archive hypervolume in normalised coordinates (pareto).
    [[nodiscard]] double indicator() const
    {
        if (params_.mode != SelectionMode::pareto || env_.target.empty())
            return scalar_fitness(best().fitness, params_.mode, env_);
        std::vector<Objectives> pts;
        for (const auto& ind : archive_.solutions)
            if (std::isfinite(ind.fitness.local))
                pts.push_back({normalize_local(ind.fitness.local, env_.phi), normalize_global(ind.fitness.global, env_.target)});
        return hypervolume_2d(pts, {0.0, 0.0});
    }

    [[nodiscard]] double progress(double before, double after) const
    {
        if (!std::isfinite(before) || !std::isfinite(after))
            return std::isfinite(after) ? 1.0 : 0.0;
        if (params_.mode == SelectionMode::single_objective || env_.target.empty())
            return (after - before) / std::max({std::abs(before), std::abs(after), 1e-9});
        return after - before;
    }

    void refresh_fitness()
    {
        for (auto& ind : population_)
            ind.fitness = evaluate(ind.power, env_);
        for (auto& ind : archive_.solutions)
            ind.fitness = evaluate(ind.power, env_);
        if (best_known_)
            best_known_->fitness = evaluate(best_known_->power, env_);
        if (params_.mode == SelectionMode::pareto)
            prune_archive();
        population_ = select(population_, population_.size(), params_.mode, env_);
        last_indicator_ = indicator();
        context_dirty_ = false;
    }

    void emit(const Individual& ind)
    {
        if (sink_)
            sink_(to_operational_schedule(ind.power, ind.fitness.local), ind.fitness);
    }

    void update_archive()
    {
        if (params_.mode != SelectionMode::pareto || env_.target.empty()) {
            const Individual& current = best();
            if (!best_known_ || scalar_fitness(best_known_->fitness, params_.mode, env_)
                                    < scalar_fitness(current.fitness, params_.mode, env_)) {
                best_known_ = current;
                archive_.solutions.push_back(current);
                emit(current);
            }
            return;
        }
        for (const auto& ind : population_) {
            if (!std::isfinite(ind.fitness.local))
                continue;
            const Objectives point{ind.fitness.local, ind.fitness.global};
            const bool covered = std::any_of(archive_.solutions.begin(), archive_.solutions.end(), [&](const Individual& a) {
                const Objectives other{a.fitness.local, a.fitness.global};
                return dominates(other, point) || other == point;
            });
            if (covered)
                continue;
            std::erase_if(archive_.solutions, [&](const Individual& a) {
                return dominates(point, {a.fitness.local, a.fitness.global});
            });
            archive_.solutions.push_back(ind);
            emit(ind);
        }
    }

    void prune_archive()
    {
        std::vector<Individual> kept;
        for (std::size_t k = 0; k < archive_.solutions.size(); ++k) {
            const auto& a = archive_.solutions[k];
            const Objectives pa{a.fitness.local, a.fitness.global};
            bool drop = !std::isfinite(pa[0]);
            for (std::size_t m = 0; m < archive_.solutions.size() && !drop; ++m) {
                if (m == k)
                    continue;
                const auto& b = archive_.solutions[m];
                const Objectives pb{b.fitness.local, b.fitness.global};
                drop = dominates(pb, pa) || (pb == pa && m < k);
            }
            if (!drop)
                kept.push_back(a);
        }
        archive_.solutions = std::move(kept);
    }

    /// Keep the better half (at least the elite) and re-initialise the rest.
    void restart()
    {
        const int keep = std::max(1, params_.mu / 2);
        population_.resize(static_cast<std::size_t>(std::min<int>(keep, static_cast<int>(population_.size()))));
        auto fresh = init_pop(params_.mu - static_cast<int>(population_.size()), env_, rng_);
        counters_.evaluations += static_cast<long>(fresh.size());
        std::move(fresh.begin(), fresh.end(), std::back_inserter(population_));
        ++counters_.restarts;
    }

    EaParams params_;
    EaEnvironment env_;
    Rng rng_;
    ScheduleSink sink_;
    std::vector<Individual> population_;
    Archive archive_;
    std::optional<Individual> best_known_;
    EaCounters counters_;
    MgbmState mgbm_;
    std::vector<double> best_history_;
    double last_indicator_ = kNegInf;
    std::optional<double> restart_reference_;
    int restart_count_ = 0;
    bool context_dirty_ = false;
    bool done_ = false;
};

/// Run a complete EA and return its archive.
inline Archive run(const EaParams& params, const EaEnvironment& env, Rng rng, ScheduleSink sink = {})
{
    Gabhyme ea(params, env, std::move(rng), std::move(sink));
    return ea.run();
}

} // namespace vppsched

#endif
