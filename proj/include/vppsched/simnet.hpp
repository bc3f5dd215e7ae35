#ifndef VPPSCHED_SIMNET_HPP
#define VPPSCHED_SIMNET_HPP

// Deterministic virtual-time network and run orchestration.
//
// Tick 0 bootstraps every agent (in id order). On every later tick each
// agent, in the delivery order of that tick, receives the messages due for
// it, runs one EA generation and handles its inputs; messages it sends are
// delivered `latency` ticks later. The run ends at quiescence (no EA active,
// nothing in flight, no state change during the tick) or when the tick
// budget is used up.
//
// Messages travel in their binary wire form. Every delivery, schedule-set
// insertion and best-candidate change is written to the run record, one JSON
// object per line, so two runs can be compared byte for byte.

#include <algorithm>
#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "agent.hpp"
#include "codec.hpp"
#include "config.hpp"
#include "objectives.hpp"
#include "rng.hpp"
#include "topology.hpp"

namespace vppsched {

struct AgentOutcome {
    AgentId id = 0;
    std::string name;
    std::vector<double> power_kw;
    double local_fitness = 0.0;
    double phi = kNegInf;
    std::size_t schedule_set_size = 0;
    bool has_storage = false;
};

struct RunMetrics {
    double global_fitness = kNegInf;
    double fulfillment = kNegInf;
    long ticks = 0;
    long messages_sent = 0;
    long messages_delivered = 0;
    bool quiescent = false;
    bool budget_exhausted = false;
    bool agreement = false;
};

struct RunRecord {
    std::vector<std::string> lines; // JSON lines
    std::vector<AgentOutcome> agents;
    std::vector<double> cluster_kw;
    RunMetrics metrics;

    [[nodiscard]] std::string text() const
    {
        std::string out;
        for (const auto& l : lines) {
            out += l;
            out += '\n';
        }
        return out;
    }
};

struct RunOptions {
    std::optional<std::uint64_t> seed; // overrides the scenario seed
    std::optional<long> budget_ticks;  // overrides the scenario budget
    bool record_history = true;
};

namespace detail {

    struct InFlight {
        long due = 0;
        long sequence = 0;
        AgentId from = 0;
        AgentId to = 0;
        std::vector<std::uint8_t> bytes;
    };

    /// JSON has no infinities; they are written as strings.
    inline Json number(double x)
    {
        if (std::isfinite(x))
            return x;
        return x > 0 ? "inf" : (x < 0 ? "-inf" : "nan");
    }

    inline Json metrics_json(const RunMetrics& m)
    {
        return {{"global_fitness", number(m.global_fitness)}, {"fulfillment", number(m.fulfillment)},
                {"ticks", m.ticks},                   {"messages_sent", m.messages_sent},
                {"messages_delivered", m.messages_delivered}, {"quiescent", m.quiescent},
                {"budget_exhausted", m.budget_exhausted}, {"agreement", m.agreement}};
    }

    inline double number_from(const Json& j)
    {
        if (j.is_number())
            return j.get<double>();
        const auto s = j.get<std::string>();
        if (s == "inf")
            return std::numeric_limits<double>::infinity();
        if (s == "-inf")
            return -std::numeric_limits<double>::infinity();
        return std::numeric_limits<double>::quiet_NaN();
    }

} // namespace detail

inline RunRecord run_negotiation(ScenarioConfig cfg, const RunOptions& opts = {})
{
    if (opts.seed)
        cfg.seed = *opts.seed;
    if (opts.budget_ticks)
        cfg.budget_ticks = *opts.budget_ticks;
    cfg.ea.n_intervals = cfg.interval.n_intervals;
    check(cfg);

    RunRecord rec;
    auto log = [&](const Json& j) { rec.lines.push_back(j.dump()); };
    log({{"type", "header"},
         {"seed", cfg.seed},
         {"method", std::string(to_string(cfg.method))},
         {"budget_ticks", cfg.budget_ticks},
         {"scenario", to_json(cfg)}});

    const std::size_t n = cfg.agents.size();
    const Topology topo = build_topology(cfg.topology, n, derive_seed(cfg.seed, 0x7070));
    std::vector<std::unique_ptr<Agent>> agents;
    for (std::size_t a = 0; a < n; ++a) {
        std::vector<AgentId> nb(topo.adjacency[a].begin(), topo.adjacency[a].end());
        agents.push_back(std::make_unique<Agent>(static_cast<AgentId>(a), cfg.agents[a], cfg, std::move(nb)));
    }

    std::vector<detail::InFlight> queue;
    long sequence = 0;
    Rng order_rng(derive_seed(cfg.seed, 0x0de1));

    auto send = [&](const Agent& from, const NegotiationMessage& m, long tick) {
        const auto bytes = encode(m);
        for (auto to : from.negotiation().neighbours()) {
            queue.push_back({tick + cfg.delivery.latency, sequence++, from.id(), to, bytes});
            ++rec.metrics.messages_sent;
        }
    };

    auto log_changes = [&](Agent& a, const Candidate& before, long tick) {
        const auto& best = a.negotiation().memory().best;
        if (best != before)
            log({{"type", "candidate"},
                 {"tick", tick},
                 {"agent", a.id()},
                 {"size", best.schedules.size()},
                 {"fitness", detail::number(best.fitness)},
                 {"creator", best.creator}});
    };

    auto log_inserts = [&](Agent& a, long tick) {
        const auto inserts = a.take_inserts();
        std::size_t seeded = 0;
        double seeded_min = std::numeric_limits<double>::infinity();
        for (const auto& ins : inserts) {
            if (ins.seeded) {
                ++seeded;
                seeded_min = std::min(seeded_min, ins.local_fitness);
                continue;
            }
            log({{"type", "insert"},
                 {"tick", tick},
                 {"agent", a.id()},
                 {"local_fitness", detail::number(ins.local_fitness)},
                 {"phi", detail::number(ins.phi)}});
        }
        if (seeded > 0)
            log({{"type", "seed_set"},
                 {"tick", tick},
                 {"agent", a.id()},
                 {"count", seeded},
                 {"min_local_fitness", detail::number(seeded_min)},
                 {"phi", detail::number(a.phi())}});
    };

    auto history = [&](long tick) {
        if (!opts.record_history)
            return;
        double best_complete = kNegInf;
        Json per_agent = Json::array();
        for (const auto& a : agents) {
            const auto& best = a->negotiation().memory().best;
            const double g = best.schedules.size() == n ? best.fitness : kNegInf;
            best_complete = std::max(best_complete, g);
            const auto res = a->result();
            double combined = std::isfinite(g) ? normalize_global(g, cfg.target) : kNegInf;
            if (res && std::isfinite(a->phi()) && a->phi() != 0.0)
                combined += normalize_local(res->local_fitness, a->phi());
            per_agent.push_back(detail::number(combined));
        }
        log({{"type", "history"}, {"tick", tick}, {"global_fitness", detail::number(best_complete)},
             {"combined", per_agent}});
    };

    // Tick 0: bootstrap.
    for (auto& a : agents) {
        const Candidate before = a->negotiation().memory().best;
        auto out = a->bootstrap(cfg.target);
        log_inserts(*a, 0);
        log_changes(*a, before, 0);
        if (out)
            send(*a, *out, 0);
    }
    history(0);

    long tick = 0;
    while (true) {
        const bool any_ea = std::any_of(agents.begin(), agents.end(), [](const auto& a) { return a->ea_active(); });
        if (!any_ea && queue.empty()) {
            rec.metrics.quiescent = true;
            break;
        }
        if (tick >= cfg.budget_ticks) {
            rec.metrics.budget_exhausted = true;
            break;
        }
        ++tick;

        std::vector<std::size_t> order(n);
        std::iota(order.begin(), order.end(), 0);
        if (cfg.delivery.mode == DeliveryMode::random_order)
            std::shuffle(order.begin(), order.end(), order_rng);

        for (auto idx : order) {
            Agent& a = *agents[idx];
            std::vector<detail::InFlight> due;
            std::vector<detail::InFlight> keep;
            for (auto& m : queue)
                (m.to == a.id() && m.due <= tick ? due : keep).push_back(std::move(m));
            queue = std::move(keep);
            std::sort(due.begin(), due.end(), [](const auto& x, const auto& y) { return x.sequence < y.sequence; });

            const WorkingMemory before_mem = a.negotiation().memory();
            std::vector<NegotiationMessage> inbox;
            for (const auto& m : due) {
                inbox.push_back(decode(m.bytes));
                ++rec.metrics.messages_delivered;
            }
            auto out = a.tick(inbox);
            const bool mem_changed = a.negotiation().memory() != before_mem;
            for (const auto& m : due)
                log({{"type", "delivery"},
                     {"tick", tick},
                     {"from", m.from},
                     {"to", m.to},
                     {"bytes", m.bytes.size()},
                     {"digest", fnv1a(m.bytes)},
                     {"changed", mem_changed}});
            log_inserts(a, tick);
            log_changes(a, before_mem.best, tick);
            if (out)
                send(a, *out, tick);
        }
        history(tick);
    }
    rec.metrics.ticks = tick;

    // Final state.
    const auto& reference = agents.front()->negotiation().memory().best;
    rec.metrics.agreement = std::all_of(agents.begin(), agents.end(), [&](const auto& a) {
        return a->negotiation().memory().best.schedules == reference.schedules;
    });
    rec.cluster_kw.assign(cfg.target.size(), 0.0);
    Json per_agent = Json::array();
    for (const auto& a : agents) {
        AgentOutcome o;
        o.id = a->id();
        o.name = a->spec().name;
        o.phi = a->phi();
        o.has_storage = a->kind() != AgentKind::fixed;
        o.schedule_set_size = a->negotiation().schedule_set().size();
        if (const auto it = reference.schedules.find(a->id()); it != reference.schedules.end())
            o.power_kw = it->second;
        if (const auto res = a->result())
            o.local_fitness = res->local_fitness;
        for (std::size_t i = 0; i < o.power_kw.size() && i < rec.cluster_kw.size(); ++i)
            rec.cluster_kw[i] += o.power_kw[i];
        Json ja{{"agent", o.id},
                {"name", o.name},
                {"power_kw", o.power_kw},
                {"local_fitness", detail::number(o.local_fitness)},
                {"phi", detail::number(o.phi)},
                {"schedule_set_size", o.schedule_set_size}};
        if (const Gabhyme* ea = a->ea()) {
            const auto& c = ea->counters();
            ja["ea"] = {{"generations", c.generations}, {"recombinations", c.recombinations}, {"mutations", c.mutations},
                        {"restarts", c.restarts}, {"evaluations", c.evaluations}};
        }
        per_agent.push_back(std::move(ja));
        rec.agents.push_back(std::move(o));
    }
    if (reference.schedules.size() == n) {
        rec.metrics.global_fitness = global_fitness_of_sum(rec.cluster_kw, cfg.target);
        rec.metrics.fulfillment = normalize_global(rec.metrics.global_fitness, cfg.target);
    }
    log({{"type", "final"},
         {"cluster_kw", rec.cluster_kw},
         {"agents", per_agent},
         {"metrics", detail::metrics_json(rec.metrics)}});
    return rec;
}

inline void write_record(const RunRecord& rec, const std::string& path)
{
    std::ofstream f(path, std::ios::binary);
    if (!f)
        throw ConfigError("cannot write run record '" + path + "'");
    f << rec.text();
}

inline std::vector<Json> read_record(const std::string& path)
{
    std::ifstream f(path);
    if (!f)
        throw ConfigError("cannot open run record '" + path + "'");
    std::vector<Json> out;
    std::string line;
    while (std::getline(f, line)) {
        if (line.empty())
            continue;
        try {
            out.push_back(Json::parse(line));
        } catch (const Json::parse_error& e) {
            throw ConfigError(std::string("run record: ") + e.what());
        }
    }
    if (out.empty() || out.front().value("type", "") != "header")
        throw ConfigError("run record: missing header line");
    return out;
}

struct ReplayResult {
    bool identical = false;        // whole record reproduced byte for byte
    bool metrics_identical = false; // final line reproduced byte for byte
    std::size_t first_difference = 0;
    RunRecord rerun;
};

/// Re-run the scenario embedded in a record and compare.
inline ReplayResult replay(const std::vector<std::string>& recorded_lines)
{
    if (recorded_lines.empty())
        throw ConfigError("run record is empty");
    Json header;
    try {
        header = Json::parse(recorded_lines.front());
    } catch (const Json::parse_error& e) {
        throw ConfigError(std::string("run record: ") + e.what());
    }
    if (header.value("type", "") != "header")
        throw ConfigError("run record: missing header line");
    ScenarioConfig cfg = scenario_from_json(header.at("scenario"));
    RunOptions opts;
    opts.seed = header.at("seed").get<std::uint64_t>();
    opts.budget_ticks = header.at("budget_ticks").get<long>();
    cfg.method = method_from_string(header.at("method").get<std::string>());
    ReplayResult r;
    r.rerun = run_negotiation(cfg, opts);
    const auto& a = recorded_lines;
    const auto& b = r.rerun.lines;
    r.first_difference = 0;
    while (r.first_difference < a.size() && r.first_difference < b.size() && a[r.first_difference] == b[r.first_difference])
        ++r.first_difference;
    r.identical = a.size() == b.size() && r.first_difference == a.size();
    r.metrics_identical = !a.empty() && !b.empty() && a.back() == b.back();
    return r;
}

inline std::vector<std::string> read_record_lines(const std::string& path)
{
    std::ifstream f(path, std::ios::binary);
    if (!f)
        throw ConfigError("cannot open run record '" + path + "'");
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(f, line))
        if (!line.empty())
            lines.push_back(line);
    return lines;
}

/// Outcome of the free-running mode.
struct ConcurrentResult {
    double global_fitness = kNegInf;
    bool agreement = false;
    long messages = 0;
};

/// One thread per agent, mutex-protected inboxes. Not deterministic; used
/// to stress the negotiation under real interleavings.
inline ConcurrentResult run_concurrent(ScenarioConfig cfg)
{
    cfg.ea.n_intervals = cfg.interval.n_intervals;
    check(cfg);
    const std::size_t n = cfg.agents.size();
    const Topology topo = build_topology(cfg.topology, n, derive_seed(cfg.seed, 0x7070));
    std::vector<std::unique_ptr<Agent>> agents;
    for (std::size_t a = 0; a < n; ++a) {
        std::vector<AgentId> nb(topo.adjacency[a].begin(), topo.adjacency[a].end());
        agents.push_back(std::make_unique<Agent>(static_cast<AgentId>(a), cfg.agents[a], cfg, std::move(nb)));
    }

    struct Inbox {
        std::mutex mutex;
        std::condition_variable ready;
        std::deque<std::vector<std::uint8_t>> messages;
    };
    std::vector<Inbox> inboxes(n);
    std::atomic<long> in_flight{0};
    std::atomic<long> active{static_cast<long>(n)}; // agents still bootstrapping or running an EA
    std::atomic<long> sent{0};
    std::atomic<bool> stop{false};

    auto post = [&](const Agent& from, const NegotiationMessage& m) {
        const auto bytes = encode(m);
        for (auto to : from.negotiation().neighbours()) {
            in_flight.fetch_add(1);
            sent.fetch_add(1);
            {
                std::lock_guard lock(inboxes[to].mutex);
                inboxes[to].messages.push_back(bytes);
            }
            inboxes[to].ready.notify_one();
        }
    };

    auto worker = [&](std::size_t idx) {
        Agent& a = *agents[idx];
        if (auto out = a.bootstrap(cfg.target))
            post(a, *out);
        bool ea_running = a.ea_active();
        if (!ea_running)
            active.fetch_sub(1);
        while (!stop.load()) {
            std::vector<std::vector<std::uint8_t>> batch;
            {
                std::unique_lock lock(inboxes[idx].mutex);
                if (!ea_running)
                    inboxes[idx].ready.wait_for(lock, std::chrono::milliseconds(5),
                                                [&] { return !inboxes[idx].messages.empty() || stop.load(); });
                while (!inboxes[idx].messages.empty()) {
                    batch.push_back(std::move(inboxes[idx].messages.front()));
                    inboxes[idx].messages.pop_front();
                }
            }
            std::vector<NegotiationMessage> inbox;
            for (const auto& b : batch)
                inbox.push_back(decode(b));
            if (auto out = a.tick(inbox, ea_running))
                post(a, *out);
            in_flight.fetch_sub(static_cast<long>(batch.size()));
            if (ea_running && !a.ea_active()) {
                ea_running = false;
                active.fetch_sub(1);
            }
            if (active.load() == 0 && in_flight.load() == 0)
                stop.store(true);
        }
        for (auto& box : inboxes)
            box.ready.notify_all();
    };

    std::vector<std::jthread> threads;
    for (std::size_t a = 0; a < n; ++a)
        threads.emplace_back(worker, a);
    threads.clear();

    ConcurrentResult r;
    r.messages = sent.load();
    const auto& reference = agents.front()->negotiation().memory().best;
    r.agreement = std::all_of(agents.begin(), agents.end(), [&](const auto& a) {
        return a->negotiation().memory().best.schedules == reference.schedules;
    });
    if (reference.schedules.size() == n)
        r.global_fitness = reference.fitness;
    return r;
}

} // namespace vppsched

#endif
