#include "switchnet/simulators.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <random>
#include <unordered_map>

#include "switchnet/errors.hpp"
#include "switchnet/propfair.hpp"

namespace switchnet {

void SimConfig::validate() const {
    if (!(horizon > 0.0) || !std::isfinite(horizon)) {
        throw ValidationError("horizon must be positive");
    }
    if (!(warmup_fraction >= 0.0 && warmup_fraction < 1.0)) {
        throw ValidationError("warmup fraction must lie in [0, 1)");
    }
    if (batches < 2) {
        throw ValidationError("batch count must be at least 2");
    }
    if (histogram_cap < 1) {
        throw ValidationError("histogram cap must be positive");
    }
    for (int n : initial_packets) {
        if (n < 0) throw ValidationError("initial packet counts must be nonnegative");
    }
}

namespace {

using Queues = std::vector<std::deque<Packet>>;

// Collects every metric from a piecewise-constant state path.
class Recorder {
public:
    Recorder(const NetworkSpec& spec, const SimConfig& cfg)
        : spec_(spec),
          cfg_(cfg),
          warm_(cfg.horizon * cfg.warmup_fraction),
          queue_avg_(warm_, cfg.horizon, cfg.batches, spec.num_queues()),
          route_avg_(warm_, cfg.horizon, cfg.batches, spec.routes.size()),
          sojourn_(warm_, cfg.horizon, cfg.batches, spec.routes.size()),
          next_snapshot_(warm_) {
        metrics_.composition.assign(spec.num_queues(), std::vector<double>(spec.routes.size(), 0.0));
        for (auto [a, b] : cfg.joint_pairs) {
            if (a < 0 || b < 0 || a >= static_cast<int>(spec.num_queues()) ||
                b >= static_cast<int>(spec.num_queues())) {
                throw ValidationError("joint histogram pair references an unknown queue");
            }
            metrics_.joint.emplace_back(a, b, cfg.histogram_cap);
        }
        qbuf_.resize(spec.num_queues());
        rbuf_.resize(spec.routes.size());
    }

    /// State `queues` holds on [t0, t1).
    void hold(double t0, double t1, const Queues& queues, const std::vector<int>& route_count) {
        if (t1 <= warm_) return;
        for (std::size_t j = 0; j < queues.size(); ++j) qbuf_[j] = static_cast<double>(queues[j].size());
        for (std::size_t r = 0; r < route_count.size(); ++r) rbuf_[r] = route_count[r];
        queue_avg_.add(t0, t1, qbuf_);
        route_avg_.add(t0, t1, rbuf_);
        const double lo = std::max(t0, warm_);
        const double hi = std::min(t1, cfg_.horizon);
        if (hi > lo) {
            for (auto& h : metrics_.joint) {
                h.add(static_cast<int>(queues[h.first].size()), static_cast<int>(queues[h.second].size()),
                      hi - lo);
            }
        }
        if (cfg_.snapshot_interval > 0.0) {
            while (next_snapshot_ < t1 && next_snapshot_ < cfg_.horizon) {
                if (next_snapshot_ >= t0) take_snapshot(next_snapshot_, queues);
                next_snapshot_ += cfg_.snapshot_interval;
            }
        }
    }

    void depart(const Packet& p, double now, double sojourn) {
        ++metrics_.departed;
        if (p.arrival >= warm_) sojourn_.add(static_cast<std::size_t>(p.route), now, sojourn);
    }

    void admit() { ++metrics_.admitted; }
    void event() { ++metrics_.events; }

    TraceMetrics finish(std::uint64_t in_system, bool transient) {
        metrics_.queue_mean = queue_avg_.estimates();
        metrics_.route_content = route_avg_.estimates();
        metrics_.sojourn = sojourn_.estimates();
        metrics_.observed_time = queue_avg_.observed_time();
        metrics_.in_system = in_system;
        metrics_.transient = transient;
        return std::move(metrics_);
    }

private:
    void take_snapshot(double t, const Queues& queues) {
        Snapshot s;
        s.time = t;
        s.q.resize(queues.size());
        if (cfg_.snapshot_fifo) s.fifo.resize(queues.size());
        for (std::size_t j = 0; j < queues.size(); ++j) {
            s.q[j] = static_cast<int>(queues[j].size());
            for (const auto& p : queues[j]) {
                metrics_.composition[j][p.route] += 1.0;
                if (cfg_.snapshot_fifo) s.fifo[j].push_back(p.route);
            }
        }
        metrics_.snapshots.push_back(std::move(s));
    }

    const NetworkSpec& spec_;
    const SimConfig& cfg_;
    double warm_;
    TimeBatchMeans queue_avg_;
    TimeBatchMeans route_avg_;
    SampleBatchMeans sojourn_;
    double next_snapshot_;
    std::vector<double> qbuf_, rbuf_;
    TraceMetrics metrics_;
};

void place_initial(const NetworkSpec& spec, const SimConfig& cfg, Queues& queues,
                   std::vector<int>& route_count, Recorder& rec) {
    if (cfg.initial_packets.empty()) return;
    if (cfg.initial_packets.size() != spec.routes.size()) {
        throw ValidationError("initial_packets needs one count per route");
    }
    for (std::size_t r = 0; r < spec.routes.size(); ++r) {
        for (int k = 0; k < cfg.initial_packets[r]; ++k) {
            queues[spec.routes[r].path.front()].push_back({static_cast<int>(r), 0, 0.0});
            ++route_count[r];
            rec.admit();
        }
    }
}

std::uint64_t count_in_system(const Queues& queues) {
    std::uint64_t n = 0;
    for (const auto& q : queues) n += q.size();
    return n;
}

QueueVector sizes(const Queues& queues) {
    QueueVector q(queues.size());
    for (std::size_t j = 0; j < queues.size(); ++j) q[j] = static_cast<int>(queues[j].size());
    return q;
}

// Moves the packet one hop along its route at time `now`. Returns false if it
// left the network.
bool forward(const NetworkSpec& spec, Packet p, double now, double sojourn, Queues& queues,
             std::vector<int>& route_count, Recorder& rec) {
    const Route& route = spec.routes[p.route];
    ++p.hop;
    if (p.hop >= static_cast<int>(route.hops())) {
        --route_count[p.route];
        rec.depart(p, now, sojourn);
        return false;
    }
    queues[route.path[p.hop]].push_back(p);
    return true;
}

void check_network(const NetworkSpec& spec) {
    spec.validate();
}

int draw_slot_arrivals(std::mt19937_64& rng, double rate, SlotArrivals model) {
    if (model == SlotArrivals::Bernoulli) {
        std::bernoulli_distribution b(std::min(rate, 1.0));
        return b(rng) ? 1 : 0;
    }
    std::poisson_distribution<int> p(rate);
    return p(rng);
}

struct MovedPacket {
    int from;
    Packet packet;
};

void apply_moves(const NetworkSpec& spec, std::vector<MovedPacket>& moves, double slot, Queues& queues,
                 std::vector<int>& route_count, Recorder& rec) {
    // Joins at the back of the next queue in source-queue order, then route id.
    std::stable_sort(moves.begin(), moves.end(), [](const MovedPacket& a, const MovedPacket& b) {
        if (a.from != b.from) return a.from < b.from;
        return a.packet.route < b.packet.route;
    });
    for (const auto& m : moves) {
        forward(spec, m.packet, slot + 1.0, slot + 1.0 - m.packet.arrival, queues, route_count, rec);
    }
    moves.clear();
}

void admit_slot(const NetworkSpec& spec, const SimConfig& cfg, std::mt19937_64& rng, double slot,
                Queues& queues, std::vector<int>& route_count, Recorder& rec) {
    for (std::size_t r = 0; r < spec.routes.size(); ++r) {
        const int n = draw_slot_arrivals(rng, spec.routes[r].rate, cfg.arrivals);
        for (int k = 0; k < n; ++k) {
            queues[spec.routes[r].path.front()].push_back({static_cast<int>(r), 0, slot});
            ++route_count[r];
            rec.admit();
        }
    }
}

}  // namespace

TraceMetrics simulate_sf_ctmc(const NetworkSpec& spec, const CapacityPolytope& polytope,
                              const SimConfig& cfg) {
    check_network(spec);
    cfg.validate();
    const auto loads = compute_loads(spec, polytope);
    const std::size_t nq = spec.num_queues();

    std::mt19937_64 rng(cfg.seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    Recorder rec(spec, cfg);
    Queues queues(nq);
    std::vector<int> route_count(spec.routes.size(), 0);
    place_initial(spec, cfg, queues, route_count, rec);

    // Queue j gets a slot of width 1 / max_l A_lj >= sigma_j(Q); a draw in
    // the slot is a service completion with probability sigma_j / width.
    double dominating = 0.0;
    for (const auto& r : spec.routes) dominating += r.rate;
    std::vector<double> slot_width(nq);
    for (std::size_t j = 0; j < nq; ++j) {
        double amax = 0.0;
        for (int l : polytope.pools_of(j)) amax = std::max(amax, polytope.at(l, j));
        slot_width[j] = 1.0 / amax;
        dominating += slot_width[j];
    }
    std::exponential_distribution<double> clock(dominating);

    PhiCache phi_cache;
    constexpr std::size_t kCacheLimit = 4000000;

    double t = 0.0;
    QueueVector q = sizes(queues);
    while (t < cfg.horizon) {
        const double next = std::min(t + clock(rng), cfg.horizon);
        rec.hold(t, next, queues, route_count);
        t = next;
        if (t >= cfg.horizon) break;

        double u = unif(rng) * dominating;
        bool done = false;
        for (std::size_t r = 0; r < spec.routes.size() && !done; ++r) {
            if (u < spec.routes[r].rate) {
                queues[spec.routes[r].path.front()].push_back({static_cast<int>(r), 0, t});
                ++route_count[r];
                ++q[spec.routes[r].path.front()];
                rec.admit();
                rec.event();
                done = true;
            } else {
                u -= spec.routes[r].rate;
            }
        }
        if (done) continue;
        std::size_t j = 0;
        while (j + 1 < nq && u >= slot_width[j]) u -= slot_width[j++];
        if (q[j] == 0) continue;
        if (phi_cache.size() > kCacheLimit) phi_cache.clear();
        QueueVector less = q;
        --less[j];
        const double sigma = std::exp(log_phi(less, polytope, &phi_cache) - log_phi(q, polytope, &phi_cache));
        if (u < sigma) {
            Packet p = queues[j].front();
            queues[j].pop_front();
            --q[j];
            if (forward(spec, p, t, t - p.arrival, queues, route_count, rec)) {
                ++q[spec.routes[p.route].path[p.hop + 1]];
            }
            rec.event();
        }
    }
    return rec.finish(count_in_system(queues), !loads.admissible);
}

TraceMetrics simulate_ps(const NetworkSpec& spec, const CapacityPolytope& polytope,
                         const ScheduleSet& schedules, const SimConfig& cfg) {
    check_network(spec);
    cfg.validate();
    if (polytope.num_queues() != spec.num_queues()) {
        throw ValidationError("polytope does not match the network");
    }
    const auto loads = compute_loads(spec, polytope);
    const std::size_t nq = spec.num_queues();
    const auto slots = static_cast<long long>(std::ceil(cfg.horizon));

    std::mt19937_64 rng(cfg.seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    Recorder rec(spec, cfg);
    Queues queues(nq);
    std::vector<int> route_count(spec.routes.size(), 0);
    place_initial(spec, cfg, queues, route_count, rec);

    std::unordered_map<QueueVector, ScheduleDistribution, QueueVectorHash> plan_cache;
    auto plan = [&](const QueueVector& q) -> const ScheduleDistribution& {
        auto it = plan_cache.find(q);
        if (it != plan_cache.end()) return it->second;
        if (plan_cache.size() > 200000) plan_cache.clear();
        const auto pf = pf_solve(q, polytope);
        return plan_cache.emplace(q, decompose_mean(pf.allocation, schedules)).first->second;
    };

    std::vector<MovedPacket> moves;
    for (long long slot = 0; slot < slots; ++slot) {
        const double ts = static_cast<double>(slot);
        admit_slot(spec, cfg, rng, ts, queues, route_count, rec);
        const QueueVector q = sizes(queues);
        if (std::any_of(q.begin(), q.end(), [](int v) { return v > 0; })) {
            const auto& dist = plan(q);
            const Schedule& sigma = dist.support[dist.pick(unif(rng))];
            for (std::size_t j = 0; j < nq; ++j) {
                const int serve = std::min(sigma[j], q[j]);
                for (int k = 0; k < serve; ++k) {
                    moves.push_back({static_cast<int>(j), queues[j].front()});
                    queues[j].pop_front();
                }
            }
        }
        apply_moves(spec, moves, ts, queues, route_count, rec);
        rec.event();
        rec.hold(ts, ts + 1.0, queues, route_count);
    }
    return rec.finish(count_in_system(queues), !loads.admissible);
}

BpDecision backpressure_decision(const NetworkSpec& spec, const ScheduleSet& sorted_schedules,
                                 const std::vector<std::vector<int>>& x) {
    const std::size_t nq = spec.num_queues();
    BpDecision d;
    d.weight.assign(nq, 0.0);
    d.route.assign(nq, -1);
    for (std::size_t r = 0; r < spec.routes.size(); ++r) {
        const auto& path = spec.routes[r].path;
        for (std::size_t h = 0; h < path.size(); ++h) {
            const int j = path[h];
            const int downstream = h + 1 < path.size() ? x[path[h + 1]][r] : 0;
            const double diff = std::max(x[j][r] - downstream, 0);
            if (d.route[j] < 0 || diff > d.weight[j]) {
                d.weight[j] = diff;
                d.route[j] = static_cast<int>(r);
            }
        }
    }
    double best = -1.0;
    for (std::size_t k = 0; k < sorted_schedules.size(); ++k) {
        double v = 0.0;
        for (std::size_t j = 0; j < nq; ++j) v += sorted_schedules[k][j] * d.weight[j];
        if (v > best) {
            best = v;
            d.schedule = k;
        }
    }
    return d;
}

TraceMetrics simulate_bp(const NetworkSpec& spec, const ScheduleSet& schedules, const SimConfig& cfg) {
    check_network(spec);
    cfg.validate();
    if (schedules.empty()) throw ValidationError("empty schedule set");
    const std::size_t nq = spec.num_queues();
    const std::size_t nr = spec.routes.size();
    ScheduleSet sorted = schedules;
    std::sort(sorted.begin(), sorted.end());
    const auto slots = static_cast<long long>(std::ceil(cfg.horizon));

    std::mt19937_64 rng(cfg.seed);
    Recorder rec(spec, cfg);
    Queues queues(nq);
    std::vector<int> route_count(nr, 0);
    place_initial(spec, cfg, queues, route_count, rec);

    std::vector<std::vector<int>> x(nq, std::vector<int>(nr, 0));
    std::vector<MovedPacket> moves;
    for (long long slot = 0; slot < slots; ++slot) {
        const double ts = static_cast<double>(slot);
        admit_slot(spec, cfg, rng, ts, queues, route_count, rec);
        for (std::size_t j = 0; j < nq; ++j) {
            std::fill(x[j].begin(), x[j].end(), 0);
            for (const auto& p : queues[j]) ++x[j][p.route];
        }
        const auto d = backpressure_decision(spec, sorted, x);
        const Schedule& sigma = sorted[d.schedule];
        for (std::size_t j = 0; j < nq; ++j) {
            if (!(d.weight[j] > 0.0) || sigma[j] == 0) continue;
            int serve = std::min(sigma[j], x[j][d.route[j]]);
            // Oldest packets of the chosen route leave first.
            for (auto it = queues[j].begin(); it != queues[j].end() && serve > 0;) {
                if (it->route == d.route[j]) {
                    moves.push_back({static_cast<int>(j), *it});
                    it = queues[j].erase(it);
                    --serve;
                } else {
                    ++it;
                }
            }
        }
        apply_moves(spec, moves, ts, queues, route_count, rec);
        rec.event();
        rec.hold(ts, ts + 1.0, queues, route_count);
    }
    return rec.finish(count_in_system(queues), false);
}

}  // namespace switchnet
