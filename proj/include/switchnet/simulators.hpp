#pragma once

// Continuous-time Store-Forward network (uniformized CTMC) and discrete-time
// Proportional Scheduler / BackPressure slot simulators with a shared metrics
// pipeline.

#include <cstdint>
#include <utility>
#include <vector>

#include "switchnet/network.hpp"
#include "switchnet/stats.hpp"
#include "switchnet/store_forward.hpp"

namespace switchnet {

struct Packet {
    int route = 0;
    int hop = 0;             // zero-based position on the route
    double arrival = 0.0;    // time (or slot) of admission
};

enum class SlotArrivals { Poisson, Bernoulli };

struct SimConfig {
    double horizon = 1e5;        // time units (CTMC) or slots (discrete)
    double warmup_fraction = 0.2;
    std::uint64_t seed = 1;
    int batches = 20;
    SlotArrivals arrivals = SlotArrivals::Poisson;

    /// Spacing of state snapshots after warmup. <= 0 disables snapshots.
    double snapshot_interval = 0.0;
    /// Keep FIFO labels in snapshots (needed for rate-function evaluation).
    bool snapshot_fifo = false;
    /// Queue pairs for time-weighted joint histograms.
    std::vector<std::pair<int, int>> joint_pairs;
    int histogram_cap = 50;

    /// Packets per route placed at the route's first queue at time 0.
    std::vector<int> initial_packets;

    /// Throws ValidationError on out-of-range settings.
    void validate() const;
};

struct Snapshot {
    double time = 0.0;
    QueueVector q;
    FifoContents fifo;  // empty unless SimConfig::snapshot_fifo
};

struct TraceMetrics {
    std::vector<Estimate> queue_mean;     // time-average Q_j
    std::vector<Estimate> route_content;  // time-average packets of route r in system
    std::vector<Estimate> sojourn;        // per route, packets admitted after warmup
    /// composition[j][r]: route-r packets seen at queue j, summed over snapshots.
    std::vector<std::vector<double>> composition;
    std::vector<JointHistogram> joint;
    std::vector<Snapshot> snapshots;

    std::uint64_t admitted = 0;
    std::uint64_t departed = 0;
    std::uint64_t in_system = 0;
    std::uint64_t events = 0;   // arrivals plus service completions (CTMC) or slots
    double observed_time = 0.0;
    bool transient = false;     // loads inadmissible: averages are not stationary
};

/// FIFO-routed Store-Forward network: Poisson(a_r) arrivals, queue j served at
/// rate sigma^SF_j(Q). Uniformized with the dominating rate
/// sum_r a_r + sum_j 1 / max_l A_lj.
TraceMetrics simulate_sf_ctmc(const NetworkSpec& spec, const CapacityPolytope& polytope,
                              const SimConfig& cfg);

/// Proportional Scheduler: each slot draws a schedule whose mean solves the
/// proportional-fair problem on the current queue sizes and serves FIFO heads.
TraceMetrics simulate_ps(const NetworkSpec& spec, const CapacityPolytope& polytope,
                         const ScheduleSet& schedules, const SimConfig& cfg);

/// BackPressure with per-route counts X_jr and max-weight schedule choice.
TraceMetrics simulate_bp(const NetworkSpec& spec, const ScheduleSet& schedules, const SimConfig& cfg);

struct BpDecision {
    std::vector<double> weight;   // w_j
    std::vector<int> route;       // r^BP_j, -1 if queue j carries no route
    std::size_t schedule = 0;     // index into the schedule set
};

/// One BackPressure decision for route counts x[j][r]; ties go to the lowest
/// route id and the lexicographically smallest schedule.
BpDecision backpressure_decision(const NetworkSpec& spec, const ScheduleSet& sorted_schedules,
                                 const std::vector<std::vector<int>>& x);

}  // namespace switchnet
