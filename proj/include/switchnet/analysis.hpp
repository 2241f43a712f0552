#pragma once

// Structural checks on the Store-Forward stationary law: detailed balance
// against the reversed chain, independence of queues that share no pool, and
// the large-deviations rate function with its (1/c) log Phi(cQ) limit.

#include <random>
#include <string>
#include <vector>

#include "switchnet/network.hpp"
#include "switchnet/simulators.hpp"
#include "switchnet/stats.hpp"
#include "switchnet/store_forward.hpp"

namespace switchnet {

enum class TransitionKind { Arrival, Departure, InternalMove };

const char* to_string(TransitionKind kind);

/// Arrival: a packet of `route` joins the back of its first queue.
/// Departure / InternalMove: the front packet of `queue` leaves the network or
/// moves to the back of its next queue.
struct Transition {
    TransitionKind kind = TransitionKind::Arrival;
    int route = -1;
    int queue = -1;
};

/// Successor state. Throws ValidationError if the transition cannot fire.
NetworkState apply_transition(const NetworkState& state, const Transition& t, const NetworkSpec& spec);

/// Uniform choice among the transitions enabled in `state`.
Transition random_transition(const NetworkState& state, const NetworkSpec& spec, std::mt19937_64& rng);

/// Random valid state with at most `max_per_queue` packets per queue.
NetworkState random_state(const NetworkSpec& spec, int max_per_queue, std::mt19937_64& rng);

struct BalanceReport {
    TransitionKind kind = TransitionKind::Arrival;
    double lhs = 0.0;   // pi(x) q(x, x')
    double rhs = 0.0;   // pi(x') q^R(x', x)
    double residual = 0.0;
    /// Total outflow rate of x against the inflow sum_y pi(y) q(y, x) / pi(x).
    double total_out = 0.0;
    double total_in = 0.0;
    double total_residual = 0.0;
};

/// Throws ValidationError if `successor` is not the result of `t`, or the
/// loads are inadmissible.
BalanceReport balance_check(const NetworkState& state, const NetworkState& successor, const Transition& t,
                            const NetworkSpec& spec, const CapacityPolytope& polytope,
                            PhiCache* cache = nullptr);

BalanceReport balance_check(const NetworkState& state, const Transition& t, const NetworkSpec& spec,
                            const CapacityPolytope& polytope, PhiCache* cache = nullptr);

enum class Verdict { IndependentConsistent, Dependent, Inconclusive };

const char* to_string(Verdict v);

struct IndependenceThresholds {
    double p_value = 0.001;
    double correlation = 0.02;
    std::size_t min_samples = 10000;
    int histogram_cap = 50;
};

struct IndependenceReport {
    int first = 0;
    int second = 0;
    bool shares_pool = false;
    std::size_t samples = 0;
    double correlation = 0.0;
    ChiSquareResult chi_square;
    Verdict verdict = Verdict::Inconclusive;
};

bool share_pool(const CapacityPolytope& polytope, int j, int k);

IndependenceReport independence_test(const std::vector<QueueVector>& samples, int j, int k,
                                     const CapacityPolytope& polytope,
                                     const IndependenceThresholds& thresholds = {});

/// Gamma_jr piecewise linear in the queue length: stage k of queue j covers
/// [breakpoints[j][k], breakpoints[j][k+1]] with slope gradients[j][k][r].
struct PiecewiseLinearProfile {
    std::vector<std::vector<double>> breakpoints;
    std::vector<std::vector<std::vector<double>>> gradients;

    /// Throws ValidationError unless breakpoints start at 0 and never decrease,
    /// each stage gradient is a distribution over the routes through j, and
    /// the last breakpoint equals Q_j.
    void validate(const std::vector<double>& q, const NetworkSpec& spec) const;
};

/// One stage per queue with the given composition (zero-length if Q_j = 0).
PiecewiseLinearProfile uniform_profile(const std::vector<double>& q,
                                       const std::vector<std::vector<double>>& composition);

/// Splits each FIFO into `stages` contiguous blocks and uses the empirical
/// route fractions of each block as its slope.
PiecewiseLinearProfile profile_from_fifo(const FifoContents& fifo, const NetworkSpec& spec, int stages = 4);

/// -max_{s in <S>} sum_j Q_j log s_j plus the relative-entropy integral
/// sum_j sum_k dQ_j(k) sum_r G'_jr(k) log(G'_jr(k) / a_r).
double ldp_rate(const std::vector<double>& q, const PiecewiseLinearProfile& profile,
                const NetworkSpec& spec, const CapacityPolytope& polytope);

/// max_{s in <S>} sum_j Q_j log s_j (0 for Q = 0).
double pf_log_objective(const std::vector<double>& q, const CapacityPolytope& polytope);

struct LogPhiLimit {
    std::vector<int> c;
    std::vector<double> values;  // (1/c) log Phi(cQ)
    double target = 0.0;         // -max sum_j Q_j log s_j
    std::vector<double> gaps;    // |value - target|
    double last_gap = 0.0;
    bool non_increasing = true;
};

/// Throws ValidationError unless every c * Q_j is an integer.
LogPhiLimit phi_log_limit(const std::vector<double>& q, const CapacityPolytope& polytope,
                          const std::vector<int>& c_list);

struct LyapunovDrift {
    std::vector<double> times;
    std::vector<double> values;
    double slope = 0.0;
    double slope_se = 0.0;
};

/// Rate function along the FIFO snapshots of a trace, with a least-squares
/// trend. Throws ValidationError if the trace has no FIFO snapshots.
LyapunovDrift lyapunov_drift(const TraceMetrics& trace, const NetworkSpec& spec,
                             const CapacityPolytope& polytope, int stages = 4);

}  // namespace switchnet
