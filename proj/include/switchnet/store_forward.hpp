#pragma once

// Store-Forward allocation sigma_j(Q) = Phi(Q - e_j) / Phi(Q), its normalizing
// constant Phi, the FIFO product-form stationary law, and the closed forms for
// mean queue lengths and route delays that follow from it.

#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <shared_mutex>
#include <unordered_map>
#include <vector>

#include "switchnet/network.hpp"

namespace switchnet {

struct QueueVectorHash {
    std::size_t operator()(const QueueVector& q) const noexcept;
};

/// Route ids per queue, front of the queue first.
using FifoContents = std::vector<std::vector<int>>;

struct NetworkState {
    QueueVector q;
    FifoContents fifo;

    static NetworkState empty(std::size_t num_queues) {
        return {QueueVector(num_queues, 0), FifoContents(num_queues)};
    }
    bool operator==(const NetworkState&) const = default;
};

/// Per-pool, per-class counts m_lj (dense, zero where A_lj = 0).
struct PoolOccupancy {
    std::vector<std::vector<int>> counts;

    int pool_total(std::size_t l) const;
    /// Q_j = sum_l m_lj.
    QueueVector aggregate() const;
};

/// Memo of log Phi(Q) for one polytope. Concurrent lookups share a lock;
/// inserts take it exclusively.
class PhiCache {
public:
    std::optional<double> find(const QueueVector& q) const;
    void store(const QueueVector& q, double log_value);
    void clear();
    std::size_t size() const;

    /// Binds the cache to a polytope on first use; throws std::logic_error if a
    /// different polytope is used later.
    void bind(const CapacityPolytope& polytope);

private:
    mutable std::shared_mutex mutex_;
    std::unordered_map<QueueVector, double, QueueVectorHash> table_;
    std::optional<std::size_t> fingerprint_;
};

/// log Phi(Q) by pool-wise convolution in the log domain. -inf if any entry of
/// Q is negative; 0 for Q = 0.
double log_phi(const QueueVector& q, const CapacityPolytope& polytope, PhiCache* cache = nullptr);

inline double phi(const QueueVector& q, const CapacityPolytope& polytope, PhiCache* cache = nullptr) {
    return std::exp(log_phi(q, polytope, cache));
}

inline constexpr int kDefaultBruteforcePacketCap = 24;

/// Phi(Q) by direct enumeration of every pool split of Q. Test oracle.
double phi_bruteforce(const QueueVector& q, const CapacityPolytope& polytope,
                      int total_cap = kDefaultBruteforcePacketCap);

/// sigma^SF(Q); zero for empty queues.
std::vector<double> sf_allocation(const QueueVector& q, const CapacityPolytope& polytope,
                                  PhiCache* cache = nullptr);

/// Throws ValidationError unless fifo matches q and every label in queue j is
/// a route through j.
void check_state(const NetworkState& state, const NetworkSpec& spec);

/// Unnormalized product-form weight Phi(Q) * prod a_r^(count of r in queue j).
double stationary_weight(const NetworkState& state, const NetworkSpec& spec,
                         const CapacityPolytope& polytope, PhiCache* cache = nullptr);

/// prod_l (1 - a_l): the factor turning stationary_weight into a probability.
double stationary_normalizer(const NetworkSpec& spec, const CapacityPolytope& polytope);

inline double stationary_probability(const NetworkState& state, const NetworkSpec& spec,
                                     const CapacityPolytope& polytope, PhiCache* cache = nullptr) {
    return stationary_weight(state, spec, polytope, cache) * stationary_normalizer(spec, polytope);
}

struct ExactSample {
    NetworkState state;
    PoolOccupancy occupancy;
};

/// Draws independent stationary states: geometric pool totals split
/// multinomially over classes, then an i.i.d. route label per FIFO slot.
class ExactSampler {
public:
    ExactSampler(const NetworkSpec& spec, const CapacityPolytope& polytope, std::uint64_t seed);

    ExactSample draw();
    /// Queue lengths only, without FIFO labels.
    QueueVector draw_queue_lengths();

private:
    PoolOccupancy draw_occupancy();

    std::size_t num_queues_;
    std::vector<std::vector<int>> support_;
    std::mt19937_64 rng_;
    std::vector<double> pool_load_;
    std::vector<std::vector<double>> split_;  // [l][k] over support(l)
    std::vector<std::vector<int>> routes_at_;
    std::vector<std::discrete_distribution<int>> label_;
};

/// One stationary draw, deterministic in the seed.
NetworkState exact_sampler(const NetworkSpec& spec, const CapacityPolytope& polytope,
                           std::uint64_t seed);

/// E[Q_j] = sum_l A_lj a_j / (1 - a_l).
double expected_queue_length(int j, const NetworkSpec& spec, const CapacityPolytope& polytope);

/// E[D] = mbar^T A n, with mbar_l = 1/(1 - a_l) and n the mean visit count per queue.
double expected_delay(const std::vector<double>& visits, const NetworkSpec& spec,
                      const CapacityPolytope& polytope);

/// Mean sojourn time on route r.
double expected_delay(int route, const NetworkSpec& spec, const CapacityPolytope& polytope);

}  // namespace switchnet
