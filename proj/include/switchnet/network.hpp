#pragma once

// Network model: queues, fixed routes, schedule sets and the capacity
// polytope <S> = { s >= 0 : A s <= 1 }.

#include <cstddef>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace switchnet {

using QueueVector = std::vector<int>;
using Schedule = std::vector<int>;
using ScheduleSet = std::vector<Schedule>;

struct Route {
    std::string id;
    std::vector<int> path;  // distinct queue indices, first hop first
    double rate = 0.0;      // a_r, packets per unit time (or per slot)

    std::size_t hops() const { return path.size(); }
    /// Position of queue j on the route, or -1.
    int hop_of(int j) const;
};

/// Nonnegative pools x queues matrix. Row l is resource pool l; queue j
/// belongs to pool l iff A(l, j) > 0.
class CapacityPolytope {
public:
    CapacityPolytope() = default;
    explicit CapacityPolytope(std::vector<std::vector<double>> rows,
                              std::vector<std::string> labels = {});

    std::size_t num_pools() const { return rows_.size(); }
    std::size_t num_queues() const { return num_queues_; }
    double at(std::size_t l, std::size_t j) const { return rows_[l][j]; }
    bool contains(std::size_t l, std::size_t j) const { return rows_[l][j] > 0.0; }
    const std::vector<double>& row(std::size_t l) const { return rows_[l]; }
    const std::vector<std::vector<double>>& rows() const { return rows_; }
    const std::vector<std::string>& labels() const { return labels_; }

    /// Queues with A(l, j) > 0, ascending.
    const std::vector<int>& support(std::size_t l) const { return support_[l]; }
    /// Pools with A(l, j) > 0, ascending.
    const std::vector<int>& pools_of(std::size_t j) const { return pools_of_[j]; }

    /// Numerical rank test with pivot tolerance 1e-9.
    bool has_full_row_rank() const;

    /// max_l (A s)_l.
    double max_pool_usage(const std::vector<double>& s) const;

    /// Order-sensitive digest of the matrix, used to bind caches to a polytope.
    std::size_t fingerprint() const { return fingerprint_; }

private:
    std::vector<std::vector<double>> rows_;
    std::vector<std::string> labels_;
    std::size_t num_queues_ = 0;
    std::vector<std::vector<int>> support_;
    std::vector<std::vector<int>> pools_of_;
    std::size_t fingerprint_ = 0;
};

/// Simple undirected graph on queues; independent sets are the schedules.
class InterferenceGraph {
public:
    InterferenceGraph() = default;
    InterferenceGraph(int num_vertices, const std::vector<std::pair<int, int>>& edges);

    int num_vertices() const { return static_cast<int>(adj_.size()); }
    bool adjacent(int u, int v) const { return adj_[u][v]; }
    const std::vector<std::pair<int, int>>& edges() const { return edges_; }
    InterferenceGraph complement() const;

private:
    std::vector<std::vector<bool>> adj_;
    std::vector<std::pair<int, int>> edges_;  // u < v, sorted
};

/// Explicit list of 0/1 (or small integer) schedules.
struct ExplicitSchedules {
    ScheduleSet schedules;
};

using Capacity = std::variant<CapacityPolytope, InterferenceGraph, ExplicitSchedules>;

struct NetworkSpec {
    std::string name;
    std::vector<std::string> queues;
    std::vector<Route> routes;
    Capacity capacity;

    std::size_t num_queues() const { return queues.size(); }
    /// Throws ValidationError when a route is empty, repeats a queue, points
    /// outside the queue set, or has a non-positive rate.
    void validate() const;
    int queue_index(const std::string& name) const;
};

struct LoadProfile {
    std::vector<double> queue_load;  // a_j
    std::vector<double> pool_load;   // a_l
    bool admissible = false;         // a_l < 1 for all l
};

LoadProfile compute_loads(const NetworkSpec& spec, const CapacityPolytope& polytope);

/// Maximal cliques by Bron-Kerbosch with pivoting. Each clique is sorted and
/// the list is sorted lexicographically.
std::vector<std::vector<int>> maximal_cliques(const InterferenceGraph& g);

/// One row per maximal clique, A(C, j) = 1 iff j in C.
CapacityPolytope cliques_to_polytope(const InterferenceGraph& g);

inline constexpr int kDefaultScheduleVertexCap = 24;
inline constexpr int kDefaultPerfectVertexCap = 16;

/// All independent-set indicator vectors in increasing bitmask order
/// (queue 0 is the lowest bit). Includes the zero schedule.
ScheduleSet enumerate_schedules(const InterferenceGraph& g,
                                int vertex_cap = kDefaultScheduleVertexCap);

/// Integer points of { s >= 0 : A s <= 1 } in lexicographic order.
ScheduleSet enumerate_schedules(const CapacityPolytope& polytope,
                                std::size_t count_cap = std::size_t{1} << 22);

/// True iff neither g nor its complement has an induced odd cycle of length >= 5.
bool is_perfect(const InterferenceGraph& g, int vertex_cap = kDefaultPerfectVertexCap);

/// The polytope implied by the network's capacity description. Throws
/// ValidationError for an explicit schedule list (no hull computation).
CapacityPolytope polytope_of(const NetworkSpec& spec);

/// The schedule set implied by the network's capacity description.
ScheduleSet schedules_of(const NetworkSpec& spec);

/// Route ids traversing queue j, ascending.
std::vector<int> routes_through(const NetworkSpec& spec, int j);

}  // namespace switchnet
