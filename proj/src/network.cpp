#include "switchnet/network.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <functional>
#include <set>
#include <sstream>

#include "switchnet/errors.hpp"

namespace switchnet {

int Route::hop_of(int j) const {
    auto it = std::find(path.begin(), path.end(), j);
    return it == path.end() ? -1 : static_cast<int>(it - path.begin());
}

CapacityPolytope::CapacityPolytope(std::vector<std::vector<double>> rows,
                                   std::vector<std::string> labels)
    : rows_(std::move(rows)), labels_(std::move(labels)) {
    if (rows_.empty()) {
        throw ValidationError("capacity matrix has no rows");
    }
    num_queues_ = rows_.front().size();
    if (num_queues_ == 0) {
        throw ValidationError("capacity matrix has no columns");
    }
    for (const auto& r : rows_) {
        if (r.size() != num_queues_) {
            throw ValidationError("capacity matrix rows differ in length");
        }
        for (double v : r) {
            if (!(v >= 0.0) || !std::isfinite(v)) {
                throw ValidationError("capacity matrix entries must be finite and nonnegative");
            }
        }
    }
    if (labels_.empty()) {
        for (std::size_t l = 0; l < rows_.size(); ++l) {
            labels_.push_back("l" + std::to_string(l + 1));
        }
    } else if (labels_.size() != rows_.size()) {
        throw ValidationError("pool label count does not match row count");
    }

    support_.resize(rows_.size());
    pools_of_.resize(num_queues_);
    std::uint64_t h = 1469598103934665603ULL;
    auto mix = [&h](std::uint64_t v) {
        h ^= v;
        h *= 1099511628211ULL;
    };
    mix(rows_.size());
    mix(num_queues_);
    for (std::size_t l = 0; l < rows_.size(); ++l) {
        for (std::size_t j = 0; j < num_queues_; ++j) {
            mix(std::bit_cast<std::uint64_t>(rows_[l][j]));
            if (rows_[l][j] > 0.0) {
                support_[l].push_back(static_cast<int>(j));
                pools_of_[j].push_back(static_cast<int>(l));
            }
        }
    }
    fingerprint_ = static_cast<std::size_t>(h);
    for (std::size_t j = 0; j < num_queues_; ++j) {
        if (pools_of_[j].empty()) {
            throw ValidationError("queue " + std::to_string(j) + " belongs to no resource pool");
        }
    }
}

bool CapacityPolytope::has_full_row_rank() const {
    auto m = rows_;
    const std::size_t nr = m.size();
    const std::size_t nc = num_queues_;
    std::size_t rank = 0;
    for (std::size_t c = 0; c < nc && rank < nr; ++c) {
        std::size_t piv = rank;
        for (std::size_t r = rank + 1; r < nr; ++r) {
            if (std::abs(m[r][c]) > std::abs(m[piv][c])) piv = r;
        }
        if (std::abs(m[piv][c]) <= 1e-9) continue;
        std::swap(m[piv], m[rank]);
        for (std::size_t r = rank + 1; r < nr; ++r) {
            const double f = m[r][c] / m[rank][c];
            for (std::size_t k = c; k < nc; ++k) m[r][k] -= f * m[rank][k];
        }
        ++rank;
    }
    return rank == nr;
}

double CapacityPolytope::max_pool_usage(const std::vector<double>& s) const {
    double worst = 0.0;
    for (const auto& r : rows_) {
        double u = 0.0;
        for (std::size_t j = 0; j < num_queues_; ++j) u += r[j] * s[j];
        worst = std::max(worst, u);
    }
    return worst;
}

InterferenceGraph::InterferenceGraph(int num_vertices,
                                     const std::vector<std::pair<int, int>>& edges)
    : adj_(static_cast<std::size_t>(num_vertices),
           std::vector<bool>(static_cast<std::size_t>(num_vertices), false)) {
    if (num_vertices < 0) {
        throw ValidationError("negative vertex count");
    }
    for (auto [u, v] : edges) {
        if (u < 0 || v < 0 || u >= num_vertices || v >= num_vertices) {
            throw ValidationError("edge endpoint out of range");
        }
        if (u == v) {
            throw ValidationError("self-loop on vertex " + std::to_string(u));
        }
        if (adj_[u][v]) {
            throw ValidationError("duplicate edge " + std::to_string(u) + "-" + std::to_string(v));
        }
        adj_[u][v] = adj_[v][u] = true;
        edges_.emplace_back(std::min(u, v), std::max(u, v));
    }
    std::sort(edges_.begin(), edges_.end());
}

InterferenceGraph InterferenceGraph::complement() const {
    std::vector<std::pair<int, int>> e;
    for (int u = 0; u < num_vertices(); ++u) {
        for (int v = u + 1; v < num_vertices(); ++v) {
            if (!adj_[u][v]) e.emplace_back(u, v);
        }
    }
    return InterferenceGraph(num_vertices(), e);
}

void NetworkSpec::validate() const {
    const int n = static_cast<int>(queues.size());
    if (n == 0) {
        throw ValidationError("network has no queues");
    }
    std::set<std::string> names(queues.begin(), queues.end());
    if (names.size() != queues.size()) {
        throw ValidationError("duplicate queue names");
    }
    std::set<std::string> ids;
    for (std::size_t i = 0; i < routes.size(); ++i) {
        const Route& r = routes[i];
        const std::string where = "routes[" + std::to_string(i) + "]";
        if (!ids.insert(r.id).second) {
            throw ValidationError(where + ".id: duplicate route id '" + r.id + "'");
        }
        if (r.path.empty()) {
            throw ValidationError(where + ".path: route is empty");
        }
        std::set<int> seen;
        for (int j : r.path) {
            if (j < 0 || j >= n) {
                throw ValidationError(where + ".path: queue index out of range");
            }
            if (!seen.insert(j).second) {
                throw ValidationError(where + ".path: route visits queue '" + queues[j] +
                                      "' more than once");
            }
        }
        if (!(r.rate > 0.0) || !std::isfinite(r.rate)) {
            throw ValidationError(where + ".rate: arrival rate must be positive");
        }
    }
    if (const auto* a = std::get_if<CapacityPolytope>(&capacity)) {
        if (a->num_queues() != queues.size()) {
            throw ValidationError("capacity.matrix: matrix has " + std::to_string(a->num_queues()) +
                                  " columns but the network has " + std::to_string(n) + " queues");
        }
    } else if (const auto* g = std::get_if<InterferenceGraph>(&capacity)) {
        if (g->num_vertices() != n) {
            throw ValidationError("capacity.graph: vertex count does not match queues");
        }
    } else {
        const auto& s = std::get<ExplicitSchedules>(capacity).schedules;
        if (s.empty()) {
            throw ValidationError("capacity.schedules: empty schedule list");
        }
        for (const auto& sched : s) {
            if (sched.size() != queues.size()) {
                throw ValidationError("capacity.schedules: schedule length does not match queues");
            }
            for (int v : sched) {
                if (v < 0) throw ValidationError("capacity.schedules: negative schedule entry");
            }
        }
    }
}

int NetworkSpec::queue_index(const std::string& name) const {
    auto it = std::find(queues.begin(), queues.end(), name);
    return it == queues.end() ? -1 : static_cast<int>(it - queues.begin());
}

LoadProfile compute_loads(const NetworkSpec& spec, const CapacityPolytope& polytope) {
    if (polytope.num_queues() != spec.num_queues()) {
        throw ValidationError("dimension mismatch: spec has " + std::to_string(spec.num_queues()) +
                              " queues, polytope has " + std::to_string(polytope.num_queues()));
    }
    LoadProfile p;
    p.queue_load.assign(spec.num_queues(), 0.0);
    for (const auto& r : spec.routes) {
        for (int j : r.path) p.queue_load[j] += r.rate;
    }
    p.pool_load.assign(polytope.num_pools(), 0.0);
    p.admissible = true;
    for (std::size_t l = 0; l < polytope.num_pools(); ++l) {
        for (int j : polytope.support(l)) p.pool_load[l] += polytope.at(l, j) * p.queue_load[j];
        if (!(p.pool_load[l] < 1.0)) p.admissible = false;
    }
    return p;
}

namespace {

using Bits = std::vector<bool>;

void bron_kerbosch(const InterferenceGraph& g, std::vector<int>& r, std::vector<int> p,
                   std::vector<int> x, std::vector<std::vector<int>>& out) {
    if (p.empty() && x.empty()) {
        auto c = r;
        std::sort(c.begin(), c.end());
        out.push_back(std::move(c));
        return;
    }
    // Pivot: vertex of P u X with most neighbours in P.
    int pivot = -1;
    int best = -1;
    for (const auto* set : {&p, &x}) {
        for (int u : *set) {
            int cnt = 0;
            for (int v : p) cnt += g.adjacent(u, v) ? 1 : 0;
            if (cnt > best) {
                best = cnt;
                pivot = u;
            }
        }
    }
    std::vector<int> candidates;
    for (int v : p) {
        if (!g.adjacent(pivot, v)) candidates.push_back(v);
    }
    for (int v : candidates) {
        std::vector<int> np, nx;
        for (int u : p) {
            if (g.adjacent(u, v)) np.push_back(u);
        }
        for (int u : x) {
            if (g.adjacent(u, v)) nx.push_back(u);
        }
        r.push_back(v);
        bron_kerbosch(g, r, std::move(np), std::move(nx), out);
        r.pop_back();
        p.erase(std::find(p.begin(), p.end(), v));
        x.push_back(v);
    }
}

}  // namespace

std::vector<std::vector<int>> maximal_cliques(const InterferenceGraph& g) {
    std::vector<std::vector<int>> out;
    if (g.num_vertices() == 0) return out;
    std::vector<int> r, p(g.num_vertices());
    for (int v = 0; v < g.num_vertices(); ++v) p[v] = v;
    bron_kerbosch(g, r, p, {}, out);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

CapacityPolytope cliques_to_polytope(const InterferenceGraph& g) {
    if (g.num_vertices() == 0) {
        throw ValidationError("cannot build a polytope from an empty graph");
    }
    const auto cliques = maximal_cliques(g);
    std::vector<std::vector<double>> rows;
    std::vector<std::string> labels;
    for (const auto& c : cliques) {
        std::vector<double> row(g.num_vertices(), 0.0);
        std::string label = "C";
        for (int v : c) {
            row[v] = 1.0;
            label += "_" + std::to_string(v);
        }
        rows.push_back(std::move(row));
        labels.push_back(std::move(label));
    }
    return CapacityPolytope(std::move(rows), std::move(labels));
}

ScheduleSet enumerate_schedules(const InterferenceGraph& g, int vertex_cap) {
    const int n = g.num_vertices();
    if (n > vertex_cap) {
        throw CapExceeded("schedule enumeration: graph has " + std::to_string(n) +
                          " vertices, cap is " + std::to_string(vertex_cap));
    }
    std::vector<std::uint32_t> nbr(n, 0);
    for (auto [u, v] : g.edges()) {
        nbr[u] |= 1u << v;
        nbr[v] |= 1u << u;
    }
    std::vector<std::uint32_t> masks;
    // Extend independent sets one vertex at a time; every set is reached once.
    std::function<void(int, std::uint32_t, std::uint32_t)> grow =
        [&](int from, std::uint32_t set, std::uint32_t blocked) {
            masks.push_back(set);
            for (int v = from; v < n; ++v) {
                if (blocked & (1u << v)) continue;
                grow(v + 1, set | (1u << v), blocked | nbr[v] | (1u << v));
            }
        };
    grow(0, 0, 0);
    std::sort(masks.begin(), masks.end());
    ScheduleSet out;
    out.reserve(masks.size());
    for (auto m : masks) {
        Schedule s(n, 0);
        for (int v = 0; v < n; ++v) s[v] = (m >> v) & 1u;
        out.push_back(std::move(s));
    }
    return out;
}

ScheduleSet enumerate_schedules(const CapacityPolytope& polytope, std::size_t count_cap) {
    const std::size_t n = polytope.num_queues();
    std::vector<int> bound(n, 0);
    for (std::size_t j = 0; j < n; ++j) {
        double amax = 0.0;
        for (int l : polytope.pools_of(j)) amax = std::max(amax, polytope.at(l, j));
        bound[j] = static_cast<int>(std::floor(1.0 / amax + 1e-12));
    }
    ScheduleSet out;
    Schedule cur(n, 0);
    std::vector<double> usage(polytope.num_pools(), 0.0);
    std::function<void(std::size_t)> rec = [&](std::size_t j) {
        if (j == n) {
            if (out.size() >= count_cap) {
                throw CapExceeded("schedule enumeration exceeded " + std::to_string(count_cap) +
                                  " schedules");
            }
            out.push_back(cur);
            return;
        }
        for (int k = 0; k <= bound[j]; ++k) {
            bool ok = true;
            for (int l : polytope.pools_of(j)) {
                if (usage[l] + k * polytope.at(l, j) > 1.0 + 1e-12) ok = false;
            }
            if (!ok) break;
            for (int l : polytope.pools_of(j)) usage[l] += k * polytope.at(l, j);
            cur[j] = k;
            rec(j + 1);
            for (int l : polytope.pools_of(j)) usage[l] -= k * polytope.at(l, j);
        }
        cur[j] = 0;
    };
    rec(0);
    return out;
}

namespace {

// Search for an induced cycle with an odd number (>= 5) of vertices whose
// smallest vertex is path[0]. Path vertices other than the start exceed it.
bool extend_odd_hole(const InterferenceGraph& g, std::vector<int>& path, std::vector<bool>& on) {
    const int start = path.front();
    const int last = path.back();
    const int n = g.num_vertices();
    for (int u = start + 1; u < n; ++u) {
        if (on[u] || !g.adjacent(last, u)) continue;
        // u may touch only `last` among interior path vertices.
        bool chord = false;
        for (std::size_t i = 1; i + 1 < path.size(); ++i) {
            if (g.adjacent(u, path[i])) {
                chord = true;
                break;
            }
        }
        if (chord) continue;
        if (path.size() >= 2 && g.adjacent(u, start)) {
            // Cycle start..last,u closes with path.size()+1 vertices.
            const std::size_t len = path.size() + 1;
            if (len >= 5 && len % 2 == 1) return true;
            continue;  // shorter or even induced cycle; cannot be extended
        }
        path.push_back(u);
        on[u] = true;
        if (extend_odd_hole(g, path, on)) return true;
        on[u] = false;
        path.pop_back();
    }
    return false;
}

bool has_odd_hole(const InterferenceGraph& g) {
    const int n = g.num_vertices();
    std::vector<bool> on(n, false);
    for (int s = 0; s < n; ++s) {
        std::vector<int> path{s};
        on[s] = true;
        if (extend_odd_hole(g, path, on)) return true;
        on[s] = false;
    }
    return false;
}

}  // namespace

bool is_perfect(const InterferenceGraph& g, int vertex_cap) {
    if (g.num_vertices() > vertex_cap) {
        throw CapExceeded("perfectness check: graph has " + std::to_string(g.num_vertices()) +
                          " vertices, cap is " + std::to_string(vertex_cap));
    }
    return !has_odd_hole(g) && !has_odd_hole(g.complement());
}

CapacityPolytope polytope_of(const NetworkSpec& spec) {
    if (const auto* a = std::get_if<CapacityPolytope>(&spec.capacity)) return *a;
    if (const auto* g = std::get_if<InterferenceGraph>(&spec.capacity)) return cliques_to_polytope(*g);
    throw ValidationError(
        "capacity: an explicit schedule list does not determine the polytope; "
        "supply a matrix or an interference graph");
}

ScheduleSet schedules_of(const NetworkSpec& spec) {
    if (const auto* s = std::get_if<ExplicitSchedules>(&spec.capacity)) return s->schedules;
    if (const auto* g = std::get_if<InterferenceGraph>(&spec.capacity)) return enumerate_schedules(*g);
    return enumerate_schedules(std::get<CapacityPolytope>(spec.capacity));
}

std::vector<int> routes_through(const NetworkSpec& spec, int j) {
    std::vector<int> out;
    for (std::size_t r = 0; r < spec.routes.size(); ++r) {
        if (spec.routes[r].hop_of(j) >= 0) out.push_back(static_cast<int>(r));
    }
    return out;
}

}  // namespace switchnet
