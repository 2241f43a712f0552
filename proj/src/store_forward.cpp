#include "switchnet/store_forward.hpp"

#include <algorithm>
#include <limits>
#include <mutex>
#include <stdexcept>
#include <type_traits>

#include "switchnet/errors.hpp"

namespace switchnet {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

std::vector<double> log_factorials(int n) {
    std::vector<double> lf(static_cast<std::size_t>(n) + 1, 0.0);
    for (int k = 1; k <= n; ++k) lf[k] = std::lgamma(static_cast<double>(k) + 1.0);
    return lf;
}

// Online log-sum-exp accumulator per destination cell.
struct LseCell {
    double max = kNegInf;
    double sum = 0.0;

    void add(double t) {
        if (t <= max) {
            sum += std::exp(t - max);
        } else {
            sum = sum * std::exp(max - t) + 1.0;
            max = t;
        }
    }
    double value() const { return sum > 0.0 ? max + std::log(sum) : kNegInf; }
};

// Plain sum accumulator for the linear-domain pass.
struct SumCell {
    double sum = 0.0;

    void add(double t) { sum += t; }
    double value() const { return sum; }
};

// Residual-count DP over pools in input order. The state holds the residual
// of every queue that has been touched by an earlier pool and still has a
// later pool ("frontier"); a queue is fully absorbed by its last pool.
// Linear runs on plain weights, otherwise every quantity is a logarithm.
template <bool Linear>
double phi_dp(const QueueVector& q, const CapacityPolytope& a, const std::vector<double>& lf) {
    using Cell = std::conditional_t<Linear, SumCell, LseCell>;
    const std::size_t nq = a.num_queues();
    const std::size_t np = a.num_pools();
    constexpr double kZero = Linear ? 0.0 : kNegInf;
    auto mul = [](double x, double y) { return Linear ? x * y : x + y; };

    std::vector<double> fact(lf.size());
    for (std::size_t k = 0; k < lf.size(); ++k) fact[k] = Linear ? std::exp(lf[k]) : lf[k];

    std::vector<int> last_pool(nq, -1);
    for (std::size_t l = 0; l < np; ++l) {
        for (int j : a.support(l)) last_pool[j] = static_cast<int>(l);
    }

    std::vector<int> frontier;
    std::vector<double> vals{Linear ? 1.0 : 0.0};
    std::vector<int> pos_in_frontier(nq, -1);
    std::vector<int> next_pos(nq, -1);
    std::vector<int> residual;
    std::vector<Cell> acc;

    // Per-class weight x -> A_lj^x / x!.
    struct Term {
        int queue;
        bool forced;
        std::vector<double> cost;
    };
    std::vector<Term> terms;
    std::vector<int> free_idx, cap, x;
    std::vector<std::size_t> next_stride, free_stride;

    for (std::size_t l = 0; l < np; ++l) {
        const auto& supp = a.support(l);
        if (supp.empty()) continue;

        // New frontier: survivors keep their order, newly touched queues follow.
        std::vector<int> next;
        for (int j : frontier) {
            if (last_pool[j] != static_cast<int>(l)) next.push_back(j);
        }
        for (int j : supp) {
            if (pos_in_frontier[j] < 0 && last_pool[j] != static_cast<int>(l)) next.push_back(j);
        }
        next_stride.assign(next.size(), 0);
        std::size_t next_size = 1;
        std::fill(next_pos.begin(), next_pos.end(), -1);
        for (std::size_t k = 0; k < next.size(); ++k) {
            next_stride[k] = next_size;
            next_size *= static_cast<std::size_t>(q[next[k]]) + 1;
            next_pos[next[k]] = static_cast<int>(k);
        }

        terms.clear();
        for (int j : supp) {
            Term t{j, last_pool[j] == static_cast<int>(l), {}};
            const double la = std::log(a.at(l, j));
            t.cost.resize(static_cast<std::size_t>(q[j]) + 1);
            for (int v = 0; v <= q[j]; ++v) {
                const double c = -lf[v] + v * la;
                t.cost[v] = Linear ? std::exp(c) : c;
            }
            terms.push_back(std::move(t));
        }
        acc.assign(next_size, Cell{});
        cap.assign(terms.size(), 0);
        x.assign(terms.size(), 0);
        free_stride.assign(terms.size(), 0);
        free_idx.clear();
        std::vector<int> forced_idx, fpos(terms.size());
        for (std::size_t t = 0; t < terms.size(); ++t) {
            fpos[t] = pos_in_frontier[terms[t].queue];
            if (fpos[t] < 0) cap[t] = q[terms[t].queue];
            if (terms[t].forced) {
                forced_idx.push_back(static_cast<int>(t));
            } else {
                free_idx.push_back(static_cast<int>(t));
                free_stride[t] = next_stride[next_pos[terms[t].queue]];
            }
        }
        // Destination offset contributed by frontier queues this pool skips.
        std::vector<std::size_t> carry_stride(frontier.size(), 0), dim(frontier.size());
        for (std::size_t k = 0; k < frontier.size(); ++k) {
            dim[k] = static_cast<std::size_t>(q[frontier[k]]) + 1;
            if (!a.contains(l, frontier[k])) carry_stride[k] = next_stride[next_pos[frontier[k]]];
        }

        residual.assign(frontier.size(), 0);
        std::size_t dest0 = 0;
        for (std::size_t src = 0; src < vals.size(); ++src) {
            if (src > 0) {
                // Odometer step to the residual vector of src.
                for (std::size_t k = 0; k < frontier.size(); ++k) {
                    if (static_cast<std::size_t>(++residual[k]) < dim[k]) {
                        dest0 += carry_stride[k];
                        break;
                    }
                    dest0 -= (dim[k] - 1) * carry_stride[k];
                    residual[k] = 0;
                }
            }
            const double base = vals[src];
            if (base == kZero) continue;
            double fixed_cost = base;
            int fixed_sum = 0;
            for (int t : forced_idx) {
                const int c = fpos[t] >= 0 ? residual[fpos[t]] : cap[t];
                fixed_cost = mul(fixed_cost, terms[t].cost[c]);
                fixed_sum += c;
            }
            for (int t : free_idx) {
                if (fpos[t] >= 0) cap[t] = residual[fpos[t]];
            }

            if (free_idx.empty()) {
                acc[dest0].add(mul(fixed_cost, fact[fixed_sum]));
                continue;
            }
            if (free_idx.size() == 1) {
                const int t = free_idx[0];
                const int c = cap[t];
                const std::size_t st = free_stride[t];
                const double* cost = terms[t].cost.data();
                const double* f = fact.data() + fixed_sum;
                std::size_t dest = dest0 + static_cast<std::size_t>(c) * st;
                for (int xv = 0; xv <= c; ++xv, dest -= st) {
                    acc[dest].add(mul(mul(fixed_cost, cost[xv]), f[xv]));
                }
                continue;
            }
            if (free_idx.size() == 2) {
                const int t1 = free_idx[0];
                const int t2 = free_idx[1];
                const int c1 = cap[t1];
                const int c2 = cap[t2];
                const std::size_t st1 = free_stride[t1];
                const std::size_t st2 = free_stride[t2];
                const double* cost1 = terms[t1].cost.data();
                const double* cost2 = terms[t2].cost.data();
                for (int x1 = 0; x1 <= c1; ++x1) {
                    const double w1 = mul(fixed_cost, cost1[x1]);
                    const double* f = fact.data() + fixed_sum + x1;
                    std::size_t dest = dest0 + static_cast<std::size_t>(c1 - x1) * st1 +
                                       static_cast<std::size_t>(c2) * st2;
                    for (int x2 = 0; x2 <= c2; ++x2, dest -= st2) {
                        acc[dest].add(mul(mul(w1, cost2[x2]), f[x2]));
                    }
                }
                continue;
            }
            // General case: odometer over the free classes.
            for (int t : free_idx) x[t] = 0;
            while (true) {
                double w = fixed_cost;
                int sum = fixed_sum;
                std::size_t dest = dest0;
                for (int t : free_idx) {
                    w = mul(w, terms[t].cost[x[t]]);
                    sum += x[t];
                    dest += static_cast<std::size_t>(cap[t] - x[t]) * free_stride[t];
                }
                acc[dest].add(mul(w, fact[sum]));
                std::size_t k = 0;
                for (; k < free_idx.size(); ++k) {
                    const int t = free_idx[k];
                    if (x[t] < cap[t]) {
                        ++x[t];
                        break;
                    }
                    x[t] = 0;
                }
                if (k == free_idx.size()) break;
            }
        }

        vals.resize(next_size);
        for (std::size_t d = 0; d < next_size; ++d) vals[d] = acc[d].value();
        for (int j : frontier) pos_in_frontier[j] = -1;
        frontier = std::move(next);
        for (std::size_t k = 0; k < frontier.size(); ++k) pos_in_frontier[frontier[k]] = static_cast<int>(k);
    }
    return Linear ? std::log(vals.at(0)) : vals.at(0);
}

double log_phi_uncached(const QueueVector& q, const CapacityPolytope& a) {
    int total = 0;
    for (int v : q) total += v;
    const auto lf = log_factorials(total);

    // Plain doubles are exact enough whenever every partial sum and product
    // stays well inside the exponent range. Pool factors are bounded by the
    // multinomial theorem, term counts by the size of the residual grid.
    double upper = 0.0;
    double lower = 0.0;
    for (std::size_t l = 0; l < a.num_pools(); ++l) {
        double row = 0.0;
        int members = 0;
        for (int j : a.support(l)) {
            row += a.at(l, j);
            members += q[j];
        }
        upper += members * std::max(0.0, std::log(row));
    }
    for (std::size_t j = 0; j < a.num_queues(); ++j) {
        double amin = std::numeric_limits<double>::infinity();
        for (int l : a.pools_of(j)) amin = std::min(amin, a.at(l, j));
        upper += static_cast<double>(a.pools_of(j).size()) * std::log(q[j] + 1.0);
        lower -= 2.0 * lf[q[j]] + q[j] * std::max(0.0, -std::log(amin));
    }
    upper = std::max(upper, lf[total]);
    if (upper < 600.0 && lower > -600.0) return phi_dp<true>(q, a, lf);
    return phi_dp<false>(q, a, lf);
}

}  // namespace

std::size_t QueueVectorHash::operator()(const QueueVector& q) const noexcept {
    std::size_t h = 1469598103934665603ULL;
    for (int v : q) {
        h ^= static_cast<std::size_t>(static_cast<unsigned>(v));
        h *= 1099511628211ULL;
    }
    return h;
}

int PoolOccupancy::pool_total(std::size_t l) const {
    int s = 0;
    for (int v : counts[l]) s += v;
    return s;
}

QueueVector PoolOccupancy::aggregate() const {
    if (counts.empty()) return {};
    QueueVector q(counts.front().size(), 0);
    for (const auto& row : counts) {
        for (std::size_t j = 0; j < row.size(); ++j) q[j] += row[j];
    }
    return q;
}

std::optional<double> PhiCache::find(const QueueVector& q) const {
    std::shared_lock lock(mutex_);
    auto it = table_.find(q);
    if (it == table_.end()) return std::nullopt;
    return it->second;
}

void PhiCache::store(const QueueVector& q, double log_value) {
    std::unique_lock lock(mutex_);
    table_.emplace(q, log_value);
}

void PhiCache::clear() {
    std::unique_lock lock(mutex_);
    table_.clear();
    fingerprint_.reset();
}

std::size_t PhiCache::size() const {
    std::shared_lock lock(mutex_);
    return table_.size();
}

void PhiCache::bind(const CapacityPolytope& polytope) {
    {
        std::shared_lock lock(mutex_);
        if (fingerprint_ && *fingerprint_ == polytope.fingerprint()) return;
    }
    std::unique_lock lock(mutex_);
    if (!fingerprint_) {
        fingerprint_ = polytope.fingerprint();
    } else if (*fingerprint_ != polytope.fingerprint()) {
        throw std::logic_error("PhiCache reused with a different capacity polytope");
    }
}

double log_phi(const QueueVector& q, const CapacityPolytope& polytope, PhiCache* cache) {
    if (q.size() != polytope.num_queues()) {
        throw ValidationError("queue vector length does not match the polytope");
    }
    for (int v : q) {
        if (v < 0) return kNegInf;
    }
    if (std::all_of(q.begin(), q.end(), [](int v) { return v == 0; })) return 0.0;
    if (cache) {
        cache->bind(polytope);
        if (auto hit = cache->find(q)) return *hit;
    }
    const double v = log_phi_uncached(q, polytope);
    if (cache) cache->store(q, v);
    return v;
}

double phi_bruteforce(const QueueVector& q, const CapacityPolytope& polytope, int total_cap) {
    if (q.size() != polytope.num_queues()) {
        throw ValidationError("queue vector length does not match the polytope");
    }
    int total = 0;
    for (int v : q) {
        if (v < 0) return 0.0;
        total += v;
    }
    if (total > total_cap) {
        throw CapExceeded("phi_bruteforce: " + std::to_string(total) + " packets exceeds cap " +
                          std::to_string(total_cap));
    }
    const std::size_t nq = q.size();
    const std::size_t np = polytope.num_pools();
    std::vector<std::vector<int>> m(np, std::vector<int>(nq, 0));

    auto term = [&]() {
        double w = 1.0;
        for (std::size_t l = 0; l < np; ++l) {
            // multinomial(m_l; m_lj) as a product of binomials, times A^m.
            int running = 0;
            for (std::size_t j = 0; j < nq; ++j) {
                const int k = m[l][j];
                for (int i = 1; i <= k; ++i) {
                    w *= static_cast<double>(running + i) / i;
                    w *= polytope.at(l, j);
                }
                running += k;
            }
        }
        return w;
    };

    // Recursively split each Q_j over the pools containing j.
    double sum = 0.0;
    auto split = [&](auto&& self, std::size_t j, std::size_t k, int left) -> void {
        if (j == nq) {
            sum += term();
            return;
        }
        const auto& pools = polytope.pools_of(j);
        if (k + 1 == pools.size()) {
            m[pools[k]][j] = left;
            self(self, j + 1, 0, j + 1 < nq ? q[j + 1] : 0);
            m[pools[k]][j] = 0;
            return;
        }
        for (int v = 0; v <= left; ++v) {
            m[pools[k]][j] = v;
            self(self, j, k + 1, left - v);
        }
        m[pools[k]][j] = 0;
    };
    split(split, 0, 0, nq > 0 ? q[0] : 0);
    return sum;
}

std::vector<double> sf_allocation(const QueueVector& q, const CapacityPolytope& polytope,
                                  PhiCache* cache) {
    std::vector<double> sigma(q.size(), 0.0);
    const double base = log_phi(q, polytope, cache);
    QueueVector dq = q;
    for (std::size_t j = 0; j < q.size(); ++j) {
        if (q[j] < 1) continue;
        --dq[j];
        sigma[j] = std::exp(log_phi(dq, polytope, cache) - base);
        ++dq[j];
    }
    return sigma;
}

void check_state(const NetworkState& state, const NetworkSpec& spec) {
    const std::size_t nq = spec.num_queues();
    if (state.q.size() != nq || state.fifo.size() != nq) {
        throw ValidationError("state dimension does not match the network");
    }
    for (std::size_t j = 0; j < nq; ++j) {
        if (state.q[j] < 0 || static_cast<std::size_t>(state.q[j]) != state.fifo[j].size()) {
            throw ValidationError("FIFO length at queue " + spec.queues[j] + " differs from Q_j");
        }
        for (int r : state.fifo[j]) {
            if (r < 0 || r >= static_cast<int>(spec.routes.size()) ||
                spec.routes[r].hop_of(static_cast<int>(j)) < 0) {
                throw ValidationError("FIFO at queue " + spec.queues[j] +
                                      " holds a packet of a route that does not visit it");
            }
        }
    }
}

namespace {

void require_admissible(const NetworkSpec& spec, const CapacityPolytope& polytope, const char* what) {
    const auto loads = compute_loads(spec, polytope);
    if (!loads.admissible) {
        throw InadmissibleLoad(std::string(what) + ": some resource pool has load >= 1");
    }
}

}  // namespace

double stationary_weight(const NetworkState& state, const NetworkSpec& spec,
                         const CapacityPolytope& polytope, PhiCache* cache) {
    require_admissible(spec, polytope, "stationary_weight");
    check_state(state, spec);
    double lw = log_phi(state.q, polytope, cache);
    for (const auto& queue : state.fifo) {
        for (int r : queue) lw += std::log(spec.routes[r].rate);
    }
    return std::exp(lw);
}

double stationary_normalizer(const NetworkSpec& spec, const CapacityPolytope& polytope) {
    require_admissible(spec, polytope, "stationary_normalizer");
    const auto loads = compute_loads(spec, polytope);
    double z = 1.0;
    for (double al : loads.pool_load) z *= 1.0 - al;
    return z;
}

ExactSampler::ExactSampler(const NetworkSpec& spec, const CapacityPolytope& polytope,
                           std::uint64_t seed)
    : num_queues_(spec.num_queues()), rng_(seed) {
    require_admissible(spec, polytope, "exact_sampler");
    const auto loads = compute_loads(spec, polytope);
    pool_load_ = loads.pool_load;
    for (std::size_t l = 0; l < polytope.num_pools(); ++l) {
        support_.push_back(polytope.support(l));
        std::vector<double> p;
        for (int j : polytope.support(l)) {
            p.push_back(pool_load_[l] > 0.0 ? polytope.at(l, j) * loads.queue_load[j] / pool_load_[l]
                                            : 0.0);
        }
        split_.push_back(std::move(p));
    }
    for (std::size_t j = 0; j < num_queues_; ++j) {
        auto through = routes_through(spec, static_cast<int>(j));
        std::vector<double> w;
        for (int r : through) w.push_back(spec.routes[r].rate);
        if (w.empty()) w.push_back(1.0);  // never sampled: a_j = 0 forces Q_j = 0
        routes_at_.push_back(std::move(through));
        label_.emplace_back(w.begin(), w.end());
    }
}

PoolOccupancy ExactSampler::draw_occupancy() {
    PoolOccupancy occ;
    occ.counts.assign(support_.size(), std::vector<int>(num_queues_, 0));
    for (std::size_t l = 0; l < support_.size(); ++l) {
        if (pool_load_[l] <= 0.0) continue;
        std::geometric_distribution<int> geo(1.0 - pool_load_[l]);
        int left = geo(rng_);
        // Multinomial split as a chain of conditional binomials.
        double mass_left = 1.0;
        const auto& supp = support_[l];
        for (std::size_t k = 0; k < supp.size() && left > 0; ++k) {
            int take;
            if (k + 1 == supp.size() || mass_left <= split_[l][k]) {
                take = left;
            } else {
                std::binomial_distribution<int> bin(left, std::clamp(split_[l][k] / mass_left, 0.0, 1.0));
                take = bin(rng_);
            }
            occ.counts[l][supp[k]] = take;
            left -= take;
            mass_left -= split_[l][k];
        }
    }
    return occ;
}

ExactSample ExactSampler::draw() {
    ExactSample s;
    s.occupancy = draw_occupancy();
    s.state.q = s.occupancy.aggregate();
    s.state.fifo.assign(num_queues_, {});
    for (std::size_t j = 0; j < num_queues_; ++j) {
        auto& fifo = s.state.fifo[j];
        fifo.reserve(static_cast<std::size_t>(s.state.q[j]));
        for (int k = 0; k < s.state.q[j]; ++k) fifo.push_back(routes_at_[j][label_[j](rng_)]);
    }
    return s;
}

QueueVector ExactSampler::draw_queue_lengths() {
    return draw_occupancy().aggregate();
}

NetworkState exact_sampler(const NetworkSpec& spec, const CapacityPolytope& polytope,
                           std::uint64_t seed) {
    ExactSampler sampler(spec, polytope, seed);
    return sampler.draw().state;
}

double expected_queue_length(int j, const NetworkSpec& spec, const CapacityPolytope& polytope) {
    require_admissible(spec, polytope, "expected_queue_length");
    if (j < 0 || j >= static_cast<int>(spec.num_queues())) {
        throw ValidationError("queue index out of range");
    }
    const auto loads = compute_loads(spec, polytope);
    double e = 0.0;
    for (int l : polytope.pools_of(j)) {
        e += polytope.at(l, j) * loads.queue_load[j] / (1.0 - loads.pool_load[l]);
    }
    return e;
}

double expected_delay(const std::vector<double>& visits, const NetworkSpec& spec,
                      const CapacityPolytope& polytope) {
    require_admissible(spec, polytope, "expected_delay");
    if (visits.size() != polytope.num_queues()) {
        throw ValidationError("visit vector length does not match the polytope");
    }
    const auto loads = compute_loads(spec, polytope);
    double d = 0.0;
    for (std::size_t l = 0; l < polytope.num_pools(); ++l) {
        double an = 0.0;
        for (int j : polytope.support(l)) an += polytope.at(l, j) * visits[j];
        d += an / (1.0 - loads.pool_load[l]);
    }
    return d;
}

double expected_delay(int route, const NetworkSpec& spec, const CapacityPolytope& polytope) {
    if (route < 0 || route >= static_cast<int>(spec.routes.size())) {
        throw ValidationError("route index out of range");
    }
    std::vector<double> visits(spec.num_queues(), 0.0);
    for (int j : spec.routes[route].path) visits[j] += 1.0;
    return expected_delay(visits, spec, polytope);
}

}  // namespace switchnet
