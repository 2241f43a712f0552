#include "switchnet/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "switchnet/errors.hpp"
#include "switchnet/propfair.hpp"

namespace switchnet {

const char* to_string(TransitionKind kind) {
    switch (kind) {
        case TransitionKind::Arrival: return "arrival";
        case TransitionKind::Departure: return "departure";
        case TransitionKind::InternalMove: return "internal-move";
    }
    return "?";
}

const char* to_string(Verdict v) {
    switch (v) {
        case Verdict::IndependentConsistent: return "independent-consistent";
        case Verdict::Dependent: return "dependent";
        case Verdict::Inconclusive: return "inconclusive";
    }
    return "?";
}

namespace {

void push_back_packet(NetworkState& s, int j, int r) {
    s.fifo[j].push_back(r);
    ++s.q[j];
}

int pop_front_packet(NetworkState& s, int j) {
    const int r = s.fifo[j].front();
    s.fifo[j].erase(s.fifo[j].begin());
    --s.q[j];
    return r;
}

double log_weight(const NetworkState& s, const NetworkSpec& spec, const CapacityPolytope& polytope,
                  PhiCache* cache) {
    double lw = log_phi(s.q, polytope, cache);
    for (const auto& queue : s.fifo) {
        for (int r : queue) lw += std::log(spec.routes[r].rate);
    }
    return lw;
}

double service_rate(const QueueVector& q, int j, const CapacityPolytope& polytope, PhiCache* cache) {
    if (q[j] <= 0) return 0.0;
    QueueVector less = q;
    --less[j];
    return std::exp(log_phi(less, polytope, cache) - log_phi(q, polytope, cache));
}

double relative_gap(double a, double b) {
    const double scale = std::max({std::abs(a), std::abs(b), std::numeric_limits<double>::min()});
    return std::abs(a - b) / scale;
}

}  // namespace

NetworkState apply_transition(const NetworkState& state, const Transition& t, const NetworkSpec& spec) {
    NetworkState next = state;
    switch (t.kind) {
        case TransitionKind::Arrival: {
            if (t.route < 0 || t.route >= static_cast<int>(spec.routes.size())) {
                throw ValidationError("arrival names an unknown route");
            }
            push_back_packet(next, spec.routes[t.route].path.front(), t.route);
            return next;
        }
        case TransitionKind::Departure:
        case TransitionKind::InternalMove: {
            if (t.queue < 0 || t.queue >= static_cast<int>(spec.num_queues()) || state.q[t.queue] == 0) {
                throw ValidationError("service transition needs a nonempty queue");
            }
            const int r = pop_front_packet(next, t.queue);
            const Route& route = spec.routes[r];
            const int h = route.hop_of(t.queue);
            const bool last = h + 1 == static_cast<int>(route.hops());
            if (last != (t.kind == TransitionKind::Departure)) {
                throw ValidationError(std::string(to_string(t.kind)) +
                                      " does not match the position of the front packet");
            }
            if (!last) push_back_packet(next, route.path[h + 1], r);
            return next;
        }
    }
    throw ValidationError("unknown transition kind");
}

Transition random_transition(const NetworkState& state, const NetworkSpec& spec, std::mt19937_64& rng) {
    std::vector<Transition> enabled;
    for (std::size_t r = 0; r < spec.routes.size(); ++r) {
        enabled.push_back({TransitionKind::Arrival, static_cast<int>(r), -1});
    }
    for (std::size_t j = 0; j < spec.num_queues(); ++j) {
        if (state.q[j] == 0) continue;
        const Route& route = spec.routes[state.fifo[j].front()];
        const bool last = route.hop_of(static_cast<int>(j)) + 1 == static_cast<int>(route.hops());
        enabled.push_back({last ? TransitionKind::Departure : TransitionKind::InternalMove, -1,
                           static_cast<int>(j)});
    }
    if (enabled.empty()) throw ValidationError("no transition is enabled");
    std::uniform_int_distribution<std::size_t> pick(0, enabled.size() - 1);
    return enabled[pick(rng)];
}

NetworkState random_state(const NetworkSpec& spec, int max_per_queue, std::mt19937_64& rng) {
    NetworkState s = NetworkState::empty(spec.num_queues());
    std::uniform_int_distribution<int> len(0, max_per_queue);
    for (std::size_t j = 0; j < spec.num_queues(); ++j) {
        const auto through = routes_through(spec, static_cast<int>(j));
        if (through.empty()) continue;
        std::uniform_int_distribution<std::size_t> label(0, through.size() - 1);
        const int n = len(rng);
        for (int k = 0; k < n; ++k) push_back_packet(s, static_cast<int>(j), through[label(rng)]);
    }
    return s;
}

BalanceReport balance_check(const NetworkState& state, const NetworkState& successor, const Transition& t,
                            const NetworkSpec& spec, const CapacityPolytope& polytope, PhiCache* cache) {
    if (!compute_loads(spec, polytope).admissible) {
        throw InadmissibleLoad("balance_check: some resource pool has load >= 1");
    }
    check_state(state, spec);
    check_state(successor, spec);
    if (apply_transition(state, t, spec) != successor) {
        throw ValidationError("successor state does not follow from the transition");
    }

    const double lx = log_weight(state, spec, polytope, cache);
    const double ly = log_weight(successor, spec, polytope, cache);
    double forward = 0.0;
    double reverse = 0.0;
    switch (t.kind) {
        case TransitionKind::Arrival:
            // Reversed chain: the new packet is served from the back of its
            // first queue and leaves.
            forward = spec.routes[t.route].rate;
            reverse = service_rate(successor.q, spec.routes[t.route].path.front(), polytope, cache);
            break;
        case TransitionKind::Departure: {
            // Reversed chain: a packet of the route arrives at the front of
            // its last queue.
            forward = service_rate(state.q, t.queue, polytope, cache);
            reverse = spec.routes[state.fifo[t.queue].front()].rate;
            break;
        }
        case TransitionKind::InternalMove: {
            const Route& route = spec.routes[state.fifo[t.queue].front()];
            const int next = route.path[route.hop_of(t.queue) + 1];
            forward = service_rate(state.q, t.queue, polytope, cache);
            reverse = service_rate(successor.q, next, polytope, cache);
            break;
        }
    }

    BalanceReport rep;
    rep.kind = t.kind;
    rep.lhs = std::exp(lx) * forward;
    rep.rhs = std::exp(ly) * reverse;
    rep.residual = relative_gap(rep.lhs, rep.rhs);

    // Global balance at x: outflow rate against the weighted inflow from
    // every predecessor.
    for (const auto& r : spec.routes) rep.total_out += r.rate;
    for (std::size_t j = 0; j < spec.num_queues(); ++j) {
        rep.total_out += service_rate(state.q, static_cast<int>(j), polytope, cache);
    }
    auto inflow = [&](const NetworkState& pred, double rate) {
        rep.total_in += std::exp(log_weight(pred, spec, polytope, cache) - lx) * rate;
    };
    for (std::size_t j = 0; j < spec.num_queues(); ++j) {
        if (state.q[j] == 0) continue;
        const int r = state.fifo[j].back();
        const Route& route = spec.routes[r];
        const int h = route.hop_of(static_cast<int>(j));
        NetworkState pred = state;
        pred.fifo[j].pop_back();
        --pred.q[j];
        if (h == 0) {
            inflow(pred, route.rate);
        } else {
            const int prev = route.path[h - 1];
            pred.fifo[prev].insert(pred.fifo[prev].begin(), r);
            ++pred.q[prev];
            inflow(pred, service_rate(pred.q, prev, polytope, cache));
        }
    }
    for (std::size_t r = 0; r < spec.routes.size(); ++r) {
        const int last = spec.routes[r].path.back();
        NetworkState pred = state;
        pred.fifo[last].insert(pred.fifo[last].begin(), static_cast<int>(r));
        ++pred.q[last];
        inflow(pred, service_rate(pred.q, last, polytope, cache));
    }
    rep.total_residual = relative_gap(rep.total_out, rep.total_in);
    return rep;
}

BalanceReport balance_check(const NetworkState& state, const Transition& t, const NetworkSpec& spec,
                            const CapacityPolytope& polytope, PhiCache* cache) {
    return balance_check(state, apply_transition(state, t, spec), t, spec, polytope, cache);
}

bool share_pool(const CapacityPolytope& polytope, int j, int k) {
    for (std::size_t l = 0; l < polytope.num_pools(); ++l) {
        if (polytope.contains(l, j) && polytope.contains(l, k)) return true;
    }
    return false;
}

IndependenceReport independence_test(const std::vector<QueueVector>& samples, int j, int k,
                                     const CapacityPolytope& polytope,
                                     const IndependenceThresholds& thresholds) {
    const int n = static_cast<int>(polytope.num_queues());
    if (j < 0 || k < 0 || j >= n || k >= n || j == k) {
        throw ValidationError("independence_test needs two distinct queues of the network");
    }
    if (samples.size() < thresholds.min_samples) {
        throw ValidationError("independence_test: insufficient samples (" + std::to_string(samples.size()) +
                              " < " + std::to_string(thresholds.min_samples) + ")");
    }
    IndependenceReport rep;
    rep.first = j;
    rep.second = k;
    rep.shares_pool = share_pool(polytope, j, k);
    rep.samples = samples.size();

    std::vector<double> x(samples.size()), y(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) {
        x[i] = samples[i].at(j);
        y[i] = samples[i].at(k);
    }
    rep.correlation = pearson_correlation(x, y);
    const auto joint = collect_joint(samples, j, k, thresholds.histogram_cap);
    rep.chi_square = chi_square_independence(joint.joint);

    if (rep.chi_square.p_value < thresholds.p_value) {
        rep.verdict = Verdict::Dependent;
    } else if (std::abs(rep.correlation) <= thresholds.correlation) {
        rep.verdict = Verdict::IndependentConsistent;
    } else {
        rep.verdict = Verdict::Inconclusive;
    }
    return rep;
}

void PiecewiseLinearProfile::validate(const std::vector<double>& q, const NetworkSpec& spec) const {
    const std::size_t nq = spec.num_queues();
    const std::size_t nr = spec.routes.size();
    constexpr double tol = 1e-9;
    if (q.size() != nq || breakpoints.size() != nq || gradients.size() != nq) {
        throw ValidationError("profile does not match the number of queues");
    }
    for (std::size_t j = 0; j < nq; ++j) {
        const auto& b = breakpoints[j];
        const std::string where = "profile queue " + std::to_string(j) + ": ";
        if (b.empty() || b.front() != 0.0) throw ValidationError(where + "breakpoints must start at 0");
        if (gradients[j].size() + 1 != b.size()) {
            throw ValidationError(where + "need one gradient per stage");
        }
        for (std::size_t k = 1; k < b.size(); ++k) {
            if (b[k] < b[k - 1]) throw ValidationError(where + "breakpoints decrease");
        }
        if (std::abs(b.back() - q[j]) > tol * std::max(1.0, q[j])) {
            throw ValidationError(where + "last breakpoint differs from Q_j");
        }
        for (const auto& g : gradients[j]) {
            if (g.size() != nr) throw ValidationError(where + "gradient needs one entry per route");
            double sum = 0.0;
            for (std::size_t r = 0; r < nr; ++r) {
                if (!(g[r] >= 0.0)) throw ValidationError(where + "negative gradient");
                if (g[r] > 0.0 && spec.routes[r].hop_of(static_cast<int>(j)) < 0) {
                    throw ValidationError(where + "gradient on a route that avoids the queue");
                }
                sum += g[r];
            }
            if (std::abs(sum - 1.0) > tol) throw ValidationError(where + "stage gradients must sum to 1");
        }
    }
}

PiecewiseLinearProfile uniform_profile(const std::vector<double>& q,
                                       const std::vector<std::vector<double>>& composition) {
    PiecewiseLinearProfile p;
    for (std::size_t j = 0; j < q.size(); ++j) {
        p.breakpoints.push_back({0.0});
        p.gradients.emplace_back();
        if (q[j] > 0.0) {
            p.breakpoints.back().push_back(q[j]);
            p.gradients.back().push_back(composition.at(j));
        }
    }
    return p;
}

PiecewiseLinearProfile profile_from_fifo(const FifoContents& fifo, const NetworkSpec& spec, int stages) {
    if (stages < 1) throw ValidationError("profile needs at least one stage");
    PiecewiseLinearProfile p;
    const std::size_t nr = spec.routes.size();
    for (const auto& queue : fifo) {
        const std::size_t n = queue.size();
        const std::size_t blocks = std::min<std::size_t>(static_cast<std::size_t>(stages), n);
        std::vector<double> bp{0.0};
        std::vector<std::vector<double>> grads;
        std::size_t begin = 0;
        for (std::size_t k = 1; k <= blocks; ++k) {
            const std::size_t end = k * n / blocks;
            std::vector<double> g(nr, 0.0);
            for (std::size_t i = begin; i < end; ++i) g[queue[i]] += 1.0;
            for (double& v : g) v /= static_cast<double>(end - begin);
            bp.push_back(static_cast<double>(end));
            grads.push_back(std::move(g));
            begin = end;
        }
        p.breakpoints.push_back(std::move(bp));
        p.gradients.push_back(std::move(grads));
    }
    return p;
}

double pf_log_objective(const std::vector<double>& q, const CapacityPolytope& polytope) {
    if (std::all_of(q.begin(), q.end(), [](double v) { return v == 0.0; })) return 0.0;
    return pf_solve(q, polytope).objective;
}

double ldp_rate(const std::vector<double>& q, const PiecewiseLinearProfile& profile,
                const NetworkSpec& spec, const CapacityPolytope& polytope) {
    profile.validate(q, spec);
    double rate = -pf_log_objective(q, polytope);
    for (std::size_t j = 0; j < q.size(); ++j) {
        const auto& b = profile.breakpoints[j];
        for (std::size_t k = 0; k + 1 < b.size(); ++k) {
            const double dq = b[k + 1] - b[k];
            if (dq == 0.0) continue;
            for (std::size_t r = 0; r < spec.routes.size(); ++r) {
                const double g = profile.gradients[j][k][r];
                if (g > 0.0) rate += dq * g * std::log(g / spec.routes[r].rate);
            }
        }
    }
    return rate;
}

LogPhiLimit phi_log_limit(const std::vector<double>& q, const CapacityPolytope& polytope,
                          const std::vector<int>& c_list) {
    if (q.size() != polytope.num_queues()) throw ValidationError("Q does not match the polytope");
    LogPhiLimit out;
    out.target = -pf_log_objective(q, polytope);
    for (int c : c_list) {
        if (c < 1) throw ValidationError("scale factors must be positive");
        QueueVector scaled(q.size());
        for (std::size_t j = 0; j < q.size(); ++j) {
            const double v = c * q[j];
            if (v < 0.0 || std::abs(v - std::round(v)) > 1e-9) {
                throw ValidationError("c * Q must be a nonnegative integer vector");
            }
            scaled[j] = static_cast<int>(std::lround(v));
        }
        const double value = log_phi(scaled, polytope) / c;
        out.c.push_back(c);
        out.values.push_back(value);
        out.gaps.push_back(std::abs(value - out.target));
    }
    for (std::size_t i = 1; i < out.gaps.size(); ++i) {
        if (out.gaps[i] > out.gaps[i - 1] + 1e-12) out.non_increasing = false;
    }
    if (!out.gaps.empty()) out.last_gap = out.gaps.back();
    return out;
}

LyapunovDrift lyapunov_drift(const TraceMetrics& trace, const NetworkSpec& spec,
                             const CapacityPolytope& polytope, int stages) {
    LyapunovDrift out;
    for (const auto& s : trace.snapshots) {
        if (s.fifo.size() != spec.num_queues()) continue;
        std::vector<double> q(s.q.begin(), s.q.end());
        out.times.push_back(s.time);
        out.values.push_back(ldp_rate(q, profile_from_fifo(s.fifo, spec, stages), spec, polytope));
    }
    if (out.values.empty()) throw ValidationError("trace lacks composition snapshots");
    out.slope = least_squares_slope(out.times, out.values);
    out.slope_se = least_squares_slope_se(out.times, out.values);
    return out;
}

}  // namespace switchnet
