#include "switchnet/harness.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <thread>

#include "switchnet/analysis.hpp"
#include "switchnet/errors.hpp"
#include "switchnet/propfair.hpp"
#include "switchnet/store_forward.hpp"

namespace switchnet {

using nlohmann::json;

std::string format_number(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

std::string ResultBundle::csv() const {
    std::string out = "name,id,value,stderr,n\n";
    for (const auto& r : rows) {
        out += r.name + ',' + r.id + ',' + format_number(r.value) + ',' + format_number(r.std_error) + ',' +
               std::to_string(r.n) + '\n';
    }
    return out;
}

std::string config_hash(const json& doc) {
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char c : doc.dump()) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::size_t worker_count(std::size_t jobs) {
    std::size_t n = std::max(1u, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("SWITCHNET_THREADS")) {
        const long v = std::strtol(env, nullptr, 10);
        if (v > 0) n = static_cast<std::size_t>(v);
    }
    return std::max<std::size_t>(1, std::min(n, jobs));
}

namespace {

// Runs job(i) for i < count on a bounded pool; results land in slot i.
template <class T, class F>
std::vector<T> fan_out(std::size_t count, F job) {
    std::vector<T> out(count);
    std::vector<std::exception_ptr> errors(count);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < count; i = next++) {
            try {
                out[i] = job(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    const std::size_t n = worker_count(count);
    std::vector<std::thread> pool;
    for (std::size_t t = 1; t < n; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
    return out;
}

std::vector<std::uint64_t> sorted_seeds(const ExperimentConfig& cfg) {
    auto s = cfg.seeds;
    std::sort(s.begin(), s.end());
    return s;
}

TraceMetrics simulate_once(const ExperimentConfig& cfg, std::uint64_t seed) {
    SimConfig sim = cfg.sim;
    sim.seed = seed;
    switch (cfg.simulator) {
        case SimulatorKind::StoreForward:
            return simulate_sf_ctmc(cfg.network, polytope_of(cfg.network), sim);
        case SimulatorKind::Proportional:
            return simulate_ps(cfg.network, polytope_of(cfg.network), schedules_of(cfg.network), sim);
        case SimulatorKind::BackPressure:
            return simulate_bp(cfg.network, schedules_of(cfg.network), sim);
    }
    throw ValidationError("unknown simulator");
}

// Pools replications: mean of means, standard error of that mean.
Estimate pool_estimates(const std::vector<Estimate>& xs) {
    Estimate e;
    double var = 0.0;
    for (const auto& x : xs) {
        e.mean += x.mean;
        var += x.std_error * x.std_error;
        e.n += x.n;
    }
    e.mean /= static_cast<double>(xs.size());
    e.std_error = std::sqrt(var) / static_cast<double>(xs.size());
    return e;
}

struct Pooled {
    std::vector<Estimate> queue_mean, route_content, sojourn;
    std::uint64_t admitted = 0, departed = 0, in_system = 0, events = 0;
    bool transient = false;
    json per_seed = json::array();
};

Pooled run_simulations(const ExperimentConfig& cfg) {
    const auto seeds = sorted_seeds(cfg);
    auto traces = fan_out<TraceMetrics>(seeds.size(), [&](std::size_t i) { return simulate_once(cfg, seeds[i]); });
    Pooled p;
    auto pool_field = [&](auto member, std::size_t dims) {
        std::vector<Estimate> out;
        for (std::size_t d = 0; d < dims; ++d) {
            std::vector<Estimate> xs;
            for (const auto& t : traces) xs.push_back((t.*member)[d]);
            out.push_back(pool_estimates(xs));
        }
        return out;
    };
    p.queue_mean = pool_field(&TraceMetrics::queue_mean, cfg.network.num_queues());
    p.route_content = pool_field(&TraceMetrics::route_content, cfg.network.routes.size());
    p.sojourn = pool_field(&TraceMetrics::sojourn, cfg.network.routes.size());
    for (std::size_t i = 0; i < traces.size(); ++i) {
        const auto& t = traces[i];
        p.admitted += t.admitted;
        p.departed += t.departed;
        p.in_system += t.in_system;
        p.events += t.events;
        p.transient = p.transient || t.transient;
        json comp = json::object();
        for (std::size_t j = 0; j < t.composition.size(); ++j) {
            comp[cfg.network.queues[j]] = t.composition[j];
        }
        p.per_seed.push_back({{"seed", seeds[i]},
                              {"admitted", t.admitted},
                              {"departed", t.departed},
                              {"in_system", t.in_system},
                              {"events", t.events},
                              {"observed_time", t.observed_time},
                              {"composition", comp}});
    }
    return p;
}

void simulation_rows(const ExperimentConfig& cfg, const Pooled& p, ResultBundle& b, const std::string& suffix) {
    const auto& net = cfg.network;
    for (std::size_t j = 0; j < net.num_queues(); ++j) {
        const auto& e = p.queue_mean[j];
        b.rows.push_back({"queue_mean" + suffix, net.queues[j], e.mean, e.std_error, e.n});
    }
    for (std::size_t r = 0; r < net.routes.size(); ++r) {
        const auto& e = p.route_content[r];
        b.rows.push_back({"route_content" + suffix, net.routes[r].id, e.mean, e.std_error, e.n});
    }
    for (std::size_t r = 0; r < net.routes.size(); ++r) {
        const auto& e = p.sojourn[r];
        b.rows.push_back({"sojourn" + suffix, net.routes[r].id, e.mean, e.std_error, e.n});
    }
}

void run_analyze(const ExperimentConfig& cfg, ResultBundle& b) {
    const auto& net = cfg.network;
    const auto polytope = polytope_of(net);
    const auto loads = compute_loads(net, polytope);
    for (std::size_t j = 0; j < net.num_queues(); ++j) {
        b.rows.push_back({"queue_load", net.queues[j], loads.queue_load[j], 0.0, 0});
    }
    for (std::size_t l = 0; l < polytope.num_pools(); ++l) {
        b.rows.push_back({"pool_load", polytope.labels()[l], loads.pool_load[l], 0.0, 0});
    }
    json& res = b.summary["results"];
    res["admissible"] = loads.admissible;
    res["full_row_rank"] = polytope.has_full_row_rank();
    if (const auto* g = std::get_if<InterferenceGraph>(&net.capacity)) res["perfect"] = is_perfect(*g);
    if (!loads.admissible) {
        res["note"] = "some pool has load >= 1; no stationary distribution";
        return;
    }
    for (std::size_t j = 0; j < net.num_queues(); ++j) {
        const double v = expected_queue_length(static_cast<int>(j), net, polytope);
        b.rows.push_back({"EQ", net.queues[j], v, 0.0, 0});
        res["EQ"][net.queues[j]] = v;
    }
    for (std::size_t r = 0; r < net.routes.size(); ++r) {
        const double v = expected_delay(static_cast<int>(r), net, polytope);
        b.rows.push_back({"ED", net.routes[r].id, v, 0.0, 0});
        res["ED"][net.routes[r].id] = v;
    }
}

void run_simulate(const ExperimentConfig& cfg, ResultBundle& b) {
    const auto p = run_simulations(cfg);
    simulation_rows(cfg, p, b, "");
    json& res = b.summary["results"];
    res["simulator"] = to_string(cfg.simulator);
    res["transient"] = p.transient;
    res["admitted"] = p.admitted;
    res["departed"] = p.departed;
    res["in_system"] = p.in_system;
    res["conserved"] = p.admitted == p.departed + p.in_system;
    res["replications"] = p.per_seed;
}

void run_compare(const ExperimentConfig& cfg, ResultBundle& b) {
    const auto& net = cfg.network;
    const auto polytope = polytope_of(net);
    if (!compute_loads(net, polytope).admissible) {
        throw InadmissibleLoad("compare: some resource pool has load >= 1, no analytic values exist");
    }
    const auto p = run_simulations(cfg);
    json& res = b.summary["results"];
    res["simulator"] = to_string(cfg.simulator);
    auto z = [](double analytic, const Estimate& e) {
        return e.std_error > 0.0 ? (e.mean - analytic) / e.std_error : 0.0;
    };
    for (std::size_t j = 0; j < net.num_queues(); ++j) {
        const double a = expected_queue_length(static_cast<int>(j), net, polytope);
        const auto& e = p.queue_mean[j];
        b.rows.push_back({"EQ_analytic", net.queues[j], a, 0.0, 0});
        b.rows.push_back({"EQ_simulated", net.queues[j], e.mean, e.std_error, e.n});
        res["EQ"][net.queues[j]] = {{"analytic", a}, {"simulated", e.mean}, {"stderr", e.std_error},
                                    {"z", z(a, e)}};
    }
    for (std::size_t r = 0; r < net.routes.size(); ++r) {
        const double a = expected_delay(static_cast<int>(r), net, polytope);
        const auto& e = p.sojourn[r];
        b.rows.push_back({"ED_analytic", net.routes[r].id, a, 0.0, 0});
        b.rows.push_back({"ED_simulated", net.routes[r].id, e.mean, e.std_error, e.n});
        res["ED"][net.routes[r].id] = {{"analytic", a}, {"simulated", e.mean}, {"stderr", e.std_error},
                                       {"z", z(a, e)}};
    }
    res["conserved"] = p.admitted == p.departed + p.in_system;
}

std::vector<QueueVector> draw_samples(const ExperimentConfig& cfg, const CapacityPolytope& polytope,
                                      std::uint64_t seed) {
    std::vector<QueueVector> samples;
    if (cfg.source == "exact") {
        ExactSampler sampler(cfg.network, polytope, seed);
        samples.reserve(cfg.samples);
        for (std::size_t i = 0; i < cfg.samples; ++i) samples.push_back(sampler.draw_queue_lengths());
        return samples;
    }
    SimConfig sim = cfg.sim;
    sim.seed = seed;
    sim.snapshot_interval = sim.horizon * (1.0 - sim.warmup_fraction) / static_cast<double>(cfg.samples);
    sim.snapshot_fifo = false;
    auto trace = simulate_sf_ctmc(cfg.network, polytope, sim);
    for (auto& s : trace.snapshots) samples.push_back(std::move(s.q));
    return samples;
}

void run_independence(const ExperimentConfig& cfg, ResultBundle& b) {
    const auto& net = cfg.network;
    const auto polytope = polytope_of(net);
    const auto seeds = sorted_seeds(cfg);
    auto batches = fan_out<std::vector<QueueVector>>(
        seeds.size(), [&](std::size_t i) { return draw_samples(cfg, polytope, seeds[i]); });
    std::vector<QueueVector> samples;
    for (auto& batch : batches) samples.insert(samples.end(), batch.begin(), batch.end());

    auto pairs = cfg.pairs;
    if (pairs.empty()) {
        for (int j = 0; j < static_cast<int>(net.num_queues()); ++j) {
            for (int k = j + 1; k < static_cast<int>(net.num_queues()); ++k) pairs.emplace_back(j, k);
        }
    }
    json reports = json::array();
    for (auto [j, k] : pairs) {
        const auto rep = independence_test(samples, j, k, polytope, cfg.thresholds);
        const std::string id = net.queues[j] + "~" + net.queues[k];
        b.rows.push_back({"correlation", id, rep.correlation, 0.0, rep.samples});
        b.rows.push_back({"chi_square", id, rep.chi_square.statistic, 0.0, static_cast<std::size_t>(rep.chi_square.dof)});
        b.rows.push_back({"p_value", id, rep.chi_square.p_value, 0.0, rep.samples});
        reports.push_back({{"pair", {net.queues[j], net.queues[k]}},
                           {"shares_pool", rep.shares_pool},
                           {"correlation", rep.correlation},
                           {"chi_square", rep.chi_square.statistic},
                           {"dof", rep.chi_square.dof},
                           {"p_value", rep.chi_square.p_value},
                           {"verdict", to_string(rep.verdict)}});
    }
    b.summary["results"]["source"] = cfg.source;
    b.summary["results"]["samples"] = samples.size();
    b.summary["results"]["pairs"] = reports;
}

void run_ldp(const ExperimentConfig& cfg, ResultBundle& b) {
    const auto& net = cfg.network;
    const auto polytope = polytope_of(net);
    const auto lim = phi_log_limit(cfg.q, polytope, cfg.c_list);
    for (std::size_t i = 0; i < lim.c.size(); ++i) {
        const std::string id = "c=" + std::to_string(lim.c[i]);
        b.rows.push_back({"scaled_log_phi", id, lim.values[i], 0.0, 0});
        b.rows.push_back({"gap", id, lim.gaps[i], 0.0, 0});
    }
    b.rows.push_back({"pf_target", "-", lim.target, 0.0, 0});
    json& res = b.summary["results"];
    res["q"] = cfg.q;
    res["target"] = lim.target;
    res["values"] = lim.values;
    res["gaps"] = lim.gaps;
    res["last_gap"] = lim.last_gap;
    res["gaps_non_increasing"] = lim.non_increasing;

    // Rate at the stationary composition a_r / a_j.
    const auto loads = compute_loads(net, polytope);
    std::vector<std::vector<double>> comp(net.num_queues(), std::vector<double>(net.routes.size(), 0.0));
    for (std::size_t j = 0; j < net.num_queues(); ++j) {
        for (int r : routes_through(net, static_cast<int>(j))) {
            comp[j][r] = net.routes[r].rate / loads.queue_load[j];
        }
    }
    const double rate = ldp_rate(cfg.q, uniform_profile(cfg.q, comp), net, polytope);
    b.rows.push_back({"ldp_rate", "stationary-composition", rate, 0.0, 0});
    res["ldp_rate_stationary_composition"] = rate;
}

void run_balance(const ExperimentConfig& cfg, ResultBundle& b) {
    const auto& net = cfg.network;
    const auto polytope = polytope_of(net);
    std::mt19937_64 rng(sorted_seeds(cfg).front());
    PhiCache cache;
    double worst[3] = {0.0, 0.0, 0.0};
    std::size_t count[3] = {0, 0, 0};
    double worst_total = 0.0;
    for (int i = 0; i < cfg.balance_checks; ++i) {
        const auto state = random_state(net, cfg.balance_max_queue, rng);
        const auto t = random_transition(state, net, rng);
        const auto rep = balance_check(state, t, net, polytope, &cache);
        const auto k = static_cast<std::size_t>(t.kind);
        worst[k] = std::max(worst[k], rep.residual);
        ++count[k];
        worst_total = std::max(worst_total, rep.total_residual);
    }
    json& res = b.summary["results"];
    for (auto kind : {TransitionKind::Arrival, TransitionKind::Departure, TransitionKind::InternalMove}) {
        const auto k = static_cast<std::size_t>(kind);
        b.rows.push_back({"max_residual", to_string(kind), worst[k], 0.0, count[k]});
        res["max_residual"][to_string(kind)] = worst[k];
    }
    b.rows.push_back({"max_total_rate_residual", "-", worst_total, 0.0,
                      static_cast<std::size_t>(cfg.balance_checks)});
    res["max_total_rate_residual"] = worst_total;
    res["checks"] = cfg.balance_checks;
}

}  // namespace

ResultBundle run(const ExperimentConfig& cfg) {
    ResultBundle b;
    b.summary["kind"] = to_string(cfg.kind);
    b.summary["network"] = {{"name", cfg.network.name}, {"ref", cfg.network_ref}};
    b.summary["provenance"] = {{"config_hash", config_hash(cfg.effective)},
                               {"seeds", sorted_seeds(cfg)},
                               {"tool_version", kToolVersion},
                               {"kind", to_string(cfg.kind)},
                               {"config", cfg.effective}};
    b.summary["results"] = json::object();
    switch (cfg.kind) {
        case ExperimentKind::Analyze: run_analyze(cfg, b); break;
        case ExperimentKind::Simulate: run_simulate(cfg, b); break;
        case ExperimentKind::Compare: run_compare(cfg, b); break;
        case ExperimentKind::Independence: run_independence(cfg, b); break;
        case ExperimentKind::Ldp: run_ldp(cfg, b); break;
        case ExperimentKind::Balance: run_balance(cfg, b); break;
    }
    return b;
}

void write_bundle(const ResultBundle& bundle, const std::string& dir) {
    std::filesystem::create_directories(dir);
    const auto base = std::filesystem::path(dir);
    {
        std::ofstream csv(base / "metrics.csv", std::ios::binary);
        csv << bundle.csv();
        if (!csv) throw std::runtime_error("cannot write " + (base / "metrics.csv").string());
    }
    std::ofstream js(base / "summary.json", std::ios::binary);
    js << bundle.summary.dump(2) << '\n';
    if (!js) throw std::runtime_error("cannot write " + (base / "summary.json").string());
}

}  // namespace switchnet
