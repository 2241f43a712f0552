#include "switchnet/config.hpp"

#include <fstream>
#include <sstream>

#include "switchnet/errors.hpp"
#include "switchnet/examples.hpp"

namespace switchnet {

using nlohmann::json;

const char* to_string(ExperimentKind kind) {
    switch (kind) {
        case ExperimentKind::Analyze: return "analyze";
        case ExperimentKind::Simulate: return "simulate";
        case ExperimentKind::Compare: return "compare";
        case ExperimentKind::Independence: return "independence";
        case ExperimentKind::Ldp: return "ldp";
        case ExperimentKind::Balance: return "balance";
    }
    return "?";
}

ExperimentKind parse_kind(const std::string& name) {
    for (auto k : {ExperimentKind::Analyze, ExperimentKind::Simulate, ExperimentKind::Compare,
                   ExperimentKind::Independence, ExperimentKind::Ldp, ExperimentKind::Balance}) {
        if (name == to_string(k)) return k;
    }
    throw ValidationError("kind: unknown experiment kind '" + name + "'");
}

const char* to_string(SimulatorKind kind) {
    switch (kind) {
        case SimulatorKind::StoreForward: return "sf";
        case SimulatorKind::Proportional: return "ps";
        case SimulatorKind::BackPressure: return "bp";
    }
    return "?";
}

namespace {

const json& require(const json& j, const std::string& key, const std::string& path) {
    if (!j.is_object() || !j.contains(key)) throw ValidationError(path + key + ": missing");
    return j.at(key);
}

template <class T>
T read(const json& j, const std::string& path) {
    try {
        return j.get<T>();
    } catch (const json::exception&) {
        throw ValidationError(path + ": wrong type (" + std::string(j.type_name()) + ")");
    }
}

template <class T>
T read_or(const json& j, const std::string& key, const std::string& path, T fallback) {
    if (!j.is_object() || !j.contains(key)) return fallback;
    return read<T>(j.at(key), path + key);
}

int queue_ref(const json& j, const NetworkSpec& spec, const std::string& path) {
    if (j.is_number_integer()) {
        const int idx = j.get<int>();
        if (idx < 0 || idx >= static_cast<int>(spec.num_queues())) {
            throw ValidationError(path + ": queue index out of range");
        }
        return idx;
    }
    const auto name = read<std::string>(j, path);
    const int idx = spec.queue_index(name);
    if (idx < 0) throw ValidationError(path + ": unknown queue '" + name + "'");
    return idx;
}

std::vector<std::pair<int, int>> read_pairs(const json& j, const NetworkSpec& spec, const std::string& path) {
    std::vector<std::pair<int, int>> out;
    if (!j.is_array()) throw ValidationError(path + ": expected a list of queue pairs");
    for (std::size_t i = 0; i < j.size(); ++i) {
        const std::string p = path + "[" + std::to_string(i) + "]";
        if (!j[i].is_array() || j[i].size() != 2) throw ValidationError(p + ": expected two queues");
        out.emplace_back(queue_ref(j[i][0], spec, p + "[0]"), queue_ref(j[i][1], spec, p + "[1]"));
    }
    return out;
}

Capacity parse_capacity(const json& cap, const NetworkSpec& spec) {
    const std::string path = "network.capacity.";
    if (!cap.is_object()) throw ValidationError("network.capacity: expected an object");
    const int present = static_cast<int>(cap.contains("matrix")) + static_cast<int>(cap.contains("graph")) +
                        static_cast<int>(cap.contains("schedules"));
    if (present != 1) {
        throw ValidationError("network.capacity: give exactly one of matrix, graph, schedules");
    }
    if (cap.contains("matrix")) {
        auto rows = read<std::vector<std::vector<double>>>(cap.at("matrix"), path + "matrix");
        for (std::size_t l = 0; l < rows.size(); ++l) {
            if (rows[l].size() != spec.num_queues()) {
                throw ValidationError(path + "matrix[" + std::to_string(l) + "]: expected " +
                                      std::to_string(spec.num_queues()) + " entries");
            }
        }
        auto labels = read_or<std::vector<std::string>>(cap, "pools", path, {});
        return CapacityPolytope(std::move(rows), std::move(labels));
    }
    if (cap.contains("graph")) {
        return InterferenceGraph(static_cast<int>(spec.num_queues()),
                                 read_pairs(cap.at("graph"), spec, path + "graph"));
    }
    auto s = read<ScheduleSet>(cap.at("schedules"), path + "schedules");
    for (std::size_t k = 0; k < s.size(); ++k) {
        if (s[k].size() != spec.num_queues()) {
            throw ValidationError(path + "schedules[" + std::to_string(k) + "]: expected " +
                                  std::to_string(spec.num_queues()) + " entries");
        }
    }
    return ExplicitSchedules{std::move(s)};
}

}  // namespace

NetworkSpec parse_network(const json& j) {
    if (j.is_string()) {
        const auto ref = j.get<std::string>();
        const std::string prefix = "builtin:";
        if (ref.rfind(prefix, 0) != 0) throw ValidationError("network: expected builtin:<name> or an object");
        return example_network(ref.substr(prefix.size()));
    }
    NetworkSpec spec;
    spec.name = read_or<std::string>(j, "name", "network.", "network");
    spec.queues = read<std::vector<std::string>>(require(j, "queues", "network."), "network.queues");
    const json& routes = require(j, "routes", "network.");
    if (!routes.is_array()) throw ValidationError("network.routes: expected a list");
    for (std::size_t i = 0; i < routes.size(); ++i) {
        const std::string p = "routes[" + std::to_string(i) + "].";
        Route r;
        r.id = read_or<std::string>(routes[i], "id", p, "r" + std::to_string(i + 1));
        const json& path = require(routes[i], "path", p);
        if (!path.is_array()) throw ValidationError(p + "path: expected a list of queues");
        for (std::size_t h = 0; h < path.size(); ++h) {
            r.path.push_back(queue_ref(path[h], spec, p + "path[" + std::to_string(h) + "]"));
        }
        r.rate = read<double>(require(routes[i], "rate", p), p + "rate");
        spec.routes.push_back(std::move(r));
    }
    spec.capacity = parse_capacity(require(j, "capacity", "network."), spec);
    spec.validate();
    return spec;
}

void apply_override(json& doc, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0) {
        throw ValidationError("override '" + assignment + "': expected key=value");
    }
    const std::string key = assignment.substr(0, eq);
    const std::string text = assignment.substr(eq + 1);
    json value = json::parse(text, nullptr, false);
    if (value.is_discarded()) value = text;

    json* node = &doc;
    std::stringstream parts(key);
    std::string part;
    std::vector<std::string> path;
    while (std::getline(parts, part, '.')) path.push_back(part);
    for (std::size_t i = 0; i + 1 < path.size(); ++i) {
        if (!node->is_object()) throw ValidationError("override '" + key + "': " + path[i] + " is not an object");
        node = &(*node)[path[i]];
        if (node->is_null()) *node = json::object();
    }
    if (!node->is_object()) throw ValidationError("override '" + key + "': parent is not an object");
    (*node)[path.back()] = value;
}

ExperimentConfig parse_config(const json& doc) {
    if (!doc.is_object()) throw ValidationError("config: expected a JSON object");
    ExperimentConfig cfg;
    cfg.kind = parse_kind(read<std::string>(require(doc, "kind", ""), "kind"));
    cfg.network = parse_network(require(doc, "network", ""));
    cfg.network_ref = doc.at("network").is_string() ? doc.at("network").get<std::string>() : "inline";
    if (doc.contains("load")) cfg.network = scale_to_load(cfg.network, read<double>(doc.at("load"), "load"));

    if (doc.contains("seeds")) {
        const json& s = doc.at("seeds");
        cfg.seeds = s.is_array() ? read<std::vector<std::uint64_t>>(s, "seeds")
                                 : std::vector<std::uint64_t>{read<std::uint64_t>(s, "seeds")};
        if (cfg.seeds.empty()) throw ValidationError("seeds: list must not be empty");
    }
    cfg.out_dir = read_or<std::string>(doc, "out", "", cfg.out_dir);

    const json sim = doc.value("simulator", json::object());
    const std::string sp = "simulator.";
    const auto sim_kind = read_or<std::string>(sim, "kind", sp, "sf");
    if (sim_kind == "sf") {
        cfg.simulator = SimulatorKind::StoreForward;
    } else if (sim_kind == "ps") {
        cfg.simulator = SimulatorKind::Proportional;
    } else if (sim_kind == "bp") {
        cfg.simulator = SimulatorKind::BackPressure;
    } else {
        throw ValidationError("simulator.kind: expected sf, ps or bp");
    }
    cfg.sim.horizon = read_or<double>(sim, "horizon", sp, cfg.sim.horizon);
    cfg.sim.warmup_fraction = read_or<double>(sim, "warmup", sp, cfg.sim.warmup_fraction);
    cfg.sim.batches = read_or<int>(sim, "batches", sp, cfg.sim.batches);
    cfg.sim.histogram_cap = read_or<int>(sim, "histogram_cap", sp, cfg.sim.histogram_cap);
    cfg.sim.snapshot_interval = read_or<double>(sim, "snapshot_interval", sp, cfg.sim.snapshot_interval);
    cfg.sim.snapshot_fifo = read_or<bool>(sim, "snapshot_fifo", sp, cfg.sim.snapshot_fifo);
    cfg.sim.initial_packets = read_or<std::vector<int>>(sim, "initial_packets", sp, {});
    const auto arrivals = read_or<std::string>(sim, "arrivals", sp, "poisson");
    if (arrivals == "poisson") {
        cfg.sim.arrivals = SlotArrivals::Poisson;
    } else if (arrivals == "bernoulli") {
        cfg.sim.arrivals = SlotArrivals::Bernoulli;
    } else {
        throw ValidationError("simulator.arrivals: expected poisson or bernoulli");
    }
    if (sim.contains("pairs")) cfg.sim.joint_pairs = read_pairs(sim.at("pairs"), cfg.network, sp + "pairs");
    cfg.sim.validate();

    const json ind = doc.value("independence", json::object());
    const std::string ip = "independence.";
    cfg.source = read_or<std::string>(ind, "source", ip, cfg.source);
    if (cfg.source != "exact" && cfg.source != "ctmc") {
        throw ValidationError("independence.source: expected exact or ctmc");
    }
    cfg.samples = read_or<std::size_t>(ind, "samples", ip, cfg.samples);
    if (ind.contains("pairs")) cfg.pairs = read_pairs(ind.at("pairs"), cfg.network, ip + "pairs");
    cfg.thresholds.p_value = read_or<double>(ind, "p_value", ip, cfg.thresholds.p_value);
    cfg.thresholds.correlation = read_or<double>(ind, "correlation", ip, cfg.thresholds.correlation);
    cfg.thresholds.min_samples = read_or<std::size_t>(ind, "min_samples", ip, cfg.thresholds.min_samples);
    cfg.thresholds.histogram_cap = cfg.sim.histogram_cap;

    const json ldp = doc.value("ldp", json::object());
    cfg.q = read_or<std::vector<double>>(ldp, "q", "ldp.", {});
    cfg.c_list = read_or<std::vector<int>>(ldp, "c", "ldp.", cfg.c_list);
    if (cfg.kind == ExperimentKind::Ldp) {
        if (cfg.q.size() != cfg.network.num_queues()) {
            throw ValidationError("ldp.q: expected " + std::to_string(cfg.network.num_queues()) + " entries");
        }
        if (cfg.c_list.empty()) throw ValidationError("ldp.c: list must not be empty");
    }

    const json bal = doc.value("balance", json::object());
    cfg.balance_checks = read_or<int>(bal, "checks", "balance.", cfg.balance_checks);
    cfg.balance_max_queue = read_or<int>(bal, "max_queue", "balance.", cfg.balance_max_queue);
    if (cfg.balance_checks < 1 || cfg.balance_max_queue < 0) {
        throw ValidationError("balance: checks must be positive and max_queue nonnegative");
    }

    cfg.effective = doc;
    return cfg;
}

json load_config_document(const std::string& path) {
    const std::string prefix = "builtin:";
    if (path.rfind(prefix, 0) == 0) return json{{"network", path}};
    std::ifstream in(path);
    if (!in) throw ValidationError("config: cannot open '" + path + "'");
    json doc = json::parse(in, nullptr, false);
    if (doc.is_discarded()) throw ValidationError("config: '" + path + "' is not valid JSON");
    return doc;
}

}  // namespace switchnet
