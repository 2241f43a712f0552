#include "switchnet/examples.hpp"

#include <algorithm>
#include <functional>
#include <map>

#include "switchnet/errors.hpp"

namespace switchnet {

namespace {

std::vector<std::string> names(int n) {
    std::vector<std::string> q;
    for (int i = 1; i <= n; ++i) q.push_back("q" + std::to_string(i));
    return q;
}

// One single-hop route per queue.
std::vector<Route> local_routes(int n, double rate) {
    std::vector<Route> r;
    for (int i = 0; i < n; ++i) r.push_back({"r" + std::to_string(i + 1), {i}, rate});
    return r;
}

CapacityPolytope identity(int n) {
    std::vector<std::vector<double>> a(n, std::vector<double>(n, 0.0));
    for (int i = 0; i < n; ++i) a[i][i] = 1.0;
    return CapacityPolytope(a);
}

CapacityPolytope matrix(std::vector<std::vector<double>> a) {
    return CapacityPolytope(std::move(a));
}

NetworkSpec graph_network(const std::string& name, int n, std::vector<std::pair<int, int>> edges,
                          double rate) {
    return {name, names(n), local_routes(n, rate), InterferenceGraph(n, edges)};
}

std::vector<std::pair<int, int>> grid_edges(int rows, int cols, bool diagonals) {
    std::vector<std::pair<int, int>> e;
    auto id = [cols](int i, int j) { return i * cols + j; };
    for (int i = 0; i < rows; ++i) {
        for (int j = 0; j < cols; ++j) {
            if (j + 1 < cols) e.emplace_back(id(i, j), id(i, j + 1));
            if (i + 1 < rows) e.emplace_back(id(i, j), id(i + 1, j));
            if (diagonals && i + 1 < rows && j + 1 < cols) e.emplace_back(id(i, j), id(i + 1, j + 1));
        }
    }
    return e;
}

struct Entry {
    std::string description;
    std::function<NetworkSpec()> build;
};

const std::map<std::string, Entry>& registry() {
    static const std::map<std::string, Entry> table = {
        {"mm1", {"single queue, A = [1], a = 0.5",
                 [] { return NetworkSpec{"mm1", names(1), {{"r1", {0}, 0.5}}, matrix({{1.0}})}; }}},
        {"tandem", {"two non-interfering queues in series, one route at rate 0.5",
                    [] { return NetworkSpec{"tandem", names(2), {{"r1", {0, 1}, 0.5}}, identity(2)}; }}},
        {"tandem4", {"four non-interfering queues in series, one route at rate 0.8",
                     [] { return NetworkSpec{"tandem4", names(4), {{"r1", {0, 1, 2, 3}, 0.8}}, identity(4)}; }}},
        {"single-pool", {"two queues sharing one pool, local routes at 0.2 and 0.3",
                         [] {
                             return NetworkSpec{"single-pool", names(2), {{"r1", {0}, 0.2}, {"r2", {1}, 0.3}},
                                                matrix({{1.0, 1.0}})};
                         }}},
        {"single-pool-route", {"two queues sharing one pool, one route through both at 0.3",
                               [] {
                                   return NetworkSpec{"single-pool-route", names(2), {{"r1", {0, 1}, 0.3}},
                                                      matrix({{1.0, 1.0}})};
                               }}},
        {"two-route", {"tandem whose second queue also carries a local route",
                       [] {
                           return NetworkSpec{"two-route", names(2), {{"r1", {0, 1}, 0.2}, {"r2", {1}, 0.3}},
                                              identity(2)};
                       }}},
        {"one-edge", {"interference graph with a single edge, local routes at 0.3",
                      [] { return graph_network("one-edge", 2, {{0, 1}}, 0.3); }}},
        {"k22", {"complete bipartite interference graph K(2,2) (input-queued switch)",
                 [] { return graph_network("k22", 4, {{0, 2}, {0, 3}, {1, 2}, {1, 3}}, 0.2); }}},
        {"four-cycle", {"interference graph q1-q2-q3-q4-q1",
                        [] { return graph_network("four-cycle", 4, {{0, 1}, {1, 2}, {2, 3}, {0, 3}}, 0.2); }}},
        {"square-grid", {"3x3 square grid interference graph",
                         [] { return graph_network("square-grid", 9, grid_edges(3, 3, false), 0.15); }}},
        {"triangular-grid", {"2x3 triangulated grid interference graph",
                             [] { return graph_network("triangular-grid", 6, grid_edges(2, 3, true), 0.1); }}},
        {"odd-cycle-5", {"5-cycle interference graph (not perfect)",
                         [] {
                             return graph_network("odd-cycle-5", 5, {{0, 1}, {1, 2}, {2, 3}, {3, 4}, {0, 4}}, 0.2);
                         }}},
    };
    return table;
}

}  // namespace

std::vector<ExampleInfo> list_examples() {
    std::vector<ExampleInfo> out;
    for (const auto& [name, entry] : registry()) {
        ExampleInfo info{name, entry.description, std::nullopt};
        const NetworkSpec spec = entry.build();
        if (const auto* g = std::get_if<InterferenceGraph>(&spec.capacity)) info.perfect = is_perfect(*g);
        out.push_back(std::move(info));
    }
    return out;
}

NetworkSpec example_network(const std::string& name) {
    const auto& table = registry();
    auto it = table.find(name);
    if (it == table.end()) {
        std::string known;
        for (const auto& [n, e] : table) known += (known.empty() ? "" : ", ") + n;
        throw ValidationError("unknown example '" + name + "' (known: " + known + ")");
    }
    return it->second.build();
}

NetworkSpec scale_to_load(const NetworkSpec& spec, double target) {
    if (!(target > 0.0)) throw ValidationError("target load must be positive");
    const auto loads = compute_loads(spec, polytope_of(spec));
    const double peak = *std::max_element(loads.pool_load.begin(), loads.pool_load.end());
    NetworkSpec out = spec;
    for (auto& r : out.routes) r.rate *= target / peak;
    return out;
}

}  // namespace switchnet
