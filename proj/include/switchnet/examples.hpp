#pragma once

// Built-in networks: the interference-graph topologies (complete bipartite,
// square grid, triangular grid, odd cycle) and small teaching networks.

#include <optional>
#include <string>
#include <vector>

#include "switchnet/network.hpp"

namespace switchnet {

struct ExampleInfo {
    std::string name;
    std::string description;
    std::optional<bool> perfect;  // set for graph-based examples
};

std::vector<ExampleInfo> list_examples();

/// Throws ValidationError for an unknown name.
NetworkSpec example_network(const std::string& name);

/// Copy of spec with every rate scaled so the busiest pool has load `target`.
NetworkSpec scale_to_load(const NetworkSpec& spec, double target);

}  // namespace switchnet
