#pragma once

// JSON experiment configuration: network description, experiment kind and
// its settings. Numbers are parsed without locale dependence.

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "switchnet/analysis.hpp"
#include "switchnet/network.hpp"
#include "switchnet/simulators.hpp"

namespace switchnet {

enum class ExperimentKind { Analyze, Simulate, Compare, Independence, Ldp, Balance };

const char* to_string(ExperimentKind kind);
/// Throws ValidationError for an unknown name.
ExperimentKind parse_kind(const std::string& name);

enum class SimulatorKind { StoreForward, Proportional, BackPressure };

const char* to_string(SimulatorKind kind);

struct ExperimentConfig {
    ExperimentKind kind = ExperimentKind::Analyze;
    NetworkSpec network;
    std::string network_ref;  // "builtin:<name>" or "inline"

    SimulatorKind simulator = SimulatorKind::StoreForward;
    SimConfig sim;
    std::vector<std::uint64_t> seeds{1};
    std::string out_dir = "out";

    // independence
    std::string source = "exact";  // exact | ctmc
    std::size_t samples = 100000;
    std::vector<std::pair<int, int>> pairs;  // empty: every pair
    IndependenceThresholds thresholds;

    // ldp
    std::vector<double> q;
    std::vector<int> c_list{8, 32, 128, 512};

    // balance
    int balance_checks = 1000;
    int balance_max_queue = 4;

    /// The configuration after defaults and overrides, used for the hash.
    nlohmann::json effective;
};

/// Network from its JSON description. Errors name the offending field.
NetworkSpec parse_network(const nlohmann::json& j);

/// Applies `key.path=value` overrides; the value is read as JSON when it
/// parses and as a string otherwise.
void apply_override(nlohmann::json& doc, const std::string& assignment);

/// Builds a configuration from a JSON document (after overrides).
ExperimentConfig parse_config(const nlohmann::json& doc);

/// Reads a config file, or "builtin:<name>" for a bundled network.
nlohmann::json load_config_document(const std::string& path);

}  // namespace switchnet
