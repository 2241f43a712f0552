#pragma once

// Experiment orchestration: dispatch on the experiment kind, fan seeds out to
// worker threads, and write metrics.csv plus summary.json.

#include <cstddef>
#include <string>
#include <vector>

#include <json.hpp>

#include "switchnet/config.hpp"

namespace switchnet {

inline constexpr const char* kToolVersion = "0.1.0";

struct MetricRow {
    std::string name;
    std::string id;
    double value = 0.0;
    double std_error = 0.0;
    std::size_t n = 0;
};

struct ResultBundle {
    nlohmann::json summary;
    std::vector<MetricRow> rows;

    /// Header plus one LF-terminated line per row.
    std::string csv() const;
};

/// Shortest decimal text that reads back to the same double ('.' separator).
std::string format_number(double v);

/// FNV-1a of the canonical JSON dump, as 16 hex digits.
std::string config_hash(const nlohmann::json& doc);

/// Worker threads for seed fan-out: SWITCHNET_THREADS if set, otherwise the
/// hardware concurrency, never more than `jobs`.
std::size_t worker_count(std::size_t jobs);

ResultBundle run(const ExperimentConfig& cfg);

/// Creates `dir` if needed and writes metrics.csv and summary.json.
void write_bundle(const ResultBundle& bundle, const std::string& dir);

}  // namespace switchnet
