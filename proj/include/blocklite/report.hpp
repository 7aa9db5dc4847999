#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "blocklite/engine.hpp"

namespace blocklite {

// Run report: '#'-prefixed config/summary header, then CSV rows
// (simulated_ms, blocks_committed, txns_committed, rss_bytes) ordered by
// simulated time; the final row carries the run totals. Wall-clock and memory
// values live on clearly marked lines/columns so consumers can exclude them
// when comparing seeded runs.
void writeRunReport(const std::filesystem::path& path, const SimConfig& config,
                    const RunMetrics& metrics, const std::string& mapDescription = {});

struct ParsedReport {
    std::vector<std::pair<std::string, std::string>> header; // key=value lines in order
    std::vector<ReportRow> rows;

    std::string headerValue(const std::string& key) const;
};

ParsedReport readRunReport(const std::filesystem::path& path);

// Lines and columns that legitimately differ between identical seeded runs
// (wall clock, memory, throughput) are stripped; everything else must match.
std::string deterministicView(const ParsedReport& report);

} // namespace blocklite
