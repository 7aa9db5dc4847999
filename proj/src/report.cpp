#include "blocklite/report.hpp"

#include <fstream>
#include <sstream>

#include "blocklite/util.hpp"

namespace blocklite {

namespace {

const char* modeName(Mode m) {
    switch (m) {
    case Mode::Real: return "real";
    case Mode::Replay: return "replay";
    case Mode::Custom: return "custom";
    }
    return "?";
}

// Keys whose values vary between identical seeded runs.
bool isVolatileKey(const std::string& key) {
    return key == "wall_clock_ms" || key == "throughput_txns_per_sec" ||
           key == "peak_rss_bytes";
}

} // namespace

void writeRunReport(const std::filesystem::path& path, const SimConfig& config,
                    const RunMetrics& metrics, const std::string& mapDescription) {
    std::ostringstream out;
    out << "# blocklite-run v1\n";
    out << "# nodes=" << config.nodeCount << "\n";
    out << "# txns=" << config.totalTransactions << "\n";
    out << "# difficulty=" << formatDifficulty(config.difficulty) << "\n";
    out << "# mode=" << modeName(config.mode) << "\n";
    out << "# consensus=" << config.resolvedProviderName() << "\n";
    out << "# seed=" << config.seed << "\n";
    out << "# block_size=" << config.blockSizeTxns << "\n";
    out << "# txn_rate=" << textFromDouble(config.txnRatePerSec) << "\n";
    out << "# poisson=" << (config.poissonArrivals ? 1 : 0) << "\n";
    out << "# latency_mean_ms=" << textFromDouble(config.latency.meanMs) << "\n";
    out << "# latency_stddev_ms=" << textFromDouble(config.latency.stddevMs) << "\n";
    out << "# latency_floor_ms=" << textFromDouble(config.latency.floorMs) << "\n";
    if (!mapDescription.empty()) out << "# map_host=" << mapDescription << "\n";
    out << "# simulated_ms=" << textFromDouble(metrics.simulatedMs) << "\n";
    out << "# blocks_committed=" << metrics.blocksCommitted << "\n";
    out << "# txns_committed=" << metrics.txnsCommitted << "\n";
    out << "# blocks_formed=" << metrics.blocksFormed << "\n";
    out << "# forks_observed=" << metrics.forksObserved << "\n";
    out << "# stale_work=" << metrics.staleWork << "\n";
    out << "# invalid_blocks=" << metrics.invalidBlocks << "\n";
    out << "# unknown_votes=" << metrics.unknownVotes << "\n";
    out << "# safety_violations=" << metrics.safetyViolations << "\n";
    out << "# events_pushed=" << metrics.eventsPushed << "\n";
    out << "# events_processed=" << metrics.eventsProcessed << "\n";
    out << "# committed_depth=" << metrics.committedDepth << "\n";
    out << "# chain_digest=" << metrics.chainDigest << "\n";
    out << "# wall_clock_ms=" << textFromDouble(metrics.wallClockMs) << "\n";
    out << "# throughput_txns_per_sec=" << textFromDouble(metrics.throughputTxnsPerSec) << "\n";
    out << "# peak_rss_bytes=" << metrics.peakRssBytes << "\n";
    out << "simulated_ms,blocks_committed,txns_committed,rss_bytes\n";
    for (const auto& row : metrics.rows) {
        out << textFromDouble(row.simulatedMs) << "," << row.blocksCommitted << ","
            << row.txnsCommitted << "," << row.rssBytes << "\n";
    }

    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream f(tmp, std::ios::trunc);
        if (!f) throw std::runtime_error("cannot write " + tmp.string());
        f << out.str();
    }
    std::filesystem::rename(tmp, path);
}

std::string ParsedReport::headerValue(const std::string& key) const {
    for (const auto& [k, v] : header)
        if (k == key) return v;
    return {};
}

ParsedReport readRunReport(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open report " + path.string());
    ParsedReport report;
    std::string line;
    bool sawColumns = false;
    int lineNo = 0;
    while (std::getline(f, line)) {
        ++lineNo;
        if (line.empty()) continue;
        if (line[0] == '#') {
            auto eq = line.find('=');
            if (eq != std::string::npos) {
                std::string key = line.substr(2, eq - 2);
                report.header.emplace_back(key, line.substr(eq + 1));
            }
            continue;
        }
        if (!sawColumns) { // column title row
            sawColumns = true;
            continue;
        }
        std::vector<std::string> fields;
        std::stringstream ss(line);
        std::string field;
        while (std::getline(ss, field, ',')) fields.push_back(field);
        if (fields.size() != 4)
            throw std::runtime_error("report: expected 4 columns at line " +
                                     std::to_string(lineNo));
        ReportRow row;
        row.simulatedMs = doubleFromText(fields[0]);
        row.blocksCommitted = u64FromText(fields[1]);
        row.txnsCommitted = u64FromText(fields[2]);
        row.rssBytes = u64FromText(fields[3]);
        report.rows.push_back(row);
    }
    return report;
}

std::string deterministicView(const ParsedReport& report) {
    std::ostringstream out;
    for (const auto& [k, v] : report.header)
        if (!isVolatileKey(k)) out << k << "=" << v << "\n";
    for (const auto& row : report.rows)
        out << textFromDouble(row.simulatedMs) << "," << row.blocksCommitted << ","
            << row.txnsCommitted << "\n";
    return out.str();
}

} // namespace blocklite
