#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "blocklite/difficulty.hpp"

namespace blocklite {

struct SolveTimeStats {
    Difficulty difficulty;
    double meanMs = 0;
    double stddevMs = 0;
    uint64_t samples = 0;
    double minMs = 0;
    double maxMs = 0;
};

// Lookup of an uncalibrated difficulty is an explicit miss.
class CalibrationMissError : public std::runtime_error {
public:
    explicit CalibrationMissError(Difficulty d)
        : std::runtime_error("difficulty " + formatDifficulty(d) +
                             " is not calibrated; run the calibrate command first") {}
};

// Host-specific table from difficulty to measured solve-time statistics.
// Immutable once populated; one entry per difficulty.
class DifficultyTimeMap {
public:
    void insert(const SolveTimeStats& stats); // throws on duplicate difficulty
    const SolveTimeStats* find(Difficulty d) const;
    const SolveTimeStats& at(Difficulty d) const; // throws CalibrationMissError

    bool empty() const { return entries_.empty(); }
    size_t size() const { return entries_.size(); }
    auto begin() const { return entries_.begin(); }
    auto end() const { return entries_.end(); }

    const std::string& hostFingerprint() const { return host_; }
    void setHostFingerprint(std::string host) { host_ = std::move(host); }

private:
    std::map<Difficulty, SolveTimeStats> entries_;
    std::string host_;
};

struct CalibrateOptions {
    uint64_t samplesPerDifficulty = 30;
    double budgetSeconds = 120; // wall-clock budget per difficulty
    uint64_t seed = 1;
    int threads = 0; // 0 = all available workers
    std::function<void(const std::string&)> warn; // budget-exceeded notices
};

// Runs real solves over distinct seeded random headers and records wall-clock
// statistics per difficulty. A difficulty whose sampling exceeds the budget is
// left absent (warned) and calibration continues. Samples fan out across
// OpenMP workers; each sample is timed individually.
DifficultyTimeMap calibrate(std::span<const Difficulty> range, const CalibrateOptions& opt = {});

// Map file: UTF-8 text, "# blocklite-map v1 host=<fingerprint>" then one
// "L.M,meanMs,stddevMs,samples,minMs,maxMs" line per entry.
void saveMap(const DifficultyTimeMap& map, const std::filesystem::path& path);
DifficultyTimeMap loadMap(const std::filesystem::path& path);

// Draws a solve time from a normal with the entry's mean/stddev, clamped
// below at max(minMs, 0.1 ms). Deterministic for a given rng state.
double sampleSolveTime(const DifficultyTimeMap& map, Difficulty d, std::mt19937_64& rng);

// Calibrated difficulty whose meanMs is nearest to the target; ties break
// toward the smaller (L, M). Throws std::invalid_argument on an empty map.
Difficulty selectDifficulty(const DifficultyTimeMap& map, double targetIntervalMs);

// Free-text descriptor of this machine, stored with the map.
std::string hostFingerprint();

} // namespace blocklite
