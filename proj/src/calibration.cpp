#include "blocklite/calibration.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <thread>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "blocklite/puzzle.hpp"

namespace blocklite {

namespace {

using Clock = std::chrono::steady_clock;

double elapsedMs(Clock::time_point t0, Clock::time_point t1) {
    return std::chrono::duration<double, std::milli>(t1 - t0).count();
}

// splitmix64, used to derive independent per-sample seeds.
uint64_t mix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::vector<uint8_t> randomHeader(uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::vector<uint8_t> header(64);
    for (auto& b : header) b = static_cast<uint8_t>(rng());
    return header;
}

// Shortest decimal text that round-trips the double exactly.
std::string formatDouble(double v) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    (void)ec;
    return std::string(buf, end);
}

double parseDouble(std::string_view text, int line) {
    double v = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || ptr != text.data() + text.size())
        throw std::runtime_error("map file: bad number at line " + std::to_string(line));
    return v;
}

uint64_t parseU64(std::string_view text, int line) {
    uint64_t v = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || ptr != text.data() + text.size())
        throw std::runtime_error("map file: bad count at line " + std::to_string(line));
    return v;
}

SolveTimeStats statsFrom(Difficulty d, const std::vector<double>& timesMs) {
    SolveTimeStats s;
    s.difficulty = d;
    s.samples = timesMs.size();
    s.minMs = *std::min_element(timesMs.begin(), timesMs.end());
    s.maxMs = *std::max_element(timesMs.begin(), timesMs.end());
    double sum = 0;
    for (double t : timesMs) sum += t;
    s.meanMs = sum / static_cast<double>(timesMs.size());
    if (timesMs.size() > 1) {
        double sq = 0;
        for (double t : timesMs) sq += (t - s.meanMs) * (t - s.meanMs);
        s.stddevMs = std::sqrt(sq / static_cast<double>(timesMs.size() - 1));
    }
    return s;
}

} // namespace

void DifficultyTimeMap::insert(const SolveTimeStats& stats) {
    auto [it, inserted] = entries_.emplace(stats.difficulty, stats);
    if (!inserted)
        throw std::runtime_error("duplicate difficulty " + formatDifficulty(stats.difficulty));
}

const SolveTimeStats* DifficultyTimeMap::find(Difficulty d) const {
    auto it = entries_.find(d);
    return it == entries_.end() ? nullptr : &it->second;
}

const SolveTimeStats& DifficultyTimeMap::at(Difficulty d) const {
    auto* s = find(d);
    if (!s) throw CalibrationMissError(d);
    return *s;
}

DifficultyTimeMap calibrate(std::span<const Difficulty> range, const CalibrateOptions& opt) {
    if (range.empty()) throw std::invalid_argument("calibrate: empty difficulty range");
    if (opt.samplesPerDifficulty < 1) throw std::invalid_argument("calibrate: samples must be >= 1");

    DifficultyTimeMap map;
    map.setHostFingerprint(hostFingerprint());

#ifdef _OPENMP
    const int workers = opt.threads > 0 ? opt.threads : omp_get_max_threads();
#endif

    // Untimed warmup so one-time costs (digest provider setup, worker spawn,
    // per-thread allocator state) stay out of the first measurements.
#ifdef _OPENMP
#pragma omp parallel num_threads(workers)
#endif
    {
        auto header = randomHeader(0);
        solveSerial(header, Difficulty{0, 0});
    }

    for (size_t di = 0; di < range.size(); ++di) {
        Difficulty d = range[di];
        const auto n = opt.samplesPerDifficulty;
        std::vector<double> timesMs(n, -1.0);
        auto budgetStart = Clock::now();
        std::atomic<bool> overBudget{false};

#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic, 1) num_threads(workers)
#endif
        for (int64_t i = 0; i < static_cast<int64_t>(n); ++i) {
            if (overBudget.load(std::memory_order_relaxed)) continue;
            auto header = randomHeader(mix64(opt.seed ^ mix64(di)) + static_cast<uint64_t>(i));
            auto t0 = Clock::now();
            auto sol = solveSerial(header, d);
            auto t1 = Clock::now();
            if (sol) timesMs[static_cast<size_t>(i)] = elapsedMs(t0, t1);
            if (elapsedMs(budgetStart, t1) > opt.budgetSeconds * 1000.0)
                overBudget.store(true, std::memory_order_relaxed);
        }

        bool complete = std::none_of(timesMs.begin(), timesMs.end(),
                                     [](double t) { return t < 0; });
        if (!complete || overBudget.load()) {
            if (opt.warn)
                opt.warn("difficulty " + formatDifficulty(d) + " exceeded the " +
                         formatDouble(opt.budgetSeconds) + " s budget; entry left uncalibrated");
            continue;
        }
        map.insert(statsFrom(d, timesMs));
    }
    return map;
}

void saveMap(const DifficultyTimeMap& map, const std::filesystem::path& path) {
    std::ostringstream out;
    out << "# blocklite-map v1 host=" << map.hostFingerprint() << "\n";
    for (const auto& [d, s] : map) {
        out << formatDifficulty(d) << "," << formatDouble(s.meanMs) << ","
            << formatDouble(s.stddevMs) << "," << s.samples << ","
            << formatDouble(s.minMs) << "," << formatDouble(s.maxMs) << "\n";
    }

    // Write-then-rename so a rerun overwrites atomically.
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream f(tmp, std::ios::trunc);
        if (!f) throw std::runtime_error("cannot write " + tmp.string());
        f << out.str();
    }
    std::filesystem::rename(tmp, path);
}

DifficultyTimeMap loadMap(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open map file " + path.string());
    DifficultyTimeMap map;
    std::string line;
    int lineNo = 0;
    while (std::getline(f, line)) {
        ++lineNo;
        if (lineNo == 1) {
            const std::string magic = "# blocklite-map v1 host=";
            if (line.rfind(magic, 0) != 0)
                throw std::runtime_error("map file: bad header at line 1");
            map.setHostFingerprint(line.substr(magic.size()));
            continue;
        }
        if (line.empty()) continue;
        std::vector<std::string_view> fields;
        std::string_view rest = line;
        while (true) {
            auto comma = rest.find(',');
            fields.push_back(rest.substr(0, comma));
            if (comma == std::string_view::npos) break;
            rest = rest.substr(comma + 1);
        }
        if (fields.size() != 6)
            throw std::runtime_error("map file: expected 6 fields at line " + std::to_string(lineNo));
        SolveTimeStats s;
        try {
            s.difficulty = parseDifficulty(fields[0]);
        } catch (const std::exception& e) {
            throw std::runtime_error("map file: " + std::string(e.what()) + " at line " +
                                     std::to_string(lineNo));
        }
        s.meanMs = parseDouble(fields[1], lineNo);
        s.stddevMs = parseDouble(fields[2], lineNo);
        s.samples = parseU64(fields[3], lineNo);
        s.minMs = parseDouble(fields[4], lineNo);
        s.maxMs = parseDouble(fields[5], lineNo);
        try {
            map.insert(s);
        } catch (const std::exception& e) {
            throw std::runtime_error("map file: " + std::string(e.what()) + " at line " +
                                     std::to_string(lineNo));
        }
    }
    return map;
}

double sampleSolveTime(const DifficultyTimeMap& map, Difficulty d, std::mt19937_64& rng) {
    const auto& s = map.at(d);
    double floor = std::max(s.minMs, 0.1);
    if (s.stddevMs <= 0) return std::max(s.meanMs, floor);
    std::normal_distribution<double> dist(s.meanMs, s.stddevMs);
    return std::max(dist(rng), floor);
}

Difficulty selectDifficulty(const DifficultyTimeMap& map, double targetIntervalMs) {
    if (map.empty()) throw std::invalid_argument("selectDifficulty: empty map");
    const SolveTimeStats* best = nullptr;
    for (const auto& [d, s] : map) {
        if (!best || std::abs(s.meanMs - targetIntervalMs) < std::abs(best->meanMs - targetIntervalMs))
            best = &s; // map iterates in (L, M) order, so ties keep the smaller
    }
    return best->difficulty;
}

std::string hostFingerprint() {
    std::string cpu = "unknown-cpu";
    std::ifstream f("/proc/cpuinfo");
    std::string line;
    while (std::getline(f, line)) {
        if (line.rfind("model name", 0) == 0) {
            auto colon = line.find(':');
            if (colon != std::string::npos) {
                cpu = line.substr(colon + 1);
                size_t s = cpu.find_first_not_of(' ');
                if (s != std::string::npos) cpu = cpu.substr(s);
            }
            break;
        }
    }
    return cpu + " x" + std::to_string(std::thread::hardware_concurrency());
}

} // namespace blocklite
