#include "cli.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>

#include "blocklite/calibration.hpp"
#include "blocklite/consensus.hpp"
#include "blocklite/engine.hpp"
#include "blocklite/ledger.hpp"
#include "blocklite/report.hpp"
#include "blocklite/util.hpp"

namespace blocklite::cli {

namespace {

constexpr int kOk = 0;
constexpr int kInternal = 1;
constexpr int kUsage = 2;
constexpr int kMissing = 3;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct MissingError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::vector<Difficulty> parseDifficultyList(const std::string& spec) {
    std::vector<Difficulty> out;
    for (const auto& text : expandDifficultyRange(spec)) out.push_back(parseDifficulty(text));
    return out;
}

DifficultyTimeMap loadMapOrDie(const std::string& path) {
    if (path.empty())
        throw MissingError("no difficulty-time map given (use --map or BLOCKEMU_MAP)");
    if (!std::filesystem::exists(path))
        throw MissingError("map file not found: " + path + " (run the calibrate command first)");
    return loadMap(path);
}

int cmdCalibrate(const std::string& difficulties, uint64_t samples, double budgetS,
                 uint64_t seed, int threads, const std::string& outPath) {
    auto range = parseDifficultyList(difficulties);
    CalibrateOptions opt;
    opt.samplesPerDifficulty = samples;
    opt.budgetSeconds = budgetS;
    opt.seed = seed;
    opt.threads = threads;
    opt.warn = [](const std::string& msg) { std::cerr << "warning: " << msg << "\n"; };

    std::cerr << "calibrating " << range.size() << " difficulty point(s), " << samples
              << " sample(s) each...\n";
    auto map = calibrate(range, opt);
    if (map.empty()) {
        std::cerr << "error: every difficulty exceeded the budget; nothing calibrated\n";
        return kInternal;
    }
    saveMap(map, outPath);
    std::cerr << "wrote " << map.size() << " entries to " << outPath << "\n";
    for (const auto& [d, s] : map)
        std::cout << formatDifficulty(d) << " mean_ms=" << textFromDouble(s.meanMs)
                  << " stddev_ms=" << textFromDouble(s.stddevMs) << " samples=" << s.samples
                  << "\n";
    return kOk;
}

int cmdRun(SimConfig config, const std::string& mapPath, const std::string& outPath,
           const std::string& ledgerDir, bool partialLedgers) {
    auto provider = makeProvider(config.resolvedProviderName());

    DifficultyTimeMap map;
    const DifficultyTimeMap* mapPtr = nullptr;
    if (provider->requiresCalibration()) {
        map = loadMapOrDie(mapPath);
        if (!map.find(config.difficulty))
            throw MissingError("difficulty " + formatDifficulty(config.difficulty) +
                               " is not in the map; calibrate it first, e.g. `blocklite "
                               "calibrate --difficulties " +
                               formatDifficulty(config.difficulty) + " --out <map>`");
        mapPtr = &map;
    }

    Emulation emu(config, *provider, mapPtr);
    RunMetrics metrics = emu.run();

    if (!outPath.empty())
        writeRunReport(outPath, config, metrics, mapPtr ? map.hostFingerprint() : "");

    if (!ledgerDir.empty()) {
        for (uint32_t node = 0; node < config.nodeCount; ++node) {
            PersistOptions popt;
            if (partialLedgers)
                popt.headerOnly = [&emu, node](uint64_t blockId) {
                    return emu.headerOnlyEligible(node, blockId);
                };
            persistLedger(emu.nodeChain(node), node, ledgerDir, popt);
        }
    }

    std::cout << "blocks_committed=" << metrics.blocksCommitted
              << " txns_committed=" << metrics.txnsCommitted << "/" << config.totalTransactions
              << " forks=" << metrics.forksObserved << " stale_work=" << metrics.staleWork
              << " simulated_ms=" << textFromDouble(metrics.simulatedMs)
              << " wall_ms=" << textFromDouble(metrics.wallClockMs)
              << " throughput_txns_per_sec=" << textFromDouble(metrics.throughputTxnsPerSec)
              << " peak_rss_bytes=" << metrics.peakRssBytes << "\n";
    if (metrics.txnsCommitted < config.totalTransactions)
        std::cerr << "note: " << (config.totalTransactions - metrics.txnsCommitted)
                  << " transaction(s) left uncommitted (fewer than --block-size pending)\n";
    return kOk;
}

int cmdSelectDifficulty(const std::string& mapPath, const std::string& targetText) {
    double targetMs = parseDurationMs(targetText); // usage check before prerequisites
    auto map = loadMapOrDie(mapPath);
    if (map.empty()) throw MissingError("map is empty");
    Difficulty d = selectDifficulty(map, targetMs);
    std::cout << formatDifficulty(d) << " " << textFromDouble(map.at(d).meanMs) << "\n";
    return kOk;
}

int cmdReport(const std::string& inPath) {
    auto report = readRunReport(inPath);
    for (const char* key : {"nodes", "txns", "difficulty", "mode", "seed", "blocks_committed",
                            "txns_committed", "forks_observed", "stale_work", "simulated_ms",
                            "wall_clock_ms", "throughput_txns_per_sec", "chain_digest"}) {
        auto v = report.headerValue(key);
        if (!v.empty()) std::cout << key << "=" << v << "\n";
    }
    std::cout << "rows=" << report.rows.size() << "\n";
    if (!report.rows.empty()) {
        const auto& last = report.rows.back();
        std::cout << "final: simulated_ms=" << textFromDouble(last.simulatedMs)
                  << " blocks=" << last.blocksCommitted << " txns=" << last.txnsCommitted << "\n";
    }
    return kOk;
}

} // namespace

std::vector<std::string> expandDifficultyRange(const std::string& spec) {
    std::vector<std::string> out;
    std::string_view rest = spec;
    auto takeItem = [&](std::string_view item) {
        auto colon = item.find(':');
        if (colon == std::string_view::npos) {
            parseDifficulty(item); // validation only
            out.emplace_back(item);
            return;
        }
        Difficulty lo = parseDifficulty(item.substr(0, colon));
        Difficulty hi = parseDifficulty(item.substr(colon + 1));
        if (hi.leadingZeros < lo.leadingZeros || hi.middleZeros < lo.middleZeros)
            throw std::invalid_argument("difficulty range must be nondecreasing in L and M");
        for (int l = lo.leadingZeros; l <= hi.leadingZeros; ++l)
            for (int m = lo.middleZeros; m <= hi.middleZeros; ++m) {
                if (l + m > 64)
                    throw std::out_of_range("range includes infeasible difficulty " +
                                            std::to_string(l) + "." + std::to_string(m));
                out.push_back(std::to_string(l) + "." + std::to_string(m));
            }
    };
    while (true) {
        auto comma = rest.find(',');
        takeItem(rest.substr(0, comma));
        if (comma == std::string_view::npos) break;
        rest = rest.substr(comma + 1);
    }
    return out;
}

double parseDurationMs(const std::string& text) {
    std::string_view v = text;
    double scale = 1.0;
    if (v.ends_with("ms")) {
        v.remove_suffix(2);
    } else if (v.ends_with("s")) {
        v.remove_suffix(1);
        scale = 1000.0;
    } else if (v.ends_with("m")) {
        v.remove_suffix(1);
        scale = 60000.0;
    }
    double value = doubleFromText(v); // throws on junk
    if (value < 0) throw std::invalid_argument("duration must be nonnegative");
    return value * scale;
}

int run(const std::vector<std::string>& args) {
    CLI::App app{"blocklite: single-process proof-of-work blockchain emulator"};
    app.require_subcommand(1);

    // calibrate
    auto* cal = app.add_subcommand("calibrate", "measure solve times and write a map file");
    std::string calDiff = "1.0:3.2";
    uint64_t calSamples = 30;
    double calBudget = 120.0;
    uint64_t calSeed = 1;
    int calThreads = 0;
    std::string calOut;
    cal->add_option("--difficulties", calDiff, "range L.M:L.M, comma list, or single point");
    cal->add_option("--samples", calSamples, "solves per difficulty")->check(CLI::PositiveNumber);
    cal->add_option("--budget-s", calBudget, "wall-clock budget per difficulty, seconds");
    cal->add_option("--seed", calSeed, "seed for the sample headers");
    cal->add_option("--threads", calThreads, "worker threads (0 = all)");
    cal->add_option("--out", calOut, "map file to write")->required();

    // run
    auto* runCmd = app.add_subcommand("run", "run an emulation and write a report");
    SimConfig config;
    std::string mode = "replay";
    std::string consensusName;
    std::string difficultyText = "1.0";
    std::string mapPath;
    std::string outPath;
    std::string ledgerDir;
    bool partialLedgers = false;
    bool serialSolve = false;
    runCmd->add_option("--nodes", config.nodeCount, "logical node count")
        ->check(CLI::PositiveNumber);
    runCmd->add_option("--txns", config.totalTransactions, "transactions to commit");
    runCmd->add_option("--difficulty", difficultyText, "puzzle difficulty L.M");
    runCmd->add_option("--mode", mode, "real|replay")->check(CLI::IsMember({"real", "replay"}));
    runCmd->add_option("--consensus", consensusName, "provider name (overrides --mode)");
    runCmd->add_option("--map", mapPath, "difficulty-time map (replay mode)")
        ->envname("BLOCKEMU_MAP");
    runCmd->add_option("--seed", config.seed, "run seed");
    runCmd->add_option("--block-size", config.blockSizeTxns, "transactions per block")
        ->check(CLI::PositiveNumber);
    runCmd->add_option("--txn-rate", config.txnRatePerSec, "submitted txns per simulated second");
    runCmd->add_flag("--poisson", config.poissonArrivals, "Poisson txn arrivals");
    runCmd->add_option("--latency-mean-ms", config.latency.meanMs, "mean peer latency");
    runCmd->add_option("--latency-stddev-ms", config.latency.stddevMs, "latency stddev");
    runCmd->add_option("--latency-floor-ms", config.latency.floorMs, "minimum latency");
    runCmd->add_option("--txn-payload-bytes", config.txnPayloadBytes, "synthetic payload size");
    runCmd->add_option("--out", outPath, "report CSV to write")->required();
    runCmd->add_option("--ledger-dir", ledgerDir, "write per-node ledger files here");
    runCmd->add_flag("--partial-ledgers", partialLedgers,
                     "store committed, never-voted blocks header-only");
    runCmd->add_flag("--serial-solve", serialSolve, "keep real-mode nonce search single-threaded");

    // select-difficulty
    auto* sel = app.add_subcommand("select-difficulty",
                                   "pick the calibrated difficulty nearest a target interval");
    std::string selMap;
    std::string selTarget;
    sel->add_option("--map", selMap, "difficulty-time map")->envname("BLOCKEMU_MAP");
    sel->add_option("--target-interval", selTarget, "target block interval (ms|s|m)")->required();

    // report
    auto* rep = app.add_subcommand("report", "summarize a run report CSV");
    std::string repIn;
    rep->add_option("--in", repIn, "report CSV to read")->required();

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        std::cout << app.help();
        return kOk;
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n";
        return kUsage;
    }

    try {
        if (cal->parsed())
            return cmdCalibrate(calDiff, calSamples, calBudget, calSeed, calThreads, calOut);
        if (runCmd->parsed()) {
            config.difficulty = parseDifficulty(difficultyText);
            if (!consensusName.empty()) {
                if (consensusName == "nakamoto-real") {
                    config.mode = Mode::Real;
                } else if (consensusName == "nakamoto-replay") {
                    config.mode = Mode::Replay;
                } else {
                    config.mode = Mode::Custom;
                    config.providerName = consensusName;
                }
            } else {
                config.mode = (mode == "real") ? Mode::Real : Mode::Replay;
            }
            config.parallelSolve = !serialSolve;
            config.validate();
            return cmdRun(config, mapPath, outPath, ledgerDir, partialLedgers);
        }
        if (sel->parsed()) return cmdSelectDifficulty(selMap, selTarget);
        if (rep->parsed()) return cmdReport(repIn);
        return kUsage;
    } catch (const MissingError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kMissing;
    } catch (const CalibrationMissError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kMissing;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kUsage;
    } catch (const std::out_of_range& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kInternal;
    }
}

int run(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return run(args);
}

} // namespace blocklite::cli
