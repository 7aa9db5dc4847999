#pragma once

#include <chrono>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "blocklite/consensus.hpp"
#include "blocklite/netqueue.hpp"

namespace blocklite {

enum class Mode { Real, Replay, Custom };

struct SimConfig {
    uint32_t nodeCount = 1;
    uint64_t totalTransactions = 0;
    Difficulty difficulty{1, 0};
    Mode mode = Mode::Replay;
    std::string providerName; // set for Mode::Custom
    uint64_t seed = 1;
    uint32_t blockSizeTxns = 10;
    LatencyModel latency;
    double txnRatePerSec = 100; // simulated arrivals per simulated second
    bool poissonArrivals = false;
    uint32_t txnPayloadBytes = 250;
    bool parallelSolve = true; // real-mode nonce search may fan out

    void validate() const; // throws std::invalid_argument
    std::string resolvedProviderName() const;
};

struct ReportRow {
    double simulatedMs = 0;
    uint64_t blocksCommitted = 0;
    uint64_t txnsCommitted = 0;
    uint64_t rssBytes = 0;
};

struct RunMetrics {
    double wallClockMs = 0;
    double simulatedMs = 0;
    uint64_t blocksCommitted = 0;
    uint64_t forksObserved = 0;
    uint64_t txnsCommitted = 0;
    double throughputTxnsPerSec = 0; // committed txns per wall-clock second
    uint64_t blocksFormed = 0;
    uint64_t staleWork = 0; // abandoned mining results
    uint64_t invalidBlocks = 0;
    uint64_t unknownVotes = 0;
    uint64_t safetyViolations = 0; // committed blocks on conflicting branches
    uint64_t eventsPushed = 0;
    uint64_t eventsProcessed = 0;
    uint64_t peakRssBytes = 0;
    std::vector<ReportRow> rows; // one per commitment, plus first/last
    std::string chainDigest;     // digest of the committed prefix topology
    uint32_t committedDepth = 0;
};

// Resident set size of this process, best effort (0 when unavailable).
uint64_t currentRssBytes();

// Single-threaded discrete-event emulation: logical nodes mine via the
// consensus provider, winners broadcast through the latency-modeled queue,
// and blocks commit on a strict majority of validity votes. Deterministic for
// a fixed (config, seed) apart from wall-clock/memory fields; real mode's
// event delays are measured solve times, so only replay runs are
// bit-reproducible across invocations.
class Emulation {
public:
    Emulation(SimConfig config, ConsensusProvider& provider,
              const DifficultyTimeMap* map = nullptr);

    RunMetrics run();

    // Single-stepping and inspection, used by scripted tests.
    bool step();
    void finalize();
    EventQueue& queue() { return queue_; }
    const SimConfig& config() const { return config_; }
    const RunMetrics& metrics() const { return metrics_; }
    const ChainStore& nodeChain(uint32_t node) const { return nodes_[node].chain; }
    std::shared_ptr<const Block> blockById(uint64_t id) const;
    uint32_t votesFor(uint64_t blockId) const;
    bool isCommitted(uint64_t blockId) const;
    bool nodeVoted(uint32_t node, uint64_t blockId) const;
    uint64_t mempoolSize(uint32_t node) const;
    uint64_t txnsSubmitted() const { return submitted_.size(); }

    // Per-block predicate for partial-replication persistence: true when the
    // block committed and this node never voted for it.
    bool headerOnlyEligible(uint32_t node, uint64_t blockId) const;

private:
    struct NodeState {
        ChainStore chain;
        std::optional<uint64_t> activeCandidate;
        std::vector<bool> votedByArrival;
        uint64_t anchorId = 0;
        uint32_t anchorDepth = 0;
        std::vector<uint64_t> pendingCommitObs;
        explicit NodeState(std::shared_ptr<const Block> genesis) : chain(std::move(genesis)) {}
    };

    struct BlockMeta {
        std::shared_ptr<const Block> block;
        std::array<uint8_t, 32> headerHash{};
        std::string headerHashHex;
        uint32_t owner = 0;
        bool aborted = false;
        bool broadcast = false;
        bool committed = false;
        uint32_t votes = 0;
        int64_t arrivalIdx = -1;
        uint64_t watermark = 0; // txns included up to and including this block
        uint32_t formedChildren = 0;
    };

    void pushTxnSchedule();
    void onTxnSubmitted(const Event& e);
    void onMiningComplete(const Event& e);
    void onBlockArrival(const Event& e);
    void onVoteArrival(const Event& e);
    void onBlockCommitted(const Event& e);

    void scheduleMining(uint32_t node, double now);
    void setIdle(uint32_t node);
    void wakeEligibleIdlers(double now);
    void retargetAfterTipChange(uint32_t node, double now);
    void voteTipPath(uint32_t node, double now);
    void markVoted(uint32_t node, int64_t arrivalIdx);
    bool hasVotedIdx(uint32_t node, int64_t arrivalIdx) const;
    void commitBlock(BlockMeta& meta, double now);
    void applyCommitObservation(uint32_t node, uint64_t blockId, double now);
    bool globalChainContains(uint64_t descendantId, uint64_t ancestorId) const;
    void appendMetricsRow(double now);

    SimConfig config_;
    ConsensusProvider& provider_;
    const DifficultyTimeMap* map_;

    EventQueue queue_;
    std::vector<NodeState> nodes_;
    std::unordered_map<uint64_t, BlockMeta> metas_;
    std::vector<Transaction> submitted_;
    std::map<uint64_t, std::vector<uint32_t>> idleGroups_; // watermark -> waiting nodes

    std::mt19937_64 rngLatency_;
    std::mt19937_64 rngSolve_;
    std::mt19937_64 rngSchedule_;

    uint64_t nextBlockId_ = 1;
    int64_t arrivalSeq_ = 0;
    uint64_t committedTxns_ = 0;
    uint64_t committedDeepestId_ = 0;
    uint32_t committedDeepestDepth_ = 0;
    double now_ = 0;
    RunMetrics metrics_;
    bool finalized_ = false;
    std::chrono::steady_clock::time_point wallStart_;
};

RunMetrics runEmulation(const SimConfig& config, ConsensusProvider& provider,
                        const DifficultyTimeMap* map = nullptr);

} // namespace blocklite
