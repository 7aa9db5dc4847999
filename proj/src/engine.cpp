#include "blocklite/engine.hpp"

#include <algorithm>
#include <cassert>
#include <chrono>
#include <fstream>

#include "blocklite/sha256.hpp"
#include "blocklite/util.hpp"

namespace blocklite {

namespace {
using Clock = std::chrono::steady_clock;

double wallMsSince(Clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}
} // namespace

void SimConfig::validate() const {
    if (nodeCount < 1) throw std::invalid_argument("nodeCount must be >= 1");
    if (blockSizeTxns < 1) throw std::invalid_argument("blockSizeTxns must be >= 1");
    if (txnRatePerSec <= 0) throw std::invalid_argument("txnRatePerSec must be positive");
    if (latency.floorMs <= 0) throw std::invalid_argument("latency floor must be positive");
    if (mode == Mode::Custom && providerName.empty())
        throw std::invalid_argument("custom mode needs a provider name");
}

std::string SimConfig::resolvedProviderName() const {
    switch (mode) {
    case Mode::Real: return "nakamoto-real";
    case Mode::Replay: return "nakamoto-replay";
    case Mode::Custom: return providerName;
    }
    return providerName;
}

uint64_t currentRssBytes() {
    std::ifstream f("/proc/self/status");
    std::string line;
    while (std::getline(f, line)) {
        if (line.rfind("VmRSS:", 0) == 0) {
            uint64_t kb = 0;
            for (char c : line)
                if (c >= '0' && c <= '9') kb = kb * 10 + static_cast<uint64_t>(c - '0');
            return kb * 1024;
        }
    }
    return 0;
}

Emulation::Emulation(SimConfig config, ConsensusProvider& provider, const DifficultyTimeMap* map)
    : config_(std::move(config)), provider_(provider), map_(map) {
    config_.validate();
    if (provider_.requiresCalibration()) {
        if (!map_) throw CalibrationMissError(config_.difficulty);
        map_->at(config_.difficulty); // throws CalibrationMissError when absent
    }

    rngLatency_.seed(mix64(config_.seed ^ 0x1a7e9c11ULL));
    rngSolve_.seed(mix64(config_.seed ^ 0x5071ed22ULL));
    rngSchedule_.seed(mix64(config_.seed ^ 0x7ca1e533ULL));

    auto genesis = std::make_shared<const Block>(makeGenesisBlock());
    BlockMeta gmeta;
    gmeta.block = genesis;
    gmeta.headerHashHex = computeHeaderHash(*genesis);
    gmeta.watermark = 0;
    metas_.emplace(genesis->blockId, std::move(gmeta));
    committedDeepestId_ = genesis->blockId;

    nodes_.reserve(config_.nodeCount);
    for (uint32_t i = 0; i < config_.nodeCount; ++i) {
        nodes_.emplace_back(genesis);
        setIdle(i); // everyone waits on the mempool filling up
    }

    wallStart_ = Clock::now();
    pushTxnSchedule();
    appendMetricsRow(0.0);
}

void Emulation::pushTxnSchedule() {
    double t = 0;
    const double gapMs = 1000.0 / config_.txnRatePerSec;
    for (uint64_t i = 0; i < config_.totalTransactions; ++i) {
        if (config_.poissonArrivals) {
            std::exponential_distribution<double> exp(1.0 / gapMs);
            t += exp(rngSchedule_);
        } else {
            t = static_cast<double>(i) * gapMs;
        }
        Transaction txn;
        txn.txnId = i;
        txn.creatorId = i % config_.nodeCount;
        txn.creationTime = t;
        txn.payloadSize = config_.txnPayloadBytes;
        queue_.push(t, static_cast<uint32_t>(txn.creatorId), TxnSubmitted{txn});
    }
}

bool Emulation::step() {
    auto e = queue_.popEarliest();
    if (!e) return false;
    assert(e->timestampMs + 1e-9 >= now_ && "simulated clock went backward");
    now_ = std::max(now_, e->timestampMs);
    metrics_.simulatedMs = now_;

    switch (e->kind()) {
    case EventKind::TxnSubmitted: onTxnSubmitted(*e); break;
    case EventKind::MiningComplete: onMiningComplete(*e); break;
    case EventKind::BlockArrival: onBlockArrival(*e); break;
    case EventKind::VoteArrival: onVoteArrival(*e); break;
    case EventKind::BlockCommitted: onBlockCommitted(*e); break;
    }
    return true;
}

RunMetrics Emulation::run() {
    while (step()) {
    }
    finalize();
    return metrics_;
}

void Emulation::finalize() {
    if (finalized_) return;
    finalized_ = true;
    metrics_.wallClockMs = wallMsSince(wallStart_);
    metrics_.txnsCommitted = committedTxns_;
    metrics_.eventsPushed = queue_.pushedCount();
    metrics_.eventsProcessed = queue_.poppedCount();
    metrics_.throughputTxnsPerSec =
        metrics_.wallClockMs > 0 ? static_cast<double>(committedTxns_) /
                                       (metrics_.wallClockMs / 1000.0)
                                 : 0.0;
    appendMetricsRow(now_);
    metrics_.committedDepth = committedDeepestDepth_;

    // Digest of the committed prefix: id, parent, creator and header hash of
    // every block from genesis to the deepest committed block.
    std::vector<std::string> lines;
    uint64_t cur = committedDeepestId_;
    while (true) {
        const auto& meta = metas_.at(cur);
        std::string parent =
            meta.block->parentId ? std::to_string(*meta.block->parentId) : "-";
        lines.push_back(std::to_string(cur) + ":" + parent + ":" +
                        std::to_string(meta.block->creatorId) + ":" + meta.headerHashHex);
        if (!meta.block->parentId) break;
        cur = *meta.block->parentId;
    }
    std::string joined;
    for (auto it = lines.rbegin(); it != lines.rend(); ++it) joined += *it + "\n";
    metrics_.chainDigest = sha256Hex(joined);
}

void Emulation::appendMetricsRow(double now) {
    ReportRow row;
    row.simulatedMs = now;
    row.blocksCommitted = metrics_.blocksCommitted;
    row.txnsCommitted = committedTxns_;
    row.rssBytes = currentRssBytes();
    metrics_.peakRssBytes = std::max(metrics_.peakRssBytes, row.rssBytes);
    metrics_.rows.push_back(row);
}

void Emulation::onTxnSubmitted(const Event& e) {
    submitted_.push_back(std::get<TxnSubmitted>(e.payload).txn);
    wakeEligibleIdlers(e.timestampMs);
}

void Emulation::wakeEligibleIdlers(double now) {
    const uint64_t have = submitted_.size();
    const uint64_t need = config_.blockSizeTxns;
    while (!idleGroups_.empty()) {
        auto it = idleGroups_.begin();
        if (it->first + need > have) break;
        std::vector<uint32_t> group = std::move(it->second);
        idleGroups_.erase(it);
        std::sort(group.begin(), group.end());
        group.erase(std::unique(group.begin(), group.end()), group.end());
        for (uint32_t node : group) {
            if (nodes_[node].activeCandidate) continue; // stale registration
            scheduleMining(node, now);
        }
    }
}

void Emulation::setIdle(uint32_t node) {
    uint64_t tipW = metas_.at(nodes_[node].chain.tipId()).watermark;
    idleGroups_[tipW].push_back(node);
}

void Emulation::scheduleMining(uint32_t node, double now) {
    NodeState& st = nodes_[node];
    if (st.activeCandidate) return; // one mining target per node

    uint64_t parentId = st.chain.tipId();
    const BlockMeta& parentMeta = metas_.at(parentId);
    uint64_t avail = submitted_.size() - parentMeta.watermark;
    if (avail < config_.blockSizeTxns) {
        setIdle(node);
        return;
    }

    auto block = std::make_shared<Block>();
    block->blockId = nextBlockId_++;
    block->creationTime = now;
    block->creatorId = node;
    block->parentId = parentId;
    block->depth = parentMeta.block->depth + 1;
    block->previousHash = parentMeta.headerHashHex;
    block->txnList.assign(submitted_.begin() + static_cast<int64_t>(parentMeta.watermark),
                          submitted_.begin() + static_cast<int64_t>(parentMeta.watermark +
                                                                    config_.blockSizeTxns));

    NodeContext ctx;
    ctx.nodeId = node;
    ctx.difficulty = config_.difficulty;
    ctx.map = map_;
    ctx.rng = &rngSolve_;
    ctx.parallelSolve = config_.parallelSolve;

    auto t0 = Clock::now();
    block->proof = provider_.generateProof(*block, ctx);
    double measuredMs = wallMsSince(t0);
    double delayMs = block->proof.claimedSolveMs > 0 ? block->proof.claimedSolveMs
                                                     : std::max(measuredMs, 0.0);

    BlockMeta meta;
    meta.block = block;
    meta.headerHashHex = computeHeaderHash(*block);
    for (size_t i = 0; i < 32; ++i) {
        auto hex = [&](char c) -> uint8_t {
            return c <= '9' ? static_cast<uint8_t>(c - '0')
                            : static_cast<uint8_t>(c - 'a' + 10);
        };
        meta.headerHash[i] = static_cast<uint8_t>((hex(meta.headerHashHex[2 * i]) << 4) |
                                                  hex(meta.headerHashHex[2 * i + 1]));
    }
    meta.owner = node;
    meta.watermark = parentMeta.watermark + config_.blockSizeTxns;
    uint64_t id = block->blockId;
    metas_.emplace(id, std::move(meta));

    st.activeCandidate = id;
    queue_.push(now + delayMs, node, MiningComplete{id});
}

void Emulation::onMiningComplete(const Event& e) {
    uint64_t id = std::get<MiningComplete>(e.payload).candidateId;
    uint32_t node = e.targetNode;
    NodeState& st = nodes_[node];

    auto it = metas_.find(id);
    if (it == metas_.end()) return;
    BlockMeta& meta = it->second;
    if (meta.aborted) {
        metas_.erase(it); // result already counted as stale at abandon time
        return;
    }
    if (!st.activeCandidate || *st.activeCandidate != id) {
        metrics_.staleWork++;
        metas_.erase(it);
        return;
    }
    st.activeCandidate.reset();
    if (st.chain.tipId() != *meta.block->parentId) {
        // Tip advanced since the search began: discard and remine on the new tip.
        metrics_.staleWork++;
        metas_.erase(it);
        scheduleMining(node, e.timestampMs);
        return;
    }

    meta.broadcast = true;
    meta.arrivalIdx = arrivalSeq_++;
    meta.votes = 1; // creator's implicit vote
    metrics_.blocksFormed++;

    BlockMeta& parentMeta = metas_.at(*meta.block->parentId);
    parentMeta.formedChildren++;
    if (parentMeta.formedChildren == 2) metrics_.forksObserved++;

    auto res = st.chain.append(meta.block, &meta.headerHash);
    (void)res;
    markVoted(node, meta.arrivalIdx);

    broadcast(queue_, node, BlockArrival{meta.block}, config_.nodeCount, config_.latency,
              rngLatency_, e.timestampMs);

    if (2ull * meta.votes > config_.nodeCount) commitBlock(meta, e.timestampMs);

    scheduleMining(node, e.timestampMs);
}

void Emulation::onBlockArrival(const Event& e) {
    const auto& payload = std::get<BlockArrival>(e.payload);
    uint32_t node = e.targetNode;
    NodeState& st = nodes_[node];

    NodeContext ctx;
    ctx.nodeId = node;
    ctx.difficulty = config_.difficulty;
    ctx.map = map_;
    if (!provider_.verifyProof(*payload.block, payload.block->proof, ctx)) {
        metrics_.invalidBlocks++;
        return;
    }
    auto metaIt = metas_.find(payload.block->blockId);
    if (metaIt == metas_.end()) { // not a block of this run
        metrics_.invalidBlocks++;
        return;
    }
    BlockMeta& meta = metaIt->second;

    auto res = st.chain.append(payload.block, &meta.headerHash);
    if (res.outcome == AppendOutcome::Rejected) {
        // Duplicate arrivals are benign; anything else is an integrity signal.
        if (!st.chain.contains(payload.block->blockId)) metrics_.invalidBlocks++;
        return;
    }
    if (res.outcome == AppendOutcome::Orphaned) return; // votes happen at promotion

    if (!st.pendingCommitObs.empty()) {
        auto pending = std::move(st.pendingCommitObs);
        st.pendingCommitObs.clear();
        for (uint64_t cid : pending) applyCommitObservation(node, cid, e.timestampMs);
    }

    voteTipPath(node, e.timestampMs);
    retargetAfterTipChange(node, e.timestampMs);
}

void Emulation::voteTipPath(uint32_t node, double now) {
    NodeState& st = nodes_[node];
    std::vector<uint64_t> toVote;
    uint64_t cur = st.chain.tipId();
    while (cur != st.chain.genesisId()) {
        const BlockMeta& meta = metas_.at(cur);
        if (meta.arrivalIdx < 0 || hasVotedIdx(node, meta.arrivalIdx)) break;
        toVote.push_back(cur);
        cur = *meta.block->parentId;
    }
    // Oldest first so vote latency draws are in chain order.
    for (auto it = toVote.rbegin(); it != toVote.rend(); ++it) {
        const BlockMeta& meta = metas_.at(*it);
        markVoted(node, meta.arrivalIdx);
        if (meta.owner != node)
            queue_.push(now + sampleLatency(config_.latency, rngLatency_), meta.owner,
                        VoteArrival{*it, node});
    }
}

void Emulation::markVoted(uint32_t node, int64_t arrivalIdx) {
    auto& voted = nodes_[node].votedByArrival;
    if (static_cast<size_t>(arrivalIdx) >= voted.size())
        voted.resize(static_cast<size_t>(arrivalIdx) + 1, false);
    voted[static_cast<size_t>(arrivalIdx)] = true;
}

bool Emulation::hasVotedIdx(uint32_t node, int64_t arrivalIdx) const {
    const auto& voted = nodes_[node].votedByArrival;
    return static_cast<size_t>(arrivalIdx) < voted.size() &&
           voted[static_cast<size_t>(arrivalIdx)];
}

void Emulation::retargetAfterTipChange(uint32_t node, double now) {
    NodeState& st = nodes_[node];
    if (st.activeCandidate) {
        BlockMeta& active = metas_.at(*st.activeCandidate);
        if (st.chain.tipId() != *active.block->parentId) {
            active.aborted = true; // stale work, discarded without broadcast
            metrics_.staleWork++;
            st.activeCandidate.reset();
            scheduleMining(node, now);
        }
        return;
    }
    scheduleMining(node, now);
}

void Emulation::onVoteArrival(const Event& e) {
    const auto& vote = std::get<VoteArrival>(e.payload);
    auto it = metas_.find(vote.blockId);
    if (it == metas_.end() || !it->second.broadcast || it->second.owner != e.targetNode) {
        metrics_.unknownVotes++;
        return;
    }
    BlockMeta& meta = it->second;
    meta.votes++;
    if (meta.committed || 2ull * meta.votes <= config_.nodeCount) return;

    // The creator never declares commitment for a block that conflicts with a
    // commitment it has already observed.
    uint64_t anchor = nodes_[meta.owner].anchorId;
    uint64_t id = meta.block->blockId;
    if (!globalChainContains(id, anchor) && !globalChainContains(anchor, id)) return;
    commitBlock(meta, e.timestampMs);
}

void Emulation::commitBlock(BlockMeta& meta, double now) {
    meta.committed = true;
    metrics_.blocksCommitted++;
    committedTxns_ = std::max(committedTxns_, meta.watermark);
    metrics_.txnsCommitted = committedTxns_;

    uint64_t id = meta.block->blockId;
    if (meta.block->depth > committedDeepestDepth_) {
        if (!globalChainContains(id, committedDeepestId_)) metrics_.safetyViolations++;
        committedDeepestId_ = id;
        committedDeepestDepth_ = meta.block->depth;
    } else if (!globalChainContains(committedDeepestId_, id)) {
        metrics_.safetyViolations++;
    }

    applyCommitObservation(meta.owner, id, now);
    broadcast(queue_, meta.owner, BlockCommitted{id}, config_.nodeCount, config_.latency,
              rngLatency_, now);
    appendMetricsRow(now);
}

void Emulation::onBlockCommitted(const Event& e) {
    applyCommitObservation(e.targetNode, std::get<BlockCommitted>(e.payload).blockId,
                           e.timestampMs);
}

void Emulation::applyCommitObservation(uint32_t node, uint64_t blockId, double now) {
    NodeState& st = nodes_[node];
    if (!st.chain.contains(blockId)) {
        st.pendingCommitObs.push_back(blockId);
        return;
    }
    uint32_t depth = st.chain.find(blockId)->depth;
    if (depth <= st.anchorDepth && blockId != st.chain.genesisId()) return;
    st.anchorId = blockId;
    st.anchorDepth = depth;
    bool tipMoved = st.chain.setRequiredAncestor(blockId);
    if (tipMoved) voteTipPath(node, now);
    retargetAfterTipChange(node, now);
}

bool Emulation::globalChainContains(uint64_t descendantId, uint64_t ancestorId) const {
    auto anc = metas_.find(ancestorId);
    auto cur = metas_.find(descendantId);
    if (anc == metas_.end() || cur == metas_.end()) return false;
    uint32_t target = anc->second.block->depth;
    const BlockMeta* m = &cur->second;
    while (m->block->depth > target) {
        auto next = metas_.find(*m->block->parentId);
        if (next == metas_.end()) return false;
        m = &next->second;
    }
    return m->block->blockId == ancestorId;
}

std::shared_ptr<const Block> Emulation::blockById(uint64_t id) const {
    auto it = metas_.find(id);
    return it == metas_.end() ? nullptr : it->second.block;
}

uint32_t Emulation::votesFor(uint64_t blockId) const {
    auto it = metas_.find(blockId);
    return it == metas_.end() ? 0 : it->second.votes;
}

bool Emulation::isCommitted(uint64_t blockId) const {
    auto it = metas_.find(blockId);
    return it != metas_.end() && it->second.committed;
}

bool Emulation::nodeVoted(uint32_t node, uint64_t blockId) const {
    auto it = metas_.find(blockId);
    if (it == metas_.end() || it->second.arrivalIdx < 0) return false;
    return hasVotedIdx(node, it->second.arrivalIdx);
}

uint64_t Emulation::mempoolSize(uint32_t node) const {
    uint64_t tipW = metas_.at(nodes_[node].chain.tipId()).watermark;
    return submitted_.size() - tipW;
}

bool Emulation::headerOnlyEligible(uint32_t node, uint64_t blockId) const {
    auto it = metas_.find(blockId);
    if (it == metas_.end()) return false;
    return it->second.committed && !nodeVoted(node, blockId);
}

RunMetrics runEmulation(const SimConfig& config, ConsensusProvider& provider,
                        const DifficultyTimeMap* map) {
    Emulation emu(config, provider, map);
    return emu.run();
}

} // namespace blocklite
