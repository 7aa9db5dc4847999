#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>

#include "blocklite/engine.hpp"
#include "blocklite/report.hpp"

using namespace blocklite;
namespace fs = std::filesystem;

namespace {

DifficultyTimeMap replayMap(const char* d, double mean, double stddev, double lo) {
    DifficultyTimeMap map;
    SolveTimeStats s;
    s.difficulty = parseDifficulty(d);
    s.meanMs = mean;
    s.stddevMs = stddev;
    s.samples = 100;
    s.minMs = lo;
    s.maxMs = mean + 4 * stddev;
    map.insert(s);
    return map;
}

// Real nonce search plus a scripted constant duration, so real and replay
// runs can be forced onto identical event timings.
struct FixedTimeRealProvider : ConsensusProvider {
    double fixedMs;
    explicit FixedTimeRealProvider(double ms) : fixedMs(ms) {}
    std::string name() const override { return "fixed-real"; }
    Proof generateProof(const Block& candidate, const NodeContext& ctx) override {
        Proof p = generateProofReal(candidate, ctx.difficulty, ctx.parallelSolve);
        p.claimedSolveMs = fixedMs;
        return p;
    }
    bool verifyProof(const Block& b, const Proof& p, const NodeContext& ctx) const override {
        return p.kind == ProofKind::RealPow && blocklite::verifyProof(b, p, ctx.difficulty);
    }
};

SimConfig baseConfig() {
    SimConfig c;
    c.nodeCount = 1;
    c.totalTransactions = 10;
    c.blockSizeTxns = 10;
    c.difficulty = parseDifficulty("1.0");
    c.mode = Mode::Replay;
    c.seed = 7;
    c.txnRatePerSec = 1000;
    c.latency = LatencyModel{100, 20, 1};
    return c;
}

// First block at the given depth, scanning small ids.
uint64_t findBlockAtDepth(const Emulation& emu, uint32_t depth, uint64_t maxId = 1000) {
    for (uint64_t id = 1; id <= maxId; ++id) {
        auto b = emu.blockById(id);
        if (b && b->depth == depth && emu.votesFor(id) > 0) return id;
    }
    return 0;
}

} // namespace

TEST_SUITE("engine") {

TEST_CASE("config validation") {
    SimConfig c = baseConfig();
    c.nodeCount = 0;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    c = baseConfig();
    c.blockSizeTxns = 0;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    c = baseConfig();
    c.mode = Mode::Custom;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument); // no provider name
    CHECK(baseConfig().resolvedProviderName() == "nakamoto-replay");
}

TEST_CASE("replay mode refuses to start without a calibrated difficulty") {
    auto provider = makeProvider("nakamoto-replay");
    SimConfig c = baseConfig();
    CHECK_THROWS_AS(Emulation(c, *provider, nullptr), CalibrationMissError);
    auto map = replayMap("2.0", 100, 0, 100); // wrong difficulty
    CHECK_THROWS_AS(Emulation(c, *provider, &map), CalibrationMissError);
}

TEST_CASE("single miner, one full block, real mode") {
    auto provider = makeProvider("nakamoto-real");
    SimConfig c = baseConfig();
    c.mode = Mode::Real;
    c.difficulty = parseDifficulty("0.0");
    auto metrics = runEmulation(c, *provider);

    CHECK(metrics.blocksCommitted == 1);
    CHECK(metrics.blocksFormed == 1);
    CHECK(metrics.txnsCommitted == 10);
    CHECK(metrics.forksObserved == 0);
    CHECK(metrics.safetyViolations == 0);
    CHECK(metrics.eventsPushed == metrics.eventsProcessed);
}

TEST_CASE("single miner ledger holds genesis plus one block") {
    auto provider = makeProvider("nakamoto-real");
    SimConfig c = baseConfig();
    c.mode = Mode::Real;
    c.difficulty = parseDifficulty("0.0");
    Emulation emu(c, *provider);
    emu.run();
    const auto& chain = emu.nodeChain(0);
    CHECK(chain.blockCount() == 2);
    CHECK(chain.longestChain().size() == 2);
    CHECK(verifyChainIntegrity(chain));
    CHECK(emu.mempoolSize(0) == 0);
}

TEST_CASE("replay with stddev 0 completes mining exactly at now + meanMs") {
    auto provider = makeProvider("nakamoto-replay");
    auto map = replayMap("1.0", 250, 0, 250);
    SimConfig c = baseConfig();
    c.latency.stddevMs = 0;
    Emulation emu(c, *provider, &map);
    auto metrics = emu.run();

    // Tenth txn arrives at 9 ms (1 per ms from t=0); mining starts there.
    auto tip = emu.nodeChain(0).find(emu.nodeChain(0).tipId());
    CHECK(tip->creationTime == 9.0);
    REQUIRE(metrics.rows.size() >= 2);
    CHECK(metrics.rows[1].simulatedMs == 259.0); // commit at completion, single node
    CHECK(metrics.blocksCommitted == 1);
}

TEST_CASE("fixed seed reproduces chains, reports and ledgers byte for byte") {
    auto provider = makeProvider("nakamoto-replay");
    auto map = replayMap("1.0", 400, 60, 260);
    SimConfig c = baseConfig();
    c.nodeCount = 5;
    c.totalTransactions = 60;
    c.seed = 99;

    auto dirA = fs::temp_directory_path() / "blocklite_test" / "detA";
    auto dirB = fs::temp_directory_path() / "blocklite_test" / "detB";
    fs::remove_all(dirA);
    fs::remove_all(dirB);

    Emulation a(c, *provider, &map);
    auto ma = a.run();
    Emulation b(c, *provider, &map);
    auto mb = b.run();

    CHECK(ma.chainDigest == mb.chainDigest);
    CHECK(ma.blocksCommitted == mb.blocksCommitted);
    CHECK(ma.txnsCommitted == mb.txnsCommitted);
    CHECK(ma.simulatedMs == mb.simulatedMs);
    CHECK(ma.staleWork == mb.staleWork);
    REQUIRE(ma.rows.size() == mb.rows.size());
    for (size_t i = 0; i < ma.rows.size(); ++i) {
        CHECK(ma.rows[i].simulatedMs == mb.rows[i].simulatedMs);
        CHECK(ma.rows[i].blocksCommitted == mb.rows[i].blocksCommitted);
        CHECK(ma.rows[i].txnsCommitted == mb.rows[i].txnsCommitted);
    }
    for (uint32_t n = 0; n < c.nodeCount; ++n) {
        persistLedger(a.nodeChain(n), n, dirA);
        persistLedger(b.nodeChain(n), n, dirB);
        std::ifstream fa(dirA / ("ledger_" + std::to_string(n) + ".txt"));
        std::ifstream fb(dirB / ("ledger_" + std::to_string(n) + ".txt"));
        std::string ca((std::istreambuf_iterator<char>(fa)), {});
        std::string cb((std::istreambuf_iterator<char>(fb)), {});
        CHECK(ca == cb);
        CHECK(!ca.empty());
    }
}

TEST_CASE("strict majority commitment: 5, 4 and 1 nodes") {
    // Wide solve spread with near-instant delivery: one winner mines, the
    // rest abandon, and the votes tally one at a time at the creator.
    for (uint32_t nodeCount : {5u, 4u}) {
        CAPTURE(nodeCount);
        auto provider = makeProvider("nakamoto-replay");
        auto map = replayMap("1.0", 1000, 200, 300);
        SimConfig c = baseConfig();
        c.nodeCount = nodeCount;
        c.totalTransactions = 10;
        c.seed = 21;
        c.latency = LatencyModel{1, 0, 0.5};
        Emulation emu(c, *provider, &map);

        while (emu.metrics().blocksFormed == 0) REQUIRE(emu.step());
        uint64_t blockId = findBlockAtDepth(emu, 1);
        REQUIRE(blockId != 0);
        CHECK(emu.votesFor(blockId) == 1); // creator's implicit vote
        CHECK_FALSE(emu.isCommitted(blockId));

        // Commit must land exactly when the tally reaches 3 (strict majority
        // of 5 and of 4), not at 2.
        while (!emu.isCommitted(blockId)) {
            CHECK(emu.votesFor(blockId) < 3);
            REQUIRE(emu.step());
        }
        CHECK(emu.votesFor(blockId) == 3);
        emu.run();
        CHECK(emu.metrics().safetyViolations == 0);
    }

    // Single node: its own implicit vote is a strict majority of 1.
    auto provider = makeProvider("nakamoto-replay");
    auto map = replayMap("1.0", 1000, 200, 300);
    SimConfig c = baseConfig();
    c.totalTransactions = 10;
    Emulation emu(c, *provider, &map);
    while (emu.metrics().blocksFormed == 0) REQUIRE(emu.step());
    uint64_t blockId = findBlockAtDepth(emu, 1);
    CHECK(emu.isCommitted(blockId));
    CHECK(emu.votesFor(blockId) == 1);
}

TEST_CASE("two nodes race the same parent: earlier sample wins, loser discards") {
    auto provider = makeProvider("nakamoto-replay");
    auto map = replayMap("1.0", 1000, 200, 300);
    SimConfig c = baseConfig();
    c.nodeCount = 2;
    c.totalTransactions = 100;
    c.seed = 5;
    c.latency = LatencyModel{1, 0, 0.5};
    auto metrics = runEmulation(c, *provider, &map);

    CHECK(metrics.blocksCommitted == 10);
    CHECK(metrics.blocksFormed == 10); // one winner per wave
    CHECK(metrics.txnsCommitted == 100);
    CHECK(metrics.forksObserved == 0);
    CHECK(metrics.staleWork >= 5); // losers abandoned stale work
    CHECK(metrics.safetyViolations == 0);
}

TEST_CASE("symmetric duel forks and never reaches majority") {
    // stddev 0 makes both miners tie forever: every wave creates a sibling
    // pair and each block holds only its creator's vote.
    auto provider = makeProvider("nakamoto-replay");
    auto map = replayMap("1.0", 300, 0, 300);
    SimConfig c = baseConfig();
    c.nodeCount = 2;
    c.totalTransactions = 40;
    c.latency = LatencyModel{100, 0, 1};
    auto metrics = runEmulation(c, *provider, &map);

    CHECK(metrics.forksObserved >= 1);
    CHECK(metrics.blocksCommitted == 0);
    CHECK(metrics.safetyViolations == 0);
    CHECK(metrics.eventsPushed == metrics.eventsProcessed);
}

TEST_CASE("forks resolve by longest chain and the committed prefix is shared") {
    // Solve times dominate latency (the proof-of-work regime), but the
    // spread still produces occasional sibling races to resolve.
    auto provider = makeProvider("nakamoto-replay");
    auto map = replayMap("1.0", 300, 120, 60);
    SimConfig c = baseConfig();
    c.nodeCount = 5;
    c.totalTransactions = 200;
    c.seed = 31;
    c.txnRatePerSec = 2000;
    c.latency = LatencyModel{30, 20, 1};
    Emulation emu(c, *provider, &map);
    auto metrics = emu.run();

    CHECK(metrics.blocksCommitted >= 10);
    CHECK(metrics.safetyViolations == 0);
    CHECK(metrics.eventsPushed == metrics.eventsProcessed);

    // All nodes share the committed prefix.
    auto reference = emu.nodeChain(0).longestChain();
    for (uint32_t n = 1; n < c.nodeCount; ++n) {
        auto chain = emu.nodeChain(n).longestChain();
        size_t shared = std::min({chain.size(), reference.size(),
                                  static_cast<size_t>(metrics.committedDepth) + 1});
        for (size_t i = 0; i < shared; ++i) CHECK(chain[i] == reference[i]);
    }

    // No transaction appears twice across any longest chain.
    for (uint32_t n = 0; n < c.nodeCount; ++n) {
        std::set<uint64_t> seen;
        const auto& chain = emu.nodeChain(n);
        for (uint64_t id : chain.longestChain())
            for (const auto& t : chain.find(id)->txnList) {
                CHECK(seen.insert(t.txnId).second);
            }
    }

    // Liveness: committed blocks grow monotonically over simulated time.
    for (size_t i = 1; i < metrics.rows.size(); ++i) {
        CHECK(metrics.rows[i].simulatedMs >= metrics.rows[i - 1].simulatedMs);
        CHECK(metrics.rows[i].blocksCommitted >= metrics.rows[i - 1].blocksCommitted);
    }
    CHECK(metrics.rows.back().blocksCommitted == metrics.blocksCommitted);
    CHECK(metrics.rows.back().txnsCommitted == metrics.txnsCommitted);

    // Rerun: identical trace.
    Emulation again(c, *provider, &map);
    CHECK(again.run().chainDigest == metrics.chainDigest);
}

TEST_CASE("foreign and duplicate arrivals, unknown votes") {
    auto provider = makeProvider("nakamoto-replay");
    auto map = replayMap("1.0", 500, 100, 200);
    SimConfig c = baseConfig();
    c.nodeCount = 3;
    c.totalTransactions = 10;
    c.seed = 13;
    Emulation emu(c, *provider, &map);

    while (emu.metrics().blocksFormed == 0) REQUIRE(emu.step());
    uint64_t blockId = findBlockAtDepth(emu, 1);
    auto block = emu.blockById(blockId);
    REQUIRE(block);
    emu.run();

    uint64_t votesBefore = emu.votesFor(blockId);
    uint64_t invalidBefore = emu.metrics().invalidBlocks;
    size_t countBefore = emu.nodeChain(1).blockCount();

    // A block from outside the run: rejected and counted, never voted.
    auto foreign = std::make_shared<Block>(*block);
    foreign->blockId = 4242;
    foreign->proof.digestHex[0] ^= 1;
    emu.queue().push(emu.metrics().simulatedMs + 1, 1, BlockArrival{foreign});
    // Duplicate delivery of a block node 1 already holds: benign no-op.
    emu.queue().push(emu.metrics().simulatedMs + 2, 1, BlockArrival{block});
    // Vote for a block id nobody created.
    emu.queue().push(emu.metrics().simulatedMs + 3, 0, VoteArrival{999999, 1});
    while (emu.step()) {
    }

    CHECK(emu.metrics().invalidBlocks == invalidBefore + 1);
    CHECK(emu.nodeChain(1).blockCount() == countBefore);
    CHECK(emu.votesFor(blockId) == votesBefore);
    CHECK(emu.metrics().unknownVotes == 1);
}

TEST_CASE("real and replay modes produce identical topologies at equal times") {
    SimConfig c = baseConfig();
    c.nodeCount = 4;
    c.totalTransactions = 80;
    c.seed = 17;
    c.difficulty = parseDifficulty("0.0");

    FixedTimeRealProvider fixed(500.0);
    SimConfig creal = c;
    creal.mode = Mode::Custom;
    creal.providerName = "fixed-real";
    Emulation realRun(creal, fixed);
    auto mr = realRun.run();

    auto map = replayMap("0.0", 500, 0, 500);
    auto replay = makeProvider("nakamoto-replay");
    Emulation replayRun(c, *replay, &map);
    auto mp = replayRun.run();

    CHECK(mr.chainDigest == mp.chainDigest);
    CHECK(mr.blocksCommitted == mp.blocksCommitted);
    CHECK(mr.simulatedMs == mp.simulatedMs);
    CHECK(mr.invalidBlocks == 0);
    CHECK(mp.invalidBlocks == 0);
}

TEST_CASE("zero transactions drain immediately") {
    auto provider = makeProvider("nakamoto-replay");
    auto map = replayMap("1.0", 100, 0, 100);
    SimConfig c = baseConfig();
    c.totalTransactions = 0;
    auto metrics = runEmulation(c, *provider, &map);
    CHECK(metrics.blocksCommitted == 0);
    CHECK(metrics.txnsCommitted == 0);
    CHECK(metrics.simulatedMs == 0);
}

TEST_CASE("leftover transactions below block size stay pending") {
    auto provider = makeProvider("nakamoto-replay");
    auto map = replayMap("1.0", 100, 0, 100);
    SimConfig c = baseConfig();
    c.totalTransactions = 25; // 2 full blocks + 5 leftovers
    auto metrics = runEmulation(c, *provider, &map);
    CHECK(metrics.blocksCommitted == 2);
    CHECK(metrics.txnsCommitted == 20);
}

} // TEST_SUITE("engine")
