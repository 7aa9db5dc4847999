#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <random>

#include "blocklite/consensus.hpp"
#include "blocklite/ledger.hpp"
#include "blocklite/sha256.hpp"

using namespace blocklite;
namespace fs = std::filesystem;

namespace {

Transaction txn(uint64_t id) {
    Transaction t;
    t.txnId = id;
    t.creatorId = id % 3;
    t.creationTime = static_cast<double>(id) * 10.0;
    t.payloadSize = 250;
    return t;
}

// Child of `parent` with a real proof solved at the given difficulty.
std::shared_ptr<const Block> makeChild(const Block& parent, uint64_t id, uint64_t creator,
                                       std::vector<Transaction> txns,
                                       const char* difficulty = "0.0") {
    auto b = std::make_shared<Block>();
    b->blockId = id;
    b->creationTime = parent.creationTime + 1000;
    b->creatorId = creator;
    b->parentId = parent.blockId;
    b->depth = parent.depth + 1;
    b->previousHash = computeHeaderHash(parent);
    b->txnList = std::move(txns);
    b->proof = generateProofReal(*b, parseDifficulty(difficulty));
    return b;
}

struct TestChain {
    std::shared_ptr<const Block> genesis;
    std::vector<std::shared_ptr<const Block>> blocks; // genesis excluded
};

// Linear chain of `length` blocks on top of genesis.
TestChain makeLinearChain(int length, const char* difficulty = "0.0") {
    TestChain chain;
    chain.genesis = std::make_shared<const Block>(makeGenesisBlock());
    const Block* parent = chain.genesis.get();
    uint64_t nextTxn = 0;
    for (int i = 0; i < length; ++i) {
        std::vector<Transaction> txns{txn(nextTxn), txn(nextTxn + 1)};
        nextTxn += 2;
        auto b = makeChild(*parent, static_cast<uint64_t>(i + 1), (i % 4), std::move(txns),
                           difficulty);
        chain.blocks.push_back(b);
        parent = b.get();
    }
    return chain;
}

bool sameStore(const ChainStore& a, const ChainStore& b) {
    if (a.linkedIds() != b.linkedIds()) return false;
    if (a.tipId() != b.tipId() || a.tipDepth() != b.tipDepth()) return false;
    for (uint64_t id : a.linkedIds()) {
        if (!(*a.find(id) == *b.find(id))) return false;
        auto ca = a.childrenOf(id), cb = b.childrenOf(id);
        std::sort(ca.begin(), ca.end());
        std::sort(cb.begin(), cb.end());
        if (ca != cb) return false;
    }
    return true;
}

fs::path tmpDir(const char* name) {
    auto dir = fs::temp_directory_path() / "blocklite_test" / name;
    fs::create_directories(dir);
    return dir;
}

} // namespace

TEST_SUITE("ledger") {

TEST_CASE("canonical header bytes are deterministic and txn-order sensitive") {
    auto chain = makeLinearChain(1);
    const Block& b = *chain.blocks[0];
    CHECK(canonicalHeaderBytes(b) == canonicalHeaderBytes(b));

    Block swapped = b;
    std::swap(swapped.txnList[0], swapped.txnList[1]);
    CHECK(canonicalHeaderBytes(swapped) != canonicalHeaderBytes(b));
    CHECK(computeHeaderHash(swapped) != computeHeaderHash(b));
}

TEST_CASE("canonical header byte layout is frozen") {
    Block b;
    b.blockId = 42;
    b.creationTime = 1500.5;
    b.creatorId = 7;
    b.parentId = 41;
    b.depth = 3;
    b.previousHash = std::string(64, 'a');
    b.txnList = {txn(1), txn(2), txn(30)};

    std::string expectedTxnDigest = sha256Hex("1,2,30");
    CHECK(txnDigestHex(b) == expectedTxnDigest);

    // length-prefixed fields: id, creator, time, previousHash, depth, txnDigest
    std::string layout = "2:421:76:1500.564:" + b.previousHash + "1:364:" + expectedTxnDigest;
    auto bytes = canonicalHeaderBytes(b);
    CHECK(std::string(bytes.begin(), bytes.end()) == layout);

    // Golden digest, generated once from this layout and frozen.
    CHECK(computeHeaderHash(b) == sha256Hex(layout));
}

TEST_CASE("genesis block shape") {
    Block g = makeGenesisBlock();
    CHECK(g.depth == 0);
    CHECK_FALSE(g.parentId.has_value());
    CHECK(g.previousHash == kZeroHash);
    CHECK(g.proof.kind == ProofKind::Custom);
    CHECK(defaultProofCheck(g));
}

TEST_CASE("append outcomes: extend, fork, orphan, reject") {
    auto chain = makeLinearChain(3);
    ChainStore store(chain.genesis);

    auto r1 = store.append(chain.blocks[0]);
    CHECK(r1.outcome == AppendOutcome::ExtendedTip);
    CHECK(store.tipId() == chain.blocks[0]->blockId);
    CHECK(store.tipDepth() == 1);

    // Orphan: grandchild before child, promoted when the child arrives.
    auto r3 = store.append(chain.blocks[2]);
    CHECK(r3.outcome == AppendOutcome::Orphaned);
    CHECK(store.orphanCount() == 1);
    auto r2 = store.append(chain.blocks[1]);
    CHECK(r2.outcome == AppendOutcome::ExtendedTip);
    CHECK(r2.promoted == std::vector<uint64_t>{chain.blocks[2]->blockId});
    CHECK(store.orphanCount() == 0);
    CHECK(store.tipDepth() == 3);

    // Fork: second child of genesis; tip keeps the first-seen branch.
    auto fork = makeChild(*chain.genesis, 77, 2, {txn(100), txn(101)});
    auto rf = store.append(fork);
    CHECK(rf.outcome == AppendOutcome::CreatedFork);
    CHECK(store.numChild(chain.genesis->blockId) == 2);
    CHECK(store.tipId() == chain.blocks[2]->blockId);

    // Rejections: duplicate id, wrong previousHash, wrong depth.
    CHECK(store.append(chain.blocks[1]).outcome == AppendOutcome::Rejected);
    auto bad = std::make_shared<Block>(*chain.blocks[1]);
    bad->blockId = 500;
    bad->previousHash = std::string(64, '0');
    CHECK(store.append(bad).outcome == AppendOutcome::Rejected);
    auto badDepth = std::make_shared<Block>(*chain.blocks[1]);
    badDepth->blockId = 501;
    badDepth->depth = 9;
    CHECK(store.append(badDepth).outcome == AppendOutcome::Rejected);
}

TEST_CASE("append second child of the tip parent keeps first-seen tip") {
    auto chain = makeLinearChain(1);
    ChainStore store(chain.genesis);
    store.append(chain.blocks[0]);
    auto sibling = makeChild(*chain.genesis, 99, 1, {txn(50), txn(51)});
    auto r = store.append(sibling);
    CHECK(r.outcome == AppendOutcome::CreatedFork);
    CHECK_FALSE(r.tipChanged);
    CHECK(store.tipId() == chain.blocks[0]->blockId);
    CHECK(store.numChild(chain.genesis->blockId) == 2);
}

TEST_CASE("longest chain selection") {
    auto chain = makeLinearChain(2);
    ChainStore store(chain.genesis);
    CHECK(store.longestChain() == std::vector<uint64_t>{chain.genesis->blockId});

    store.append(chain.blocks[0]);
    store.append(chain.blocks[1]);
    CHECK(store.longestChain() ==
          std::vector<uint64_t>{0, chain.blocks[0]->blockId, chain.blocks[1]->blockId});

    // A deeper side branch wins.
    auto s1 = makeChild(*chain.genesis, 10, 1, {txn(200), txn(201)});
    auto s2 = makeChild(*s1, 11, 1, {txn(202), txn(203)});
    auto s3 = makeChild(*s2, 12, 1, {txn(204), txn(205)});
    store.append(s1);
    store.append(s2);
    auto r = store.append(s3);
    CHECK(r.outcome == AppendOutcome::ExtendedTip);
    CHECK(store.longestChain() == std::vector<uint64_t>{0, 10, 11, 12});
    CHECK(store.longestChain().size() == store.tipDepth() + 1);
}

TEST_CASE("append order does not matter") {
    // Tree: genesis -> a -> b -> c and genesis -> f1 -> f2 (fork).
    auto chain = makeLinearChain(3);
    auto f1 = makeChild(*chain.genesis, 20, 2, {txn(300), txn(301)});
    auto f2 = makeChild(*f1, 21, 2, {txn(302), txn(303)});
    std::vector<std::shared_ptr<const Block>> blocks = chain.blocks;
    blocks.push_back(f1);
    blocks.push_back(f2);

    ChainStore reference(chain.genesis);
    for (const auto& b : blocks) reference.append(b);

    std::mt19937_64 rng(5);
    for (int round = 0; round < 30; ++round) {
        auto shuffled = blocks;
        std::shuffle(shuffled.begin(), shuffled.end(), rng);
        ChainStore store(chain.genesis);
        for (const auto& b : shuffled) {
            auto res = store.append(b);
            CHECK(res.outcome != AppendOutcome::Rejected);
        }
        CHECK(store.orphanCount() == 0);
        CHECK(sameStore(store, reference));
        for (uint64_t id : store.linkedIds())
            CHECK(store.numChild(id) == store.childrenOf(id).size());
    }
}

TEST_CASE("required ancestor pins the tip to the committed branch") {
    auto chain = makeLinearChain(1);
    ChainStore store(chain.genesis);
    store.append(chain.blocks[0]);
    auto s1 = makeChild(*chain.genesis, 30, 1, {txn(400), txn(401)});
    auto s2 = makeChild(*s1, 31, 1, {txn(402), txn(403)});
    store.append(s1);
    store.append(s2);
    CHECK(store.tipId() == 31); // deeper side branch took the tip

    // Anchoring to the first branch forces the tip back onto it.
    bool moved = store.setRequiredAncestor(chain.blocks[0]->blockId);
    CHECK(moved);
    CHECK(store.tipId() == chain.blocks[0]->blockId);

    // Deeper blocks off the anchored branch no longer move the tip.
    auto s3 = makeChild(*s2, 32, 1, {txn(404), txn(405)});
    auto r = store.append(s3);
    CHECK(r.outcome == AppendOutcome::CreatedFork);
    CHECK(store.tipId() == chain.blocks[0]->blockId);
}

TEST_CASE("integrity holds until any committed field mutates") {
    auto chain = makeLinearChain(4, "1.0");
    ChainStore store(chain.genesis);
    for (const auto& b : chain.blocks) store.append(b);
    REQUIRE(verifyChainIntegrity(store));

    auto mutate = [&](uint64_t id, auto&& fn) {
        ChainStore copy(chain.genesis);
        for (const auto& b : chain.blocks) copy.append(b);
        auto clone = std::make_shared<Block>(*copy.find(id));
        fn(*clone);
        copy.replaceBlockUnchecked(clone);
        return verifyChainIntegrity(copy);
    };

    // Interior block: children notice the changed header.
    CHECK_FALSE(mutate(2, [](Block& b) { b.creationTime += 1; }));
    CHECK_FALSE(mutate(2, [](Block& b) { b.txnList[0].txnId += 1; }));
    CHECK_FALSE(mutate(2, [](Block& b) { b.creatorId += 1; }));
    // Childless block: caught by its own real proof.
    CHECK_FALSE(mutate(4, [](Block& b) { b.creationTime += 1; }));
    CHECK_FALSE(mutate(4, [](Block& b) { b.proof.nonce += 1; }));
    CHECK_FALSE(mutate(4, [](Block& b) { b.proof.digestHex[0] ^= 1; }));
}

TEST_CASE("ledger files round-trip and reject corruption") {
    auto chain = makeLinearChain(5);
    ChainStore store(chain.genesis);
    for (const auto& b : chain.blocks) store.append(b);

    auto dir = tmpDir("persist");
    auto path = persistLedger(store, 3, dir);
    CHECK(path.filename() == "ledger_3.txt");

    auto loaded = loadLedger(path);
    CHECK(loaded.nodeId == 3);
    // Loss-free at the record level: structure, hashes and txn ids survive
    // (txn metadata beyond the id is not part of the file format).
    CHECK(loaded.store.linkedIds() == store.linkedIds());
    CHECK(loaded.store.tipId() == store.tipId());
    for (uint64_t id : store.linkedIds()) {
        CHECK(loaded.store.find(id)->previousHash == store.find(id)->previousHash);
        CHECK(loaded.store.find(id)->proof == store.find(id)->proof);
        CHECK(loaded.store.find(id)->txnList.size() == store.find(id)->txnList.size());
        CHECK(txnDigestHex(*loaded.store.find(id)) == txnDigestHex(*store.find(id)));
    }
    CHECK(verifyChainIntegrity(loaded.store));

    // Identical content for two fully synced nodes, modulo the node id line.
    auto path2 = persistLedger(store, 4, dir);
    std::ifstream f1(path), f2(path2);
    std::string l1, l2;
    std::getline(f1, l1);
    std::getline(f2, l2);
    CHECK(l1 != l2); // header carries the node id
    std::string rest1((std::istreambuf_iterator<char>(f1)), {});
    std::string rest2((std::istreambuf_iterator<char>(f2)), {});
    CHECK(rest1 == rest2);

    // Round-trip through a second persist is byte-identical.
    auto repath = persistLedger(loaded.store, 3, tmpDir("persist2"));
    std::ifstream fa(path), fb(repath);
    std::string all1((std::istreambuf_iterator<char>(fa)), {});
    std::string all2((std::istreambuf_iterator<char>(fb)), {});
    CHECK(all1 == all2);

    // Corrupt one hex digit of a previousHash: the loader must refuse.
    std::ifstream in(path);
    std::string content((std::istreambuf_iterator<char>(in)), {});
    in.close();
    auto pos = content.find('|' + chain.blocks[2]->previousHash + '|');
    REQUIRE(pos != std::string::npos);
    content[pos + 1] = content[pos + 1] == 'a' ? 'b' : 'a';
    auto corrupt = dir / "corrupt.txt";
    std::ofstream(corrupt, std::ios::trunc) << content;
    CHECK_THROWS_WITH_AS(loadLedger(corrupt), doctest::Contains("line"), std::runtime_error);
}

TEST_CASE("orphans persist and reload as orphans") {
    auto chain = makeLinearChain(3);
    ChainStore store(chain.genesis);
    store.append(chain.blocks[0]);
    store.append(chain.blocks[2]); // parent never arrives
    CHECK(store.orphanCount() == 1);

    auto dir = tmpDir("orphans");
    auto path = persistLedger(store, 0, dir);
    auto loaded = loadLedger(path);
    CHECK(loaded.store.orphanCount() == 1);
    CHECK(loaded.store.blockCount() == 2);
}

TEST_CASE("header-only persistence keeps the hash chain verifiable") {
    auto chain = makeLinearChain(4);
    ChainStore store(chain.genesis);
    for (const auto& b : chain.blocks) store.append(b);

    PersistOptions opt;
    opt.headerOnly = [](uint64_t id) { return id == 2; };
    auto dir = tmpDir("partial");
    auto path = persistLedger(store, 9, dir, opt);

    std::ifstream f(path);
    std::string content((std::istreambuf_iterator<char>(f)), {});
    CHECK(content.find("|@") != std::string::npos);

    auto loaded = loadLedger(path);
    CHECK(loaded.store.blockCount() == store.blockCount());
    CHECK(loaded.store.find(2)->txnList.empty());
    CHECK(loaded.store.find(2)->storedTxnDigestHex == txnDigestHex(*store.find(2)));
    CHECK(verifyChainIntegrity(loaded.store, [](const Block& b) {
        // Real proofs of header-only rows still bind the header hash.
        return defaultProofCheck(b);
    }));
}

} // TEST_SUITE("ledger")
