#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "blocklite/proof.hpp"

namespace blocklite {

struct Transaction {
    uint64_t txnId = 0;
    uint64_t creatorId = 0;
    double creationTime = 0; // simulated ms
    uint32_t payloadSize = 0;

    bool operator==(const Transaction&) const = default;
};

inline constexpr char kZeroHash[] =
    "0000000000000000000000000000000000000000000000000000000000000000";

// Chain element. Immutable once appended; child links and bookkeeping live in
// the ChainStore so block objects can be shared across many per-node views.
struct Block {
    uint64_t blockId = 0;
    double creationTime = 0; // simulated ms
    uint64_t creatorId = 0;
    std::optional<uint64_t> parentId; // absent for genesis
    uint32_t depth = 0;
    std::string previousHash; // parent header hash, 64 zeros for genesis
    std::vector<Transaction> txnList;
    Proof proof;

    // Set only on header-only records loaded from disk, where the transaction
    // list is gone but its digest must keep the header hash reproducible.
    std::string storedTxnDigestHex;

    bool operator==(const Block&) const = default;
};

// Deterministic header serialization (proof excluded): length-prefixed
// blockId, creatorId, creationTime, previousHash, depth, txn digest. The txn
// digest hashes the comma-joined txnIds in list order.
std::vector<uint8_t> canonicalHeaderBytes(const Block& b);
std::string txnDigestHex(const Block& b);
std::string computeHeaderHash(const Block& b); // sha256Hex(canonicalHeaderBytes)

Block makeGenesisBlock();

enum class AppendOutcome { ExtendedTip, CreatedFork, Orphaned, Rejected };

struct AppendResult {
    AppendOutcome outcome = AppendOutcome::Rejected;
    bool tipChanged = false;
    std::vector<uint64_t> promoted; // orphans linked by this append, in link order
    std::string rejectReason;
};

// Per-node chain view: blocks by id, longest-chain tip tracking with
// first-seen tie-breaking, an orphan buffer for blocks that arrive before
// their parent, and an optional finality anchor the tip may never abandon.
class ChainStore {
public:
    explicit ChainStore(std::shared_ptr<const Block> genesis);

    // Validates parent hash and depth, links the block, re-evaluates the tip
    // and promotes any waiting orphans. headerHashHint, when given, must be
    // the block's header hash and skips recomputing it.
    AppendResult append(std::shared_ptr<const Block> b,
                        const std::array<uint8_t, 32>* headerHashHint = nullptr);

    std::shared_ptr<const Block> find(uint64_t id) const;
    bool contains(uint64_t id) const;
    std::vector<uint64_t> childrenOf(uint64_t id) const;
    size_t numChild(uint64_t id) const;

    uint64_t genesisId() const { return genesisId_; }
    uint64_t tipId() const { return tipId_; }
    uint32_t tipDepth() const { return tipDepth_; }
    size_t blockCount() const { return entries_.size(); }
    size_t orphanCount() const;

    // Path from genesis to tip; length = tip depth + 1.
    std::vector<uint64_t> longestChain() const;

    // True iff ancestorId lies on the parent path of descendantId (inclusive).
    bool chainContains(uint64_t descendantId, uint64_t ancestorId) const;

    // Finality anchor: future tips must contain this block. If the current
    // tip does not, the tip moves to the deepest known descendant of the
    // anchor (earliest-seen on ties). Returns true if the tip changed.
    bool setRequiredAncestor(uint64_t id);
    uint64_t requiredAncestor() const { return requiredAncestorId_; }

    std::vector<uint64_t> linkedIds() const;  // sorted
    std::vector<std::shared_ptr<const Block>> orphanBlocks() const; // sorted by id

    // Swaps a linked block's payload without revalidation. Test seam for
    // integrity checks; never used by the engine.
    void replaceBlockUnchecked(std::shared_ptr<const Block> b);

private:
    struct Record {
        std::shared_ptr<const Block> block;
        std::array<uint8_t, 32> headerHash;
        uint64_t firstChild = 0; // 0 = none (0 is never a child id)
        std::vector<uint64_t> moreChildren;
        uint32_t seq = 0; // append order, breaks equal-depth ties
    };

    void addChild(Record& parent, uint64_t childId);
    void maybeAdoptTip(uint64_t id, const Record& rec, AppendResult& result);
    void linkBlock(std::shared_ptr<const Block> b, const std::array<uint8_t, 32>& hash,
                   Record& parentRec, AppendResult& result);

    std::unordered_map<uint64_t, Record> entries_;
    std::unordered_map<uint64_t, std::vector<std::shared_ptr<const Block>>> orphans_;
    uint64_t genesisId_ = 0;
    uint64_t tipId_ = 0;
    uint32_t tipDepth_ = 0;
    uint64_t requiredAncestorId_ = 0;
    uint32_t nextSeq_ = 0;
};

// Proof acceptance hook for integrity checks; the default checks structural
// self-consistency per proof kind without a difficulty context.
using ProofCheck = std::function<bool(const Block&)>;
bool defaultProofCheck(const Block& b);

// True iff every parent link matches a freshly recomputed parent header hash,
// depths are consistent, and every linked block passes the proof check.
bool verifyChainIntegrity(const ChainStore& store, const ProofCheck& check = defaultProofCheck);

struct PersistOptions {
    // Blocks mapped to true are written header-only: the txn field holds
    // "@<txnDigest>" instead of the id list.
    std::function<bool(uint64_t blockId)> headerOnly;
};

// Writes ledger_<nodeId>.txt: "# blocklite-ledger v1 node=<id>" then one
// block per line sorted by id, "blockID|creatorID|creationTime|parentID|
// depth|previousHash|proofRendering|txnId,txnId,...". Orphans included.
std::filesystem::path persistLedger(const ChainStore& store, uint64_t nodeId,
                                    const std::filesystem::path& directory,
                                    const PersistOptions& opt = {});

struct LoadedLedger {
    uint64_t nodeId = 0;
    ChainStore store;
};

// Rebuilds a store from a ledger file, re-validating hashes via append; a
// record whose recomputed hashes mismatch fails with its line number.
LoadedLedger loadLedger(const std::filesystem::path& path);

} // namespace blocklite
