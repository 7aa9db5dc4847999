#include "blocklite/ledger.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <sstream>

#include "blocklite/puzzle.hpp"
#include "blocklite/sha256.hpp"
#include "blocklite/util.hpp"

namespace blocklite {

namespace {

constexpr uint64_t kNoChild = UINT64_MAX;

void appendField(std::vector<uint8_t>& out, std::string_view data) {
    std::string len = std::to_string(data.size());
    out.insert(out.end(), len.begin(), len.end());
    out.push_back(':');
    out.insert(out.end(), data.begin(), data.end());
}

std::array<uint8_t, 32> hashFromHex(std::string_view hex) {
    std::array<uint8_t, 32> out{};
    auto nibble = [](char c) -> int {
        if (c >= '0' && c <= '9') return c - '0';
        if (c >= 'a' && c <= 'f') return c - 'a' + 10;
        return -1;
    };
    if (hex.size() != 64) throw std::invalid_argument("expected 64 hex digits");
    for (size_t i = 0; i < 32; ++i) {
        int hi = nibble(hex[2 * i]), lo = nibble(hex[2 * i + 1]);
        if (hi < 0 || lo < 0) throw std::invalid_argument("bad hex digit");
        out[i] = static_cast<uint8_t>((hi << 4) | lo);
    }
    return out;
}

} // namespace

std::string txnDigestHex(const Block& b) {
    if (b.txnList.empty() && !b.storedTxnDigestHex.empty()) return b.storedTxnDigestHex;
    std::string joined;
    for (size_t i = 0; i < b.txnList.size(); ++i) {
        if (i) joined.push_back(',');
        joined += std::to_string(b.txnList[i].txnId);
    }
    return sha256Hex(joined);
}

std::vector<uint8_t> canonicalHeaderBytes(const Block& b) {
    std::vector<uint8_t> out;
    out.reserve(192);
    appendField(out, std::to_string(b.blockId));
    appendField(out, std::to_string(b.creatorId));
    appendField(out, textFromDouble(b.creationTime));
    appendField(out, b.previousHash);
    appendField(out, std::to_string(b.depth));
    appendField(out, txnDigestHex(b));
    return out;
}

std::string computeHeaderHash(const Block& b) {
    auto bytes = canonicalHeaderBytes(b);
    return sha256Hex(std::span<const uint8_t>(bytes.data(), bytes.size()));
}

Block makeGenesisBlock() {
    Block g;
    g.blockId = 0;
    g.creationTime = 0;
    g.creatorId = 0;
    g.depth = 0;
    g.previousHash = kZeroHash;
    g.proof.kind = ProofKind::Custom;
    g.proof.customData = "genesis";
    g.proof.digestHex = computeHeaderHash(g);
    return g;
}

ChainStore::ChainStore(std::shared_ptr<const Block> genesis) {
    if (!genesis || genesis->parentId.has_value() || genesis->depth != 0)
        throw std::invalid_argument("genesis must be a depth-0 block without a parent");
    if (genesis->previousHash != kZeroHash)
        throw std::invalid_argument("genesis previousHash must be all zeros");
    genesisId_ = tipId_ = requiredAncestorId_ = genesis->blockId;
    tipDepth_ = 0;
    Record rec;
    rec.headerHash = hashFromHex(computeHeaderHash(*genesis));
    rec.block = std::move(genesis);
    rec.firstChild = kNoChild;
    rec.seq = nextSeq_++;
    entries_.emplace(genesisId_, std::move(rec));
}

void ChainStore::addChild(Record& parent, uint64_t childId) {
    if (parent.firstChild == kNoChild)
        parent.firstChild = childId;
    else
        parent.moreChildren.push_back(childId);
}

bool ChainStore::chainContains(uint64_t descendantId, uint64_t ancestorId) const {
    auto anc = entries_.find(ancestorId);
    auto cur = entries_.find(descendantId);
    if (anc == entries_.end() || cur == entries_.end()) return false;
    uint32_t targetDepth = anc->second.block->depth;
    while (cur->second.block->depth > targetDepth) {
        cur = entries_.find(*cur->second.block->parentId);
        if (cur == entries_.end()) return false;
    }
    return cur->first == ancestorId;
}

void ChainStore::maybeAdoptTip(uint64_t id, const Record& rec, AppendResult& result) {
    if (rec.block->depth <= tipDepth_) return; // equal depth keeps the first-seen tip
    if (requiredAncestorId_ != genesisId_ && !chainContains(id, requiredAncestorId_)) return;
    tipId_ = id;
    tipDepth_ = rec.block->depth;
    result.tipChanged = true;
}

void ChainStore::linkBlock(std::shared_ptr<const Block> b, const std::array<uint8_t, 32>& hash,
                           Record& parentRec, AppendResult& result) {
    uint64_t id = b->blockId;
    Record rec;
    rec.block = std::move(b);
    rec.headerHash = hash;
    rec.firstChild = kNoChild;
    rec.seq = nextSeq_++;
    addChild(parentRec, id);
    auto [it, ok] = entries_.emplace(id, std::move(rec));
    (void)ok;
    maybeAdoptTip(id, it->second, result);
}

AppendResult ChainStore::append(std::shared_ptr<const Block> b,
                                const std::array<uint8_t, 32>* headerHashHint) {
    AppendResult result;
    if (!b) {
        result.rejectReason = "null block";
        return result;
    }
    uint64_t id = b->blockId;
    if (id == kNoChild) {
        result.rejectReason = "reserved block id";
        return result;
    }
    if (entries_.count(id)) {
        result.rejectReason = "duplicate block id";
        return result;
    }
    if (!b->parentId.has_value()) {
        result.rejectReason = "second genesis";
        return result;
    }
    for (const auto& [pid, waiting] : orphans_)
        for (const auto& w : waiting)
            if (w->blockId == id) {
                result.rejectReason = "duplicate block id (orphaned)";
                return result;
            }

    uint64_t parentId = *b->parentId;
    auto parentIt = entries_.find(parentId);
    if (parentIt == entries_.end()) {
        orphans_[parentId].push_back(std::move(b));
        result.outcome = AppendOutcome::Orphaned;
        return result;
    }

    const Record& parentRec = parentIt->second;
    if (b->depth != parentRec.block->depth + 1) {
        result.rejectReason = "depth mismatch";
        return result;
    }
    std::array<uint8_t, 32> expected = parentRec.headerHash;
    std::array<uint8_t, 32> claimed;
    try {
        claimed = hashFromHex(b->previousHash);
    } catch (const std::exception&) {
        result.rejectReason = "malformed previousHash";
        return result;
    }
    if (std::memcmp(expected.data(), claimed.data(), 32) != 0) {
        result.rejectReason = "previousHash does not match stored parent";
        return result;
    }

    std::array<uint8_t, 32> ownHash =
        headerHashHint ? *headerHashHint : hashFromHex(computeHeaderHash(*b));
    linkBlock(std::move(b), ownHash, parentIt->second, result);

    // Promote orphans whose parents just became available.
    std::vector<uint64_t> frontier{id};
    while (!frontier.empty()) {
        uint64_t pid = frontier.back();
        frontier.pop_back();
        auto waitIt = orphans_.find(pid);
        if (waitIt == orphans_.end()) continue;
        auto waiting = std::move(waitIt->second);
        orphans_.erase(waitIt);
        for (auto& child : waiting) {
            auto& pRec = entries_.at(pid);
            if (child->depth != pRec.block->depth + 1) continue;
            std::array<uint8_t, 32> childPrev;
            try {
                childPrev = hashFromHex(child->previousHash);
            } catch (const std::exception&) {
                continue;
            }
            if (std::memcmp(childPrev.data(), pRec.headerHash.data(), 32) != 0) continue;
            uint64_t childId = child->blockId;
            std::array<uint8_t, 32> childHash = hashFromHex(computeHeaderHash(*child));
            linkBlock(std::move(child), childHash, pRec, result);
            result.promoted.push_back(childId);
            frontier.push_back(childId);
        }
    }

    bool onTipPath = chainContains(tipId_, id);
    result.outcome = (result.tipChanged && onTipPath) ? AppendOutcome::ExtendedTip
                                                      : AppendOutcome::CreatedFork;
    return result;
}

std::shared_ptr<const Block> ChainStore::find(uint64_t id) const {
    auto it = entries_.find(id);
    return it == entries_.end() ? nullptr : it->second.block;
}

bool ChainStore::contains(uint64_t id) const { return entries_.count(id) > 0; }

std::vector<uint64_t> ChainStore::childrenOf(uint64_t id) const {
    std::vector<uint64_t> out;
    auto it = entries_.find(id);
    if (it == entries_.end()) return out;
    if (it->second.firstChild != kNoChild) out.push_back(it->second.firstChild);
    out.insert(out.end(), it->second.moreChildren.begin(), it->second.moreChildren.end());
    return out;
}

size_t ChainStore::numChild(uint64_t id) const { return childrenOf(id).size(); }

size_t ChainStore::orphanCount() const {
    size_t n = 0;
    for (const auto& [pid, waiting] : orphans_) n += waiting.size();
    return n;
}

std::vector<uint64_t> ChainStore::longestChain() const {
    std::vector<uint64_t> path;
    uint64_t cur = tipId_;
    while (true) {
        path.push_back(cur);
        const auto& rec = entries_.at(cur);
        if (!rec.block->parentId) break;
        cur = *rec.block->parentId;
    }
    std::reverse(path.begin(), path.end());
    return path;
}

bool ChainStore::setRequiredAncestor(uint64_t id) {
    auto it = entries_.find(id);
    if (it == entries_.end())
        throw std::invalid_argument("required ancestor is not a linked block");
    requiredAncestorId_ = id;
    if (chainContains(tipId_, id)) return false;

    // Tip abandoned a now-final block: move to the deepest descendant of the
    // anchor, earliest-seen on ties.
    uint64_t bestId = id;
    uint32_t bestDepth = it->second.block->depth;
    uint32_t bestSeq = it->second.seq;
    std::vector<uint64_t> stack{id};
    while (!stack.empty()) {
        uint64_t cur = stack.back();
        stack.pop_back();
        for (uint64_t child : childrenOf(cur)) {
            const auto& rec = entries_.at(child);
            if (rec.block->depth > bestDepth ||
                (rec.block->depth == bestDepth && rec.seq < bestSeq)) {
                bestId = child;
                bestDepth = rec.block->depth;
                bestSeq = rec.seq;
            }
            stack.push_back(child);
        }
    }
    tipId_ = bestId;
    tipDepth_ = bestDepth;
    return true;
}

std::vector<uint64_t> ChainStore::linkedIds() const {
    std::vector<uint64_t> ids;
    ids.reserve(entries_.size());
    for (const auto& [id, rec] : entries_) ids.push_back(id);
    std::sort(ids.begin(), ids.end());
    return ids;
}

std::vector<std::shared_ptr<const Block>> ChainStore::orphanBlocks() const {
    std::vector<std::shared_ptr<const Block>> out;
    for (const auto& [pid, waiting] : orphans_)
        out.insert(out.end(), waiting.begin(), waiting.end());
    std::sort(out.begin(), out.end(),
              [](const auto& a, const auto& b) { return a->blockId < b->blockId; });
    return out;
}

void ChainStore::replaceBlockUnchecked(std::shared_ptr<const Block> b) {
    auto it = entries_.find(b->blockId);
    if (it == entries_.end()) throw std::invalid_argument("no such block");
    it->second.block = std::move(b);
}

bool defaultProofCheck(const Block& b) {
    switch (b.proof.kind) {
    case ProofKind::RealPow: {
        auto header = canonicalHeaderBytes(b);
        return puzzleDigestHex(header, b.proof.nonce) == b.proof.digestHex;
    }
    case ProofKind::ReplayPow:
        return computeHeaderHash(b) == b.proof.digestHex && b.proof.claimedSolveMs > 0;
    case ProofKind::Custom:
        return !b.proof.customData.empty();
    }
    return false;
}

bool verifyChainIntegrity(const ChainStore& store, const ProofCheck& check) {
    for (uint64_t id : store.linkedIds()) {
        auto b = store.find(id);
        if (!b->parentId) {
            if (b->previousHash != kZeroHash) return false;
        } else {
            auto parent = store.find(*b->parentId);
            if (!parent) return false;
            if (b->depth != parent->depth + 1) return false;
            if (b->previousHash != computeHeaderHash(*parent)) return false;
        }
        if (!check(*b)) return false;
    }
    return true;
}

namespace {

void renderBlockLine(std::ostream& out, const Block& b, bool headerOnly) {
    out << b.blockId << "|" << b.creatorId << "|" << textFromDouble(b.creationTime) << "|";
    if (b.parentId)
        out << *b.parentId;
    else
        out << "-";
    out << "|" << b.depth << "|" << b.previousHash << "|" << renderProof(b.proof) << "|";
    if (headerOnly || (b.txnList.empty() && !b.storedTxnDigestHex.empty())) {
        out << "@" << txnDigestHex(b);
    } else {
        for (size_t i = 0; i < b.txnList.size(); ++i) {
            if (i) out << ",";
            out << b.txnList[i].txnId;
        }
    }
    out << "\n";
}

Block parseBlockLine(std::string_view line, int lineNo) {
    std::vector<std::string_view> fields;
    std::string_view rest = line;
    while (true) {
        auto bar = rest.find('|');
        fields.push_back(rest.substr(0, bar));
        if (bar == std::string_view::npos) break;
        rest = rest.substr(bar + 1);
    }
    if (fields.size() != 8)
        throw std::runtime_error("ledger: expected 8 fields at line " + std::to_string(lineNo));
    Block b;
    try {
        b.blockId = u64FromText(fields[0]);
        b.creatorId = u64FromText(fields[1]);
        b.creationTime = doubleFromText(fields[2]);
        if (fields[3] != "-") b.parentId = u64FromText(fields[3]);
        b.depth = static_cast<uint32_t>(u64FromText(fields[4]));
        b.previousHash = std::string(fields[5]);
        b.proof = parseProof(fields[6]);
        if (!fields[7].empty() && fields[7][0] == '@') {
            b.storedTxnDigestHex = std::string(fields[7].substr(1));
        } else if (!fields[7].empty()) {
            std::string_view txns = fields[7];
            while (true) {
                auto comma = txns.find(',');
                Transaction t;
                t.txnId = u64FromText(txns.substr(0, comma));
                b.txnList.push_back(t);
                if (comma == std::string_view::npos) break;
                txns = txns.substr(comma + 1);
            }
        }
    } catch (const std::exception& e) {
        throw std::runtime_error("ledger: " + std::string(e.what()) + " at line " +
                                 std::to_string(lineNo));
    }
    return b;
}

} // namespace

std::filesystem::path persistLedger(const ChainStore& store, uint64_t nodeId,
                                    const std::filesystem::path& directory,
                                    const PersistOptions& opt) {
    std::vector<std::shared_ptr<const Block>> blocks;
    for (uint64_t id : store.linkedIds()) blocks.push_back(store.find(id));
    for (auto& b : store.orphanBlocks()) blocks.push_back(b);
    std::sort(blocks.begin(), blocks.end(),
              [](const auto& a, const auto& b) { return a->blockId < b->blockId; });

    std::ostringstream out;
    out << "# blocklite-ledger v1 node=" << nodeId << "\n";
    for (const auto& b : blocks) {
        bool headerOnly = opt.headerOnly && opt.headerOnly(b->blockId);
        renderBlockLine(out, *b, headerOnly);
    }

    std::filesystem::create_directories(directory);
    auto path = directory / ("ledger_" + std::to_string(nodeId) + ".txt");
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream f(tmp, std::ios::trunc);
        if (!f) throw std::runtime_error("cannot write " + tmp.string());
        f << out.str();
    }
    std::filesystem::rename(tmp, path);
    return path;
}

LoadedLedger loadLedger(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open ledger file " + path.string());

    std::string line;
    int lineNo = 0;
    uint64_t nodeId = 0;
    std::vector<std::pair<Block, int>> blocks;
    while (std::getline(f, line)) {
        ++lineNo;
        if (lineNo == 1) {
            const std::string magic = "# blocklite-ledger v1 node=";
            if (line.rfind(magic, 0) != 0)
                throw std::runtime_error("ledger: bad header at line 1");
            nodeId = u64FromText(line.substr(magic.size()));
            continue;
        }
        if (line.empty()) continue;
        blocks.emplace_back(parseBlockLine(line, lineNo), lineNo);
    }

    auto genesisIt = std::find_if(blocks.begin(), blocks.end(),
                                  [](const auto& p) { return !p.first.parentId.has_value(); });
    if (genesisIt == blocks.end()) throw std::runtime_error("ledger: no genesis record");

    LoadedLedger result{nodeId, ChainStore(std::make_shared<Block>(genesisIt->first))};
    for (auto& [b, ln] : blocks) {
        if (!b.parentId) {
            if (b.blockId != genesisIt->first.blockId)
                throw std::runtime_error("ledger: second genesis at line " + std::to_string(ln));
            continue;
        }
        auto res = result.store.append(std::make_shared<Block>(std::move(b)));
        if (res.outcome == AppendOutcome::Rejected)
            throw std::runtime_error("ledger: " + res.rejectReason + " at line " +
                                     std::to_string(ln));
    }
    return result;
}

} // namespace blocklite
