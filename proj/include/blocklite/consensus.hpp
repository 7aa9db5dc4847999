#pragma once

#include <functional>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "blocklite/calibration.hpp"
#include "blocklite/ledger.hpp"

namespace blocklite {

// Engine-supplied context for proof generation; the difficulty lives here
// rather than in the block itself.
struct NodeContext {
    uint32_t nodeId = 0;
    Difficulty difficulty;
    const DifficultyTimeMap* map = nullptr; // replay providers
    std::mt19937_64* rng = nullptr;         // replay providers
    bool parallelSolve = false;             // real providers may fan the nonce search out
};

// Pluggable consensus boundary. Implementations must keep verifyProof
// deterministic and side-effect free, and generateProof safe to call
// concurrently from distinct node contexts.
class ConsensusProvider {
public:
    virtual ~ConsensusProvider() = default;
    virtual std::string name() const = 0;
    virtual bool requiresCalibration() const { return false; }
    virtual Proof generateProof(const Block& candidate, const NodeContext& ctx) = 0;
    virtual bool verifyProof(const Block& b, const Proof& p, const NodeContext& ctx) const = 0;
};

// Real Nakamoto-style PoW: actual nonce search over the candidate header.
Proof generateProofReal(const Block& candidate, Difficulty d, bool parallel = false);

// Calibrated replay: no nonce search; the proof carries a sampled solve time
// and binds the candidate's header hash.
Proof generateProofReplay(const Block& candidate, Difficulty d, const DifficultyTimeMap& map,
                          std::mt19937_64& rng);

// Kind-dispatched verification. Real proofs are fully recomputed against d;
// replay proofs get a header-integrity check plus claimedSolveMs > 0 (the
// difficulty is emulated, not re-derived). Genesis custom proofs pass.
bool verifyProof(const Block& b, const Proof& p, Difficulty d);

class NakamotoRealProvider : public ConsensusProvider {
public:
    std::string name() const override { return "nakamoto-real"; }
    Proof generateProof(const Block& candidate, const NodeContext& ctx) override;
    bool verifyProof(const Block& b, const Proof& p, const NodeContext& ctx) const override;
};

class NakamotoReplayProvider : public ConsensusProvider {
public:
    std::string name() const override { return "nakamoto-replay"; }
    bool requiresCalibration() const override { return true; }
    Proof generateProof(const Block& candidate, const NodeContext& ctx) override;
    bool verifyProof(const Block& b, const Proof& p, const NodeContext& ctx) const override;
};

// Name-keyed registry. "nakamoto-real" and "nakamoto-replay" are built in;
// custom providers registered here are selectable from the CLI.
using ProviderFactory = std::function<std::unique_ptr<ConsensusProvider>()>;
void registerProvider(const std::string& name, ProviderFactory factory);
std::unique_ptr<ConsensusProvider> makeProvider(const std::string& name); // throws on unknown
std::vector<std::string> providerNames();

} // namespace blocklite
