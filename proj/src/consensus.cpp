#include "blocklite/consensus.hpp"

#include <map>
#include <stdexcept>

#include "blocklite/puzzle.hpp"

namespace blocklite {

Proof generateProofReal(const Block& candidate, Difficulty d, bool parallel) {
    auto header = canonicalHeaderBytes(candidate);
    SolveOptions opt;
    auto sol = parallel ? solveParallel(header, d, opt) : solveSerial(header, d, opt);
    if (!sol) throw std::runtime_error("proof-of-work search exhausted the attempt budget");
    Proof p;
    p.kind = ProofKind::RealPow;
    p.nonce = sol->nonce;
    p.digestHex = sol->digestHex;
    return p;
}

Proof generateProofReplay(const Block& candidate, Difficulty d, const DifficultyTimeMap& map,
                          std::mt19937_64& rng) {
    Proof p;
    p.kind = ProofKind::ReplayPow;
    p.claimedSolveMs = sampleSolveTime(map, d, rng);
    p.digestHex = computeHeaderHash(candidate);
    return p;
}

bool verifyProof(const Block& b, const Proof& p, Difficulty d) {
    switch (p.kind) {
    case ProofKind::RealPow: {
        auto header = canonicalHeaderBytes(b);
        PuzzleSolution s;
        s.nonce = p.nonce;
        s.digestHex = p.digestHex;
        return verify(header, s, d);
    }
    case ProofKind::ReplayPow:
        return computeHeaderHash(b) == p.digestHex && p.claimedSolveMs > 0;
    case ProofKind::Custom:
        if (!b.parentId && p.customData == "genesis") return true;
        return !p.customData.empty();
    }
    return false;
}

Proof NakamotoRealProvider::generateProof(const Block& candidate, const NodeContext& ctx) {
    return generateProofReal(candidate, ctx.difficulty, ctx.parallelSolve);
}

bool NakamotoRealProvider::verifyProof(const Block& b, const Proof& p,
                                       const NodeContext& ctx) const {
    return p.kind == ProofKind::RealPow && blocklite::verifyProof(b, p, ctx.difficulty);
}

Proof NakamotoReplayProvider::generateProof(const Block& candidate, const NodeContext& ctx) {
    if (!ctx.map || !ctx.rng)
        throw std::invalid_argument("replay provider needs a difficulty-time map and rng");
    return generateProofReplay(candidate, ctx.difficulty, *ctx.map, *ctx.rng);
}

bool NakamotoReplayProvider::verifyProof(const Block& b, const Proof& p,
                                         const NodeContext& ctx) const {
    return p.kind == ProofKind::ReplayPow && blocklite::verifyProof(b, p, ctx.difficulty);
}

namespace {

std::map<std::string, ProviderFactory>& registry() {
    static std::map<std::string, ProviderFactory> r = {
        {"nakamoto-real", [] { return std::make_unique<NakamotoRealProvider>(); }},
        {"nakamoto-replay", [] { return std::make_unique<NakamotoReplayProvider>(); }},
    };
    return r;
}

} // namespace

void registerProvider(const std::string& name, ProviderFactory factory) {
    registry()[name] = std::move(factory);
}

std::unique_ptr<ConsensusProvider> makeProvider(const std::string& name) {
    auto it = registry().find(name);
    if (it == registry().end())
        throw std::invalid_argument("unknown consensus provider \"" + name + "\"");
    return it->second();
}

std::vector<std::string> providerNames() {
    std::vector<std::string> names;
    for (const auto& [name, f] : registry()) names.push_back(name);
    return names;
}

} // namespace blocklite
