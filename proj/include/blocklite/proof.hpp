#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace blocklite {

enum class ProofKind { RealPow, ReplayPow, Custom };

// Structured consensus proof. Real proofs are verifiable by recomputing the
// nonce digest; replay proofs carry the sampled solve time used for event
// scheduling and bind only the header hash. Custom providers put an opaque
// payload in customData.
struct Proof {
    ProofKind kind = ProofKind::RealPow;
    uint64_t nonce = 0;          // realPoW
    std::string digestHex;       // 64 lowercase hex digits
    double claimedSolveMs = 0.0; // replayPoW / custom providers emulating cost
    std::string customData;

    bool operator==(const Proof&) const = default;
};

// Canonical one-token rendering for ledger files: "real:<nonce>:<digest>",
// "replay:<ms>:<digest>", "custom:<hexdata>:<digest>". Round-trips exactly.
std::string renderProof(const Proof& p);
Proof parseProof(std::string_view text); // throws std::invalid_argument

} // namespace blocklite
