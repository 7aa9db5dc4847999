#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>

#include "blocklite/difficulty.hpp"

namespace blocklite {

struct PuzzleSolution {
    uint64_t nonce = 0;
    std::string digestHex; // 64 lowercase hex digits, recomputable
    uint64_t attempts = 0; // nonces tried, solving nonce included
};

// Digest of the puzzle preimage: header bytes followed by the nonce rendered
// as ASCII decimal text.
std::string puzzleDigestHex(std::span<const uint8_t> header, uint64_t nonce);

struct SolveOptions {
    uint64_t startNonce = 0;
    uint64_t maxAttempts = std::numeric_limits<uint64_t>::max();
};

// Scans nonces upward from startNonce and returns the first one whose digest
// satisfies d, or nullopt after maxAttempts misses (the caller may continue
// from startNonce + maxAttempts). solveSerial is the reference path;
// solveParallel splits the scan across OpenMP workers and returns the same
// minimal satisfying nonce. solve() picks parallel when workers exist.
std::optional<PuzzleSolution> solveSerial(std::span<const uint8_t> header, Difficulty d,
                                          const SolveOptions& opt = {});
std::optional<PuzzleSolution> solveParallel(std::span<const uint8_t> header, Difficulty d,
                                            const SolveOptions& opt = {});
std::optional<PuzzleSolution> solve(std::span<const uint8_t> header, Difficulty d,
                                    const SolveOptions& opt = {});

// Recomputes the digest for s.nonce and checks both the digest match and the
// difficulty condition. Pure; never throws on mismatch, just returns false.
bool verify(std::span<const uint8_t> header, const PuzzleSolution& s, Difficulty d);

} // namespace blocklite
