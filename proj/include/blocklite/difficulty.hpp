#pragma once

#include <compare>
#include <cstdint>
#include <string>
#include <string_view>

namespace blocklite {

// Two-field puzzle hardness descriptor, textual form "L.M".
// L = required leading zero hex digits of the digest, M = minimum count of
// additional zero digits after the leading run (trailing zeros count,
// positions need not be contiguous). Feasible iff L + M <= 64.
struct Difficulty {
    int leadingZeros = 0; // L, 0..64
    int middleZeros = 0;  // M, 0..64

    auto operator<=>(const Difficulty&) const = default;
};

// Parses "<int>.<int>". Throws std::invalid_argument on malformed text,
// std::out_of_range when a field is outside 0..64 or L + M > 64.
Difficulty parseDifficulty(std::string_view text);

std::string formatDifficulty(Difficulty d);

// Length of the maximal leading run of '0' digits. The input may be any
// nonempty lowercase hex string; throws std::invalid_argument otherwise.
int countLeadingZeros(std::string_view digestHex);

// Number of '0' digits strictly after the maximal leading run. For an
// all-zero string the entire string is the leading run, so the result is 0.
int countMiddleZeros(std::string_view digestHex);

// True iff the 64-digit digest satisfies d: leading run >= L and zeros after
// the run >= M. A digest whose leading run covers all 64 digits satisfies
// every feasible difficulty. Throws std::invalid_argument unless digestHex
// is exactly 64 lowercase hex digits.
bool checkDifficulty(std::string_view digestHex, Difficulty d);

// Byte-level counterpart used by the nonce-search kernels: same semantics
// over a raw 32-byte digest, no validation, no allocation.
struct DigestZeroProfile {
    int leadingRun = 0;
    int zerosAfterRun = 0;
};
DigestZeroProfile profileDigest(const uint8_t digest[32]);
bool checkDifficulty(DigestZeroProfile p, Difficulty d);

} // namespace blocklite
