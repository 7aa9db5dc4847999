#include "blocklite/puzzle.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cstring>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "blocklite/sha256.hpp"

namespace blocklite {

namespace {

// Preimage buffer reused across attempts: fixed header + decimal nonce.
struct AttemptBuffer {
    std::vector<uint8_t> bytes;
    size_t headerLen = 0;

    explicit AttemptBuffer(std::span<const uint8_t> header) {
        headerLen = header.size();
        bytes.resize(headerLen + 20); // u64 decimal fits in 20 digits
        std::memcpy(bytes.data(), header.data(), headerLen);
    }

    size_t fill(uint64_t nonce) {
        char* begin = reinterpret_cast<char*>(bytes.data() + headerLen);
        auto [end, ec] = std::to_chars(begin, begin + 20, nonce);
        (void)ec;
        return headerLen + static_cast<size_t>(end - begin);
    }
};

bool attemptSatisfies(Sha256Hasher& hasher, AttemptBuffer& buf, uint64_t nonce, Difficulty d,
                      uint8_t digest[32]) {
    size_t len = buf.fill(nonce);
    hasher.digest(buf.bytes.data(), len, digest);
    return checkDifficulty(profileDigest(digest), d);
}

PuzzleSolution makeSolution(uint64_t nonce, uint64_t startNonce, const uint8_t digest[32]) {
    PuzzleSolution s;
    s.nonce = nonce;
    s.digestHex = toHex(std::span<const uint8_t>(digest, 32));
    s.attempts = nonce - startNonce + 1;
    return s;
}

} // namespace

std::string puzzleDigestHex(std::span<const uint8_t> header, uint64_t nonce) {
    AttemptBuffer buf(header);
    size_t len = buf.fill(nonce);
    return sha256Hex(std::span<const uint8_t>(buf.bytes.data(), len));
}

std::optional<PuzzleSolution> solveSerial(std::span<const uint8_t> header, Difficulty d,
                                          const SolveOptions& opt) {
    Sha256Hasher hasher;
    AttemptBuffer buf(header);
    uint8_t digest[32];
    uint64_t nonce = opt.startNonce;
    for (uint64_t tried = 0; tried < opt.maxAttempts; ++tried, ++nonce) {
        if (attemptSatisfies(hasher, buf, nonce, d, digest))
            return makeSolution(nonce, opt.startNonce, digest);
        if (nonce == std::numeric_limits<uint64_t>::max()) break;
    }
    return std::nullopt;
}

std::optional<PuzzleSolution> solveParallel(std::span<const uint8_t> header, Difficulty d,
                                            const SolveOptions& opt) {
#ifndef _OPENMP
    return solveSerial(header, d, opt);
#else
    constexpr uint64_t kChunk = 4096;
    const uint64_t start = opt.startNonce;
    const uint64_t span = std::min(opt.maxAttempts,
                                   std::numeric_limits<uint64_t>::max() - start);
    if (span == 0) return std::nullopt;
    const uint64_t chunks = span / kChunk + (span % kChunk ? 1 : 0);
    const uint64_t sentinel = std::numeric_limits<uint64_t>::max();

    // Workers grab chunks in ascending nonce order. `best` only shrinks, so
    // once a worker draws a chunk starting at or above it, every later chunk
    // is also out of range and the worker can stop. The result is the minimal
    // satisfying nonce regardless of thread timing.
    std::atomic<uint64_t> best{sentinel};
    std::atomic<uint64_t> nextChunk{0};

#pragma omp parallel
    {
        Sha256Hasher hasher;
        AttemptBuffer buf(header);
        uint8_t digest[32];

        while (true) {
            uint64_t c = nextChunk.fetch_add(1, std::memory_order_relaxed);
            if (c >= chunks) break;
            uint64_t base = start + c * kChunk;
            if (base >= best.load(std::memory_order_relaxed)) break;
            uint64_t end = (c == chunks - 1) ? start + span : base + kChunk;
            for (uint64_t nonce = base; nonce < end; ++nonce) {
                if (attemptSatisfies(hasher, buf, nonce, d, digest)) {
                    uint64_t cur = best.load(std::memory_order_relaxed);
                    while (nonce < cur &&
                           !best.compare_exchange_weak(cur, nonce, std::memory_order_relaxed)) {
                    }
                    break;
                }
            }
        }
    }

    uint64_t found = best.load();
    if (found == sentinel) return std::nullopt;
    uint8_t digest[32];
    Sha256Hasher hasher;
    AttemptBuffer buf(header);
    size_t len = buf.fill(found);
    hasher.digest(buf.bytes.data(), len, digest);
    return makeSolution(found, start, digest);
#endif
}

std::optional<PuzzleSolution> solve(std::span<const uint8_t> header, Difficulty d,
                                    const SolveOptions& opt) {
#ifdef _OPENMP
    if (omp_get_max_threads() > 1) return solveParallel(header, d, opt);
#endif
    return solveSerial(header, d, opt);
}

bool verify(std::span<const uint8_t> header, const PuzzleSolution& s, Difficulty d) {
    std::string digest = puzzleDigestHex(header, s.nonce);
    return digest == s.digestHex && checkDifficulty(digest, d);
}

} // namespace blocklite
