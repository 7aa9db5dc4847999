#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>

namespace blocklite {

// One-shot SHA-256. Digests are rendered as 64 lowercase hex digits.
std::array<uint8_t, 32> sha256(std::span<const uint8_t> data);
std::string sha256Hex(std::span<const uint8_t> data);
std::string sha256Hex(std::string_view data);

std::string toHex(std::span<const uint8_t> bytes);

// Reusable digest context for hot loops (nonce search). Not thread-safe;
// create one per worker.
class Sha256Hasher {
public:
    Sha256Hasher();
    ~Sha256Hasher();
    Sha256Hasher(const Sha256Hasher&) = delete;
    Sha256Hasher& operator=(const Sha256Hasher&) = delete;

    void digest(const uint8_t* data, size_t len, uint8_t out[32]);

private:
    void* ctx_;
};

} // namespace blocklite
