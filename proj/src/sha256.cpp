#include "blocklite/sha256.hpp"

#include <openssl/evp.h>

#include <stdexcept>

namespace blocklite {

namespace {
constexpr char kHexDigits[] = "0123456789abcdef";
}

Sha256Hasher::Sha256Hasher() : ctx_(EVP_MD_CTX_new()) {
    if (!ctx_) throw std::runtime_error("EVP_MD_CTX_new failed");
}

Sha256Hasher::~Sha256Hasher() {
    EVP_MD_CTX_free(static_cast<EVP_MD_CTX*>(ctx_));
}

void Sha256Hasher::digest(const uint8_t* data, size_t len, uint8_t out[32]) {
    auto* ctx = static_cast<EVP_MD_CTX*>(ctx_);
    if (EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1 ||
        EVP_DigestUpdate(ctx, data, len) != 1 ||
        EVP_DigestFinal_ex(ctx, out, nullptr) != 1) {
        throw std::runtime_error("SHA-256 digest failed");
    }
}

std::array<uint8_t, 32> sha256(std::span<const uint8_t> data) {
    std::array<uint8_t, 32> out{};
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), out.data(), &len, EVP_sha256(), nullptr) != 1 ||
        len != 32) {
        throw std::runtime_error("SHA-256 digest failed");
    }
    return out;
}

std::string toHex(std::span<const uint8_t> bytes) {
    std::string out;
    out.resize(bytes.size() * 2);
    for (size_t i = 0; i < bytes.size(); ++i) {
        out[2 * i] = kHexDigits[bytes[i] >> 4];
        out[2 * i + 1] = kHexDigits[bytes[i] & 0xf];
    }
    return out;
}

std::string sha256Hex(std::span<const uint8_t> data) {
    auto d = sha256(data);
    return toHex(d);
}

std::string sha256Hex(std::string_view data) {
    return sha256Hex(std::span<const uint8_t>(
        reinterpret_cast<const uint8_t*>(data.data()), data.size()));
}

} // namespace blocklite
