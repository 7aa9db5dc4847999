#include "blocklite/proof.hpp"

#include <charconv>
#include <stdexcept>

namespace blocklite {

namespace {

std::string formatDouble(double v) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    (void)ec;
    return std::string(buf, end);
}

std::string hexEncode(std::string_view data) {
    static const char* digits = "0123456789abcdef";
    std::string out;
    out.reserve(data.size() * 2);
    for (unsigned char c : data) {
        out.push_back(digits[c >> 4]);
        out.push_back(digits[c & 0xf]);
    }
    return out;
}

int hexNibble(char c) {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    throw std::invalid_argument("proof: bad hex payload");
}

std::string hexDecode(std::string_view hex) {
    if (hex.size() % 2 != 0) throw std::invalid_argument("proof: odd hex payload");
    std::string out;
    out.reserve(hex.size() / 2);
    for (size_t i = 0; i < hex.size(); i += 2)
        out.push_back(static_cast<char>((hexNibble(hex[i]) << 4) | hexNibble(hex[i + 1])));
    return out;
}

} // namespace

std::string renderProof(const Proof& p) {
    switch (p.kind) {
    case ProofKind::RealPow:
        return "real:" + std::to_string(p.nonce) + ":" + p.digestHex;
    case ProofKind::ReplayPow:
        return "replay:" + formatDouble(p.claimedSolveMs) + ":" + p.digestHex;
    case ProofKind::Custom:
        return "custom:" + hexEncode(p.customData) + ":" + p.digestHex;
    }
    throw std::invalid_argument("proof: unknown kind");
}

Proof parseProof(std::string_view text) {
    auto c1 = text.find(':');
    if (c1 == std::string_view::npos) throw std::invalid_argument("proof: missing kind");
    auto c2 = text.find(':', c1 + 1);
    if (c2 == std::string_view::npos) throw std::invalid_argument("proof: missing digest");
    auto kind = text.substr(0, c1);
    auto middle = text.substr(c1 + 1, c2 - c1 - 1);
    auto digest = text.substr(c2 + 1);

    Proof p;
    p.digestHex = std::string(digest);
    if (kind == "real") {
        p.kind = ProofKind::RealPow;
        auto [ptr, ec] = std::from_chars(middle.data(), middle.data() + middle.size(), p.nonce);
        if (ec != std::errc() || ptr != middle.data() + middle.size())
            throw std::invalid_argument("proof: bad nonce");
    } else if (kind == "replay") {
        p.kind = ProofKind::ReplayPow;
        auto [ptr, ec] =
            std::from_chars(middle.data(), middle.data() + middle.size(), p.claimedSolveMs);
        if (ec != std::errc() || ptr != middle.data() + middle.size())
            throw std::invalid_argument("proof: bad solve time");
    } else if (kind == "custom") {
        p.kind = ProofKind::Custom;
        p.customData = hexDecode(middle);
    } else {
        throw std::invalid_argument("proof: unknown kind \"" + std::string(kind) + "\"");
    }
    return p;
}

} // namespace blocklite
