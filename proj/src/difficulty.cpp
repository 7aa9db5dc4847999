#include "blocklite/difficulty.hpp"

#include <charconv>
#include <stdexcept>

namespace blocklite {

namespace {

bool isHexDigit(char c) {
    return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'f');
}

int parseField(std::string_view text, std::string_view what) {
    if (text.empty() || text.size() > 2)
        throw std::invalid_argument("difficulty: bad " + std::string(what) + " field");
    int value = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || ptr != text.data() + text.size())
        throw std::invalid_argument("difficulty: bad " + std::string(what) + " field");
    return value;
}

void validateHex(std::string_view digestHex) {
    if (digestHex.empty())
        throw std::invalid_argument("digest: empty hex string");
    for (char c : digestHex)
        if (!isHexDigit(c))
            throw std::invalid_argument("digest: non-hex character");
}

} // namespace

Difficulty parseDifficulty(std::string_view text) {
    auto dot = text.find('.');
    if (dot == std::string_view::npos)
        throw std::invalid_argument("difficulty: expected \"L.M\", got \"" + std::string(text) + "\"");
    Difficulty d;
    d.leadingZeros = parseField(text.substr(0, dot), "L");
    d.middleZeros = parseField(text.substr(dot + 1), "M");
    if (d.leadingZeros < 0 || d.leadingZeros > 64 || d.middleZeros < 0 || d.middleZeros > 64)
        throw std::out_of_range("difficulty: fields must be in 0..64");
    if (d.leadingZeros + d.middleZeros > 64)
        throw std::out_of_range("difficulty: L + M exceeds 64 digits");
    return d;
}

std::string formatDifficulty(Difficulty d) {
    return std::to_string(d.leadingZeros) + "." + std::to_string(d.middleZeros);
}

int countLeadingZeros(std::string_view digestHex) {
    validateHex(digestHex);
    int run = 0;
    for (char c : digestHex) {
        if (c != '0') break;
        ++run;
    }
    return run;
}

int countMiddleZeros(std::string_view digestHex) {
    validateHex(digestHex);
    size_t i = 0;
    while (i < digestHex.size() && digestHex[i] == '0') ++i;
    int zeros = 0;
    for (; i < digestHex.size(); ++i)
        if (digestHex[i] == '0') ++zeros;
    return zeros;
}

bool checkDifficulty(std::string_view digestHex, Difficulty d) {
    if (digestHex.size() != 64)
        throw std::invalid_argument("digest: expected 64 hex digits");
    validateHex(digestHex);
    int run = 0;
    while (run < 64 && digestHex[run] == '0') ++run;
    if (run == 64) return true;
    if (run < d.leadingZeros) return false;
    int zeros = 0;
    for (int i = run; i < 64; ++i)
        if (digestHex[i] == '0') ++zeros;
    return zeros >= d.middleZeros;
}

DigestZeroProfile profileDigest(const uint8_t digest[32]) {
    DigestZeroProfile p;
    int i = 0;
    for (; i < 64; ++i) {
        uint8_t nib = (i & 1) ? (digest[i >> 1] & 0xf) : (digest[i >> 1] >> 4);
        if (nib != 0) break;
        ++p.leadingRun;
    }
    for (; i < 64; ++i) {
        uint8_t nib = (i & 1) ? (digest[i >> 1] & 0xf) : (digest[i >> 1] >> 4);
        if (nib == 0) ++p.zerosAfterRun;
    }
    return p;
}

bool checkDifficulty(DigestZeroProfile p, Difficulty d) {
    if (p.leadingRun == 64) return true;
    return p.leadingRun >= d.leadingZeros && p.zerosAfterRun >= d.middleZeros;
}

} // namespace blocklite
