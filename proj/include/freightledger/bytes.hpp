#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace freightledger {

using Bytes = std::vector<std::uint8_t>;
using BytesView = std::span<const std::uint8_t>;

// 32-byte digest used for record hashes, payload commitments and signatures.
using Digest = std::array<std::uint8_t, 32>;

inline constexpr Digest kZeroDigest{};

inline Bytes to_bytes(std::string_view s) {
    return Bytes(s.begin(), s.end());
}

inline std::string to_string(BytesView b) {
    return std::string(b.begin(), b.end());
}

inline std::string to_hex(BytesView data) {
    static constexpr char digits[] = "0123456789abcdef";
    std::string out;
    out.reserve(data.size() * 2);
    for (std::uint8_t byte : data) {
        out.push_back(digits[byte >> 4]);
        out.push_back(digits[byte & 0x0f]);
    }
    return out;
}

inline std::string to_hex(const Digest& d) {
    return to_hex(BytesView(d.data(), d.size()));
}

inline int hex_nibble(char c) {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    throw std::invalid_argument("invalid hex character");
}

inline Bytes from_hex(std::string_view hex) {
    if (hex.size() % 2 != 0) throw std::invalid_argument("odd-length hex string");
    Bytes out;
    out.reserve(hex.size() / 2);
    for (std::size_t i = 0; i < hex.size(); i += 2) {
        out.push_back(static_cast<std::uint8_t>(hex_nibble(hex[i]) * 16 + hex_nibble(hex[i + 1])));
    }
    return out;
}

inline Digest digest_from_hex(std::string_view hex) {
    Bytes raw = from_hex(hex);
    if (raw.size() != 32) throw std::invalid_argument("digest hex must decode to 32 bytes");
    Digest d;
    std::copy(raw.begin(), raw.end(), d.begin());
    return d;
}

// Big-endian integer append helpers for hash preimages and framing.
inline void append_u32_be(Bytes& out, std::uint32_t v) {
    out.push_back(static_cast<std::uint8_t>(v >> 24));
    out.push_back(static_cast<std::uint8_t>(v >> 16));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
    out.push_back(static_cast<std::uint8_t>(v));
}

inline void append_u64_be(Bytes& out, std::uint64_t v) {
    append_u32_be(out, static_cast<std::uint32_t>(v >> 32));
    append_u32_be(out, static_cast<std::uint32_t>(v));
}

inline std::uint32_t read_u32_be(BytesView in, std::size_t offset) {
    if (offset + 4 > in.size()) throw std::out_of_range("u32 read past end");
    return (static_cast<std::uint32_t>(in[offset]) << 24) |
           (static_cast<std::uint32_t>(in[offset + 1]) << 16) |
           (static_cast<std::uint32_t>(in[offset + 2]) << 8) |
           static_cast<std::uint32_t>(in[offset + 3]);
}

inline std::uint64_t read_u64_be(BytesView in, std::size_t offset) {
    return (static_cast<std::uint64_t>(read_u32_be(in, offset)) << 32) |
           read_u32_be(in, offset + 4);
}

}  // namespace freightledger
