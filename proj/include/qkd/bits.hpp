#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace qkd {

/// Key and seed material: one byte per bit, values 0 or 1.
using BitString = std::vector<std::uint8_t>;

/// Packs bits into bytes, LSB-first within each byte; the tail byte is
/// zero-padded. This is the one packing convention used on the wire and
/// for hashing.
inline std::vector<std::uint8_t> pack_bits(const BitString& bits) {
    std::vector<std::uint8_t> out((bits.size() + 7) / 8, 0);
    for (std::size_t i = 0; i < bits.size(); ++i)
        out[i / 8] |= static_cast<std::uint8_t>((bits[i] & 1u) << (i % 8));
    return out;
}

inline BitString unpack_bits(const std::vector<std::uint8_t>& bytes, std::size_t n_bits) {
    BitString out(n_bits, 0);
    for (std::size_t i = 0; i < n_bits; ++i)
        out[i] = (bytes[i / 8] >> (i % 8)) & 1u;
    return out;
}

/// FNV-1a, 64-bit, over raw bytes.
inline std::uint64_t fnv1a64(const std::uint8_t* data, std::size_t n) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (std::size_t i = 0; i < n; ++i) {
        h ^= data[i];
        h *= 0x100000001b3ull;
    }
    return h;
}

inline std::uint64_t fnv1a64(const std::vector<std::uint8_t>& bytes) {
    return fnv1a64(bytes.data(), bytes.size());
}

/// Key fingerprint: FNV-1a over the packed bit string.
inline std::uint64_t key_hash(const BitString& bits) {
    return fnv1a64(pack_bits(bits));
}

/// Lowercase hex of the packed bit string.
inline std::string bits_to_hex(const BitString& bits) {
    static const char* digits = "0123456789abcdef";
    std::string out;
    for (std::uint8_t b : pack_bits(bits)) {
        out.push_back(digits[b >> 4]);
        out.push_back(digits[b & 0xf]);
    }
    return out;
}

inline int parity_of(const BitString& bits) {
    int p = 0;
    for (std::uint8_t b : bits) p ^= b & 1;
    return p;
}

}  // namespace qkd
