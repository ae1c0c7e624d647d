// Deterministic seed derivation: one master seed fans out into independent
// named streams (per mode, per block, per purpose) via splitmix64 hashing.
#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace oamqkd {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t hash_tag(std::string_view tag) {
    // FNV-1a, then one splitmix round for diffusion.
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : tag) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return splitmix64(h);
}

// Derivation rule (documented contract): stream = splitmix64(master ^ hash(tag) ^ index*phi).
inline std::uint64_t derive_seed(std::uint64_t master, std::string_view tag, std::uint64_t index = 0) {
    return splitmix64(master ^ hash_tag(tag) ^ (index * 0x9e3779b97f4a7c15ULL));
}

inline std::mt19937_64 make_rng(std::uint64_t master, std::string_view tag, std::uint64_t index = 0) {
    return std::mt19937_64(derive_seed(master, tag, index));
}

}  // namespace oamqkd
