#pragma once

#include <cstdint>
#include <string>

namespace stb {

// FNV-1a over bytes; used for report/provenance hashes and snapshot checks.
inline std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace stb
