#pragma once

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

#include "ganaug/core/check.hpp"

namespace ganaug {

// FNV-1a, used for stream derivation and artifact fingerprints.
struct Fnv64 {
    static constexpr uint64_t kOffset = 1469598103934665603ULL;
    static constexpr uint64_t kPrime = 1099511628211ULL;
    uint64_t h = kOffset;

    void add_bytes(const void* data, size_t n) {
        const auto* p = static_cast<const unsigned char*>(data);
        for (size_t i = 0; i < n; ++i) {
            h ^= p[i];
            h *= kPrime;
        }
    }
    void add(std::string_view s) { add_bytes(s.data(), s.size()); }
    template <class T>
    void add_pod(const T& v) {
        static_assert(std::is_trivially_copyable_v<T>);
        add_bytes(&v, sizeof(v));
    }
};

inline uint64_t fnv1a64(std::string_view s) {
    Fnv64 f;
    f.add(s);
    return f.h;
}

inline uint64_t splitmix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline uint64_t hash_combine(uint64_t a, uint64_t b) {
    return splitmix64(a ^ (b + 0x9e3779b97f4a7c15ULL + (a << 6) + (a >> 2)));
}

inline std::string to_hex(uint64_t v) {
    static const char* digits = "0123456789abcdef";
    std::string s(16, '0');
    for (int i = 15; i >= 0; --i) {
        s[i] = digits[v & 0xf];
        v >>= 4;
    }
    return s;
}

inline uint64_t hash_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    check(in.good(), "cannot open file for hashing: ", path.string());
    Fnv64 f;
    char buf[1 << 16];
    while (in.read(buf, sizeof(buf)) || in.gcount() > 0) f.add_bytes(buf, static_cast<size_t>(in.gcount()));
    return f.h;
}

template <class T>
uint64_t hash_span(const T* data, size_t n) {
    Fnv64 f;
    f.add_bytes(data, n * sizeof(T));
    return f.h;
}

}  // namespace ganaug
