#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>
#include <vector>

#include "ganaug/core/check.hpp"
#include "ganaug/core/hash.hpp"

namespace ganaug {

// Deterministic xoshiro256++ stream. All randomness in the project flows from
// one root seed through named child streams, so re-running any command with
// the same seed replays the exact sequence regardless of platform stdlib.
class Rng {
  public:
    explicit Rng(uint64_t seed) : root_seed_(seed) {
        uint64_t s = seed;
        for (auto& word : state_) {
            s = splitmix64(s);
            word = s;
        }
        // xoshiro must not start in the all-zero state
        if ((state_[0] | state_[1] | state_[2] | state_[3]) == 0) state_[0] = 1;
    }

    uint64_t root_seed() const { return root_seed_; }

    uint64_t next_u64() {
        const uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
        const uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    // [0,1)
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // inclusive bounds, unbiased via 128-bit multiply
    int64_t uniform_int(int64_t lo, int64_t hi) {
        check_arg(lo <= hi, "uniform_int: lo > hi");
        const uint64_t range = static_cast<uint64_t>(hi - lo) + 1;
        if (range == 0) return static_cast<int64_t>(next_u64());  // full 64-bit range
        const auto wide = static_cast<unsigned __int128>(next_u64()) * range;
        return lo + static_cast<int64_t>(wide >> 64);
    }

    bool coin(double p = 0.5) { return uniform() < p; }

    // Box-Muller; computes a fresh pair each call and discards the second
    // value so the consumed stream length per call is fixed.
    double normal() {
        const double u1 = 1.0 - uniform();  // (0,1]
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }

    double normal(double mean, double stddev) { return mean + stddev * normal(); }

    template <class T>
    void shuffle(std::vector<T>& v) {
        for (size_t i = v.size(); i > 1; --i) {
            const auto j = static_cast<size_t>(uniform_int(0, static_cast<int64_t>(i) - 1));
            std::swap(v[i - 1], v[j]);
        }
    }

    // Children derive from the root seed only, never from consumed state, so a
    // stream's identity is a pure function of (root seed, tag path).
    Rng child(std::string_view tag) const { return Rng(hash_combine(root_seed_, fnv1a64(tag))); }
    Rng child(uint64_t index) const { return Rng(hash_combine(root_seed_, splitmix64(index + 1))); }

  private:
    static uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

    uint64_t root_seed_;
    uint64_t state_[4];
};

}  // namespace ganaug
