#pragma once

// Deterministic random number machinery shared by every participant.
//
// All randomness in the project flows through exactly one documented chain so
// that independent implementations can reproduce it bit for bit:
//
//   splitmix64   -- seed expansion and seed derivation. One step from state x:
//                     x' = x + 0x9E3779B97F4A7C15
//                     z  = x'; z ^= z >> 30; z *= 0xBF58476D1CE4E5B9;
//                     z ^= z >> 27; z *= 0x94D049BB133111EB; z ^= z >> 31
//                   `mix64(x)` below is the output of one step started at x.
//
//   xoshiro256** -- the stream generator. State s[0..3] is seeded with four
//                   consecutive splitmix64 outputs starting from the seed.
//                   next() = rotl(s[1] * 5, 7) * 9 with the standard state
//                   transition (t = s[1] << 17; s2^=s0; s3^=s1; s1^=s2;
//                   s0^=s3; s2^=t; s3 = rotl(s3, 45)).
//
//   bounded(n)   -- unbiased integer in [0, n): draw x = next(); accept and
//                   return x % n unless x < 2^64 mod n, in which case redraw.
//
//   shuffle      -- descending-index Fisher-Yates: for i = n-1 down to 1,
//                   j = bounded(i + 1), swap a[i] and a[j].
//
// Reference first outputs (used as self-test vectors):
//   splitmix64 stream from state 0: e220a8397b1dcdaf, 6e789e6aa1b965f4, ...
//   xoshiro256**(seed 0).next()   : 99ec5f36cb75f2b4

#include <cstdint>
#include <numeric>
#include <vector>

namespace fedhash {

inline constexpr uint64_t kGolden64 = 0x9E3779B97F4A7C15ULL;

// Output of one splitmix64 step started at state x.
constexpr uint64_t mix64(uint64_t x) {
    uint64_t z = x + kGolden64;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

class SplitMix64 {
  public:
    explicit constexpr SplitMix64(uint64_t seed) : state_(seed) {}

    constexpr uint64_t next() {
        state_ += kGolden64;
        uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

  private:
    uint64_t state_;
};

class Xoshiro256ss {
  public:
    explicit Xoshiro256ss(uint64_t seed) {
        SplitMix64 sm(seed);
        for (auto& w : s_) w = sm.next();
    }

    uint64_t next() {
        const uint64_t result = rotl(s_[1] * 5, 7) * 9;
        const uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    // Unbiased draw in [0, n); n must be nonzero.
    uint64_t bounded(uint64_t n) {
        const uint64_t threshold = (0 - n) % n;  // 2^64 mod n
        for (;;) {
            const uint64_t x = next();
            if (x >= threshold) return x % n;
        }
    }

    // Uniform double in [0, 1) from the top 53 bits.
    double next_double() {
        return static_cast<double>(next() >> 11) * 0x1.0p-53;
    }

  private:
    static constexpr uint64_t rotl(uint64_t x, int k) {
        return (x << k) | (x >> (64 - k));
    }

    uint64_t s_[4];
};

// Descending-index Fisher-Yates shuffle, in place.
template <typename T>
void fisher_yates(std::vector<T>& a, Xoshiro256ss& rng) {
    for (size_t i = a.size(); i > 1; --i) {
        const uint64_t j = rng.bounded(i);
        std::swap(a[i - 1], a[j]);
    }
}

// Seeded permutation of [0 .. n).
inline std::vector<uint64_t> random_sort(uint64_t n, uint64_t seed) {
    std::vector<uint64_t> a(n);
    std::iota(a.begin(), a.end(), uint64_t{0});
    Xoshiro256ss rng(seed);
    fisher_yates(a, rng);
    return a;
}

// --- Seed derivation ---------------------------------------------------
//
// Every derived seed is one mix64 away from its parent, with a fixed tag
// XORed in first. Tags keep unrelated streams apart.

inline constexpr uint64_t kLayerSeedTag = 0;  // layer seeds: mix64(master ^ layer_index)
inline constexpr uint64_t kClientSeedTag = 0xC11E5D5EEDULL;
inline constexpr uint64_t kInitSeedTag = 0x1217B17ULL;
inline constexpr uint64_t kDataSeedTag = 0xDA7A5E78ULL;

// Per-layer hashing seed.
constexpr uint64_t derive_layer_seed(uint64_t master_seed, uint64_t layer_index) {
    return mix64(master_seed ^ layer_index);
}

// Per-client data-order seed.
constexpr uint64_t derive_client_seed(uint64_t master_seed, uint64_t client_id) {
    return mix64(mix64(master_seed ^ kClientSeedTag) ^ client_id);
}

// Weight initialization stream seed for one layer.
constexpr uint64_t derive_init_seed(uint64_t layer_seed) {
    return mix64(layer_seed ^ kInitSeedTag);
}

// Epoch shuffle seed: client data-order seed, round, epoch.
constexpr uint64_t derive_epoch_seed(uint64_t data_seed, uint64_t round, uint64_t epoch) {
    return mix64(mix64(data_seed ^ (round + 1) * kGolden64) ^ epoch);
}

}  // namespace fedhash
