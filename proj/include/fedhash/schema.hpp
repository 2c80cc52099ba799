#pragma once

// Layer schemas and the digest binding all participants to one architecture
// and one set of hashing seeds.

#include <cstdint>
#include <string>
#include <vector>

#include "fedhash/errors.hpp"
#include "fedhash/prng.hpp"

namespace fedhash {

// Exact compression ratio as a rational in (0, 1].
struct Ratio {
    uint32_t num = 1;
    uint32_t den = 1;

    constexpr bool operator==(const Ratio&) const = default;
    constexpr bool is_one() const { return num == den; }
    double value() const { return static_cast<double>(num) / static_cast<double>(den); }
};

inline constexpr Ratio kRatioOne{1, 1};

// ceil(n * r) in exact integer arithmetic.
constexpr uint64_t ceil_mul(uint64_t n, Ratio r) {
    return (n * r.num + r.den - 1) / r.den;
}

// floor(n * r) in exact integer arithmetic.
constexpr uint64_t floor_mul(uint64_t n, Ratio r) {
    return (n * r.num) / r.den;
}

struct LayerSchema {
    std::string name;
    std::vector<uint32_t> shape;
    uint64_t virtual_size = 0;  // product of shape
    bool compressed = false;
    Ratio gamma = kRatioOne;    // meaningful only when compressed
    uint64_t seed = 0;
    uint64_t real_size = 0;     // compressed: ceil(virtual_size * gamma); else virtual_size

    uint32_t rank() const { return static_cast<uint32_t>(shape.size()); }
};

struct ParameterSchema {
    std::vector<LayerSchema> layers;
    uint64_t digest = 0;

    size_t layer_count() const { return layers.size(); }
    uint64_t total_real_size() const;
    uint64_t total_virtual_size() const;
};

// One layer of an architecture description, before the schema is built.
struct LayerDesc {
    std::string name;
    std::vector<uint32_t> shape;
    bool exempt = false;  // exempt layers are stored uncompressed, seed-independent
};

// FNV-1a 64 over a byte string. Offset basis 0xcbf29ce484222325,
// prime 0x100000001b3.
constexpr uint64_t fnv1a64(const uint8_t* data, size_t len) {
    uint64_t h = 0xcbf29ce484222325ULL;
    for (size_t i = 0; i < len; ++i) {
        h ^= data[i];
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline uint64_t fnv1a64(const std::vector<uint8_t>& bytes) {
    return fnv1a64(bytes.data(), bytes.size());
}

// Canonical little-endian encoding of a schema, the digest input. Per layer,
// in order: name length (u32), name bytes, rank (u32), dims (u32 each),
// compressed flag (u8), gamma numerator and denominator (u32 each), seed
// (u64).
std::vector<uint8_t> canonical_encoding(const ParameterSchema& schema);

// Digest of the canonical encoding.
uint64_t schema_digest(const ParameterSchema& schema);

// Builds the shared schema: per-layer seed = mix64(master_seed ^ layer_index),
// real sizes per the compression ratio, digest over the canonical encoding.
// Throws InvalidSchemaError on a zero dimension, a ratio outside (0, 1], an
// empty shape, or a duplicate layer name.
ParameterSchema build_schema(const std::vector<LayerDesc>& model_layers, Ratio gamma,
                             uint64_t master_seed);

// Parses "num/den" or a bare integer ("1") into a Ratio in (0, 1].
Ratio parse_ratio(const std::string& text);
std::string to_string(Ratio r);

}  // namespace fedhash
