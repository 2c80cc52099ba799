#pragma once

// Deterministic virtual-to-real index maps for hash-compressed layers.
//
// A compressed layer stores real_size = ceil(virtual_size * gamma) trainable
// values. The map assigns every virtual position p a real index
//
//     indices[p] = floor(RS[p] * gamma)
//
// where RS is a seeded Fisher-Yates permutation of [0 .. virtual_size). The
// floor is computed in exact integer arithmetic as (RS[p] * num) / den with
// gamma = num/den. The triple (virtual_size, gamma, seed) fully determines
// the map.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fedhash/schema.hpp"

namespace fedhash {

struct IndexMap {
    std::string layer_name;
    uint64_t seed = 0;
    uint64_t virtual_size = 0;
    uint64_t real_size = 0;
    std::vector<uint32_t> indices;  // length virtual_size, entries < real_size

    // Inverse view, grouped by real index: positions referencing real index k
    // are positions[bucket_offsets[k] .. bucket_offsets[k+1]), ascending.
    std::vector<uint64_t> bucket_offsets;  // length real_size + 1
    std::vector<uint32_t> positions;       // length virtual_size
};

IndexMap make_index_map(uint64_t virtual_size, Ratio gamma, uint64_t seed);

// Per-layer maps for every compressed layer of a schema; exempt layers get
// nullopt and are accessed directly.
std::vector<std::optional<IndexMap>> build_index_maps(const ParameterSchema& schema);

// Binary index-vector files: 16-byte header (magic "FHIX", version u32 LE,
// count u64 LE) followed by count little-endian u32 entries.
void write_index_file(const std::string& path, const std::vector<uint32_t>& indices);
std::vector<uint32_t> read_index_file(const std::string& path);

}  // namespace fedhash
