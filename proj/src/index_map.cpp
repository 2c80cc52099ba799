#include "fedhash/index_map.hpp"

#include <cstdio>
#include <cstring>
#include <memory>

#include "fedhash/errors.hpp"
#include "fedhash/prng.hpp"

namespace fedhash {

IndexMap make_index_map(uint64_t virtual_size, Ratio gamma, uint64_t seed) {
    if (virtual_size == 0) {
        throw InvalidSchemaError("index map requires virtual_size >= 1");
    }
    if (gamma.num == 0 || gamma.num > gamma.den) {
        throw InvalidSchemaError("index map ratio must lie in (0, 1]");
    }
    IndexMap map;
    map.seed = seed;
    map.virtual_size = virtual_size;
    map.real_size = ceil_mul(virtual_size, gamma);

    const std::vector<uint64_t> rs = random_sort(virtual_size, seed);
    map.indices.resize(virtual_size);
    for (uint64_t p = 0; p < virtual_size; ++p) {
        map.indices[p] = static_cast<uint32_t>(floor_mul(rs[p], gamma));
    }

    // Counting sort by real index; stable over ascending p, so each bucket
    // lists its positions in ascending order.
    map.bucket_offsets.assign(map.real_size + 1, 0);
    for (uint32_t idx : map.indices) ++map.bucket_offsets[idx + 1];
    for (uint64_t k = 0; k < map.real_size; ++k) {
        map.bucket_offsets[k + 1] += map.bucket_offsets[k];
    }
    map.positions.resize(virtual_size);
    std::vector<uint64_t> cursor(map.bucket_offsets.begin(), map.bucket_offsets.end() - 1);
    for (uint64_t p = 0; p < virtual_size; ++p) {
        map.positions[cursor[map.indices[p]]++] = static_cast<uint32_t>(p);
    }
    return map;
}

std::vector<std::optional<IndexMap>> build_index_maps(const ParameterSchema& schema) {
    std::vector<std::optional<IndexMap>> maps;
    maps.reserve(schema.layers.size());
    for (const auto& layer : schema.layers) {
        if (layer.compressed) {
            auto map = make_index_map(layer.virtual_size, layer.gamma, layer.seed);
            map.layer_name = layer.name;
            maps.emplace_back(std::move(map));
        } else {
            maps.emplace_back(std::nullopt);
        }
    }
    return maps;
}

namespace {

constexpr char kIndexMagic[4] = {'F', 'H', 'I', 'X'};
constexpr uint32_t kIndexVersion = 1;

struct FileCloser {
    void operator()(std::FILE* f) const { std::fclose(f); }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

}  // namespace

void write_index_file(const std::string& path, const std::vector<uint32_t>& indices) {
    FilePtr f(std::fopen(path.c_str(), "wb"));
    if (!f) throw Error("cannot open '" + path + "' for writing");
    uint8_t header[16];
    std::memcpy(header, kIndexMagic, 4);
    const uint32_t version = kIndexVersion;
    const uint64_t count = indices.size();
    for (int i = 0; i < 4; ++i) header[4 + i] = static_cast<uint8_t>(version >> (8 * i));
    for (int i = 0; i < 8; ++i) header[8 + i] = static_cast<uint8_t>(count >> (8 * i));
    if (std::fwrite(header, 1, 16, f.get()) != 16) {
        throw Error("short write to '" + path + "'");
    }
    std::vector<uint8_t> body(indices.size() * 4);
    for (size_t i = 0; i < indices.size(); ++i) {
        for (int b = 0; b < 4; ++b) body[4 * i + b] = static_cast<uint8_t>(indices[i] >> (8 * b));
    }
    if (!body.empty() && std::fwrite(body.data(), 1, body.size(), f.get()) != body.size()) {
        throw Error("short write to '" + path + "'");
    }
}

std::vector<uint32_t> read_index_file(const std::string& path) {
    FilePtr f(std::fopen(path.c_str(), "rb"));
    if (!f) throw Error("cannot open '" + path + "' for reading");
    uint8_t header[16];
    if (std::fread(header, 1, 16, f.get()) != 16) {
        throw FramingError("'" + path + "': truncated header");
    }
    if (std::memcmp(header, kIndexMagic, 4) != 0) {
        throw FramingError("'" + path + "': bad magic");
    }
    uint32_t version = 0;
    for (int i = 0; i < 4; ++i) version |= static_cast<uint32_t>(header[4 + i]) << (8 * i);
    if (version != kIndexVersion) {
        throw FramingError("'" + path + "': unsupported version " + std::to_string(version));
    }
    uint64_t count = 0;
    for (int i = 0; i < 8; ++i) count |= static_cast<uint64_t>(header[8 + i]) << (8 * i);
    std::vector<uint8_t> body(count * 4);
    if (!body.empty() && std::fread(body.data(), 1, body.size(), f.get()) != body.size()) {
        throw FramingError("'" + path + "': truncated body");
    }
    std::vector<uint32_t> indices(count);
    for (uint64_t i = 0; i < count; ++i) {
        uint32_t v = 0;
        for (int b = 0; b < 4; ++b) v |= static_cast<uint32_t>(body[4 * i + b]) << (8 * b);
        indices[i] = v;
    }
    return indices;
}

}  // namespace fedhash
