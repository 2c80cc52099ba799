#include "fedhash/schema.hpp"

#include <algorithm>
#include <unordered_set>

namespace fedhash {

namespace {

void put_u32(std::vector<uint8_t>& out, uint32_t v) {
    out.push_back(static_cast<uint8_t>(v));
    out.push_back(static_cast<uint8_t>(v >> 8));
    out.push_back(static_cast<uint8_t>(v >> 16));
    out.push_back(static_cast<uint8_t>(v >> 24));
}

void put_u64(std::vector<uint8_t>& out, uint64_t v) {
    put_u32(out, static_cast<uint32_t>(v));
    put_u32(out, static_cast<uint32_t>(v >> 32));
}

}  // namespace

uint64_t ParameterSchema::total_real_size() const {
    uint64_t total = 0;
    for (const auto& l : layers) total += l.real_size;
    return total;
}

uint64_t ParameterSchema::total_virtual_size() const {
    uint64_t total = 0;
    for (const auto& l : layers) total += l.virtual_size;
    return total;
}

std::vector<uint8_t> canonical_encoding(const ParameterSchema& schema) {
    std::vector<uint8_t> out;
    for (const auto& layer : schema.layers) {
        put_u32(out, static_cast<uint32_t>(layer.name.size()));
        out.insert(out.end(), layer.name.begin(), layer.name.end());
        put_u32(out, layer.rank());
        for (uint32_t d : layer.shape) put_u32(out, d);
        out.push_back(layer.compressed ? 1 : 0);
        put_u32(out, layer.gamma.num);
        put_u32(out, layer.gamma.den);
        put_u64(out, layer.seed);
    }
    return out;
}

uint64_t schema_digest(const ParameterSchema& schema) {
    return fnv1a64(canonical_encoding(schema));
}

ParameterSchema build_schema(const std::vector<LayerDesc>& model_layers, Ratio gamma,
                             uint64_t master_seed) {
    if (gamma.num == 0 || gamma.den == 0 || gamma.num > gamma.den) {
        throw InvalidSchemaError("compression ratio must lie in (0, 1], got " + to_string(gamma));
    }
    ParameterSchema schema;
    std::unordered_set<std::string> names;
    for (size_t i = 0; i < model_layers.size(); ++i) {
        const LayerDesc& desc = model_layers[i];
        if (desc.shape.empty()) {
            throw InvalidSchemaError("layer '" + desc.name + "' has an empty shape");
        }
        if (!names.insert(desc.name).second) {
            throw InvalidSchemaError("duplicate layer name '" + desc.name + "'");
        }
        uint64_t virtual_size = 1;
        for (uint32_t d : desc.shape) {
            if (d == 0) {
                throw InvalidSchemaError("layer '" + desc.name + "' has a zero dimension");
            }
            virtual_size *= d;
        }
        LayerSchema layer;
        layer.name = desc.name;
        layer.shape = desc.shape;
        layer.virtual_size = virtual_size;
        layer.compressed = !desc.exempt;
        layer.gamma = desc.exempt ? kRatioOne : gamma;
        layer.seed = derive_layer_seed(master_seed, i);
        layer.real_size = layer.compressed ? ceil_mul(virtual_size, gamma) : virtual_size;
        schema.layers.push_back(std::move(layer));
    }
    schema.digest = schema_digest(schema);
    return schema;
}

Ratio parse_ratio(const std::string& text) {
    const auto slash = text.find('/');
    auto parse_u32 = [&](const std::string& s) -> uint32_t {
        size_t pos = 0;
        unsigned long v = std::stoul(s, &pos);
        if (pos != s.size() || v == 0 || v > 0xFFFFFFFFul) {
            throw InvalidSchemaError("bad ratio component '" + s + "'");
        }
        return static_cast<uint32_t>(v);
    };
    Ratio r;
    if (slash == std::string::npos) {
        r.num = parse_u32(text);
        r.den = 1;
    } else {
        r.num = parse_u32(text.substr(0, slash));
        r.den = parse_u32(text.substr(slash + 1));
    }
    if (r.num > r.den) {
        throw InvalidSchemaError("ratio " + text + " is outside (0, 1]");
    }
    return r;
}

std::string to_string(Ratio r) {
    if (r.den == 1) return std::to_string(r.num);
    return std::to_string(r.num) + "/" + std::to_string(r.den);
}

}  // namespace fedhash
