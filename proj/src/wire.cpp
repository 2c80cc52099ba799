#include "fedhash/wire.hpp"

#include <cstring>

#include "fedhash/errors.hpp"

namespace fedhash {

namespace {

constexpr char kWireMagic[4] = {'F', 'O', 'C', 'R'};

void put_u32(uint8_t* p, uint32_t v) {
    for (int i = 0; i < 4; ++i) p[i] = static_cast<uint8_t>(v >> (8 * i));
}

void put_u64(uint8_t* p, uint64_t v) {
    for (int i = 0; i < 8; ++i) p[i] = static_cast<uint8_t>(v >> (8 * i));
}

uint32_t get_u32(const uint8_t* p) {
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(p[i]) << (8 * i);
    return v;
}

uint64_t get_u64(const uint8_t* p) {
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(p[i]) << (8 * i);
    return v;
}

}  // namespace

size_t serialized_size(const WireMessage& msg) {
    size_t elements = 0;
    for (const auto& layer : msg.payload) elements += layer.size();
    return kWireHeaderBytes + 8 * msg.payload.size() + 4 * elements;
}

std::vector<uint8_t> serialize(const WireMessage& msg) {
    std::vector<uint8_t> out(serialized_size(msg));
    uint8_t* p = out.data();
    std::memcpy(p, kWireMagic, 4);
    put_u32(p + 4, kWireVersion);
    put_u32(p + 8, static_cast<uint32_t>(msg.kind));
    put_u64(p + 12, msg.round);
    put_u64(p + 20, msg.client_id);
    put_u64(p + 28, msg.schema_digest);
    put_u32(p + 36, static_cast<uint32_t>(msg.payload.size()));
    p += kWireHeaderBytes;
    for (const auto& layer : msg.payload) {
        put_u64(p, layer.size());
        p += 8;
    }
    for (const auto& layer : msg.payload) {
        for (float v : layer) {
            uint32_t bits;
            std::memcpy(&bits, &v, 4);
            put_u32(p, bits);
            p += 4;
        }
    }
    return out;
}

WireMessage deserialize(const uint8_t* data, size_t len) {
    if (len < kWireHeaderBytes) throw FramingError("message shorter than header");
    if (std::memcmp(data, kWireMagic, 4) != 0) throw FramingError("bad message magic");
    const uint32_t version = get_u32(data + 4);
    if (version != kWireVersion) {
        throw FramingError("unsupported wire version " + std::to_string(version));
    }
    const uint32_t kind = get_u32(data + 8);
    if (kind > static_cast<uint32_t>(MsgKind::Ack)) {
        throw FramingError("unknown message kind " + std::to_string(kind));
    }
    WireMessage msg;
    msg.kind = static_cast<MsgKind>(kind);
    msg.round = get_u64(data + 12);
    msg.client_id = get_u64(data + 20);
    msg.schema_digest = get_u64(data + 28);
    const uint32_t layer_count = get_u32(data + 36);

    size_t offset = kWireHeaderBytes;
    if (len < offset + 8 * size_t{layer_count}) throw FramingError("truncated length table");
    std::vector<uint64_t> counts(layer_count);
    size_t elements = 0;
    for (uint32_t l = 0; l < layer_count; ++l) {
        counts[l] = get_u64(data + offset);
        elements += counts[l];
        offset += 8;
    }
    if (len != offset + 4 * elements) throw FramingError("payload length mismatch");
    msg.payload.resize(layer_count);
    for (uint32_t l = 0; l < layer_count; ++l) {
        msg.payload[l].resize(counts[l]);
        for (uint64_t k = 0; k < counts[l]; ++k) {
            const uint32_t bits = get_u32(data + offset);
            std::memcpy(&msg.payload[l][k], &bits, 4);
            offset += 4;
        }
    }
    return msg;
}

WireMessage deserialize(const std::vector<uint8_t>& bytes) {
    return deserialize(bytes.data(), bytes.size());
}

WireMessage increment_to_wire(const RoundIncrement& inc) {
    WireMessage msg;
    msg.kind = MsgKind::Increment;
    msg.round = inc.round;
    msg.client_id = inc.client_id;
    msg.schema_digest = inc.schema_digest;
    msg.payload = inc.deltas;
    return msg;
}

RoundIncrement wire_to_increment(const WireMessage& msg) {
    if (msg.kind != MsgKind::Increment) throw ProtocolError("expected an increment message");
    RoundIncrement inc;
    inc.round = msg.round;
    inc.client_id = msg.client_id;
    inc.schema_digest = msg.schema_digest;
    inc.deltas = msg.payload;
    return inc;
}

WireMessage global_to_wire(const RealParams& params, uint64_t round) {
    WireMessage msg;
    msg.kind = MsgKind::GlobalParams;
    msg.round = round;
    msg.client_id = 0;
    msg.schema_digest = params.schema_digest;
    msg.payload = params.layers;
    return msg;
}

RealParams wire_to_global(const WireMessage& msg) {
    if (msg.kind != MsgKind::GlobalParams) throw ProtocolError("expected a global-params message");
    RealParams params;
    params.schema_digest = msg.schema_digest;
    params.layers = msg.payload;
    return params;
}

}  // namespace fedhash
