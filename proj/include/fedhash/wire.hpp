#pragma once

// Bit-exact wire format for everything that crosses between clients and the
// server.
//
// Layout (all little-endian):
//   header, 40 bytes: magic "FOCR" | version u32 | kind u32 | round u64 |
//                     client u64 | digest u64 | layer_count u32
//   length table:     layer_count element counts, u64 each
//   payload:          f32 values, layer order
//
// Serialized size = 40 + 8 * layer_count + 4 * total elements, computable
// without serializing.

#include <cstdint>
#include <vector>

#include "fedhash/params.hpp"

namespace fedhash {

enum class MsgKind : uint32_t {
    Hello = 0,
    GlobalParams = 1,
    Increment = 2,
    Ack = 3,
};

struct WireMessage {
    MsgKind kind = MsgKind::Ack;
    uint64_t round = 0;
    uint64_t client_id = 0;  // 0 for server-originated messages
    uint64_t schema_digest = 0;
    std::vector<std::vector<float>> payload;

    bool operator==(const WireMessage&) const = default;
};

inline constexpr uint32_t kWireVersion = 1;
inline constexpr size_t kWireHeaderBytes = 40;

size_t serialized_size(const WireMessage& msg);

std::vector<uint8_t> serialize(const WireMessage& msg);

// Throws FramingError on bad magic, unsupported version, or truncation.
WireMessage deserialize(const uint8_t* data, size_t len);
WireMessage deserialize(const std::vector<uint8_t>& bytes);

// Conversions between the wire form and typed payloads.
WireMessage increment_to_wire(const RoundIncrement& inc);
RoundIncrement wire_to_increment(const WireMessage& msg);
WireMessage global_to_wire(const RealParams& params, uint64_t round);
RealParams wire_to_global(const WireMessage& msg);

}  // namespace fedhash
