#pragma once

#include "hadfl/param_vector.hpp"
#include "hadfl/types.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace hadfl {

enum class MessageKind : std::uint8_t {
    segment = 1,
    handshake = 2,
    handshake_ack = 3,
    bypass_warning = 4,
    model_broadcast = 5,
    heartbeat = 6,
};

inline constexpr std::size_t kMessageKinds = 6;

std::string_view to_string(MessageKind kind);

// Wire layout, all integers little-endian:
//   header  kind:u8 sender:u32 sync_round:u32 payload_len:u32
//   segment index:u32 offset:u32 count:u32 values:f64[count]
//   model   version:u64 dim:u32 values:f64[dim]
//   bypass  count:u32 ids:u32[count]
inline constexpr std::size_t kHeaderBytes = 13;
inline constexpr std::size_t kSegmentPrefixBytes = 12;
inline constexpr std::size_t kModelPrefixBytes = 12;

struct PeerMessage {
    MessageKind kind = MessageKind::heartbeat;
    DeviceId sender{};
    std::uint32_t sync_round = 0;
    std::vector<std::uint8_t> payload;

    std::size_t wire_size() const noexcept { return kHeaderBytes + payload.size(); }
    friend bool operator==(const PeerMessage&, const PeerMessage&) = default;
};

struct Segment {
    std::uint32_t index = 0;
    std::uint32_t offset = 0;
    std::vector<double> values;

    friend bool operator==(const Segment&, const Segment&) = default;
};

struct ModelPayload {
    std::uint64_t version = 0;
    ParamVector params;

    friend bool operator==(const ModelPayload&, const ModelPayload&) = default;
};

std::vector<std::uint8_t> encode(const PeerMessage& msg);
// Throws ProtocolError on truncated input, unknown kind or a length mismatch.
PeerMessage decode(std::span<const std::uint8_t> bytes);

std::vector<std::uint8_t> encode_segment(const Segment& segment);
Segment decode_segment(std::span<const std::uint8_t> payload);

std::vector<std::uint8_t> encode_model(const ModelPayload& model);
ModelPayload decode_model(std::span<const std::uint8_t> payload);

std::vector<std::uint8_t> encode_bypass(std::span<const DeviceId> bypassed);
std::vector<DeviceId> decode_bypass(std::span<const std::uint8_t> payload);

PeerMessage make_segment_message(DeviceId sender, std::uint32_t round, const Segment& segment);
PeerMessage make_model_message(DeviceId sender, std::uint32_t round, const ModelPayload& model);
PeerMessage make_control_message(MessageKind kind, DeviceId sender, std::uint32_t round,
                                 std::vector<std::uint8_t> payload = {});

// Number of f64 values carried by an encoded message (segment or model payloads).
std::size_t value_count(const PeerMessage& msg);

}  // namespace hadfl
