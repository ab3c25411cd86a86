#include "hadfl/wire.hpp"

#include "hadfl/errors.hpp"

#include <bit>
#include <string>

namespace hadfl {

std::string_view to_string(MessageKind kind) {
    switch (kind) {
        case MessageKind::segment: return "segment";
        case MessageKind::handshake: return "handshake";
        case MessageKind::handshake_ack: return "handshake-ack";
        case MessageKind::bypass_warning: return "bypass-warning";
        case MessageKind::model_broadcast: return "model-broadcast";
        case MessageKind::heartbeat: return "heartbeat";
    }
    return "?";
}

namespace {

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_f64(std::vector<std::uint8_t>& out, double v) { put_u64(out, std::bit_cast<std::uint64_t>(v)); }

class Reader {
public:
    Reader(std::span<const std::uint8_t> bytes, std::string_view what) : bytes_(bytes), what_(what) {}

    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes_[pos_++]) << (8 * i);
        return v;
    }
    std::uint64_t u64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes_[pos_++]) << (8 * i);
        return v;
    }
    std::uint8_t u8() {
        need(1);
        return bytes_[pos_++];
    }
    double f64() { return std::bit_cast<double>(u64()); }
    std::size_t remaining() const { return bytes_.size() - pos_; }
    std::span<const std::uint8_t> rest() const { return bytes_.subspan(pos_); }
    void finish() const {
        if (remaining() != 0) throw ProtocolError(std::string(what_) + ": trailing bytes");
    }

private:
    void need(std::size_t n) const {
        if (remaining() < n) throw ProtocolError(std::string(what_) + ": truncated");
    }

    std::span<const std::uint8_t> bytes_;
    std::string_view what_;
    std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> encode(const PeerMessage& msg) {
    std::vector<std::uint8_t> out;
    out.reserve(msg.wire_size());
    out.push_back(static_cast<std::uint8_t>(msg.kind));
    put_u32(out, raw(msg.sender));
    put_u32(out, msg.sync_round);
    put_u32(out, static_cast<std::uint32_t>(msg.payload.size()));
    out.insert(out.end(), msg.payload.begin(), msg.payload.end());
    return out;
}

PeerMessage decode(std::span<const std::uint8_t> bytes) {
    Reader r(bytes, "message");
    PeerMessage msg;
    const std::uint8_t kind = r.u8();
    if (kind < 1 || kind > kMessageKinds) throw ProtocolError("message: unknown kind " + std::to_string(kind));
    msg.kind = static_cast<MessageKind>(kind);
    msg.sender = device(r.u32());
    msg.sync_round = r.u32();
    const std::uint32_t len = r.u32();
    if (r.remaining() != len) throw ProtocolError("message: payload length mismatch");
    const auto rest = r.rest();
    msg.payload.assign(rest.begin(), rest.end());
    return msg;
}

std::vector<std::uint8_t> encode_segment(const Segment& segment) {
    std::vector<std::uint8_t> out;
    out.reserve(kSegmentPrefixBytes + 8 * segment.values.size());
    put_u32(out, segment.index);
    put_u32(out, segment.offset);
    put_u32(out, static_cast<std::uint32_t>(segment.values.size()));
    for (const double v : segment.values) put_f64(out, v);
    return out;
}

Segment decode_segment(std::span<const std::uint8_t> payload) {
    Reader r(payload, "segment");
    Segment s;
    s.index = r.u32();
    s.offset = r.u32();
    const std::uint32_t count = r.u32();
    if (r.remaining() != static_cast<std::size_t>(count) * 8) throw ProtocolError("segment: count mismatch");
    s.values.resize(count);
    for (auto& v : s.values) v = r.f64();
    return s;
}

std::vector<std::uint8_t> encode_model(const ModelPayload& model) {
    std::vector<std::uint8_t> out;
    out.reserve(kModelPrefixBytes + 8 * model.params.dim());
    put_u64(out, model.version);
    put_u32(out, static_cast<std::uint32_t>(model.params.dim()));
    for (const double v : model.params.values()) put_f64(out, v);
    return out;
}

ModelPayload decode_model(std::span<const std::uint8_t> payload) {
    Reader r(payload, "model");
    ModelPayload m;
    m.version = r.u64();
    const std::uint32_t dim = r.u32();
    if (r.remaining() != static_cast<std::size_t>(dim) * 8) throw ProtocolError("model: dim mismatch");
    std::vector<double> values(dim);
    for (auto& v : values) v = r.f64();
    m.params = ParamVector(std::move(values));
    return m;
}

std::vector<std::uint8_t> encode_bypass(std::span<const DeviceId> bypassed) {
    std::vector<std::uint8_t> out;
    put_u32(out, static_cast<std::uint32_t>(bypassed.size()));
    for (const auto id : bypassed) put_u32(out, raw(id));
    return out;
}

std::vector<DeviceId> decode_bypass(std::span<const std::uint8_t> payload) {
    Reader r(payload, "bypass-warning");
    const std::uint32_t count = r.u32();
    if (r.remaining() != static_cast<std::size_t>(count) * 4) throw ProtocolError("bypass-warning: count mismatch");
    std::vector<DeviceId> ids(count);
    for (auto& id : ids) id = device(r.u32());
    return ids;
}

PeerMessage make_segment_message(DeviceId sender, std::uint32_t round, const Segment& segment) {
    return PeerMessage{MessageKind::segment, sender, round, encode_segment(segment)};
}

PeerMessage make_model_message(DeviceId sender, std::uint32_t round, const ModelPayload& model) {
    return PeerMessage{MessageKind::model_broadcast, sender, round, encode_model(model)};
}

PeerMessage make_control_message(MessageKind kind, DeviceId sender, std::uint32_t round,
                                 std::vector<std::uint8_t> payload) {
    return PeerMessage{kind, sender, round, std::move(payload)};
}

std::size_t value_count(const PeerMessage& msg) {
    if (msg.kind == MessageKind::segment && msg.payload.size() >= kSegmentPrefixBytes)
        return (msg.payload.size() - kSegmentPrefixBytes) / 8;
    if (msg.kind == MessageKind::model_broadcast && msg.payload.size() >= kModelPrefixBytes)
        return (msg.payload.size() - kModelPrefixBytes) / 8;
    return 0;
}

}  // namespace hadfl
