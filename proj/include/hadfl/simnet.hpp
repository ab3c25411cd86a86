#pragma once

#include "hadfl/types.hpp"
#include "hadfl/wire.hpp"

#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <tuple>
#include <vector>

namespace hadfl {

// delay = base + per_byte * wire_bytes + U(-jitter, +jitter), clamped at zero.
// The jitter draw is rounded to whole nanoseconds so the clock stays rational.
struct LatencyModel {
    Time base{0};
    Time jitter{0};
    Time per_byte{0};

    Time mean(std::size_t wire_bytes) const { return base + per_byte * static_cast<std::int64_t>(wire_bytes); }
    void validate() const;
    friend bool operator==(const LatencyModel&, const LatencyModel&) = default;
};

// Epoch duration of a device = unit_epoch_time / compute_power, optionally scaled by a
// factor max(0.05, 1 + noise_stddev * N(0, 1)) rounded to nanoseconds.
struct ComputeModel {
    Time unit_epoch_time{1};
    double noise_stddev = 0.0;
};

struct FailureEvent {
    DeviceId device{};
    Time disconnect_at{0};
    std::optional<Time> reconnect_at;

    friend bool operator==(const FailureEvent&, const FailureEvent&) = default;
};

struct FailureScript {
    std::vector<FailureEvent> events;

    // Throws InvalidArgument unless reconnect > disconnect and events are ordered by disconnect time.
    void validate() const;
    friend bool operator==(const FailureScript&, const FailureScript&) = default;
};

struct Tally {
    std::uint64_t messages = 0;
    std::uint64_t bytes = 0;
    // 8 * number of f64 values carried (segment and model payloads only).
    std::uint64_t value_bytes = 0;

    Tally& operator+=(const Tally& o) {
        messages += o.messages;
        bytes += o.bytes;
        value_bytes += o.value_bytes;
        return *this;
    }
    friend bool operator==(const Tally&, const Tally&) = default;
};

struct FlowTally {
    Tally sent;
    Tally received;
    Tally dropped;

    // Sent but neither delivered nor dropped yet.
    Tally in_flight() const;
    FlowTally& operator+=(const FlowTally& o) {
        sent += o.sent;
        received += o.received;
        dropped += o.dropped;
        return *this;
    }
};

// Byte and message tallies keyed by (from, to, kind, sync_round).
class TrafficCounter {
public:
    struct Key {
        DeviceId from{};
        DeviceId to{};
        MessageKind kind = MessageKind::segment;
        std::uint32_t round = 0;

        friend auto operator<=>(const Key&, const Key&) = default;
    };

    enum class Event { sent, received, dropped };
    void record(const Key& key, Event event, std::size_t bytes, std::size_t value_bytes);

    FlowTally total() const;
    FlowTally by_kind(MessageKind kind) const;
    FlowTally by_round(std::uint32_t round) const;
    FlowTally by_round_kind(std::uint32_t round, MessageKind kind) const;
    FlowTally by_link(DeviceId from, DeviceId to) const;
    Tally sent_by(DeviceId d) const;
    Tally received_by(DeviceId d) const;
    std::vector<std::uint32_t> rounds() const;
    const std::map<Key, FlowTally>& entries() const noexcept { return entries_; }

private:
    template <typename Pred>
    FlowTally sum_if(Pred pred) const {
        FlowTally t;
        for (const auto& [k, v] : entries_)
            if (pred(k)) t += v;
        return t;
    }

    std::map<Key, FlowTally> entries_;
};

struct Envelope {
    DeviceId from{};
    DeviceId to{};
    // Transport connection id; a relinked ring opens a new one.
    std::uint64_t channel = 0;
    PeerMessage message;
    Time sent_at{0};
};

struct TraceEntry {
    Time at{0};
    std::uint64_t seq = 0;
    std::string label;

    friend bool operator==(const TraceEntry&, const TraceEntry&) = default;
};

using EventId = std::uint64_t;

// Deterministic single-threaded discrete-event simulator with an exact rational clock.
// Events run in (time, insertion sequence) order.
class Simulator {
public:
    explicit Simulator(std::uint64_t seed, LatencyModel latency = {}, ComputeModel compute = {});

    Simulator(const Simulator&) = delete;
    Simulator& operator=(const Simulator&) = delete;

    Time now() const noexcept { return now_; }

    // Throws InvalidArgument when `at` is earlier than now().
    EventId schedule(Time at, std::function<void()> fn, std::string label = {});
    EventId schedule_after(Time delay, std::function<void()> fn, std::string label = {});
    // Runs only if `dev` stayed connected (same incarnation) from now until `at`.
    EventId schedule_for(DeviceId dev, Time at, std::function<void()> fn, std::string label = {});
    bool cancel(EventId id);

    // Pops one event. Returns false when no foreground event remains.
    bool step();
    // Runs until no foreground event remains or max_events were processed.
    std::size_t run(std::size_t max_events = std::numeric_limits<std::size_t>::max());
    // Runs until `stop()` holds (checked before each event), the queue drains, or max_events.
    std::size_t run_until(const std::function<bool()>& stop,
                          std::size_t max_events = std::numeric_limits<std::size_t>::max());
    std::size_t pending() const noexcept { return foreground_pending_; }

    void enable_trace(bool on) { trace_on_ = on; }
    const std::vector<TraceEntry>& trace() const noexcept { return trace_; }

    void add_device(DeviceId id, Rational compute_power);
    bool has_device(DeviceId id) const;
    bool connected(DeviceId id) const;
    std::uint64_t incarnation(DeviceId id) const;
    Rational compute_power(DeviceId id) const;
    std::vector<DeviceId> devices() const;

    // Duration of `epochs` epochs of work on `id`, including compute noise when enabled.
    Time compute_duration(DeviceId id, const Rational& epochs);
    // now() + compute_duration. Throws InvalidArgument if the device is disconnected.
    Time simulate_compute(DeviceId id, const Rational& epochs);

    void set_handler(DeviceId id, std::function<void(const Envelope&)> handler);
    // Schedules delivery at now + modeled delay. A message whose receiver is disconnected at
    // delivery time, or reconnected in between, is dropped.
    void send(DeviceId from, DeviceId to, const PeerMessage& msg, std::uint64_t channel = 0);
    const LatencyModel& latency() const noexcept { return latency_; }

    void inject_failures(const FailureScript& script);
    void disconnect(DeviceId id);
    void reconnect(DeviceId id);
    void on_connectivity_change(std::function<void(DeviceId, bool)> fn) { connectivity_hooks_.push_back(std::move(fn)); }

    // Every connected device logs a heartbeat each `interval`; reconnects log one immediately.
    // Heartbeat events never keep run() alive.
    void start_heartbeats(Time interval);
    const std::map<DeviceId, Time>& heartbeat_log() const noexcept { return heartbeats_; }

    // Fresh transport channel namespace for a protocol session.
    std::uint64_t allocate_channel_base() { return ++channel_bases_ << 20; }

    const TrafficCounter& traffic() const noexcept { return traffic_; }
    TrafficCounter traffic_report() const { return traffic_; }

private:
    struct DeviceState {
        Rational power{1};
        bool connected = true;
        std::uint64_t incarnation = 0;
        std::function<void(const Envelope&)> handler;
    };
    struct Event {
        std::function<void()> fn;
        std::string label;
        bool background = false;
    };
    using Key = std::pair<Time, std::uint64_t>;

    EventId push(Time at, std::function<void()> fn, std::string label, bool background);
    DeviceState& state(DeviceId id);
    const DeviceState& state(DeviceId id) const;
    void heartbeat_tick(DeviceId id, Time interval);
    void notify(DeviceId id, bool up);

    Time now_{0};
    std::uint64_t next_seq_ = 0;
    std::uint64_t channel_bases_ = 0;
    std::map<Key, Event> queue_;
    std::map<EventId, Time> index_;
    std::size_t foreground_pending_ = 0;
    bool trace_on_ = false;
    std::vector<TraceEntry> trace_;

    LatencyModel latency_;
    ComputeModel compute_;
    std::mt19937_64 net_rng_;
    std::mt19937_64 compute_rng_;
    std::map<DeviceId, DeviceState> devices_;
    std::map<DeviceId, Time> heartbeats_;
    std::optional<Time> heartbeat_interval_;
    std::vector<std::function<void(DeviceId, bool)>> connectivity_hooks_;
    TrafficCounter traffic_;
};

}  // namespace hadfl
