#pragma once

#include "hadfl/aggregate.hpp"
#include "hadfl/param_vector.hpp"
#include "hadfl/selector.hpp"
#include "hadfl/simnet.hpp"
#include "hadfl/types.hpp"

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

namespace hadfl {

struct SessionTimeouts {
    // Silence from the ring predecessor tolerated before a handshake is sent.
    Time wait{1, 1000};
    // Time allowed for a handshake-ack (and for a bypass-warning to take effect).
    Time handshake{1, 1000};
    // Recheck period for finished sessions waiting on members that may have died.
    Time liveness_grace{1, 100};
};

// wait = handshake = max(5 * mean latency of a segment message, floor).
SessionTimeouts default_timeouts(const LatencyModel& latency, std::size_t segment_wire_bytes,
                                 Time floor = Time(1, 1000));

enum class SessionPhase { scatter, gather, broadcast, done, aborted };
enum class PeerStatus { alive, suspected, bypassed };

std::string_view to_string(SessionPhase phase);
std::string_view to_string(PeerStatus status);

struct SessionResult {
    bool completed = false;
    std::string error;
    // Mean vector held identically by every member that finished.
    ParamVector aggregate;
    std::map<DeviceId, ParamVector> outputs;
    std::map<DeviceId, PeerStatus> peer_status;
    // Flag^k: cleared for bypassed members.
    std::map<DeviceId, bool> contributions;
    // Number of original inputs averaged into each segment.
    std::vector<std::size_t> segment_divisors;
    std::optional<DeviceId> broadcaster;
    std::size_t broadcasts_sent = 0;
    std::size_t replans = 0;
    // Longest path, in hops, any segment travelled during each phase.
    std::size_t scatter_steps = 0;
    std::size_t gather_steps = 0;
    Time finished_at{0};
};

struct SessionOptions {
    std::uint32_t sync_round = 0;
    SessionTimeouts timeouts;
    // Receivers of the aggregate once the ring finishes (the unselected devices).
    std::vector<DeviceId> broadcast_targets;
    // Bypassed members that are still connected also receive the broadcast.
    bool broadcast_to_bypassed = true;
    std::uint64_t broadcast_version = 0;
    // Seeds the broadcaster choice.
    std::uint64_t seed = 0;
    // Liveness monitor view used when a finished ring waits on a silent member.
    std::function<bool(DeviceId)> is_live;
};

// Sends the model-broadcast payload from `broadcaster` to every device in `unselected`.
// Non-blocking: returns the number of messages emitted.
std::size_t broadcast_to_unselected(Simulator& sim, DeviceId broadcaster, const ParamVector& model,
                                    std::uint64_t version, const std::vector<DeviceId>& unselected,
                                    std::uint32_t sync_round, std::uint64_t channel = 0);

// One partial synchronization: segmented scatter-gather ring all-reduce over the
// selected devices, followed by the broadcast to the unselected ones.
//
// The segment count equals the ring size. Every segment starts at one member and
// travels around the ring accumulating each member's slice until it reaches the
// member before its start, which divides by the contributor count and circulates
// the finished slice once more. Each element is therefore finalized by exactly one
// member, so every finishing member ends with bit-identical vectors.
//
// Fault path: a member that hears nothing from its predecessor within the wait
// timeout sends a handshake. Without an ack it sends a bypass-warning to the silent
// peer's predecessor (walking further upstream if that one is silent too). The
// warned member relinks to the waiting member, which opens a new channel and
// re-plans the session over the shortened ring: slices already finalized by a
// survivor are kept with their divisor, every other slice is reduced again over
// the survivors' original inputs. Messages from an older channel are ignored.
//
// The session object owns each member's protocol state; messages to a member are
// handled strictly in delivery order.
class AggregationSession {
public:
    AggregationSession(Simulator& sim, RingTopology ring, std::size_t dim, SessionOptions options);

    AggregationSession(const AggregationSession&) = delete;
    AggregationSession& operator=(const AggregationSession&) = delete;

    void on_member_done(std::function<void(DeviceId, const ParamVector&)> fn) { member_done_ = std::move(fn); }
    void on_complete(std::function<void(const SessionResult&)> fn) { complete_ = std::move(fn); }

    // The member finished local training; `input` is its contribution.
    void member_ready(DeviceId member, ParamVector input);

    bool owns(const Envelope& env) const noexcept;
    void on_message(const Envelope& env);

    // `silent` must be the waiting member's current predecessor.
    void handle_peer_timeout(DeviceId waiting, DeviceId silent);

    // Moves only forward: scatter, gather, broadcast, then done (or aborted).
    // Ends an unfinished session as aborted.
    void abandon(const std::string& why) { abort(why); }

    SessionPhase phase() const noexcept { return phase_; }
    bool finished() const noexcept { return phase_ == SessionPhase::done || phase_ == SessionPhase::aborted; }
    PeerStatus peer_status(DeviceId id) const;
    const std::vector<DeviceId>& current_ring() const noexcept { return plan_.order; }
    std::uint64_t channel() const noexcept { return channel_base_ | plan_.epoch; }
    const SessionResult& result() const noexcept { return result_; }
    std::size_t dim() const noexcept { return dim_; }

private:
    struct Task {
        bool retained = false;
        // Reduce tasks: position of the first member in plan order.
        std::size_t start = 0;
        // Retained tasks: member holding the finished slice.
        DeviceId holder{};
        std::size_t divisor = 0;
    };
    struct Plan {
        std::uint32_t epoch = 0;
        std::vector<DeviceId> order;
        std::vector<Task> tasks;
    };
    struct Final {
        std::vector<double> values;
        std::size_t divisor = 0;
    };
    struct Member {
        PeerStatus status = PeerStatus::alive;
        bool ready = false;
        bool done = false;
        std::uint64_t incarnation = 0;
        ParamVector input;
        std::set<std::size_t> contributed;
        std::map<std::size_t, Final> finals;
        std::vector<Envelope> backlog;
        std::optional<EventId> wait_timer;
        std::optional<EventId> ack_timer;
        std::optional<EventId> bypass_timer;
        std::optional<DeviceId> probing;
        std::vector<DeviceId> pending_bypass;
    };

    Member& member(DeviceId id);
    std::size_t pos(DeviceId id) const;
    DeviceId succ(DeviceId id) const;
    DeviceId pred(DeviceId id) const;
    DeviceId effective_pred(DeviceId waiting, DeviceId from) const;
    DeviceId reduce_holder(const Task& t) const;
    DeviceId task_owner(const Task& t) const;

    void kick(DeviceId id);
    void process_segment(DeviceId receiver, const Envelope& env);
    void send_segment(DeviceId from, std::size_t seg, std::vector<double> values);
    void check_done(DeviceId id);
    void maybe_complete();
    void complete();
    void abort(const std::string& why);

    void arm_wait(DeviceId id);
    void cancel_timers(Member& m);
    void on_wait_timeout(DeviceId id);
    void on_ack_timeout(DeviceId waiting, DeviceId silent);
    void on_bypass_timeout(DeviceId waiting, DeviceId candidate);
    void send_bypass_warning(DeviceId waiting, DeviceId candidate);
    void replan(const std::vector<DeviceId>& bypassed);
    void arm_watchdog();
    void update_phase();

    Simulator& sim_;
    std::size_t dim_;
    SessionOptions options_;
    std::uint64_t channel_base_;
    std::vector<SegmentRange> layout_;
    Plan plan_;
    std::map<DeviceId, Member> members_;
    std::vector<DeviceId> original_order_;
    SessionPhase phase_ = SessionPhase::scatter;
    std::optional<EventId> watchdog_;
    SessionResult result_;
    std::mt19937_64 rng_;
    std::function<void(DeviceId, const ParamVector&)> member_done_;
    std::function<void(const SessionResult&)> complete_;
};

struct ScatterGatherOptions {
    LatencyModel latency;
    std::uint64_t seed = 0;
    FailureScript failures;
    // Members become ready at these times (default 0). A member disconnected by then never does.
    std::map<DeviceId, Time> ready_at;
    std::optional<SessionTimeouts> timeouts;
    std::vector<DeviceId> unselected;
    std::size_t max_events = 10'000'000;
};

struct ScatterGatherOutcome {
    SessionResult result;
    TrafficCounter traffic;
    // False when the event budget ran out before the session finished.
    bool terminated = false;
    std::size_t events = 0;
};

// Runs one session on a fresh simulator. Convenience front door for tests and tools.
ScatterGatherOutcome run_scatter_gather(const RingTopology& ring, const std::map<DeviceId, ParamVector>& inputs,
                                        const ScatterGatherOptions& options = {});

}  // namespace hadfl
