#include "hadfl/session.hpp"

#include "hadfl/errors.hpp"
#include "hadfl/wire.hpp"

#include <algorithm>

namespace hadfl {

SessionTimeouts default_timeouts(const LatencyModel& latency, std::size_t segment_wire_bytes, Time floor) {
    Time t = latency.mean(segment_wire_bytes) * 5;
    if (t < floor) t = floor;
    SessionTimeouts out;
    out.wait = t;
    out.handshake = t;
    out.liveness_grace = t * 2;
    return out;
}

std::string_view to_string(SessionPhase phase) {
    switch (phase) {
        case SessionPhase::scatter: return "scatter";
        case SessionPhase::gather: return "gather";
        case SessionPhase::broadcast: return "broadcast";
        case SessionPhase::done: return "done";
        case SessionPhase::aborted: return "aborted";
    }
    return "?";
}

std::string_view to_string(PeerStatus status) {
    switch (status) {
        case PeerStatus::alive: return "alive";
        case PeerStatus::suspected: return "suspected";
        case PeerStatus::bypassed: return "bypassed";
    }
    return "?";
}

std::size_t broadcast_to_unselected(Simulator& sim, DeviceId broadcaster, const ParamVector& model,
                                    std::uint64_t version, const std::vector<DeviceId>& unselected,
                                    std::uint32_t sync_round, std::uint64_t channel) {
    if (unselected.empty()) return 0;
    const PeerMessage msg = make_model_message(broadcaster, sync_round, ModelPayload{version, model});
    std::size_t sent = 0;
    for (DeviceId to : unselected) {
        if (to == broadcaster) continue;
        sim.send(broadcaster, to, msg, channel);
        ++sent;
    }
    return sent;
}

AggregationSession::AggregationSession(Simulator& sim, RingTopology ring, std::size_t dim, SessionOptions options)
    : sim_(sim),
      dim_(dim),
      options_(std::move(options)),
      channel_base_(sim.allocate_channel_base()),
      rng_(mix_seed(options_.seed, 0x5e55, options_.sync_round)) {
    ring.validate();
    if (dim == 0) throw InvalidArgument("aggregation session: empty parameter vector");
    if (!options_.is_live) options_.is_live = [&s = sim_](DeviceId id) { return s.connected(id); };
    original_order_ = ring.order;
    plan_.order = ring.order;
    const std::size_t segments = ring.size();
    layout_ = segment_layout(dim, segments);
    plan_.tasks.resize(segments);
    for (std::size_t s = 0; s < segments; ++s) {
        plan_.tasks[s].start = s;
        plan_.tasks[s].divisor = segments;
    }
    for (DeviceId id : ring.order) {
        members_[id].incarnation = sim_.incarnation(id);
        result_.peer_status[id] = PeerStatus::alive;
        result_.contributions[id] = true;
    }
    result_.segment_divisors.assign(segments, segments);
}

AggregationSession::Member& AggregationSession::member(DeviceId id) {
    auto it = members_.find(id);
    if (it == members_.end()) throw InvalidArgument("aggregation session: device is not a member");
    return it->second;
}

PeerStatus AggregationSession::peer_status(DeviceId id) const {
    auto it = members_.find(id);
    if (it == members_.end()) throw InvalidArgument("aggregation session: device is not a member");
    return it->second.status;
}

std::size_t AggregationSession::pos(DeviceId id) const {
    auto it = std::find(plan_.order.begin(), plan_.order.end(), id);
    if (it == plan_.order.end()) throw InvalidArgument("aggregation session: device not in current ring");
    return static_cast<std::size_t>(it - plan_.order.begin());
}

DeviceId AggregationSession::succ(DeviceId id) const {
    return plan_.order[(pos(id) + 1) % plan_.order.size()];
}

DeviceId AggregationSession::pred(DeviceId id) const {
    const std::size_t r = plan_.order.size();
    return plan_.order[(pos(id) + r - 1) % r];
}

DeviceId AggregationSession::effective_pred(DeviceId waiting, DeviceId from) const {
    const auto& skip = members_.at(waiting).pending_bypass;
    DeviceId p = pred(from);
    while (p != waiting && std::find(skip.begin(), skip.end(), p) != skip.end()) p = pred(p);
    return p;
}

DeviceId AggregationSession::reduce_holder(const Task& t) const {
    const std::size_t r = plan_.order.size();
    return plan_.order[(t.start + r - 1) % r];
}

DeviceId AggregationSession::task_owner(const Task& t) const {
    return t.retained ? t.holder : plan_.order[t.start];
}

void AggregationSession::send_segment(DeviceId from, std::size_t seg, std::vector<double> values) {
    Segment segment{static_cast<std::uint32_t>(seg), static_cast<std::uint32_t>(layout_[seg].offset),
                    std::move(values)};
    sim_.send(from, succ(from), make_segment_message(from, options_.sync_round, segment), channel());
}

void AggregationSession::member_ready(DeviceId id, ParamVector input) {
    if (finished()) return;
    Member& m = member(id);
    if (m.status == PeerStatus::bypassed || m.ready) return;
    if (input.dim() != dim_) {
        abort("protocol error: member " + std::to_string(raw(id)) + " contributed dimension " +
              std::to_string(input.dim()) + ", expected " + std::to_string(dim_));
        return;
    }
    m.ready = true;
    m.input = std::move(input);
    kick(id);
    if (finished()) return;
    std::vector<Envelope> backlog;
    backlog.swap(m.backlog);
    for (const Envelope& env : backlog) {
        if (finished()) return;
        if (env.channel == channel()) process_segment(id, env);
    }
    if (finished()) return;
    arm_wait(id);
    check_done(id);
}

void AggregationSession::kick(DeviceId id) {
    Member& m = members_.at(id);
    for (std::size_t s = 0; s < plan_.tasks.size(); ++s) {
        const Task& t = plan_.tasks[s];
        if (task_owner(t) != id) continue;
        if (t.retained) {
            send_segment(id, s, m.finals.at(s).values);
        } else {
            const SegmentRange r = layout_[s];
            const auto v = m.input.values();
            m.contributed.insert(s);
            send_segment(id, s, std::vector<double>(v.begin() + static_cast<std::ptrdiff_t>(r.offset),
                                                    v.begin() + static_cast<std::ptrdiff_t>(r.offset + r.count)));
        }
    }
}

bool AggregationSession::owns(const Envelope& env) const noexcept {
    return (env.channel & ~std::uint64_t{0xFFFFF}) == channel_base_;
}

void AggregationSession::on_message(const Envelope& env) {
    if (finished() || !owns(env)) return;
    auto it = members_.find(env.to);
    if (it == members_.end() || !members_.count(env.from)) return;
    Member& m = it->second;
    if (m.status == PeerStatus::bypassed) return;
    if (sim_.incarnation(env.to) != m.incarnation) return;
    const bool current = env.channel == channel();
    switch (env.message.kind) {
        case MessageKind::handshake:
            sim_.send(env.to, env.from,
                      make_control_message(MessageKind::handshake_ack, env.to, options_.sync_round), env.channel);
            return;
        case MessageKind::handshake_ack: {
            if (!current || m.probing != env.from) return;
            if (m.ack_timer) sim_.cancel(*m.ack_timer);
            m.ack_timer.reset();
            m.probing.reset();
            Member& peer = members_.at(env.from);
            if (peer.status == PeerStatus::suspected) {
                peer.status = PeerStatus::alive;
                result_.peer_status[env.from] = PeerStatus::alive;
            }
            if (!m.pending_bypass.empty())
                send_bypass_warning(env.to, env.from);
            else
                arm_wait(env.to);
            return;
        }
        case MessageKind::bypass_warning: {
            if (!current) return;
            std::vector<DeviceId> ids;
            try {
                ids = decode_bypass(env.message.payload);
            } catch (const ProtocolError& e) {
                abort(std::string("protocol error: ") + e.what());
                return;
            }
            std::vector<DeviceId> valid;
            for (DeviceId id : ids)
                if (id != env.to && std::find(plan_.order.begin(), plan_.order.end(), id) != plan_.order.end())
                    valid.push_back(id);
            if (!valid.empty()) replan(valid);
            return;
        }
        case MessageKind::segment:
            if (!current || env.from != pred(env.to)) return;
            if (!m.ready) {
                m.backlog.push_back(env);
                return;
            }
            process_segment(env.to, env);
            if (finished()) return;
            if (!members_.at(env.to).done) arm_wait(env.to);
            check_done(env.to);
            return;
        default:
            return;
    }
}

void AggregationSession::process_segment(DeviceId receiver, const Envelope& env) {
    Segment seg;
    try {
        seg = decode_segment(env.message.payload);
    } catch (const ProtocolError& e) {
        abort(std::string("protocol error: ") + e.what());
        return;
    }
    if (seg.index >= layout_.size() || seg.offset != layout_[seg.index].offset ||
        seg.values.size() != layout_[seg.index].count) {
        abort("protocol error: segment " + std::to_string(seg.index) + " does not match the session layout");
        return;
    }
    const std::size_t s = seg.index;
    const Task& t = plan_.tasks[s];
    Member& m = members_.at(receiver);
    const DeviceId stop = t.retained ? t.holder : reduce_holder(t);
    const bool scatter = !t.retained && !m.contributed.count(s);
    const std::size_t r = plan_.order.size();
    const std::size_t from = t.retained ? pos(t.holder) : scatter ? t.start : pos(stop);
    const std::size_t hop = (pos(receiver) + r - from) % r;
    std::size_t& steps = scatter ? result_.scatter_steps : result_.gather_steps;
    steps = std::max(steps, hop);
    if (!scatter) {
        m.finals[s] = Final{seg.values, t.divisor};
        if (succ(receiver) != stop) send_segment(receiver, s, std::move(seg.values));
        return;
    }
    const auto own = m.input.values();
    for (std::size_t i = 0; i < seg.values.size(); ++i) seg.values[i] += own[seg.offset + i];
    m.contributed.insert(s);
    if (receiver != stop) {
        send_segment(receiver, s, std::move(seg.values));
        return;
    }
    const double divisor = static_cast<double>(t.divisor);
    for (double& v : seg.values) v /= divisor;
    m.finals[s] = Final{seg.values, t.divisor};
    send_segment(receiver, s, std::move(seg.values));
    update_phase();
}

void AggregationSession::update_phase() {
    if (phase_ != SessionPhase::scatter) return;
    for (std::size_t s = 0; s < plan_.tasks.size(); ++s) {
        const Task& t = plan_.tasks[s];
        if (!t.retained && !members_.at(reduce_holder(t)).finals.count(s)) {
            phase_ = SessionPhase::scatter;
            return;
        }
    }
    phase_ = SessionPhase::gather;
}

void AggregationSession::check_done(DeviceId id) {
    Member& m = members_.at(id);
    if (m.done || !m.ready || m.finals.size() != layout_.size()) return;
    m.done = true;
    cancel_timers(m);
    std::vector<double> out(dim_);
    for (const auto& [s, f] : m.finals)
        std::copy(f.values.begin(), f.values.end(), out.begin() + static_cast<std::ptrdiff_t>(layout_[s].offset));
    ParamVector vec(std::move(out));
    result_.outputs[id] = vec;
    if (member_done_) member_done_(id, vec);
    if (finished()) return;
    maybe_complete();
    if (!finished()) arm_watchdog();
}

void AggregationSession::maybe_complete() {
    if (finished()) return;
    bool any_done = false;
    for (DeviceId id : plan_.order) {
        const Member& m = members_.at(id);
        if (m.status == PeerStatus::bypassed) continue;
        if (!m.done) return;
        any_done = true;
    }
    if (any_done)
        complete();
    else
        abort("no member finished the aggregation");
}

void AggregationSession::complete() {
    phase_ = SessionPhase::broadcast;
    for (auto& [id, m] : members_) cancel_timers(m);
    if (watchdog_) sim_.cancel(*watchdog_);
    watchdog_.reset();
    result_.completed = true;
    result_.finished_at = sim_.now();
    std::vector<DeviceId> candidates;
    for (DeviceId id : plan_.order) {
        const Member& m = members_.at(id);
        if (m.done && m.status != PeerStatus::bypassed && sim_.connected(id) &&
            sim_.incarnation(id) == m.incarnation)
            candidates.push_back(id);
    }
    for (DeviceId id : plan_.order)
        if (members_.at(id).done && members_.at(id).status != PeerStatus::bypassed) {
            result_.aggregate = result_.outputs.at(id);
            break;
        }
    if (!candidates.empty()) {
        std::uniform_int_distribution<std::size_t> pick(0, candidates.size() - 1);
        const DeviceId b = candidates[pick(rng_)];
        result_.broadcaster = b;
        std::vector<DeviceId> targets = options_.broadcast_targets;
        if (options_.broadcast_to_bypassed)
            for (DeviceId id : original_order_)
                if (members_.at(id).status == PeerStatus::bypassed && sim_.connected(id)) targets.push_back(id);
        result_.broadcasts_sent = broadcast_to_unselected(sim_, b, result_.aggregate, options_.broadcast_version,
                                                          targets, options_.sync_round, channel());
    }
    phase_ = SessionPhase::done;
    if (complete_) complete_(result_);
}

void AggregationSession::abort(const std::string& why) {
    if (finished()) return;
    for (auto& [id, m] : members_) cancel_timers(m);
    if (watchdog_) sim_.cancel(*watchdog_);
    watchdog_.reset();
    phase_ = SessionPhase::aborted;
    result_.completed = false;
    result_.error = why;
    result_.finished_at = sim_.now();
    if (complete_) complete_(result_);
}

void AggregationSession::cancel_timers(Member& m) {
    for (auto* t : {&m.wait_timer, &m.ack_timer, &m.bypass_timer}) {
        if (*t) sim_.cancel(**t);
        t->reset();
    }
}

void AggregationSession::arm_wait(DeviceId id) {
    Member& m = members_.at(id);
    if (m.wait_timer) sim_.cancel(*m.wait_timer);
    m.wait_timer.reset();
    if (finished() || m.done || !m.ready || m.probing || m.bypass_timer) return;
    m.wait_timer = sim_.schedule_for(id, sim_.now() + options_.timeouts.wait, [this, id] {
        members_.at(id).wait_timer.reset();
        on_wait_timeout(id);
    });
}

void AggregationSession::on_wait_timeout(DeviceId id) {
    const Member& m = members_.at(id);
    if (finished() || m.done || m.probing || m.bypass_timer) return;
    handle_peer_timeout(id, effective_pred(id, id));
}

void AggregationSession::handle_peer_timeout(DeviceId waiting, DeviceId silent) {
    if (finished()) return;
    Member& w = member(waiting);
    if (effective_pred(waiting, waiting) != silent)
        throw InvalidArgument("handle_peer_timeout: silent peer is not the waiting member's predecessor");
    Member& f = members_.at(silent);
    if (f.status == PeerStatus::alive) {
        f.status = PeerStatus::suspected;
        result_.peer_status[silent] = PeerStatus::suspected;
    }
    if (w.wait_timer) sim_.cancel(*w.wait_timer);
    w.wait_timer.reset();
    w.probing = silent;
    sim_.send(waiting, silent, make_control_message(MessageKind::handshake, waiting, options_.sync_round), channel());
    w.ack_timer = sim_.schedule_for(waiting, sim_.now() + options_.timeouts.handshake, [this, waiting, silent] {
        members_.at(waiting).ack_timer.reset();
        on_ack_timeout(waiting, silent);
    });
}

void AggregationSession::on_ack_timeout(DeviceId waiting, DeviceId silent) {
    if (finished()) return;
    Member& w = members_.at(waiting);
    if (w.probing != silent) return;
    w.probing.reset();
    w.pending_bypass.push_back(silent);
    std::size_t survivors = 0;
    for (DeviceId id : plan_.order)
        if (members_.at(id).status != PeerStatus::bypassed &&
            std::find(w.pending_bypass.begin(), w.pending_bypass.end(), id) == w.pending_bypass.end())
            ++survivors;
    const DeviceId candidate = effective_pred(waiting, waiting);
    if (candidate == waiting || survivors < 2) {
        for (DeviceId id : w.pending_bypass) {
            members_.at(id).status = PeerStatus::bypassed;
            result_.peer_status[id] = PeerStatus::bypassed;
            result_.contributions[id] = false;
        }
        abort("fewer than two live members remain in the ring");
        return;
    }
    send_bypass_warning(waiting, candidate);
}

void AggregationSession::send_bypass_warning(DeviceId waiting, DeviceId candidate) {
    Member& w = members_.at(waiting);
    sim_.send(waiting, candidate,
              make_control_message(MessageKind::bypass_warning, waiting, options_.sync_round,
                                   encode_bypass(w.pending_bypass)),
              channel());
    if (w.bypass_timer) sim_.cancel(*w.bypass_timer);
    w.bypass_timer = sim_.schedule_for(waiting, sim_.now() + options_.timeouts.handshake, [this, waiting, candidate] {
        members_.at(waiting).bypass_timer.reset();
        on_bypass_timeout(waiting, candidate);
    });
}

void AggregationSession::on_bypass_timeout(DeviceId waiting, DeviceId candidate) {
    if (finished() || members_.at(waiting).done) return;
    if (effective_pred(waiting, waiting) != candidate) return;
    handle_peer_timeout(waiting, candidate);
}

void AggregationSession::replan(const std::vector<DeviceId>& bypassed) {
    for (DeviceId id : bypassed) {
        Member& m = members_.at(id);
        m.status = PeerStatus::bypassed;
        cancel_timers(m);
        result_.peer_status[id] = PeerStatus::bypassed;
        result_.contributions[id] = false;
    }
    std::vector<DeviceId> order;
    for (DeviceId id : plan_.order)
        if (members_.at(id).status != PeerStatus::bypassed) order.push_back(id);
    if (order.size() < 2) {
        abort("fewer than two live members remain in the ring");
        return;
    }
    plan_.epoch += 1;
    plan_.order = std::move(order);
    ++result_.replans;
    const std::size_t r = plan_.order.size();
    std::size_t next_start = 0;
    for (std::size_t s = 0; s < plan_.tasks.size(); ++s) {
        Task t;
        for (DeviceId id : plan_.order) {
            auto f = members_.at(id).finals.find(s);
            if (f != members_.at(id).finals.end()) {
                t.retained = true;
                t.holder = id;
                t.divisor = f->second.divisor;
                break;
            }
        }
        if (!t.retained) {
            t.start = next_start++ % r;
            t.divisor = r;
        }
        plan_.tasks[s] = t;
        result_.segment_divisors[s] = t.divisor;
    }
    for (DeviceId id : plan_.order) {
        Member& m = members_.at(id);
        cancel_timers(m);
        m.contributed.clear();
        m.backlog.clear();
        m.probing.reset();
        m.pending_bypass.clear();
        if (!m.done && m.status == PeerStatus::suspected) {
            m.status = PeerStatus::alive;
            result_.peer_status[id] = PeerStatus::alive;
        }
    }
    for (DeviceId id : plan_.order)
        if (members_.at(id).ready) kick(id);
    update_phase();
    for (DeviceId id : plan_.order) {
        if (finished()) return;
        if (members_.at(id).ready) {
            arm_wait(id);
            check_done(id);
        }
    }
    maybe_complete();
}

void AggregationSession::arm_watchdog() {
    if (watchdog_ || finished()) return;
    watchdog_ = sim_.schedule(sim_.now() + options_.timeouts.liveness_grace, [this] {
        watchdog_.reset();
        if (finished()) return;
        std::vector<DeviceId> dead;
        for (DeviceId id : plan_.order) {
            const Member& m = members_.at(id);
            if (m.done || m.status == PeerStatus::bypassed) continue;
            if (!options_.is_live(id) || sim_.incarnation(id) != m.incarnation) dead.push_back(id);
        }
        // Relink around them too: a dead member may still be the designated holder of a segment.
        if (!dead.empty())
            replan(dead);
        else
            maybe_complete();
        if (!finished()) arm_watchdog();
    });
}

ScatterGatherOutcome run_scatter_gather(const RingTopology& ring, const std::map<DeviceId, ParamVector>& inputs,
                                        const ScatterGatherOptions& options) {
    ring.validate();
    if (inputs.empty()) throw InvalidArgument("run_scatter_gather: no inputs");
    const std::size_t dim = inputs.begin()->second.dim();
    for (DeviceId id : ring.order)
        if (!inputs.count(id)) throw InvalidArgument("run_scatter_gather: missing input for a ring member");
    Simulator sim(options.seed, options.latency);
    for (DeviceId id : ring.order) sim.add_device(id, Rational(1));
    for (DeviceId id : options.unselected)
        if (!sim.has_device(id)) sim.add_device(id, Rational(1));
    sim.inject_failures(options.failures);

    SessionOptions so;
    const std::size_t seg_count = (dim + ring.size() - 1) / ring.size();
    so.timeouts = options.timeouts.value_or(
        default_timeouts(options.latency, kHeaderBytes + kSegmentPrefixBytes + 8 * seg_count));
    so.broadcast_targets = options.unselected;
    so.seed = options.seed;
    AggregationSession session(sim, ring, dim, so);
    for (DeviceId id : sim.devices())
        sim.set_handler(id, [&session](const Envelope& env) { session.on_message(env); });
    for (DeviceId id : ring.order) {
        auto it = options.ready_at.find(id);
        const Time at = it == options.ready_at.end() ? Time(0) : it->second;
        ParamVector input = inputs.at(id);
        sim.schedule_for(id, at, [&session, id, input] { session.member_ready(id, input); });
    }
    ScatterGatherOutcome out;
    std::size_t events = 0;
    while (!session.finished() && events < options.max_events && sim.step()) ++events;
    // Let in-flight broadcasts land.
    while (events < options.max_events && sim.step()) ++events;
    out.events = events;
    out.terminated = session.finished();
    out.result = session.result();
    out.traffic = sim.traffic_report();
    return out;
}

}  // namespace hadfl
