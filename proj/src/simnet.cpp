#include "hadfl/simnet.hpp"

#include "hadfl/errors.hpp"

#include <algorithm>
#include <cmath>

namespace hadfl {

namespace {
constexpr std::int64_t kNanos = 1'000'000'000;
}

void LatencyModel::validate() const {
    if (base < 0 || jitter < 0 || per_byte < 0) throw InvalidArgument("latency: parameters must be non-negative");
}

void FailureScript::validate() const {
    for (std::size_t i = 0; i < events.size(); ++i) {
        const auto& e = events[i];
        if (e.disconnect_at < 0) throw InvalidArgument("failure script: negative disconnect time");
        if (e.reconnect_at && *e.reconnect_at <= e.disconnect_at)
            throw InvalidArgument("failure script: reconnect must follow disconnect");
        if (i > 0 && e.disconnect_at < events[i - 1].disconnect_at)
            throw InvalidArgument("failure script: events must be time-ordered");
    }
}

Tally FlowTally::in_flight() const {
    Tally t;
    t.messages = sent.messages - received.messages - dropped.messages;
    t.bytes = sent.bytes - received.bytes - dropped.bytes;
    t.value_bytes = sent.value_bytes - received.value_bytes - dropped.value_bytes;
    return t;
}

void TrafficCounter::record(const Key& key, Event event, std::size_t bytes, std::size_t value_bytes) {
    auto& flow = entries_[key];
    Tally& t = event == Event::sent ? flow.sent : (event == Event::received ? flow.received : flow.dropped);
    t.messages += 1;
    t.bytes += bytes;
    t.value_bytes += value_bytes;
}

FlowTally TrafficCounter::total() const {
    return sum_if([](const Key&) { return true; });
}
FlowTally TrafficCounter::by_kind(MessageKind kind) const {
    return sum_if([&](const Key& k) { return k.kind == kind; });
}
FlowTally TrafficCounter::by_round(std::uint32_t round) const {
    return sum_if([&](const Key& k) { return k.round == round; });
}
FlowTally TrafficCounter::by_round_kind(std::uint32_t round, MessageKind kind) const {
    return sum_if([&](const Key& k) { return k.round == round && k.kind == kind; });
}
FlowTally TrafficCounter::by_link(DeviceId from, DeviceId to) const {
    return sum_if([&](const Key& k) { return k.from == from && k.to == to; });
}
Tally TrafficCounter::sent_by(DeviceId d) const {
    return sum_if([&](const Key& k) { return k.from == d; }).sent;
}
Tally TrafficCounter::received_by(DeviceId d) const {
    return sum_if([&](const Key& k) { return k.to == d; }).received;
}
std::vector<std::uint32_t> TrafficCounter::rounds() const {
    std::vector<std::uint32_t> out;
    for (const auto& [k, v] : entries_) out.push_back(k.round);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

Simulator::Simulator(std::uint64_t seed, LatencyModel latency, ComputeModel compute)
    : latency_(latency), compute_(compute), net_rng_(mix_seed(seed, 0x6e6574)), compute_rng_(mix_seed(seed, 0x637075)) {
    latency_.validate();
    if (compute_.unit_epoch_time <= 0) throw InvalidArgument("compute: unit epoch time must be positive");
    if (compute_.noise_stddev < 0) throw InvalidArgument("compute: noise must be non-negative");
}

EventId Simulator::push(Time at, std::function<void()> fn, std::string label, bool background) {
    if (at < now_) throw InvalidArgument("schedule: time " + format_rational(at) + " is before now " + format_rational(now_));
    const EventId id = next_seq_++;
    queue_.emplace(Key{at, id}, Event{std::move(fn), std::move(label), background});
    index_.emplace(id, at);
    if (!background) ++foreground_pending_;
    return id;
}

EventId Simulator::schedule(Time at, std::function<void()> fn, std::string label) {
    return push(at, std::move(fn), std::move(label), false);
}

EventId Simulator::schedule_after(Time delay, std::function<void()> fn, std::string label) {
    return push(now_ + delay, std::move(fn), std::move(label), false);
}

EventId Simulator::schedule_for(DeviceId dev, Time at, std::function<void()> fn, std::string label) {
    const std::uint64_t inc = incarnation(dev);
    return push(
        at,
        [this, dev, inc, fn = std::move(fn)] {
            if (connected(dev) && incarnation(dev) == inc) fn();
        },
        std::move(label), false);
}

bool Simulator::cancel(EventId id) {
    const auto it = index_.find(id);
    if (it == index_.end()) return false;
    const auto q = queue_.find(Key{it->second, id});
    if (!q->second.background) --foreground_pending_;
    queue_.erase(q);
    index_.erase(it);
    return true;
}

bool Simulator::step() {
    if (foreground_pending_ == 0) return false;
    auto it = queue_.begin();
    const Key key = it->first;
    Event ev = std::move(it->second);
    queue_.erase(it);
    index_.erase(key.second);
    if (!ev.background) --foreground_pending_;
    now_ = key.first;
    if (trace_on_ && !ev.label.empty()) trace_.push_back(TraceEntry{now_, key.second, ev.label});
    ev.fn();
    return true;
}

std::size_t Simulator::run(std::size_t max_events) {
    std::size_t n = 0;
    while (n < max_events && step()) ++n;
    return n;
}

std::size_t Simulator::run_until(const std::function<bool()>& stop, std::size_t max_events) {
    std::size_t n = 0;
    while (n < max_events && !stop() && step()) ++n;
    return n;
}

void Simulator::add_device(DeviceId id, Rational compute_power) {
    if (compute_power <= 0) throw InvalidArgument("add_device: compute power must be positive");
    if (devices_.count(id) != 0) throw InvalidArgument("add_device: duplicate device");
    devices_[id].power = compute_power;
}

bool Simulator::has_device(DeviceId id) const { return devices_.count(id) != 0; }

Simulator::DeviceState& Simulator::state(DeviceId id) {
    const auto it = devices_.find(id);
    if (it == devices_.end()) throw InvalidArgument("simulator: unknown device " + std::to_string(raw(id)));
    return it->second;
}

const Simulator::DeviceState& Simulator::state(DeviceId id) const {
    const auto it = devices_.find(id);
    if (it == devices_.end()) throw InvalidArgument("simulator: unknown device " + std::to_string(raw(id)));
    return it->second;
}

bool Simulator::connected(DeviceId id) const { return state(id).connected; }
std::uint64_t Simulator::incarnation(DeviceId id) const { return state(id).incarnation; }
Rational Simulator::compute_power(DeviceId id) const { return state(id).power; }

std::vector<DeviceId> Simulator::devices() const {
    std::vector<DeviceId> out;
    for (const auto& [id, s] : devices_) out.push_back(id);
    return out;
}

Time Simulator::compute_duration(DeviceId id, const Rational& epochs) {
    if (epochs < 0) throw InvalidArgument("compute: negative work");
    const Time base = epochs * compute_.unit_epoch_time / state(id).power;
    if (compute_.noise_stddev == 0.0 || epochs.numerator() == 0) return base;
    std::normal_distribution<double> normal(0.0, 1.0);
    const double factor = std::max(0.05, 1.0 + compute_.noise_stddev * normal(compute_rng_));
    const Time noisy = round_to_denominator(to_double(base) * factor, kNanos);
    return noisy > 0 ? noisy : Time(1, kNanos);
}

Time Simulator::simulate_compute(DeviceId id, const Rational& epochs) {
    if (!connected(id)) throw InvalidArgument("simulate_compute: device " + std::to_string(raw(id)) + " is disconnected");
    return now_ + compute_duration(id, epochs);
}

void Simulator::set_handler(DeviceId id, std::function<void(const Envelope&)> handler) {
    state(id).handler = std::move(handler);
}

void Simulator::send(DeviceId from, DeviceId to, const PeerMessage& msg, std::uint64_t channel) {
    state(from);
    const std::uint64_t receiver_inc = state(to).incarnation;
    const std::size_t bytes = msg.wire_size();
    const std::size_t values = 8 * value_count(msg);
    const TrafficCounter::Key key{from, to, msg.kind, msg.sync_round};
    traffic_.record(key, TrafficCounter::Event::sent, bytes, values);
    if (!connected(from)) {
        traffic_.record(key, TrafficCounter::Event::dropped, bytes, values);
        return;
    }
    Time delay = latency_.mean(bytes);
    if (latency_.jitter > 0) {
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        delay += round_to_denominator(u(net_rng_) * to_double(latency_.jitter), kNanos);
        if (delay < 0) delay = 0;
    }
    Envelope env{from, to, channel, msg, now_};
    std::string label;
    if (trace_on_)
        label = "deliver " + std::string(to_string(msg.kind)) + " " + std::to_string(raw(from)) + "->" +
                std::to_string(raw(to));
    push(
        now_ + delay,
        [this, key, bytes, values, receiver_inc, env = std::move(env)] {
            auto& rx = state(env.to);
            if (!rx.connected || rx.incarnation != receiver_inc) {
                traffic_.record(key, TrafficCounter::Event::dropped, bytes, values);
                return;
            }
            traffic_.record(key, TrafficCounter::Event::received, bytes, values);
            if (rx.handler) rx.handler(env);
        },
        std::move(label), false);
}

void Simulator::inject_failures(const FailureScript& script) {
    script.validate();
    for (const auto& e : script.events) {
        state(e.device);
        const DeviceId id = e.device;
        schedule(std::max(e.disconnect_at, now_), [this, id] { disconnect(id); },
                 trace_on_ ? "disconnect " + std::to_string(raw(id)) : std::string());
        if (e.reconnect_at)
            schedule(std::max(*e.reconnect_at, now_), [this, id] { reconnect(id); },
                     trace_on_ ? "reconnect " + std::to_string(raw(id)) : std::string());
    }
}

void Simulator::notify(DeviceId id, bool up) {
    for (const auto& hook : connectivity_hooks_) hook(id, up);
}

void Simulator::disconnect(DeviceId id) {
    auto& s = state(id);
    if (!s.connected) return;
    s.connected = false;
    ++s.incarnation;
    notify(id, false);
}

void Simulator::reconnect(DeviceId id) {
    auto& s = state(id);
    if (s.connected) return;
    s.connected = true;
    ++s.incarnation;
    if (heartbeat_interval_) heartbeats_[id] = now_;
    notify(id, true);
}

void Simulator::heartbeat_tick(DeviceId id, Time interval) {
    if (connected(id)) heartbeats_[id] = now_;
    push(now_ + interval, [this, id, interval] { heartbeat_tick(id, interval); }, {}, true);
}

void Simulator::start_heartbeats(Time interval) {
    if (interval <= 0) throw InvalidArgument("heartbeats: interval must be positive");
    heartbeat_interval_ = interval;
    for (const auto& [id, s] : devices_) heartbeat_tick(id, interval);
}

}  // namespace hadfl
