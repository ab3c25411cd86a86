#include "hadfl/errors.hpp"
#include "hadfl/session.hpp"
#include "hadfl/wire.hpp"

#include <doctest.h>

#include <algorithm>
#include <random>

using namespace hadfl;

namespace {

std::map<DeviceId, ParamVector> random_inputs(const std::vector<DeviceId>& ids, std::size_t dim, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n(0.0, 1.0);
    std::map<DeviceId, ParamVector> out;
    for (DeviceId id : ids) {
        std::vector<double> v(dim);
        for (double& x : v) x = n(rng);
        out.emplace(id, ParamVector(v));
    }
    return out;
}

std::vector<double> direct_mean(const std::map<DeviceId, ParamVector>& inputs, const std::vector<DeviceId>& over) {
    std::vector<double> m(inputs.begin()->second.dim(), 0.0);
    for (DeviceId id : over)
        for (std::size_t i = 0; i < m.size(); ++i) m[i] += inputs.at(id)[i];
    for (double& x : m) x /= static_cast<double>(over.size());
    return m;
}

std::vector<DeviceId> ids(std::initializer_list<unsigned> raw_ids) {
    std::vector<DeviceId> out;
    for (unsigned r : raw_ids) out.push_back(device(r));
    return out;
}

LatencyModel test_latency() {
    LatencyModel l;
    l.base = Time(1, 1000);
    l.jitter = Time(1, 10000);
    return l;
}

}  // namespace

TEST_CASE("failure-free ring matches the direct mean and sends 2r(r-1) segments") {
    for (unsigned r : {2u, 3u, 4u, 7u}) {
        std::vector<DeviceId> order;
        for (unsigned i = 0; i < r; ++i) order.push_back(device(i));
        const auto inputs = random_inputs(order, 1000, r);
        ScatterGatherOptions opt;
        opt.latency = test_latency();
        opt.seed = r;
        const auto out = run_scatter_gather(RingTopology{order}, inputs, opt);
        REQUIRE(out.terminated);
        REQUIRE(out.result.completed);
        const auto ref = direct_mean(inputs, order);
        CHECK(max_relative_error(out.result.aggregate, ParamVector(ref)) < 1e-9);
        for (DeviceId id : order) CHECK(out.result.outputs.at(id) == out.result.aggregate);
        CHECK(out.traffic.by_kind(MessageKind::segment).sent.messages == 2 * r * (r - 1));
        CHECK(out.result.replans == 0);
    }
}

TEST_CASE("silent member is bypassed and survivors agree on their mean") {
    const auto order = ids({0, 1, 2, 3});
    const auto inputs = random_inputs(order, 100, 9);
    ScatterGatherOptions opt;
    opt.latency = test_latency();
    opt.failures.events.push_back(FailureEvent{device(2), Time(0), std::nullopt});
    const auto out = run_scatter_gather(RingTopology{order}, inputs, opt);
    REQUIRE(out.terminated);
    REQUIRE(out.result.completed);
    CHECK(out.result.peer_status.at(device(2)) == PeerStatus::bypassed);
    CHECK_FALSE(out.result.contributions.at(device(2)));
    const auto ref = direct_mean(inputs, ids({0, 1, 3}));
    CHECK(max_relative_error(out.result.aggregate, ParamVector(ref)) < 1e-9);
    for (DeviceId id : ids({0, 1, 3})) CHECK(out.result.outputs.at(id) == out.result.aggregate);
}

TEST_CASE("two simultaneous failures in a 4-ring leave a 2-ring with the survivor mean") {
    const auto order = ids({0, 1, 2, 3});
    const auto inputs = random_inputs(order, 64, 3);
    ScatterGatherOptions opt;
    opt.latency = test_latency();
    opt.failures.events.push_back(FailureEvent{device(1), Time(0), std::nullopt});
    opt.failures.events.push_back(FailureEvent{device(2), Time(0), std::nullopt});
    const auto out = run_scatter_gather(RingTopology{order}, inputs, opt);
    REQUIRE(out.result.completed);
    const auto ref = direct_mean(inputs, ids({0, 3}));
    CHECK(max_relative_error(out.result.aggregate, ParamVector(ref)) < 1e-9);
    CHECK(out.result.outputs.size() == 2);
}

TEST_CASE("no failure: all peers stay alive and each phase takes r-1 steps") {
    const auto order = ids({4, 1, 7, 2, 9});
    const auto inputs = random_inputs(order, 33, 5);
    ScatterGatherOptions opt;
    opt.latency = test_latency();
    const auto out = run_scatter_gather(RingTopology{order}, inputs, opt);
    REQUIRE(out.result.completed);
    for (const auto& [id, st] : out.result.peer_status) CHECK(st == PeerStatus::alive);
    CHECK(out.traffic.by_kind(MessageKind::handshake).sent.messages == 0);
    CHECK(out.traffic.by_kind(MessageKind::bypass_warning).sent.messages == 0);
    CHECK(out.result.scatter_steps == order.size() - 1);
    CHECK(out.result.gather_steps == order.size() - 1);
}

TEST_CASE("mid-transfer failures: every segment is the mean over its own contributor count") {
    const std::size_t dim = 40;
    int completed = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        std::mt19937_64 rng(seed);
        const unsigned r = 3 + static_cast<unsigned>(seed % 4);
        std::vector<DeviceId> order;
        for (unsigned i = 0; i < r; ++i) order.push_back(device(i));
        const auto inputs = random_inputs(order, dim, seed + 100);
        ScatterGatherOptions opt;
        opt.latency = test_latency();
        opt.seed = seed;
        const DeviceId victim = device(static_cast<unsigned>(rng() % r));
        std::uniform_int_distribution<int> us(0, 8000);
        opt.failures.events.push_back(FailureEvent{victim, Time(us(rng), 1'000'000), std::nullopt});
        if (seed % 5 == 0) {
            const DeviceId second = device(static_cast<unsigned>((raw(victim) + 1) % r));
            opt.failures.events.push_back(FailureEvent{second, Time(us(rng), 1'000'000), std::nullopt});
        }
        std::sort(opt.failures.events.begin(), opt.failures.events.end(),
                  [](const FailureEvent& a, const FailureEvent& b) { return a.disconnect_at < b.disconnect_at; });
        const auto out = run_scatter_gather(RingTopology{order}, inputs, opt);
        CAPTURE(seed);
        REQUIRE(out.terminated);
        if (!out.result.completed) continue;
        ++completed;
        std::vector<DeviceId> survivors;
        for (DeviceId id : order)
            if (out.result.contributions.at(id)) survivors.push_back(id);
        const auto full = direct_mean(inputs, order);
        const auto part = direct_mean(inputs, survivors);
        const auto layout = segment_layout(dim, r);
        for (std::size_t s = 0; s < r; ++s) {
            const auto& ref = out.result.segment_divisors[s] == r ? full : part;
            if (out.result.segment_divisors[s] != r) CHECK(out.result.segment_divisors[s] == survivors.size());
            for (std::size_t i = layout[s].offset; i < layout[s].offset + layout[s].count; ++i)
                CHECK(out.result.aggregate[i] == doctest::Approx(ref[i]).epsilon(1e-9));
        }
        for (const auto& [id, v] : out.result.outputs)
            if (out.result.contributions.at(id)) CHECK(v == out.result.aggregate);
    }
    CHECK(completed > 80);
}
