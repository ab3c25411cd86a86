#include "hadfl/errors.hpp"
#include "hadfl/simnet.hpp"

#include <doctest.h>

using namespace hadfl;

namespace {

struct Pinger {
    Simulator sim;
    std::vector<std::string> log;

    Pinger(std::uint64_t seed, LatencyModel lat) : sim(seed, lat) {
        for (std::uint32_t i = 0; i < 3; ++i) sim.add_device(device(i), Rational(i + 1));
        for (std::uint32_t i = 0; i < 3; ++i)
            sim.set_handler(device(i), [this, i](const Envelope& e) {
                log.push_back(std::to_string(raw(e.from)) + ">" + std::to_string(i) + "@" + format_rational(sim.now()));
                if (e.message.sync_round < 5)
                    sim.send(device(i), device((i + 1) % 3),
                             make_control_message(MessageKind::handshake, device(i), e.message.sync_round + 1));
            });
    }
};

}  // namespace

TEST_CASE("events run in time then insertion order") {
    Simulator sim(1);
    std::vector<int> order;
    sim.schedule(Time(2), [&] { order.push_back(3); });
    sim.schedule(Time(1), [&] { order.push_back(1); });
    sim.schedule(Time(1), [&] { order.push_back(2); });
    const auto id = sim.schedule(Time(3), [&] { order.push_back(99); });
    CHECK(sim.cancel(id));
    CHECK_FALSE(sim.cancel(id));
    sim.run();
    CHECK(order == std::vector<int>{1, 2, 3});
    CHECK(sim.now() == Time(2));
    CHECK_THROWS_AS(sim.schedule(Time(1), [] {}), InvalidArgument);
}

TEST_CASE("identical seeds replay identically") {
    const LatencyModel lat{Time(1, 1000), Time(1, 2000), Time(1, 1000000)};
    Pinger a(5, lat), b(5, lat), c(6, lat);
    for (auto* p : {&a, &b, &c}) {
        p->sim.send(device(0), device(1), make_control_message(MessageKind::handshake, device(0), 0));
        p->sim.run();
    }
    CHECK(a.log.size() == 6);
    CHECK(a.log == b.log);
    CHECK(a.log != c.log);
}

TEST_CASE("latency without jitter is exact") {
    const LatencyModel lat{Time(1, 1000), Time(0), Time(1, 1000000000)};
    Simulator sim(1, lat);
    sim.add_device(device(0), Rational(1));
    sim.add_device(device(1), Rational(1));
    Time got(0);
    sim.set_handler(device(1), [&](const Envelope&) { got = sim.now(); });
    const auto msg = make_segment_message(device(0), 1, Segment{0, 0, std::vector<double>(10, 1.0)});
    sim.send(device(0), device(1), msg);
    sim.run();
    CHECK(got == Time(1, 1000) + Time(static_cast<std::int64_t>(msg.wire_size()), 1000000000));
    const auto t = sim.traffic().total();
    CHECK(t.sent.messages == 1);
    CHECK(t.sent.bytes == msg.wire_size());
    CHECK(t.sent.value_bytes == 80);
    CHECK(t.received == t.sent);
}

TEST_CASE("messages to disconnected devices are dropped") {
    Simulator sim(1, LatencyModel{Time(1, 10), Time(0), Time(0)});
    sim.add_device(device(0), Rational(1));
    sim.add_device(device(1), Rational(1));
    int delivered = 0;
    sim.set_handler(device(1), [&](const Envelope&) { ++delivered; });
    FailureScript script;
    script.events.push_back({device(1), Time(1, 20), Time(1)});
    sim.inject_failures(script);
    sim.send(device(0), device(1), make_control_message(MessageKind::handshake, device(0), 0));
    sim.run();
    CHECK(delivered == 0);
    CHECK(sim.connected(device(1)));
    CHECK(sim.traffic().total().dropped.messages == 1);
    sim.send(device(0), device(1), make_control_message(MessageKind::handshake, device(0), 0));
    sim.run();
    CHECK(delivered == 1);
}

TEST_CASE("device-bound events die with the device") {
    Simulator sim(1);
    sim.add_device(device(0), Rational(2));
    bool fired = false;
    CHECK(sim.compute_duration(device(0), Rational(3)) == Time(3, 2));
    sim.schedule_for(device(0), Time(2), [&] { fired = true; });
    sim.schedule(Time(1), [&] { sim.disconnect(device(0)); });
    sim.schedule(Time(3, 2), [&] { sim.reconnect(device(0)); });
    sim.run();
    CHECK_FALSE(fired);
    CHECK(sim.incarnation(device(0)) == 2);
}

TEST_CASE("heartbeats do not keep the simulation alive") {
    Simulator sim(1);
    sim.add_device(device(0), Rational(1));
    sim.add_device(device(1), Rational(1));
    sim.start_heartbeats(Time(1, 10));
    sim.schedule(Time(1), [&] { sim.disconnect(device(1)); });
    sim.schedule(Time(2), [] {});
    sim.run();
    CHECK(sim.now() == Time(2));
    CHECK(sim.heartbeat_log().at(device(0)) >= Time(19, 10));
    CHECK(sim.heartbeat_log().at(device(1)) <= Time(1));
}

TEST_CASE("failure scripts are validated") {
    FailureScript bad;
    bad.events.push_back({device(0), Time(2), Time(1)});
    CHECK_THROWS_AS(bad.validate(), InvalidArgument);
    FailureScript unordered;
    unordered.events.push_back({device(0), Time(2), std::nullopt});
    unordered.events.push_back({device(1), Time(1), std::nullopt});
    CHECK_THROWS_AS(unordered.validate(), InvalidArgument);
}
