#include "hadfl/errors.hpp"
#include "hadfl/metrics.hpp"

#include <doctest.h>
#include <nlohmann/json.hpp>

using namespace hadfl;

namespace {

// accuracy ramps linearly to `peak` at `rounds`, one round per `dt` seconds
MetricsFile ramp(const std::string& scheme, std::uint64_t seed, double peak, Time dt, unsigned rounds = 10) {
    MetricsFile f{scheme, seed, 0x1234, {}};
    for (unsigned j = 1; j <= rounds; ++j) {
        RoundMetrics m;
        m.sync_round = j;
        m.virtual_time = dt * static_cast<std::int64_t>(j);
        m.test_accuracy = peak * j / rounds;
        m.train_loss = 1.0 / j;
        m.versions = {{device(0), 4}, {device(1), 1.5}};
        m.selected = {device(0), device(1)};
        m.traffic_bytes = 822;
        m.session_aborted = j == 3;
        f.records.push_back(m);
    }
    return f;
}

}  // namespace

TEST_CASE("metrics text round trip") {
    const auto f = ramp("hadfl", 3, 0.9, Time(1, 3));
    const std::string text = format_metrics(f);
    const auto back = parse_metrics(text);
    CHECK(back.scheme == "hadfl");
    CHECK(back.seed == 3);
    CHECK(back.config_digest == 0x1234);
    CHECK(back.records == f.records);
    CHECK(format_metrics(back) == text);
    CHECK_THROWS_AS(parse_metrics("garbage"), IoError);
}

TEST_CASE("time to accuracy") {
    const auto f = ramp("x", 1, 1.0, Time(2));
    CHECK(time_to_accuracy(f.records, 0.5) == 10.0);
    CHECK(time_to_accuracy(f.records, 0.51) == 12.0);
    CHECK_FALSE(time_to_accuracy(f.records, 1.01).has_value());
}

TEST_CASE("identical runs compare at 1.00") {
    const auto c = compare_runs({ramp("a", 1, 0.9, Time(1)), ramp("b", 1, 0.9, Time(1))});
    REQUIRE(c.schemes.size() == 2);
    CHECK(*c.schemes[0].speedup.at("b") == doctest::Approx(1.0));
    CHECK(format_comparison(c).find("1.00x") != std::string::npos);
}

TEST_CASE("half the time is a 2.00 speedup") {
    const auto c = compare_runs({ramp("fast", 1, 0.9, Time(1, 2)), ramp("slow", 1, 0.9, Time(1))});
    const auto& fast = c.schemes[0].scheme == "fast" ? c.schemes[0] : c.schemes[1];
    CHECK(*fast.speedup.at("slow") == doctest::Approx(2.0));
    const auto j = nlohmann::json::parse(comparison_json(c));
    CHECK(j["schemes"].size() == 2);
    CHECK(j["common_target"].get<double>() == doctest::Approx(0.95 * 0.9));
}

TEST_CASE("target that is never reached") {
    const auto c = compare_runs({ramp("sync-allreduce", 1, 0.9, Time(1)), ramp("weak", 1, 0.5, Time(1))});
    CHECK(c.common_target == doctest::Approx(0.855));
    const auto& weak = c.schemes[0].scheme == "weak" ? c.schemes[0] : c.schemes[1];
    CHECK_FALSE(weak.time_to_common_target.has_value());
    CHECK(format_comparison(c).find("not reached") != std::string::npos);
    CHECK_THROWS(compare_runs({ramp("solo", 1, 0.9, Time(1))}));
}

TEST_CASE("medians over seeds") {
    const auto c = compare_runs({ramp("a", 1, 0.9, Time(1)), ramp("a", 2, 0.9, Time(3)), ramp("a", 3, 0.9, Time(2)),
                                 ramp("b", 1, 0.9, Time(2))});
    const auto& a = c.schemes[0];
    CHECK(a.runs == 3);
    CHECK(*a.time_to_common_target == doctest::Approx(*time_to_accuracy(ramp("a", 3, 0.9, Time(2)).records,
                                                                        c.common_target)));
}
