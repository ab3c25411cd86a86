#include "hadfl/config.hpp"
#include "hadfl/errors.hpp"

#include <doctest.h>

#include <string>

using namespace hadfl;

namespace {

std::string field_of(const std::string& text) {
    try {
        parse_config(text);
    } catch (const ConfigError& e) {
        return e.field();
    }
    return "";
}

}  // namespace

TEST_CASE("empty config gives the defaults") {
    CHECK(parse_config("") == ExperimentConfig{});
}

TEST_CASE("values are parsed into the right fields") {
    const auto c = parse_config(R"(
[experiment]
name = trial
scheme = dfedavg
seeds = 3, 4,5
[model]
kind = mlp-1hidden
input_dim = 10
hidden_dim = 8
output_dim = 3
[data]
partition = shard-by-label
[training]
learning_rate = 0.2
batch_size = 16
t_total = 12
[cluster]
powers = 3, 3, 1, 1/2
[hadfl]
t_sync = 2
n_p = 3
sigma_mode = unit
time_quantum = 1/50
selection = slowest
[network]
latency_base = 0.002
[failures]
events = 1@0.5-2, 2@3
)");
    CHECK(c.name == "trial");
    CHECK(c.scheme == Scheme::dfedavg);
    CHECK(c.seeds == std::vector<std::uint64_t>{3, 4, 5});
    CHECK(c.model.kind == ModelKind::mlp_1hidden);
    CHECK(c.model.loss == LossKind::cross_entropy);
    CHECK(c.model.hidden_dim == 8);
    CHECK(c.partition == PartitionScheme::shard_by_label);
    CHECK(c.hp.learning_rate == 0.2);
    CHECK(c.hp.batch_size == 16);
    CHECK(c.t_total == 12);
    CHECK(c.powers == std::vector<Rational>{3, 3, 1, Rational(1, 2)});
    CHECK(c.t_sync == 2);
    CHECK(c.participants() == 3);
    CHECK(c.sigma_mode == SigmaMode::unit);
    CHECK(c.time_quantum == Time(1, 50));
    CHECK(c.selection == SelectionOverride::slowest);
    CHECK(c.latency.base == Time(2, 1000));
    REQUIRE(c.failures.events.size() == 2);
    CHECK(c.failures.events[0] == FailureEvent{device(1), Time(1, 2), Time(2)});
    CHECK(c.failures.events[1] == FailureEvent{device(2), Time(3), std::nullopt});
}

TEST_CASE("emit then parse is the identity") {
    ExperimentConfig c;
    c.name = "round-trip";
    c.hp.learning_rate = 0.1 / 3.0;
    c.alpha = 0.7;
    c.powers = {Rational(7, 3), Rational(1), Rational(5, 2)};
    c.latency.jitter = Time(1, 3000);
    c.failures.events.push_back({device(0), Time(1, 3), std::nullopt});
    c.model.kind = ModelKind::linear_regression;
    c.model.loss = LossKind::squared_error;
    c.task = SyntheticTask::linreg_gaussian;
    const std::string text = emit_config(c);
    CHECK(parse_config(text) == c);
    CHECK(emit_config(parse_config(text)) == text);
    CHECK(config_digest(c) == config_digest(parse_config(text)));
    ExperimentConfig d = c;
    d.alpha = 0.71;
    CHECK(config_digest(c) != config_digest(d));
}

TEST_CASE("errors name the offending field") {
    CHECK(field_of("[training]\nlearning_rate = fast\n") == "training.learning_rate");
    CHECK(field_of("[training]\nwarp = 9\n") == "training.warp");
    CHECK(field_of("[bogus]\nx = 1\n") == "bogus");
    CHECK(field_of("[hadfl]\nalpha = 1.5\n") == "hadfl.alpha");
    CHECK(field_of("[hadfl]\nn_p = 9\n") == "hadfl.n_p");
    CHECK(field_of("[cluster]\npowers = 1\n") == "cluster.powers");
    CHECK(field_of("[cluster]\npowers = 1, -2\n") == "cluster.powers");
    CHECK(field_of("[experiment]\nscheme = gossip\n") == "experiment.scheme");
    CHECK(field_of("[failures]\nevents = 9@1\n") == "failures.events");
    CHECK(field_of("[failures]\nevents = 1@2-1\n") == "failures.events");
    CHECK(field_of("[network]\nheartbeat_interval = 0\n") == "network.heartbeat_interval");
    CHECK(field_of("[model]\nloss = squared-error\n") == "model.loss");
}

TEST_CASE("missing files are i/o errors") {
    CHECK_THROWS_AS(load_config("/nonexistent/cfg.ini"), IoError);
}

TEST_CASE("failure list formatting") {
    const auto s = parse_failures("0@1.5, 3@2-4.25");
    CHECK(format_failures(s) == "0@1.5, 3@2-4.25");
    CHECK(parse_failures(format_failures(s)) == s);
    CHECK(parse_failures("").events.empty());
}
