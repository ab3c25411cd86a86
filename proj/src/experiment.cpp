#include "hadfl/experiment.hpp"

#include "hadfl/errors.hpp"

#include <algorithm>
#include <string>

namespace hadfl {

namespace {

template <class Enum, std::size_t N>
Enum parse_named(std::string_view text, const std::pair<std::string_view, Enum> (&table)[N], const char* field) {
    for (const auto& [name, value] : table)
        if (name == text) return value;
    std::string known;
    for (const auto& [name, value] : table) known += (known.empty() ? "" : ", ") + std::string(name);
    throw ConfigError(field, "unknown value '" + std::string(text) + "' (expected one of " + known + ")");
}

template <class Enum, std::size_t N>
std::string_view name_of(Enum v, const std::pair<std::string_view, Enum> (&table)[N]) {
    for (const auto& [name, value] : table)
        if (value == v) return name;
    return "?";
}

constexpr std::pair<std::string_view, Scheme> kSchemes[] = {
    {"hadfl", Scheme::hadfl}, {"dfedavg", Scheme::dfedavg}, {"sync-allreduce", Scheme::sync_allreduce}};
constexpr std::pair<std::string_view, SelectionOverride> kSelections[] = {
    {"probabilistic", SelectionOverride::none}, {"slowest", SelectionOverride::slowest}};
constexpr std::pair<std::string_view, VersionSource> kSources[] = {
    {"predicted", VersionSource::predicted}, {"observed", VersionSource::observed}};
constexpr std::pair<std::string_view, SyntheticTask> kTasks[] = {
    {"blobs-2class", SyntheticTask::blobs_2class}, {"linreg-gaussian", SyntheticTask::linreg_gaussian}};
constexpr std::pair<std::string_view, PartitionScheme> kPartitions[] = {
    {"iid", PartitionScheme::iid}, {"shard-by-label", PartitionScheme::shard_by_label}};

}  // namespace

std::string_view to_string(Scheme s) { return name_of(s, kSchemes); }
std::string_view to_string(SelectionOverride s) { return name_of(s, kSelections); }
std::string_view to_string(VersionSource s) { return name_of(s, kSources); }
std::string_view to_string(SyntheticTask t) { return name_of(t, kTasks); }
std::string_view to_string(PartitionScheme p) { return name_of(p, kPartitions); }
Scheme parse_scheme(std::string_view text) { return parse_named(text, kSchemes, "experiment.scheme"); }
SelectionOverride parse_selection_override(std::string_view text) {
    return parse_named(text, kSelections, "hadfl.selection");
}
VersionSource parse_version_source(std::string_view text) {
    return parse_named(text, kSources, "hadfl.version_source");
}
SyntheticTask parse_task(std::string_view text) { return parse_named(text, kTasks, "data.task"); }
PartitionScheme parse_partition(std::string_view text) { return parse_named(text, kPartitions, "data.partition"); }

std::size_t ExperimentConfig::participants() const {
    return n_p == 0 ? default_participants(devices()) : n_p;
}

void ExperimentConfig::validate() const {
    auto require = [](bool ok, const char* field, const std::string& what) {
        if (!ok) throw ConfigError(field, what);
    };
    require(!seeds.empty(), "experiment.seeds", "at least one seed is required");
    require(powers.size() >= 2, "cluster.powers", "at least two devices are required");
    for (const auto& p : powers) require(p > 0, "cluster.powers", "compute powers must be positive");
    require(unit_epoch_time > 0, "cluster.unit_epoch_time", "must be positive");
    require(compute_noise >= 0, "cluster.compute_noise", "must be non-negative");
    require(model.input_dim >= 1, "model.input_dim", "must be at least 1");
    require(model.output_dim >= 1, "model.output_dim", "must be at least 1");
    require(model.kind != ModelKind::mlp_1hidden || model.hidden_dim >= 1, "model.hidden_dim",
            "mlp-1hidden needs at least one hidden unit");
    require(model.loss != LossKind::squared_error || model.output_dim == 1, "model.output_dim",
            "squared-error supports a single output");
    require(model.kind != ModelKind::logistic_regression || model.loss == LossKind::cross_entropy, "model.loss",
            "logistic-regression requires cross-entropy");
    require(model.kind != ModelKind::linear_regression || model.loss == LossKind::squared_error, "model.loss",
            "linear-regression requires squared-error");
    require(!(task == SyntheticTask::linreg_gaussian && model.is_classifier()), "model.kind",
            "linreg-gaussian needs a regression model");
    require(!(task == SyntheticTask::blobs_2class && !model.is_classifier()), "model.kind",
            "blobs-2class needs a classifier");
    try {
        hp.validate();
    } catch (const InvalidArgument& e) {
        throw ConfigError("training", e.what());
    }
    require(test_samples >= 1, "data.test_samples", "must be at least 1");
    require(train_samples >= devices() * hp.batch_size, "data.train_samples",
            "must hold at least one batch per device");
    require(t_sync >= 1, "hadfl.t_sync", "must be at least 1");
    require(n_p == 0 || (n_p >= 2 && n_p <= devices()), "hadfl.n_p", "must be 0 or between 2 and the device count");
    require(alpha > 0 && alpha < 1, "hadfl.alpha", "must lie in (0, 1)");
    require(beta >= 0 && beta <= 1, "hadfl.beta", "must lie in [0, 1]");
    require(warmup_epochs >= 1, "hadfl.warmup_epochs", "must be at least 1");
    require(time_quantum > 0, "hadfl.time_quantum", "must be positive");
    require(max_group_size == 0 || max_group_size >= 2, "hadfl.max_group_size", "must be 0 or at least 2");
    require(inter_sync_multiple >= 1, "hadfl.inter_sync_multiple", "must be at least 1");
    require(dfedavg_local_epochs >= 1, "training.dfedavg_local_epochs", "must be at least 1");
    require(convergence_tol > 0, "training.convergence_tol", "must be positive");
    require(checkpoint_every >= 1, "training.checkpoint_every", "must be at least 1");
    require(heartbeat_interval > 0, "network.heartbeat_interval", "must be positive");
    require(liveness_timeout > 0, "network.liveness_timeout", "must be positive");
    try {
        latency.validate();
    } catch (const InvalidArgument& e) {
        throw ConfigError("network", e.what());
    }
    try {
        failures.validate();
    } catch (const InvalidArgument& e) {
        throw ConfigError("failures.events", e.what());
    }
    for (const auto& ev : failures.events)
        require(raw(ev.device) < devices(), "failures.events", "device id out of range");
}

TrainingTask make_task(const ExperimentConfig& config, std::uint64_t seed) {
    config.validate();
    TrainingTask t;
    t.spec = config.model;
    t.hp = config.hp;
    Dataset all = make_synthetic_dataset(config.task, config.train_samples + config.test_samples,
                                         config.model.input_dim, mix_seed(seed, 0xda7a, 0, 0), config.data);
    auto [train, test] = split_train_test(std::move(all), config.test_samples);
    t.partitions = partition_dataset(train, config.devices(), config.partition, mix_seed(seed, 0xda7a, 1, 0),
                                     config.hp.batch_size);
    t.train = std::move(train.samples);
    t.test = std::move(test.samples);
    return t;
}

}  // namespace hadfl
