#pragma once

#include "hadfl/dataset.hpp"
#include "hadfl/model.hpp"
#include "hadfl/selector.hpp"
#include "hadfl/simnet.hpp"
#include "hadfl/types.hpp"

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace hadfl {

enum class Scheme { hadfl, dfedavg, sync_allreduce };
enum class SelectionOverride { none, slowest };
enum class VersionSource { predicted, observed };

std::string_view to_string(Scheme s);
std::string_view to_string(SelectionOverride s);
std::string_view to_string(VersionSource s);
std::string_view to_string(SyntheticTask t);
std::string_view to_string(PartitionScheme p);
Scheme parse_scheme(std::string_view text);
SelectionOverride parse_selection_override(std::string_view text);
VersionSource parse_version_source(std::string_view text);
SyntheticTask parse_task(std::string_view text);
PartitionScheme parse_partition(std::string_view text);

struct ExperimentConfig {
    std::string name = "experiment";
    Scheme scheme = Scheme::hadfl;
    std::vector<std::uint64_t> seeds{1};
    std::string output_dir = "out";

    ModelSpec model{ModelKind::logistic_regression, 20, 0, 1, LossKind::cross_entropy, true};

    SyntheticTask task = SyntheticTask::blobs_2class;
    std::size_t train_samples = 18000;
    std::size_t test_samples = 2000;
    PartitionScheme partition = PartitionScheme::iid;
    SyntheticOptions data{0.1, 1.0, 1.0, 2.0, 0.1};

    HyperParams hp{0.01, 64, 0.005};
    // Budget in synchronization rounds for every scheme.
    unsigned t_total = 200;
    unsigned dfedavg_local_epochs = 1;
    double convergence_tol = 1e-4;
    // 0 disables the convergence predicate.
    unsigned convergence_window = 5;
    unsigned checkpoint_every = 1;

    std::vector<Rational> powers{Rational(4), Rational(2), Rational(2), Rational(1)};
    // Virtual seconds one epoch takes on a power-1 device.
    Time unit_epoch_time{1};
    double compute_noise = 0.0;

    unsigned t_sync = 1;
    // 0 selects max(2, ceil(K / 2)).
    std::size_t n_p = 0;
    double alpha = 0.5;
    SigmaMode sigma_mode = SigmaMode::iqr;
    double beta = 1.0;
    unsigned warmup_epochs = 3;
    Time time_quantum{1, 100};
    // 0 keeps a single group.
    std::size_t max_group_size = 0;
    unsigned inter_sync_multiple = 1;
    SelectionOverride selection = SelectionOverride::none;
    VersionSource version_source = VersionSource::predicted;

    LatencyModel latency{Time(1, 1000), Time(0), Time(1, 1'000'000'000)};
    Time heartbeat_interval{1, 10};
    Time liveness_timeout{3, 10};

    FailureScript failures;

    std::size_t devices() const noexcept { return powers.size(); }
    std::size_t participants() const;
    // Throws ConfigError naming the offending field.
    void validate() const;
    friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

// Datasets and partitions derived from a config and seed.
struct TrainingTask {
    ModelSpec spec;
    HyperParams hp;
    std::vector<DataPartition> partitions;
    std::vector<Sample> train;
    std::vector<Sample> test;
};

TrainingTask make_task(const ExperimentConfig& config, std::uint64_t seed);

}  // namespace hadfl
