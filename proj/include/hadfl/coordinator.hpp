#pragma once

#include "hadfl/checkpoint.hpp"
#include "hadfl/experiment.hpp"
#include "hadfl/schedule.hpp"
#include "hadfl/selector.hpp"
#include "hadfl/simnet.hpp"
#include "hadfl/version_predictor.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

namespace hadfl {

struct GroupPlan {
    std::vector<DeviceId> members;
    std::vector<DeviceId> selected;
    // Empty when fewer than two members are available.
    RingTopology ring;
    SelectionDistribution distribution;
};

struct StrategyConfig {
    std::uint32_t sync_round = 0;
    ScheduleConfig schedule;
    // Union over groups.
    std::vector<DeviceId> selected;
    // Ring of the first group; the only one when ungrouped.
    RingTopology ring;
    SelectionDistribution distribution;
    GroupLayout groups;
    std::vector<GroupPlan> group_plans;
    bool inter_group_round = false;
};

struct ClusterState {
    std::map<DeviceId, DeviceProfile> devices;
    std::map<DeviceId, VersionTracker> trackers;
    // Latest forecast per device; seeded with the schedule's expected versions.
    std::map<DeviceId, double> predictions;
    std::map<DeviceId, ParamVector> local_models;
    std::optional<StrategyConfig> current_strategy;
    std::optional<GroupLayout> groups;
    HyperParams hp;
    std::uint32_t sync_round = 0;
    std::uint32_t global_epoch = 0;

    std::vector<DeviceId> available() const;
    std::size_t available_count() const { return available().size(); }
};

// Device d is available iff its latest heartbeat lies within `timeout` of `now`.
std::set<DeviceId> liveness_scan(const std::map<DeviceId, Time>& heartbeats, Time now, Time timeout);
// Marks every profile available or disconnected according to a scan.
void apply_liveness(ClusterState& cluster, const std::set<DeviceId>& available);

// Gives every available device w0 and the hyper-parameters. Throws InvalidArgument with fewer than two.
void dispatch_initial(ClusterState& cluster, const ParamVector& w0, const HyperParams& hp);
// A device that (re)joins receives the latest checkpointed model.
void dispatch_rejoin(ClusterState& cluster, DeviceId id, const Checkpoint& latest);

struct StrategyOptions {
    ScheduleOptions schedule;
    std::size_t n_p = 2;
    SigmaMode sigma_mode = SigmaMode::iqr;
    std::size_t max_group_size = 0;
    unsigned inter_sync_multiple = 1;
    SelectionOverride selection = SelectionOverride::none;
};

// Only available devices with a measured warm-up time take part.
// Updates nothing; the caller stores the result and any new group layout.
StrategyConfig generate_strategy(const ClusterState& cluster, const std::map<DeviceId, double>& versions,
                                 const StrategyOptions& options, std::mt19937_64& rng);

// Advances the trackers of the devices in `observed` and returns one-step forecasts for all
// tracked devices. Devices absent from `observed` keep their previous forecast.
std::map<DeviceId, double> runtime_supervise(ClusterState& cluster, const std::map<DeviceId, double>& observed);

// Writes a checkpoint iff sync_round % every_n_rounds == 0. Storage errors propagate.
std::optional<Checkpoint> backup_model(CheckpointStore& store, const ParamVector& w, std::uint32_t sync_round,
                                       unsigned every_n_rounds, std::uint64_t config_hash, Time now = Time(0));

// Relative training-loss change below `tol` across `window` rounds.
bool converged(const std::vector<double>& losses, double tol, unsigned window);

struct RoundMetrics {
    std::uint32_t sync_round = 0;
    Time virtual_time{0};
    double train_loss = 0.0;
    double test_accuracy = 0.0;
    // Epochs each device completed in this round.
    std::map<DeviceId, double> versions;
    std::vector<DeviceId> selected;
    std::uint64_t traffic_bytes = 0;
    bool session_aborted = false;

    friend bool operator==(const RoundMetrics&, const RoundMetrics&) = default;
};

struct RunOptions {
    CheckpointStore* store = nullptr;
    std::uint64_t config_hash = 0;
    // Keep every device's model after each round.
    bool record_models = false;
    std::size_t max_events = 50'000'000;
};

struct RunResult {
    ParamVector final_params;
    std::vector<RoundMetrics> metrics;
    bool aborted = false;
    std::string abort_reason;
    std::optional<Checkpoint> last_checkpoint;
    std::vector<std::string> warnings;
    // Per round, populated when RunOptions::record_models is set.
    std::vector<std::map<DeviceId, ParamVector>> device_models;
    std::vector<ParamVector> aggregates;
    std::vector<StrategyConfig> strategies;
    std::map<DeviceId, ParamVector> warmup_models;
    std::optional<ScheduleConfig> schedule;
    TrafficCounter traffic;
    Time elapsed{0};
};

// The full heterogeneity-aware decentralized loop on a simulated cluster.
RunResult run_training(const ExperimentConfig& config, const TrainingTask& task, std::uint64_t seed,
                       const RunOptions& options = {});

// Per-(device, round) training seed shared by every scheme; round 0 is warm-up.
std::uint64_t local_seed(std::uint64_t run_seed, DeviceId id, std::uint64_t round);
ParamVector initial_model(const ModelSpec& spec, std::uint64_t run_seed);

}  // namespace hadfl
