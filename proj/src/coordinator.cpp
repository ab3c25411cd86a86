#include "hadfl/coordinator.hpp"

#include "hadfl/errors.hpp"

#include <algorithm>
#include <cmath>

namespace hadfl {

std::vector<DeviceId> ClusterState::available() const {
    std::vector<DeviceId> out;
    for (const auto& [id, p] : devices)
        if (p.status == DeviceStatus::available) out.push_back(id);
    return out;
}

std::set<DeviceId> liveness_scan(const std::map<DeviceId, Time>& heartbeats, Time now, Time timeout) {
    if (timeout <= Time(0)) throw InvalidArgument("liveness_scan: timeout must be positive");
    std::set<DeviceId> out;
    for (const auto& [id, last] : heartbeats)
        if (now - last <= timeout) out.insert(id);
    return out;
}

void apply_liveness(ClusterState& cluster, const std::set<DeviceId>& available) {
    for (auto& [id, p] : cluster.devices)
        p.status = available.count(id) ? DeviceStatus::available : DeviceStatus::disconnected;
}

void dispatch_initial(ClusterState& cluster, const ParamVector& w0, const HyperParams& hp) {
    const auto avail = cluster.available();
    if (avail.size() < 2) throw InvalidArgument("dispatch_initial: need at least two available devices");
    hp.validate();
    cluster.hp = hp;
    for (DeviceId id : avail) cluster.local_models[id] = w0;
}

void dispatch_rejoin(ClusterState& cluster, DeviceId id, const Checkpoint& latest) {
    if (!cluster.devices.count(id)) throw InvalidArgument("dispatch_rejoin: unknown device");
    cluster.local_models[id] = latest.params;
}

StrategyConfig generate_strategy(const ClusterState& cluster, const std::map<DeviceId, double>& versions,
                                 const StrategyOptions& options, std::mt19937_64& rng) {
    std::map<DeviceId, Time> warmup;
    for (const auto& [id, p] : cluster.devices)
        if (p.status == DeviceStatus::available && p.warmup_time) warmup[id] = *p.warmup_time;
    if (warmup.size() < 2) throw InvalidArgument("generate_strategy: fewer than two schedulable devices");

    StrategyConfig s;
    s.sync_round = cluster.sync_round + 1;
    s.schedule = build_schedule(warmup, options.schedule);

    std::vector<DeviceId> eligible;
    for (const auto& [id, t] : warmup) eligible.push_back(id);
    if (options.max_group_size >= 2 && eligible.size() > options.max_group_size) {
        bool reuse = false;
        if (cluster.groups) {
            std::vector<DeviceId> members;
            for (const auto& g : cluster.groups->groups) members.insert(members.end(), g.begin(), g.end());
            std::sort(members.begin(), members.end());
            reuse = members == eligible;
        }
        s.groups = reuse ? *cluster.groups
                         : partition_groups(eligible, options.max_group_size, options.inter_sync_multiple, rng);
    } else {
        s.groups.groups = {eligible};
        s.groups.inter_sync_multiple = options.inter_sync_multiple;
    }
    s.inter_group_round = s.groups.groups.size() > 1 && s.sync_round % s.groups.inter_sync_multiple == 0;

    for (const auto& members : s.groups.groups) {
        GroupPlan plan;
        plan.members = members;
        std::sort(plan.members.begin(), plan.members.end());
        if (plan.members.size() >= 2) {
            std::map<DeviceId, double> v;
            for (DeviceId id : plan.members) {
                auto it = versions.find(id);
                v[id] = it != versions.end() ? it->second : s.schedule.expected_version(id);
            }
            plan.distribution = selection_probabilities(v, options.sigma_mode);
            const std::size_t n_p = std::clamp<std::size_t>(options.n_p, 2, plan.members.size());
            if (options.selection == SelectionOverride::slowest) {
                std::vector<DeviceId> order = plan.members;
                std::stable_sort(order.begin(), order.end(), [&](DeviceId a, DeviceId b) {
                    return cluster.devices.at(a).compute_power < cluster.devices.at(b).compute_power;
                });
                plan.selected.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_p));
                std::sort(plan.selected.begin(), plan.selected.end());
            } else {
                plan.selected = sample_participants(plan.distribution, n_p, rng);
            }
            plan.ring = build_ring(plan.selected, rng);
        } else {
            plan.selected = plan.members;
        }
        s.selected.insert(s.selected.end(), plan.selected.begin(), plan.selected.end());
        s.group_plans.push_back(std::move(plan));
    }
    std::sort(s.selected.begin(), s.selected.end());
    s.ring = s.group_plans.front().ring;
    s.distribution = s.group_plans.front().distribution;
    return s;
}

std::map<DeviceId, double> runtime_supervise(ClusterState& cluster, const std::map<DeviceId, double>& observed) {
    for (const auto& [id, v] : observed) {
        auto it = cluster.trackers.find(id);
        if (it == cluster.trackers.end()) continue;
        it->second = it->second.observe(v);
        cluster.predictions[id] = it->second.predict(1);
    }
    return cluster.predictions;
}

std::optional<Checkpoint> backup_model(CheckpointStore& store, const ParamVector& w, std::uint32_t sync_round,
                                       unsigned every_n_rounds, std::uint64_t config_hash, Time now) {
    if (every_n_rounds == 0 || sync_round % every_n_rounds != 0) return std::nullopt;
    Checkpoint c{w, sync_round, now, config_hash};
    store.write(c);
    return c;
}

bool converged(const std::vector<double>& losses, double tol, unsigned window) {
    if (window == 0 || losses.size() <= window) return false;
    const double now = losses.back();
    const double then = losses[losses.size() - 1 - window];
    if (!std::isfinite(now) || !std::isfinite(then)) return false;
    const double scale = std::max(std::abs(then), 1e-12);
    return std::abs(now - then) / scale < tol;
}

std::uint64_t local_seed(std::uint64_t run_seed, DeviceId id, std::uint64_t round) {
    return mix_seed(run_seed, 0x7a11, raw(id), round);
}

ParamVector initial_model(const ModelSpec& spec, std::uint64_t run_seed) {
    return init_params(spec, mix_seed(run_seed, 0x1417, 0, 0));
}

}  // namespace hadfl
