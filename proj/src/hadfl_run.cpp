#include "hadfl/coordinator.hpp"

#include "hadfl/errors.hpp"
#include "hadfl/session.hpp"
#include "hadfl/wire.hpp"

#include <algorithm>
#include <memory>

namespace hadfl {

namespace {

enum class Stage { idle, warmup, training, syncing, awaiting_broadcast, awaiting_inter, parked };

struct Dev {
    Stage stage = Stage::idle;
    std::uint32_t round = 0;
    ParamVector model;
    bool warmed = false;
    // Disconnected since the last scan; rejoins through the coordinator.
    bool lost = false;
    std::map<std::pair<std::uint32_t, int>, ParamVector> inbox;
};

constexpr int kGroupMsg = 0;
constexpr int kInterMsg = 1;

struct GroupRun {
    std::unique_ptr<AggregationSession> session;
    std::optional<SessionResult> result;
    std::optional<DeviceId> rep;
    std::set<DeviceId> targets;
    bool finished = false;
};

struct RoundState {
    StrategyConfig strategy;
    std::vector<GroupRun> groups;
    std::map<DeviceId, std::size_t> group_of;
    std::unique_ptr<AggregationSession> inter;
    std::optional<SessionResult> inter_result;
    bool inter_started = false;
    bool inter_finished = false;
    bool closed = false;
    std::map<DeviceId, double> versions;
};

class HadflRun {
public:
    HadflRun(const ExperimentConfig& cfg, const TrainingTask& task, std::uint64_t seed, const RunOptions& opts)
        : cfg_(cfg),
          task_(task),
          seed_(seed),
          opts_(opts),
          sim_(seed, cfg.latency, ComputeModel{cfg.unit_epoch_time, cfg.compute_noise}),
          strategy_rng_(mix_seed(seed, 0x57a7, 0, 0)) {}

    RunResult run();

private:
    const ExperimentConfig& cfg_;
    const TrainingTask& task_;
    std::uint64_t seed_;
    RunOptions opts_;
    Simulator sim_;
    std::mt19937_64 strategy_rng_;
    ClusterState cluster_;
    std::map<DeviceId, Dev> devs_;
    std::map<std::uint32_t, RoundState> rounds_;
    std::set<DeviceId> pending_;
    std::optional<std::uint32_t> latest_round_;
    ParamVector global_;
    std::vector<double> losses_;
    bool done_ = false;
    bool warmup_closed_ = false;
    RunResult result_;

    const DataPartition& partition(DeviceId id) const { return task_.partitions.at(raw(id)); }
    std::set<DeviceId> scan() const;
    bool live(DeviceId id) const;
    Time timeout_wait() const;

    void start_warmup();
    void on_warm(DeviceId id, Time took);
    void warmup_watch();
    void close_warmup();

    void open_round(std::uint32_t j);
    void start_round(DeviceId id, std::uint32_t j);
    void on_trained(DeviceId id, std::uint32_t j, std::uint64_t epochs);
    void deliver(DeviceId id, std::uint32_t j, int kind, const ParamVector& model);
    void after_group(DeviceId id, std::uint32_t j);
    void park(DeviceId id, std::uint32_t j);
    void on_group_end(std::uint32_t j, std::size_t g, const SessionResult& res);
    void maybe_start_inter(std::uint32_t j);
    void on_inter_end(std::uint32_t j, const SessionResult& res);
    void maybe_close_round(std::uint32_t j);
    void watch_round(std::uint32_t j);
    void close_round(std::uint32_t j);
    void abort_run(const std::string& why);
    void on_envelope(const Envelope& env);
    void on_connectivity(DeviceId id, bool up);
    AggregationSession* session_for(const Envelope& env, int* kind);
};

std::set<DeviceId> HadflRun::scan() const {
    return liveness_scan(sim_.heartbeat_log(), sim_.now(), cfg_.liveness_timeout);
}

bool HadflRun::live(DeviceId id) const {
    const auto& hb = sim_.heartbeat_log();
    auto it = hb.find(id);
    return it != hb.end() && sim_.now() - it->second <= cfg_.liveness_timeout;
}

Time HadflRun::timeout_wait() const {
    const std::size_t r = std::max<std::size_t>(2, cfg_.participants());
    const std::size_t seg = (task_.spec.param_count() + r - 1) / r;
    return default_timeouts(cfg_.latency, kHeaderBytes + kSegmentPrefixBytes + 8 * seg).wait;
}

RunResult HadflRun::run() {
    global_ = initial_model(task_.spec, seed_);
    result_.final_params = global_;
    if (cfg_.t_total == 0) return std::move(result_);

    for (std::size_t i = 0; i < cfg_.devices(); ++i) {
        const DeviceId id = device(static_cast<std::uint32_t>(i));
        sim_.add_device(id, cfg_.powers[i]);
        cluster_.devices[id] = DeviceProfile{id, cfg_.powers[i], std::nullopt, DeviceStatus::available};
        devs_[id];
        sim_.set_handler(id, [this](const Envelope& env) { on_envelope(env); });
    }
    sim_.on_connectivity_change([this](DeviceId id, bool up) { on_connectivity(id, up); });
    sim_.start_heartbeats(cfg_.heartbeat_interval);
    sim_.inject_failures(cfg_.failures);

    apply_liveness(cluster_, scan());
    try {
        dispatch_initial(cluster_, global_, task_.hp);
    } catch (const InvalidArgument& e) {
        abort_run(e.what());
        return std::move(result_);
    }
    for (DeviceId id : cluster_.available()) devs_.at(id).model = global_;
    start_warmup();

    std::size_t events = 0;
    while (!done_ && events < opts_.max_events && sim_.step()) ++events;
    if (!done_) abort_run(events >= opts_.max_events ? "event budget exhausted" : "simulation stalled");

    result_.elapsed = sim_.now();
    result_.traffic = sim_.traffic_report();
    return std::move(result_);
}

void HadflRun::start_warmup() {
    for (DeviceId id : cluster_.available()) {
        if (!sim_.connected(id)) continue;
        Dev& d = devs_.at(id);
        d.stage = Stage::warmup;
        Time took(0);
        for (unsigned e = 0; e < cfg_.warmup_epochs; ++e) took += sim_.compute_duration(id, Rational(1));
        sim_.schedule_for(id, sim_.now() + took, [this, id, took] { on_warm(id, took); });
    }
    sim_.schedule(sim_.now() + cfg_.liveness_timeout, [this] { warmup_watch(); });
}

void HadflRun::on_warm(DeviceId id, Time took) {
    if (done_ || warmup_closed_) return;
    Dev& d = devs_.at(id);
    HyperParams hp = task_.hp;
    hp.learning_rate = hp.warmup_lr;
    const std::size_t iters = iterations_per_epoch(partition(id).samples.size(), hp.batch_size);
    d.model = local_train(d.model, task_.spec, partition(id), iters * cfg_.warmup_epochs, hp,
                          local_seed(seed_, id, 0))
                  .params;
    d.warmed = true;
    d.stage = Stage::parked;
    cluster_.devices.at(id).warmup_time = took;
    cluster_.local_models[id] = d.model;
    result_.warmup_models[id] = d.model;
    pending_.insert(id);
    bool all = true;
    for (DeviceId a : cluster_.available())
        if (!devs_.at(a).warmed) all = false;
    if (all) close_warmup();
}

void HadflRun::warmup_watch() {
    if (done_ || warmup_closed_) return;
    const auto avail = scan();
    for (auto& [id, p] : cluster_.devices)
        if (!devs_.at(id).warmed && !avail.count(id)) p.status = DeviceStatus::disconnected;
    bool all = true;
    for (DeviceId a : cluster_.available())
        if (!devs_.at(a).warmed) all = false;
    if (all) {
        close_warmup();
        return;
    }
    sim_.schedule(sim_.now() + cfg_.liveness_timeout, [this] { warmup_watch(); });
}

void HadflRun::close_warmup() {
    warmup_closed_ = true;
    apply_liveness(cluster_, scan());
    // Bounced during warm-up but back now: the measurement stands, the local state does not.
    for (DeviceId id : cluster_.available()) {
        Dev& d = devs_.at(id);
        if (!d.lost || !d.warmed || !sim_.connected(id)) continue;
        dispatch_rejoin(cluster_, id, Checkpoint{global_, 0, sim_.now(), opts_.config_hash});
        d.model = global_;
        d.lost = false;
        d.inbox.clear();
        d.stage = Stage::parked;
        pending_.insert(id);
    }
    for (auto& [id, p] : cluster_.devices)
        if (devs_.at(id).lost) p.status = DeviceStatus::disconnected;
    std::map<DeviceId, Time> times;
    for (DeviceId id : cluster_.available())
        if (devs_.at(id).warmed) times[id] = *cluster_.devices.at(id).warmup_time;
    if (times.size() < 2) {
        abort_run("fewer than two devices completed warm-up");
        return;
    }
    ScheduleOptions so{cfg_.warmup_epochs, cfg_.t_sync, cfg_.time_quantum};
    const ScheduleConfig sched = build_schedule(times, so);
    result_.schedule = sched;
    for (const auto& [id, t] : times) {
        const double v0 = sched.expected_version(id);
        cluster_.trackers.emplace(id, VersionTracker::init(cfg_.alpha, v0));
        cluster_.predictions[id] = v0;
    }
    open_round(1);
}

void HadflRun::open_round(std::uint32_t j) {
    StrategyOptions so;
    so.schedule = ScheduleOptions{cfg_.warmup_epochs, cfg_.t_sync, cfg_.time_quantum};
    so.n_p = cfg_.participants();
    so.sigma_mode = cfg_.sigma_mode;
    so.max_group_size = cfg_.max_group_size;
    so.inter_sync_multiple = cfg_.inter_sync_multiple;
    so.selection = cfg_.selection;
    std::map<DeviceId, double> versions = cluster_.predictions;
    if (cfg_.version_source == VersionSource::observed && latest_round_)
        for (const auto& [id, v] : rounds_.at(*latest_round_).versions) versions[id] = v;

    cluster_.sync_round = j - 1;
    StrategyConfig strat = generate_strategy(cluster_, versions, so, strategy_rng_);
    cluster_.groups = strat.groups;
    cluster_.current_strategy = strat;
    result_.strategies.push_back(strat);

    RoundState& rs = rounds_[j];
    rs.strategy = strat;
    rs.groups.resize(strat.group_plans.size());
    const Time interval = strat.schedule.sync_interval();
    for (std::size_t g = 0; g < strat.group_plans.size(); ++g) {
        const GroupPlan& plan = strat.group_plans[g];
        for (DeviceId id : plan.members) rs.group_of[id] = g;
        if (plan.ring.size() < 2) continue;
        SessionOptions opt;
        opt.sync_round = j;
        const std::size_t seg = (task_.spec.param_count() + plan.ring.size() - 1) / plan.ring.size();
        opt.timeouts = default_timeouts(cfg_.latency, kHeaderBytes + kSegmentPrefixBytes + 8 * seg);
        opt.timeouts.wait = std::max(opt.timeouts.wait, interval / 20);
        for (DeviceId id : plan.members)
            if (!std::binary_search(plan.selected.begin(), plan.selected.end(), id)) opt.broadcast_targets.push_back(id);
        opt.broadcast_version = j;
        opt.seed = mix_seed(seed_, 0xb0ad, j, g);
        opt.is_live = [this](DeviceId id) { return live(id); };
        auto session = std::make_unique<AggregationSession>(sim_, plan.ring, task_.spec.param_count(), opt);
        session->on_member_done([this, j](DeviceId id, const ParamVector& out) {
            Dev& d = devs_.at(id);
            if (d.round != j || d.stage != Stage::syncing) return;
            d.model = out;
            after_group(id, j);
        });
        session->on_complete([this, j, g](const SessionResult& res) { on_group_end(j, g, res); });
        rs.groups[g].session = std::move(session);
    }

    sim_.schedule(sim_.now() + cfg_.liveness_timeout, [this, j] { watch_round(j); });
    std::vector<DeviceId> ready(pending_.begin(), pending_.end());
    for (DeviceId id : ready) {
        if (!rs.group_of.count(id)) continue;
        pending_.erase(id);
        start_round(id, j);
    }
}

void HadflRun::start_round(DeviceId id, std::uint32_t j) {
    Dev& d = devs_.at(id);
    if (!sim_.connected(id) || d.lost) {
        d.stage = Stage::idle;
        return;
    }
    const Time interval = rounds_.at(j).strategy.schedule.sync_interval();
    d.stage = Stage::training;
    d.round = j;
    Time cum(0);
    std::uint64_t epochs = 0;
    while (true) {
        const Time step = sim_.compute_duration(id, Rational(1));
        if (epochs >= 1 && cum + step > interval) break;
        cum += step;
        ++epochs;
        if (epochs >= 1'000'000) break;
    }
    const Time ready = sim_.now() + std::max(interval, cum);
    sim_.schedule_for(id, ready, [this, id, j, epochs] { on_trained(id, j, epochs); });
}

void HadflRun::on_trained(DeviceId id, std::uint32_t j, std::uint64_t epochs) {
    if (done_) return;
    Dev& d = devs_.at(id);
    RoundState& rs = rounds_.at(j);
    const std::size_t iters = iterations_per_epoch(partition(id).samples.size(), task_.hp.batch_size);
    d.model = local_train(d.model, task_.spec, partition(id), iters * epochs, task_.hp, local_seed(seed_, id, j)).params;
    cluster_.local_models[id] = d.model;
    rs.versions[id] = static_cast<double>(epochs);

    const std::size_t g = rs.group_of.at(id);
    const GroupPlan& plan = rs.strategy.group_plans[g];
    GroupRun& gr = rs.groups[g];
    const bool selected = std::binary_search(plan.selected.begin(), plan.selected.end(), id);
    if (!gr.session) {
        gr.rep = id;
        after_group(id, j);
        return;
    }
    if (selected && !gr.session->finished() && gr.session->peer_status(id) != PeerStatus::bypassed) {
        d.stage = Stage::syncing;
        gr.session->member_ready(id, d.model);
        return;
    }
    d.stage = Stage::awaiting_broadcast;
    auto it = d.inbox.find({j, kGroupMsg});
    if (it != d.inbox.end()) {
        ParamVector m = std::move(it->second);
        d.inbox.erase(it);
        deliver(id, j, kGroupMsg, m);
        return;
    }
    if (gr.finished && !gr.targets.count(id)) after_group(id, j);
}

void HadflRun::deliver(DeviceId id, std::uint32_t j, int kind, const ParamVector& model) {
    Dev& d = devs_.at(id);
    if (d.round != j) {
        if (d.round < j) d.inbox[{j, kind}] = model;
        return;
    }
    const bool group_wait = kind == kGroupMsg && (d.stage == Stage::awaiting_broadcast || d.stage == Stage::syncing);
    const bool inter_wait = kind == kInterMsg && d.stage == Stage::awaiting_inter;
    if (!group_wait && !inter_wait) {
        if (d.stage == Stage::training || (kind == kInterMsg && d.stage != Stage::parked)) d.inbox[{j, kind}] = model;
        return;
    }
    d.model = integrate_received(d.model, model, cfg_.beta);
    cluster_.local_models[id] = d.model;
    if (kind == kGroupMsg)
        after_group(id, j);
    else
        park(id, j);
}

void HadflRun::after_group(DeviceId id, std::uint32_t j) {
    RoundState& rs = rounds_.at(j);
    Dev& d = devs_.at(id);
    if (!rs.strategy.inter_group_round) {
        park(id, j);
        return;
    }
    d.stage = Stage::awaiting_inter;
    auto it = d.inbox.find({j, kInterMsg});
    if (it != d.inbox.end()) {
        ParamVector m = std::move(it->second);
        d.inbox.erase(it);
        deliver(id, j, kInterMsg, m);
        return;
    }
    if (rs.inter_finished) {
        park(id, j);
        return;
    }
    maybe_start_inter(j);
}

void HadflRun::park(DeviceId id, std::uint32_t j) {
    Dev& d = devs_.at(id);
    d.stage = Stage::parked;
    auto next = rounds_.find(j + 1);
    if (next != rounds_.end() && next->second.group_of.count(id))
        start_round(id, j + 1);
    else
        pending_.insert(id);
}

void HadflRun::on_group_end(std::uint32_t j, std::size_t g, const SessionResult& res) {
    RoundState& rs = rounds_.at(j);
    GroupRun& gr = rs.groups[g];
    gr.result = res;
    gr.finished = true;
    const GroupPlan& plan = rs.strategy.group_plans[g];
    if (res.completed) {
        gr.rep = res.broadcaster;
        for (DeviceId id : plan.members) {
            if (res.outputs.count(id)) continue;
            const bool selected = std::binary_search(plan.selected.begin(), plan.selected.end(), id);
            if (!selected || sim_.connected(id)) gr.targets.insert(id);
        }
    }
    for (DeviceId id : plan.members) {
        Dev& d = devs_.at(id);
        if (d.round != j || gr.targets.count(id)) continue;
        if (d.stage == Stage::awaiting_broadcast || d.stage == Stage::syncing) after_group(id, j);
    }
    if (rs.strategy.inter_group_round) maybe_start_inter(j);
    maybe_close_round(j);
}

void HadflRun::maybe_start_inter(std::uint32_t j) {
    RoundState& rs = rounds_.at(j);
    if (rs.inter_started || rs.inter_finished) return;
    std::vector<DeviceId> reps;
    for (std::size_t g = 0; g < rs.groups.size(); ++g) {
        GroupRun& gr = rs.groups[g];
        if (gr.session && !gr.finished) return;
        if (!gr.session && !gr.rep) {
            const DeviceId only = rs.strategy.group_plans[g].members.front();
            if (!devs_.at(only).lost) return;
            continue;
        }
        if (gr.rep && devs_.at(*gr.rep).stage == Stage::awaiting_inter && devs_.at(*gr.rep).round == j)
            reps.push_back(*gr.rep);
    }
    rs.inter_started = true;
    if (reps.size() < 2) {
        rs.inter_finished = true;
        for (auto& [id, d] : devs_)
            if (d.round == j && d.stage == Stage::awaiting_inter) park(id, j);
        maybe_close_round(j);
        return;
    }
    std::sort(reps.begin(), reps.end());
    SessionOptions opt;
    opt.sync_round = j;
    const std::size_t seg = (task_.spec.param_count() + reps.size() - 1) / reps.size();
    opt.timeouts = default_timeouts(cfg_.latency, kHeaderBytes + kSegmentPrefixBytes + 8 * seg);
    for (const auto& plan : rs.strategy.group_plans)
        for (DeviceId id : plan.members)
            if (!std::binary_search(reps.begin(), reps.end(), id)) opt.broadcast_targets.push_back(id);
    opt.broadcast_version = j;
    opt.seed = mix_seed(seed_, 0x1e7e, j, 0);
    opt.is_live = [this](DeviceId id) { return live(id); };
    std::mt19937_64 ring_rng(mix_seed(seed_, 0x1e7e, j, 1));
    rs.inter = std::make_unique<AggregationSession>(sim_, build_ring(reps, ring_rng), task_.spec.param_count(), opt);
    rs.inter->on_member_done([this, j](DeviceId id, const ParamVector& out) {
        Dev& d = devs_.at(id);
        if (d.round != j || d.stage != Stage::awaiting_inter) return;
        d.model = out;
        cluster_.local_models[id] = out;
        park(id, j);
    });
    rs.inter->on_complete([this, j](const SessionResult& res) { on_inter_end(j, res); });
    for (DeviceId id : reps) rs.inter->member_ready(id, devs_.at(id).model);
}

void HadflRun::on_inter_end(std::uint32_t j, const SessionResult& res) {
    RoundState& rs = rounds_.at(j);
    rs.inter_result = res;
    rs.inter_finished = true;
    for (auto& [id, d] : devs_) {
        if (d.round != j || d.stage != Stage::awaiting_inter) continue;
        const bool member = res.peer_status.count(id) > 0;
        if (!res.completed || (member && !res.outputs.count(id) && !sim_.connected(id))) park(id, j);
    }
    maybe_close_round(j);
}

void HadflRun::maybe_close_round(std::uint32_t j) {
    RoundState& rs = rounds_.at(j);
    if (rs.closed || done_) return;
    for (std::size_t g = 0; g < rs.groups.size(); ++g) {
        const GroupRun& gr = rs.groups[g];
        if (gr.session && !gr.finished) return;
        if (!gr.session && !gr.rep && !devs_.at(rs.strategy.group_plans[g].members.front()).lost) return;
    }
    if (rs.strategy.inter_group_round && !rs.inter_finished) return;
    close_round(j);
}

void HadflRun::watch_round(std::uint32_t j) {
    RoundState& rs = rounds_.at(j);
    if (rs.closed || done_) return;
    auto check = [this](AggregationSession* s) {
        if (!s || s->finished()) return;
        for (DeviceId id : s->current_ring())
            if (s->peer_status(id) != PeerStatus::bypassed && live(id)) return;
        s->abandon("no live member left in the ring");
    };
    for (auto& gr : rs.groups) check(gr.session.get());
    check(rs.inter.get());
    if (rs.closed || done_) return;
    maybe_close_round(j);
    if (!rs.closed && !done_) sim_.schedule(sim_.now() + cfg_.liveness_timeout, [this, j] { watch_round(j); });
}

void HadflRun::close_round(std::uint32_t j) {
    RoundState& rs = rounds_.at(j);
    rs.closed = true;
    bool aborted = false;
    if (rs.inter_result && rs.inter_result->completed) {
        global_ = rs.inter_result->aggregate;
    } else {
        std::map<DeviceId, WeightedModel> parts;
        for (std::size_t g = 0; g < rs.groups.size(); ++g) {
            const GroupRun& gr = rs.groups[g];
            if (gr.result && gr.result->completed)
                parts.emplace(rs.strategy.group_plans[g].members.front(), WeightedModel{gr.result->aggregate, 1.0});
            else if (gr.result)
                aborted = true;
            else if (!gr.session && gr.rep)
                parts.emplace(*gr.rep, WeightedModel{devs_.at(*gr.rep).model, 1.0});
        }
        if (parts.size() == 1)
            global_ = parts.begin()->second.params;
        else if (!parts.empty())
            global_ = partial_aggregate(parts);
    }
    if (rs.inter_result && !rs.inter_result->completed) aborted = true;
    runtime_supervise(cluster_, rs.versions);

    RoundMetrics m;
    m.sync_round = j;
    m.virtual_time = sim_.now();
    m.train_loss = evaluate(global_, task_.spec, task_.train).loss;
    m.test_accuracy = evaluate(global_, task_.spec, task_.test).accuracy;
    m.versions = rs.versions;
    m.selected = rs.strategy.selected;
    m.traffic_bytes = sim_.traffic().by_round(j).sent.bytes;
    m.session_aborted = aborted;
    result_.metrics.push_back(m);
    result_.aggregates.push_back(global_);
    if (opts_.record_models) {
        std::map<DeviceId, ParamVector> snap;
        for (const auto& [id, d] : devs_) snap.emplace(id, d.model);
        result_.device_models.push_back(std::move(snap));
    }
    latest_round_ = j;
    cluster_.sync_round = j;
    cluster_.global_epoch = j;
    result_.final_params = global_;
    if (opts_.store) {
        try {
            if (auto c = backup_model(*opts_.store, global_, j, cfg_.checkpoint_every, opts_.config_hash, sim_.now()))
                result_.last_checkpoint = c;
        } catch (const Error& e) {
            result_.warnings.push_back(std::string("checkpoint backup failed: ") + e.what());
        }
    }
    losses_.push_back(m.train_loss);
    if (j >= cfg_.t_total || converged(losses_, cfg_.convergence_tol, cfg_.convergence_window)) {
        done_ = true;
        return;
    }

    apply_liveness(cluster_, scan());
    for (DeviceId id : cluster_.available()) {
        Dev& d = devs_.at(id);
        if (!d.lost || !d.warmed || !sim_.connected(id)) continue;
        Checkpoint latest = result_.last_checkpoint.value_or(Checkpoint{global_, j, sim_.now(), opts_.config_hash});
        dispatch_rejoin(cluster_, id, latest);
        d.model = latest.params;
        d.lost = false;
        d.inbox.clear();
        d.stage = Stage::parked;
        d.round = j;
        pending_.insert(id);
    }
    std::size_t schedulable = 0;
    for (DeviceId id : cluster_.available())
        if (devs_.at(id).warmed && !devs_.at(id).lost) ++schedulable;
    if (schedulable < 2) {
        abort_run("fewer than two devices available");
        return;
    }
    for (auto& [id, p] : cluster_.devices)
        if (devs_.at(id).lost || !devs_.at(id).warmed) p.status = DeviceStatus::disconnected;
    open_round(j + 1);
}

void HadflRun::abort_run(const std::string& why) {
    done_ = true;
    result_.aborted = true;
    result_.abort_reason = why;
    result_.final_params = global_;
    const std::uint32_t r = latest_round_.value_or(0);
    Checkpoint c{global_, r, sim_.now(), opts_.config_hash};
    if (opts_.store) {
        try {
            const auto rounds = opts_.store->rounds();
            if (rounds.empty() || rounds.back() < r) opts_.store->write(c);
        } catch (const Error& e) {
            result_.warnings.push_back(std::string("checkpoint backup failed: ") + e.what());
        }
    }
    result_.last_checkpoint = c;
}

AggregationSession* HadflRun::session_for(const Envelope& env, int* kind) {
    auto it = rounds_.find(env.message.sync_round);
    if (it == rounds_.end()) return nullptr;
    for (auto& gr : it->second.groups)
        if (gr.session && gr.session->owns(env)) {
            *kind = kGroupMsg;
            return gr.session.get();
        }
    if (it->second.inter && it->second.inter->owns(env)) {
        *kind = kInterMsg;
        return it->second.inter.get();
    }
    return nullptr;
}

void HadflRun::on_envelope(const Envelope& env) {
    if (done_) return;
    int kind = kGroupMsg;
    AggregationSession* s = session_for(env, &kind);
    if (!s) return;
    if (env.message.kind == MessageKind::model_broadcast) {
        ModelPayload m = decode_model(env.message.payload);
        if (devs_.at(env.to).lost) return;
        deliver(env.to, env.message.sync_round, kind, m.params);
        return;
    }
    s->on_message(env);
}

void HadflRun::on_connectivity(DeviceId id, bool up) {
    if (up) return;
    Dev& d = devs_.at(id);
    d.lost = true;
    d.stage = Stage::idle;
    d.inbox.clear();
    pending_.erase(id);
}

}  // namespace

RunResult run_training(const ExperimentConfig& config, const TrainingTask& task, std::uint64_t seed,
                       const RunOptions& options) {
    HadflRun run(config, task, seed, options);
    return run.run();
}

}  // namespace hadfl
