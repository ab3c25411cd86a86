#include "hadfl/runner.hpp"

#include "hadfl/errors.hpp"
#include "hadfl/session.hpp"
#include "hadfl/wire.hpp"

#include <algorithm>
#include <memory>

namespace hadfl {

namespace {

class SyncRunner {
public:
    SyncRunner(const ExperimentConfig& cfg, const TrainingTask& task, std::uint64_t seed, const RunOptions& opts)
        : cfg_(cfg), task_(task), seed_(seed), opts_(opts), sim_(seed, cfg.latency, ComputeModel{cfg.unit_epoch_time, cfg.compute_noise}) {
        for (std::size_t i = 0; i < cfg.devices(); ++i) {
            const DeviceId id = device(static_cast<std::uint32_t>(i));
            sim_.add_device(id, cfg.powers[i]);
            sim_.set_handler(id, [this](const Envelope& env) {
                if (session_) session_->on_message(env);
            });
        }
        sim_.start_heartbeats(cfg.heartbeat_interval);
        sim_.inject_failures(cfg.failures);
        global_ = initial_model(task.spec, seed);
        result_.final_params = global_;
    }

    RunResult dfedavg();
    RunResult sync_allreduce();

private:
    const ExperimentConfig& cfg_;
    const TrainingTask& task_;
    std::uint64_t seed_;
    RunOptions opts_;
    Simulator sim_;
    std::unique_ptr<AggregationSession> session_;
    std::vector<std::unique_ptr<AggregationSession>> retired_;
    ParamVector global_;
    RunResult result_;
    std::vector<double> losses_;

    std::vector<DeviceId> live_ring() const;
    // Runs one all-reduce; member i becomes ready at ready_at[i]. Returns nullopt if it aborted.
    std::optional<ParamVector> allreduce(const std::vector<DeviceId>& ring, const std::map<DeviceId, ParamVector>& inputs,
                                         const std::map<DeviceId, Time>& ready_at, std::uint32_t round);
    bool finish_round(std::uint32_t round, const std::map<DeviceId, double>& versions,
                      const std::vector<DeviceId>& ring, bool aborted);
    void abort(const std::string& why);
    const DataPartition& partition(DeviceId id) const { return task_.partitions.at(raw(id)); }
};

std::vector<DeviceId> SyncRunner::live_ring() const {
    const auto avail = liveness_scan(sim_.heartbeat_log(), sim_.now(), cfg_.liveness_timeout);
    std::vector<DeviceId> out;
    for (DeviceId id : avail)
        if (sim_.connected(id)) out.push_back(id);
    return out;
}

std::optional<ParamVector> SyncRunner::allreduce(const std::vector<DeviceId>& ring,
                                                 const std::map<DeviceId, ParamVector>& inputs,
                                                 const std::map<DeviceId, Time>& ready_at, std::uint32_t round) {
    SessionOptions opt;
    opt.sync_round = round;
    const std::size_t dim = task_.spec.param_count();
    const std::size_t seg = (dim + ring.size() - 1) / ring.size();
    opt.timeouts = default_timeouts(cfg_.latency, kHeaderBytes + kSegmentPrefixBytes + 8 * seg);
    // Members are known to be computing until their ready time, so silence is only suspicious after that.
    Time latest = sim_.now();
    for (const auto& [id, t] : ready_at) latest = std::max(latest, t);
    opt.timeouts.wait += latest - sim_.now();
    opt.seed = mix_seed(seed_, 0x5a11, round, 0);
    opt.is_live = [this](DeviceId id) {
        const auto& hb = sim_.heartbeat_log();
        auto it = hb.find(id);
        return it != hb.end() && sim_.now() - it->second <= cfg_.liveness_timeout;
    };
    session_ = std::make_unique<AggregationSession>(sim_, RingTopology{ring}, dim, opt);
    AggregationSession* s = session_.get();
    for (DeviceId id : ring) {
        sim_.schedule_for(id, ready_at.at(id), [s, id, in = inputs.at(id)] { s->member_ready(id, in); });
    }
    while (!s->finished() && sim_.step()) {
    }
    std::optional<ParamVector> out;
    if (s->finished() && s->result().completed) out = s->result().aggregate;
    // Late ready events may still reference a finished session, so it stays alive.
    retired_.push_back(std::move(session_));
    return out;
}

void SyncRunner::abort(const std::string& why) {
    result_.aborted = true;
    result_.abort_reason = why;
    const std::uint32_t r = result_.metrics.empty() ? 0 : result_.metrics.back().sync_round;
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

bool SyncRunner::finish_round(std::uint32_t round, const std::map<DeviceId, double>& versions,
                              const std::vector<DeviceId>& ring, bool aborted) {
    RoundMetrics m;
    m.sync_round = round;
    m.virtual_time = sim_.now();
    m.train_loss = evaluate(global_, task_.spec, task_.train).loss;
    m.test_accuracy = evaluate(global_, task_.spec, task_.test).accuracy;
    m.versions = versions;
    m.selected = ring;
    m.traffic_bytes = sim_.traffic().by_round(round).sent.bytes;
    m.session_aborted = aborted;
    result_.metrics.push_back(m);
    result_.aggregates.push_back(global_);
    result_.final_params = global_;
    if (opts_.record_models) {
        std::map<DeviceId, ParamVector> snap;
        for (DeviceId id : ring) snap.emplace(id, global_);
        result_.device_models.push_back(std::move(snap));
    }
    if (opts_.store) {
        try {
            if (auto c = backup_model(*opts_.store, global_, round, cfg_.checkpoint_every, opts_.config_hash, sim_.now()))
                result_.last_checkpoint = c;
        } catch (const Error& e) {
            result_.warnings.push_back(std::string("checkpoint backup failed: ") + e.what());
        }
    }
    losses_.push_back(m.train_loss);
    return round >= cfg_.t_total || converged(losses_, cfg_.convergence_tol, cfg_.convergence_window);
}

RunResult SyncRunner::dfedavg() {
    const unsigned epochs = cfg_.dfedavg_local_epochs;
    for (std::uint32_t round = 1; round <= cfg_.t_total; ++round) {
        const auto ring = live_ring();
        if (ring.size() < 2) {
            abort("fewer than two devices available");
            break;
        }
        std::map<DeviceId, ParamVector> deltas;
        std::map<DeviceId, Time> ready_at;
        std::map<DeviceId, double> versions;
        for (DeviceId id : ring) {
            Time took(0);
            for (unsigned e = 0; e < epochs; ++e) took += sim_.compute_duration(id, Rational(1));
            const std::size_t iters = iterations_per_epoch(partition(id).samples.size(), task_.hp.batch_size);
            const ParamVector w = local_train(global_, task_.spec, partition(id), iters * epochs, task_.hp,
                                              local_seed(seed_, id, round))
                                      .params;
            std::vector<double> d(w.dim());
            for (std::size_t i = 0; i < d.size(); ++i) d[i] = w[i] - global_[i];
            deltas.emplace(id, ParamVector(std::move(d)));
            ready_at[id] = sim_.now() + took;
            versions[id] = epochs;
        }
        const auto mean = allreduce(ring, deltas, ready_at, round);
        if (mean) {
            std::vector<double> w = global_.vector();
            for (std::size_t i = 0; i < w.size(); ++i) w[i] += (*mean)[i];
            global_ = ParamVector(std::move(w));
        }
        if (finish_round(round, versions, ring, !mean)) break;
    }
    result_.elapsed = sim_.now();
    result_.traffic = sim_.traffic_report();
    return std::move(result_);
}

RunResult SyncRunner::sync_allreduce() {
    for (std::uint32_t round = 1; round <= cfg_.t_total; ++round) {
        auto ring = live_ring();
        if (ring.size() < 2) {
            abort("fewer than two devices available");
            break;
        }
        std::map<DeviceId, std::mt19937_64> rngs;
        std::size_t iters = 0;
        for (DeviceId id : ring) {
            rngs.emplace(id, std::mt19937_64(local_seed(seed_, id, round)));
            iters = std::max(iters, iterations_per_epoch(partition(id).samples.size(), task_.hp.batch_size));
        }
        bool any_abort = false;
        std::map<DeviceId, double> versions;
        for (std::size_t it = 0; it < iters; ++it) {
            if (it > 0) {
                std::vector<DeviceId> still;
                const auto live = live_ring();
                for (DeviceId id : ring)
                    if (std::binary_search(live.begin(), live.end(), id)) still.push_back(id);
                ring = std::move(still);
                if (ring.size() < 2) break;
            }
            std::map<DeviceId, ParamVector> grads;
            std::map<DeviceId, Time> ready_at;
            for (DeviceId id : ring) {
                const auto& samples = partition(id).samples;
                const auto idx = sample_batch_indices(samples.size(), task_.hp.batch_size, rngs.at(id));
                std::vector<Sample> batch;
                batch.reserve(idx.size());
                for (std::size_t k : idx) batch.push_back(samples[k]);
                grads.emplace(id, compute_gradient(global_, task_.spec, batch));
                const std::size_t own = iterations_per_epoch(samples.size(), task_.hp.batch_size);
                ready_at[id] = sim_.now() + sim_.compute_duration(id, Rational(1, static_cast<std::int64_t>(own)));
                versions[id] += 1.0 / static_cast<double>(own);
            }
            const auto mean = allreduce(ring, grads, ready_at, round);
            if (!mean) {
                any_abort = true;
                continue;
            }
            global_ = sgd_step(global_, *mean, task_.hp.learning_rate);
        }
        if (ring.size() < 2) {
            abort("fewer than two devices available");
            break;
        }
        if (finish_round(round, versions, ring, any_abort)) break;
    }
    result_.elapsed = sim_.now();
    result_.traffic = sim_.traffic_report();
    return std::move(result_);
}

}  // namespace

RunResult run_baseline_dfedavg(const ExperimentConfig& config, const TrainingTask& task, std::uint64_t seed,
                               const RunOptions& options) {
    SyncRunner r(config, task, seed, options);
    return r.dfedavg();
}

RunResult run_baseline_sync_allreduce(const ExperimentConfig& config, const TrainingTask& task, std::uint64_t seed,
                                      const RunOptions& options) {
    SyncRunner r(config, task, seed, options);
    return r.sync_allreduce();
}

RunResult run_scheme(const ExperimentConfig& config, const TrainingTask& task, std::uint64_t seed,
                     const RunOptions& options) {
    switch (config.scheme) {
        case Scheme::hadfl: return run_training(config, task, seed, options);
        case Scheme::dfedavg: return run_baseline_dfedavg(config, task, seed, options);
        case Scheme::sync_allreduce: return run_baseline_sync_allreduce(config, task, seed, options);
    }
    throw InvalidArgument("run_scheme: unknown scheme");
}

}  // namespace hadfl
