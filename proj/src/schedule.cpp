#include "hadfl/schedule.hpp"

#include "hadfl/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

namespace hadfl {

Time per_epoch_time(const Time& warmup_time, unsigned warmup_epochs) {
    if (warmup_time <= 0) throw InvalidArgument("per_epoch_time: T_i must be positive");
    if (warmup_epochs < 1) throw InvalidArgument("per_epoch_time: E_warmup must be >= 1");
    return warmup_time / static_cast<std::int64_t>(warmup_epochs);
}

Time hyperperiod(std::span<const Time> times) {
    if (times.empty()) throw InvalidArgument("hyperperiod: empty set");
    std::int64_t num = 1;
    std::int64_t den = 0;
    for (const auto& t : times) {
        if (t <= 0) throw InvalidArgument("hyperperiod: times must be positive");
        const std::int64_t g = std::gcd(num, t.numerator());
        const __int128 l = static_cast<__int128>(num / g) * t.numerator();
        if (l > std::numeric_limits<std::int64_t>::max()) throw InvalidArgument("hyperperiod: LCM overflow");
        num = static_cast<std::int64_t>(l);
        den = std::gcd(den, t.denominator());
    }
    return Time(num, den);
}

std::uint64_t local_steps(const Time& per_epoch, const Time& hyperperiod_len, unsigned t_sync) {
    if (per_epoch <= 0 || hyperperiod_len <= 0 || t_sync < 1)
        throw InvalidArgument("local_steps: inputs must be positive");
    const Time ratio = hyperperiod_len * static_cast<std::int64_t>(t_sync) / per_epoch;
    const Time shifted = ratio + Time(1, 2);
    const std::int64_t rounded = shifted.numerator() / shifted.denominator();
    return static_cast<std::uint64_t>(std::max<std::int64_t>(rounded, 1));
}

double expected_version(const Time& per_epoch, const Time& hyperperiod_len, unsigned t_sync) {
    if (per_epoch <= 0 || hyperperiod_len <= 0 || t_sync < 1)
        throw InvalidArgument("expected_version: inputs must be positive");
    return to_double(hyperperiod_len * static_cast<std::int64_t>(t_sync) / per_epoch);
}

double ScheduleConfig::expected_version(DeviceId id) const {
    return hadfl::expected_version(per_epoch.at(id), hyperperiod, t_sync);
}

ScheduleConfig build_schedule(const std::map<DeviceId, Time>& warmup_times, const ScheduleOptions& options) {
    if (warmup_times.empty()) throw InvalidArgument("build_schedule: no warm-up times");
    if (options.t_sync < 1) throw InvalidArgument("build_schedule: T_sync must be >= 1");
    if (options.cap_factor < 1) throw InvalidArgument("build_schedule: cap factor must be >= 1");

    ScheduleConfig cfg;
    cfg.warmup_epochs = options.warmup_epochs;
    cfg.t_sync = options.t_sync;
    cfg.quantum = options.time_quantum;

    std::map<DeviceId, Time> per_epoch;
    for (const auto& [id, t] : warmup_times) per_epoch[id] = per_epoch_time(t, options.warmup_epochs);

    Time quantum = options.time_quantum;
    bool requantized = false;
    for (;;) {
        std::vector<Time> times;
        for (const auto& [id, t] : per_epoch) times.push_back(t);
        const Time cap = *std::max_element(times.begin(), times.end()) * static_cast<std::int64_t>(options.cap_factor);
        std::optional<Time> h;
        try {
            h = hyperperiod(times);
        } catch (const InvalidArgument&) {
            h.reset();
        }
        if (h && *h <= cap) {
            cfg.hyperperiod = *h;
            break;
        }
        // Coarser quantum; terminates once every time collapses onto a single quantum.
        if (requantized) quantum *= 2;
        requantized = true;
        for (auto& [id, t] : per_epoch) t = quantize(per_epoch_time(warmup_times.at(id), options.warmup_epochs), quantum);
    }
    cfg.quantum = quantum;
    cfg.per_epoch = per_epoch;
    for (const auto& [id, t] : per_epoch) cfg.local_epochs[id] = local_steps(t, cfg.hyperperiod, cfg.t_sync);
    return cfg;
}

}  // namespace hadfl
