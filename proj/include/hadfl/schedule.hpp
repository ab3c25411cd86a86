#pragma once

#include "hadfl/types.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <span>

namespace hadfl {

enum class DeviceStatus { available, disconnected };

struct DeviceProfile {
    DeviceId id{};
    // Simulation ground truth; a power-4 device runs an epoch in a quarter of the unit time.
    Rational compute_power{1};
    // Measured warm-up wall time T_i, quantized. Empty until the device reports.
    std::optional<Time> warmup_time;
    DeviceStatus status = DeviceStatus::available;
};

// T_i / E_warmup, exact.
Time per_epoch_time(const Time& warmup_time, unsigned warmup_epochs);

// Rational LCM: lcm(numerators) / gcd(denominators) of the reduced inputs.
// Throws InvalidArgument on empty input or non-positive values, and when the
// numerator LCM overflows 64 bits.
Time hyperperiod(std::span<const Time> times);

// round(T_sync * H_E / per_epoch), at least 1.
std::uint64_t local_steps(const Time& per_epoch, const Time& hyperperiod_len, unsigned t_sync);

// T_sync * H_E / per_epoch: local epochs expected by the next synchronization.
double expected_version(const Time& per_epoch, const Time& hyperperiod_len, unsigned t_sync);

struct ScheduleOptions {
    unsigned warmup_epochs = 3;
    unsigned t_sync = 1;
    Time time_quantum{1, 100};
    // H_E may not exceed cap_factor * (largest per-epoch time).
    unsigned cap_factor = 64;
};

struct ScheduleConfig {
    unsigned warmup_epochs = 3;
    unsigned t_sync = 1;
    Time hyperperiod{1};
    // Quantum the per-epoch times were finally held at (coarser than the option when the cap kicked in).
    Time quantum{1, 100};
    std::map<DeviceId, Time> per_epoch;
    // E_k: local epochs between synchronizations.
    std::map<DeviceId, std::uint64_t> local_epochs;

    Time sync_interval() const { return hyperperiod * static_cast<std::int64_t>(t_sync); }
    double expected_version(DeviceId id) const;
};

// Derives H_E and E_k from quantized warm-up times. When the LCM exceeds the cap the
// per-epoch times are re-quantized with a doubled quantum until it fits.
ScheduleConfig build_schedule(const std::map<DeviceId, Time>& warmup_times, const ScheduleOptions& options);

}  // namespace hadfl
