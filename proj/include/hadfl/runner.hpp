#pragma once

#include "hadfl/coordinator.hpp"
#include "hadfl/experiment.hpp"

#include <cstdint>

namespace hadfl {

// Synchronous rounds: every live device runs the same number of local epochs from the shared
// model, the accumulated deltas are ring-all-reduced, and each device adds the mean delta.
// A round lasts as long as its slowest device.
RunResult run_baseline_dfedavg(const ExperimentConfig& config, const TrainingTask& task, std::uint64_t seed,
                               const RunOptions& options = {});

// Per-iteration gradient ring all-reduce across all live devices; one round is one epoch of iterations.
RunResult run_baseline_sync_allreduce(const ExperimentConfig& config, const TrainingTask& task, std::uint64_t seed,
                                      const RunOptions& options = {});

// Dispatches on config.scheme.
RunResult run_scheme(const ExperimentConfig& config, const TrainingTask& task, std::uint64_t seed,
                     const RunOptions& options = {});

}  // namespace hadfl
