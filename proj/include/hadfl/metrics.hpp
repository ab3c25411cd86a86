#pragma once

#include "hadfl/coordinator.hpp"
#include "hadfl/experiment.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace hadfl {

struct MetricsFile {
    std::string scheme;
    std::uint64_t seed = 0;
    std::uint64_t config_digest = 0;
    std::vector<RoundMetrics> records;
};

// Tab-separated, one record per sync round after a '#' provenance line and a header line.
// Doubles are written with 17 significant digits; virtual time also as an exact rational.
void write_metrics(std::ostream& out, const MetricsFile& file);
std::string format_metrics(const MetricsFile& file);
// Throws IoError on unreadable or malformed input.
MetricsFile parse_metrics(std::string_view text);
MetricsFile read_metrics(const std::filesystem::path& path);
void save_metrics(const std::filesystem::path& path, const MetricsFile& file);

struct RunSummary {
    std::string scheme;
    std::uint64_t seed = 0;
    double best_accuracy = 0.0;
    // Virtual seconds to reach (best - 0.01) of this run.
    std::optional<double> time_to_own_target;
    std::optional<double> time_to_common_target;
    double final_accuracy = 0.0;
    std::uint32_t rounds = 0;
};

struct SchemeSummary {
    std::string scheme;
    std::size_t runs = 0;
    // Medians over runs; a time is absent when the median run did not reach the target.
    double best_accuracy = 0.0;
    std::optional<double> time_to_own_target;
    std::optional<double> time_to_common_target;
    // Baseline scheme -> baseline time / this scheme's time, on the common target.
    std::map<std::string, std::optional<double>> speedup;
};

struct Comparison {
    double common_target = 0.0;
    std::string common_target_basis;
    std::vector<RunSummary> runs;
    std::vector<SchemeSummary> schemes;
};

std::optional<double> time_to_accuracy(const std::vector<RoundMetrics>& records, double target);
// Needs at least two runs.
Comparison compare_runs(const std::vector<MetricsFile>& files);
std::string format_comparison(const Comparison& c);
std::string comparison_json(const Comparison& c);

}  // namespace hadfl
