#pragma once

#include "hadfl/types.hpp"

#include <cstddef>
#include <map>
#include <random>
#include <span>
#include <string_view>
#include <vector>

namespace hadfl {

enum class SigmaMode {
    // sigma = max(IQR of versions, version quantum)
    iqr,
    // sigma = 1, the literal unit-variance density
    unit,
};

std::string_view to_string(SigmaMode mode);
SigmaMode parse_sigma_mode(std::string_view text);

struct SelectionDistribution {
    double mu = 0.0;
    double sigma = 1.0;
    std::map<DeviceId, double> probs;
};

struct RingTopology {
    // Directed cycle: order[i] sends to order[i + 1], the last one to order[0].
    std::vector<DeviceId> order;

    std::size_t size() const noexcept { return order.size(); }
    std::size_t position(DeviceId id) const;
    DeviceId successor(DeviceId id) const;
    DeviceId predecessor(DeviceId id) const;
    bool contains(DeviceId id) const;
    // Rotation starting at the smallest id; two rings are the same cycle iff their canonical forms match.
    std::vector<DeviceId> canonical() const;
    // Throws InvalidArgument on duplicates or fewer than two members.
    void validate() const;
};

struct GroupLayout {
    std::vector<std::vector<DeviceId>> groups;
    unsigned inter_sync_multiple = 1;
};

// Nearest-rank quantile: element ceil(q * n) - 1 of the sorted values.
double nearest_rank(std::span<const double> values, double q);
double third_quartile(std::span<const double> values);
double first_quartile(std::span<const double> values);

constexpr double kProbabilityFloor = 1e-6;

// Gaussian density centred at the third quartile, normalized, floored and renormalized.
SelectionDistribution selection_probabilities(const std::map<DeviceId, double>& versions, SigmaMode mode,
                                              double version_quantum = 1.0, double floor = kProbabilityFloor);

// Sequential weighted draws without replacement, in draw order.
std::vector<DeviceId> draw_order(const SelectionDistribution& dist, std::size_t n, std::mt19937_64& rng);
// draw_order with 2 <= n_p <= K, sorted by id.
std::vector<DeviceId> sample_participants(const SelectionDistribution& dist, std::size_t n_p, std::mt19937_64& rng);

// Uniformly random cyclic order of `selected`.
RingTopology build_ring(std::span<const DeviceId> selected, std::mt19937_64& rng);

// Random balanced partition into ceil(n / max_group_size) groups; sizes differ by at most one.
GroupLayout partition_groups(std::span<const DeviceId> devices, std::size_t max_group_size,
                             unsigned inter_sync_multiple, std::mt19937_64& rng);

// ceil(K / 2), at least 2 when K >= 2.
std::size_t default_participants(std::size_t K);

}  // namespace hadfl
