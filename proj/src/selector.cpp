#include "hadfl/selector.hpp"

#include "hadfl/errors.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>

namespace hadfl {

std::string_view to_string(SigmaMode mode) { return mode == SigmaMode::iqr ? "iqr" : "unit"; }

SigmaMode parse_sigma_mode(std::string_view text) {
    if (text == "iqr") return SigmaMode::iqr;
    if (text == "unit") return SigmaMode::unit;
    throw InvalidArgument("unknown sigma mode '" + std::string(text) + "'");
}

std::size_t RingTopology::position(DeviceId id) const {
    const auto it = std::find(order.begin(), order.end(), id);
    if (it == order.end()) throw InvalidArgument("ring: device " + std::to_string(raw(id)) + " is not a member");
    return static_cast<std::size_t>(it - order.begin());
}

DeviceId RingTopology::successor(DeviceId id) const { return order[(position(id) + 1) % order.size()]; }

DeviceId RingTopology::predecessor(DeviceId id) const {
    return order[(position(id) + order.size() - 1) % order.size()];
}

bool RingTopology::contains(DeviceId id) const { return std::find(order.begin(), order.end(), id) != order.end(); }

std::vector<DeviceId> RingTopology::canonical() const {
    if (order.empty()) return {};
    const auto start = std::min_element(order.begin(), order.end());
    std::vector<DeviceId> out(start, order.end());
    out.insert(out.end(), order.begin(), start);
    return out;
}

void RingTopology::validate() const {
    if (order.size() < 2) throw InvalidArgument("ring: needs at least two members");
    std::set<DeviceId> seen(order.begin(), order.end());
    if (seen.size() != order.size()) throw InvalidArgument("ring: duplicate member");
}

double nearest_rank(std::span<const double> values, double q) {
    if (values.empty()) throw InvalidArgument("quantile of an empty sequence");
    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    auto rank = static_cast<std::size_t>(std::ceil(q * static_cast<double>(sorted.size())));
    rank = std::clamp<std::size_t>(rank, 1, sorted.size());
    return sorted[rank - 1];
}

double third_quartile(std::span<const double> values) { return nearest_rank(values, 0.75); }
double first_quartile(std::span<const double> values) { return nearest_rank(values, 0.25); }

SelectionDistribution selection_probabilities(const std::map<DeviceId, double>& versions, SigmaMode mode,
                                              double version_quantum, double floor) {
    if (versions.size() < 2) throw InvalidArgument("selection_probabilities: needs at least two devices");
    if (!(version_quantum > 0.0)) throw InvalidArgument("selection_probabilities: version quantum must be > 0");
    std::vector<double> v;
    v.reserve(versions.size());
    for (const auto& [id, x] : versions) {
        if (!std::isfinite(x)) throw InvalidArgument("selection_probabilities: non-finite version");
        v.push_back(x);
    }
    SelectionDistribution dist;
    dist.mu = third_quartile(v);
    dist.sigma = mode == SigmaMode::unit ? 1.0 : std::max(third_quartile(v) - first_quartile(v), version_quantum);

    double total = 0.0;
    for (const auto& [id, x] : versions) {
        const double d = (x - dist.mu) / dist.sigma;
        const double score = std::exp(-0.5 * d * d);
        dist.probs[id] = score;
        total += score;
    }
    if (total > 0.0) {
        for (auto& [id, p] : dist.probs) p /= total;
    } else {
        // Every score underflowed; only the floor below distinguishes devices.
        for (auto& [id, p] : dist.probs) p = 0.0;
    }
    double floored_total = 0.0;
    for (auto& [id, p] : dist.probs) {
        p = std::max(p, floor);
        floored_total += p;
    }
    for (auto& [id, p] : dist.probs) p /= floored_total;
    return dist;
}

std::vector<DeviceId> draw_order(const SelectionDistribution& dist, std::size_t n_p, std::mt19937_64& rng) {
    if (n_p < 1 || n_p > dist.probs.size())
        throw InvalidArgument("draw_order: " + std::to_string(n_p) + " draws from " +
                              std::to_string(dist.probs.size()) + " devices");
    std::vector<std::pair<DeviceId, double>> pool(dist.probs.begin(), dist.probs.end());
    std::vector<DeviceId> chosen;
    chosen.reserve(n_p);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    while (chosen.size() < n_p) {
        double total = 0.0;
        for (const auto& [id, p] : pool) total += p;
        const double target = unit(rng) * total;
        std::size_t pick = pool.size() - 1;
        double acc = 0.0;
        for (std::size_t i = 0; i < pool.size(); ++i) {
            acc += pool[i].second;
            if (target < acc) {
                pick = i;
                break;
            }
        }
        chosen.push_back(pool[pick].first);
        pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(pick));
    }
    return chosen;
}

std::vector<DeviceId> sample_participants(const SelectionDistribution& dist, std::size_t n_p, std::mt19937_64& rng) {
    if (n_p < 2 || n_p > dist.probs.size())
        throw InvalidArgument("sample_participants: N_p = " + std::to_string(n_p) + " outside [2, " +
                              std::to_string(dist.probs.size()) + "]");
    auto chosen = draw_order(dist, n_p, rng);
    std::sort(chosen.begin(), chosen.end());
    return chosen;
}

RingTopology build_ring(std::span<const DeviceId> selected, std::mt19937_64& rng) {
    RingTopology ring;
    ring.order.assign(selected.begin(), selected.end());
    std::sort(ring.order.begin(), ring.order.end());
    ring.validate();
    std::shuffle(ring.order.begin(), ring.order.end(), rng);
    return ring;
}

GroupLayout partition_groups(std::span<const DeviceId> devices, std::size_t max_group_size,
                             unsigned inter_sync_multiple, std::mt19937_64& rng) {
    if (max_group_size < 2) throw InvalidArgument("partition_groups: max_group_size must be >= 2");
    if (inter_sync_multiple < 1) throw InvalidArgument("partition_groups: inter_sync_multiple must be >= 1");
    GroupLayout layout;
    layout.inter_sync_multiple = inter_sync_multiple;
    if (devices.empty()) return layout;
    std::vector<DeviceId> pool(devices.begin(), devices.end());
    std::sort(pool.begin(), pool.end());
    std::shuffle(pool.begin(), pool.end(), rng);
    const std::size_t n = pool.size();
    const std::size_t g = (n + max_group_size - 1) / max_group_size;
    const std::size_t base = n / g;
    const std::size_t extra = n % g;
    std::size_t cursor = 0;
    for (std::size_t i = 0; i < g; ++i) {
        const std::size_t size = base + (i < extra ? 1 : 0);
        std::vector<DeviceId> group(pool.begin() + static_cast<std::ptrdiff_t>(cursor),
                                    pool.begin() + static_cast<std::ptrdiff_t>(cursor + size));
        std::sort(group.begin(), group.end());
        layout.groups.push_back(std::move(group));
        cursor += size;
    }
    return layout;
}

std::size_t default_participants(std::size_t K) { return std::max<std::size_t>(2, (K + 1) / 2); }

}  // namespace hadfl
