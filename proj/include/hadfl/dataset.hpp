#pragma once

#include "hadfl/types.hpp"

#include <cstddef>
#include <cstdint>
#include <vector>

namespace hadfl {

struct Sample {
    std::vector<double> features;
    // Regression target, binary label in {0, 1}, or class index.
    double label = 0.0;

    friend bool operator==(const Sample&, const Sample&) = default;
};

enum class SyntheticTask { blobs_2class, linreg_gaussian };

// Shape parameters for the generators.
//
// blobs-2class: labels are balanced. Each sample is
//   x = center + s * (margin/2 + |N(0,1)| * spread) * u + N(0, orth_spread^2 I) projected off u
// with s = +1 for label 1 and -1 for label 0, u a seeded random unit direction and
// center = offset * u, so a larger offset asks for a larger bias. The hyperplane
// u . (x - center) = 0 separates the classes with the stated margin.
//
// linreg-gaussian: x ~ N(0, I), y = w* . x + b* + N(0, noise_stddev^2), with w* and b*
// drawn from N(0, 1) and returned in Dataset::true_weights as [w*..., b*].
struct SyntheticOptions {
    double margin = 0.1;
    double spread = 1.0;
    double orth_spread = 1.0;
    double offset = 0.0;
    double noise_stddev = 0.1;

    friend bool operator==(const SyntheticOptions&, const SyntheticOptions&) = default;
};

struct Dataset {
    std::vector<Sample> samples;
    std::size_t dim = 0;
    std::vector<double> true_weights;

    std::size_t size() const noexcept { return samples.size(); }
};

Dataset make_synthetic_dataset(SyntheticTask task, std::size_t n, std::size_t dim, std::uint64_t seed,
                               const SyntheticOptions& options = {});

// Splits off the last `n_test` samples.
std::pair<Dataset, Dataset> split_train_test(Dataset data, std::size_t n_test);

struct DataPartition {
    std::vector<Sample> samples;
    DeviceId owner{};

    std::size_t size() const noexcept { return samples.size(); }
};

enum class PartitionScheme { iid, shard_by_label };

// Disjoint cover of `data` by K partitions whose sizes differ by at most one.
// iid deals a seeded shuffle; shard-by-label stable-sorts by label and deals contiguous shards.
// Throws InvalidArgument when data.size() < K * batch_size.
std::vector<DataPartition> partition_dataset(const Dataset& data, std::size_t K, PartitionScheme scheme,
                                             std::uint64_t seed, std::size_t batch_size = 1);

}  // namespace hadfl
