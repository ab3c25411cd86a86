#include "hadfl/dataset.hpp"

#include "hadfl/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

namespace hadfl {

namespace {

std::vector<double> random_unit(std::size_t dim, std::mt19937_64& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<double> u(dim);
    double norm = 0.0;
    while (norm < 1e-12) {
        norm = 0.0;
        for (auto& x : u) {
            x = normal(rng);
            norm += x * x;
        }
        norm = std::sqrt(norm);
    }
    for (auto& x : u) x /= norm;
    return u;
}

Dataset make_blobs(std::size_t n, std::size_t dim, std::mt19937_64& rng, const SyntheticOptions& opt) {
    Dataset data;
    data.dim = dim;
    const auto u = random_unit(dim, rng);
    std::vector<double> center(u);
    for (auto& c : center) c *= opt.offset;

    std::vector<int> labels(n);
    for (std::size_t i = 0; i < n; ++i) labels[i] = static_cast<int>(i % 2);
    std::shuffle(labels.begin(), labels.end(), rng);

    std::normal_distribution<double> normal(0.0, 1.0);
    data.samples.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double sign = labels[i] == 1 ? 1.0 : -1.0;
        const double along = sign * (opt.margin / 2.0 + std::fabs(normal(rng)) * opt.spread);
        std::vector<double> g(dim);
        double proj = 0.0;
        for (std::size_t d = 0; d < dim; ++d) {
            g[d] = normal(rng) * opt.orth_spread;
            proj += g[d] * u[d];
        }
        Sample s;
        s.features.resize(dim);
        for (std::size_t d = 0; d < dim; ++d) s.features[d] = center[d] + along * u[d] + g[d] - proj * u[d];
        s.label = labels[i];
        data.samples.push_back(std::move(s));
    }
    data.true_weights = u;
    return data;
}

Dataset make_linreg(std::size_t n, std::size_t dim, std::mt19937_64& rng, const SyntheticOptions& opt) {
    Dataset data;
    data.dim = dim;
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<double> w(dim + 1);
    for (auto& x : w) x = normal(rng);
    data.samples.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        Sample s;
        s.features.resize(dim);
        double y = w[dim];
        for (std::size_t d = 0; d < dim; ++d) {
            s.features[d] = normal(rng);
            y += w[d] * s.features[d];
        }
        s.label = y + opt.noise_stddev * normal(rng);
        data.samples.push_back(std::move(s));
    }
    data.true_weights = std::move(w);
    return data;
}

}  // namespace

Dataset make_synthetic_dataset(SyntheticTask task, std::size_t n, std::size_t dim, std::uint64_t seed,
                               const SyntheticOptions& options) {
    if (n < 1) throw InvalidArgument("make_synthetic_dataset: n must be >= 1");
    if (dim < 1) throw InvalidArgument("make_synthetic_dataset: dim must be >= 1");
    std::mt19937_64 rng(seed);
    switch (task) {
        case SyntheticTask::blobs_2class: return make_blobs(n, dim, rng, options);
        case SyntheticTask::linreg_gaussian: return make_linreg(n, dim, rng, options);
    }
    throw InvalidArgument("make_synthetic_dataset: unknown task");
}

std::pair<Dataset, Dataset> split_train_test(Dataset data, std::size_t n_test) {
    if (n_test >= data.size()) throw InvalidArgument("split_train_test: test split would leave no training data");
    Dataset test;
    test.dim = data.dim;
    test.true_weights = data.true_weights;
    const auto cut = data.samples.end() - static_cast<std::ptrdiff_t>(n_test);
    test.samples.assign(std::make_move_iterator(cut), std::make_move_iterator(data.samples.end()));
    data.samples.erase(cut, data.samples.end());
    return {std::move(data), std::move(test)};
}

std::vector<DataPartition> partition_dataset(const Dataset& data, std::size_t K, PartitionScheme scheme,
                                             std::uint64_t seed, std::size_t batch_size) {
    if (K < 1) throw InvalidArgument("partition_dataset: K must be >= 1");
    if (batch_size < 1) throw InvalidArgument("partition_dataset: batch_size must be >= 1");
    if (data.size() < K * batch_size)
        throw InvalidArgument("partition_dataset: too few samples (" + std::to_string(data.size()) + " < K*B = " +
                              std::to_string(K * batch_size) + ")");

    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), 0);
    if (scheme == PartitionScheme::iid) {
        std::mt19937_64 rng(seed);
        std::shuffle(order.begin(), order.end(), rng);
    } else {
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return data.samples[a].label < data.samples[b].label;
        });
    }

    std::vector<DataPartition> parts(K);
    const std::size_t base = data.size() / K;
    const std::size_t extra = data.size() % K;
    std::size_t cursor = 0;
    for (std::size_t k = 0; k < K; ++k) {
        const std::size_t count = base + (k < extra ? 1 : 0);
        parts[k].owner = device(static_cast<std::uint32_t>(k));
        parts[k].samples.reserve(count);
        for (std::size_t i = 0; i < count; ++i) parts[k].samples.push_back(data.samples[order[cursor++]]);
    }
    return parts;
}

}  // namespace hadfl
