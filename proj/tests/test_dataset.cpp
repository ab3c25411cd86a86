#include "hadfl/dataset.hpp"
#include "hadfl/errors.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

using namespace hadfl;

TEST_CASE("generation is deterministic per seed") {
    const auto a = make_synthetic_dataset(SyntheticTask::blobs_2class, 300, 5, 42);
    const auto b = make_synthetic_dataset(SyntheticTask::blobs_2class, 300, 5, 42);
    const auto c = make_synthetic_dataset(SyntheticTask::blobs_2class, 300, 5, 43);
    CHECK(a.samples == b.samples);
    CHECK(a.samples != c.samples);
    CHECK(a.size() == 300);
    CHECK(a.dim == 5);
}

TEST_CASE("blobs are separable along the true direction with the margin") {
    SyntheticOptions opt;
    opt.margin = 0.4;
    opt.offset = 1.5;
    const auto d = make_synthetic_dataset(SyntheticTask::blobs_2class, 2000, 8, 7, opt);
    double center = 0.0;
    for (std::size_t i = 0; i < 8; ++i) center += opt.offset * d.true_weights[i] * d.true_weights[i];
    std::size_t ones = 0;
    for (const auto& s : d.samples) {
        double proj = 0.0;
        for (std::size_t i = 0; i < 8; ++i) proj += s.features[i] * d.true_weights[i];
        const double along = proj - center;
        if (s.label == 1) {
            ++ones;
            CHECK(along >= opt.margin / 2 - 1e-9);
        } else {
            CHECK(along <= -opt.margin / 2 + 1e-9);
        }
    }
    CHECK(ones == 1000);
}

TEST_CASE("linear regression labels follow the weights") {
    SyntheticOptions opt;
    opt.noise_stddev = 0.0;
    const auto d = make_synthetic_dataset(SyntheticTask::linreg_gaussian, 50, 3, 1, opt);
    REQUIRE(d.true_weights.size() == 4);
    for (const auto& s : d.samples) {
        double y = d.true_weights[3];
        for (std::size_t i = 0; i < 3; ++i) y += d.true_weights[i] * s.features[i];
        CHECK(s.label == doctest::Approx(y));
    }
}

TEST_CASE("partitions cover the data exactly once") {
    auto [train, test] = split_train_test(make_synthetic_dataset(SyntheticTask::blobs_2class, 1003, 4, 3), 100);
    CHECK(train.size() == 903);
    CHECK(test.size() == 100);
    for (auto scheme : {PartitionScheme::iid, PartitionScheme::shard_by_label}) {
        const auto parts = partition_dataset(train, 4, scheme, 9, 8);
        REQUIRE(parts.size() == 4);
        std::multiset<std::vector<double>> seen;
        std::size_t total = 0;
        for (std::size_t k = 0; k < 4; ++k) {
            CHECK(parts[k].owner == device(static_cast<std::uint32_t>(k)));
            CHECK((parts[k].size() == 225 || parts[k].size() == 226));
            total += parts[k].size();
            for (const auto& s : parts[k].samples) seen.insert(s.features);
        }
        CHECK(total == train.size());
        std::multiset<std::vector<double>> all;
        for (const auto& s : train.samples) all.insert(s.features);
        CHECK(seen == all);
        if (scheme == PartitionScheme::shard_by_label) {
            for (const auto& s : parts[0].samples) CHECK(s.label == 0);
            for (const auto& s : parts[3].samples) CHECK(s.label == 1);
        }
    }
    CHECK_THROWS_AS(partition_dataset(train, 4, PartitionScheme::iid, 1, 300), InvalidArgument);
    CHECK_THROWS_AS(split_train_test(test, 100), InvalidArgument);
}
