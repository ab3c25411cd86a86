#include "hadfl/version_predictor.hpp"

#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

using namespace hadfl;

namespace {

// Reference Brown smoothing, written out separately.
struct Brown {
    double a, x1, x2;
    void push(double v) {
        const double n1 = a * v + (1 - a) * x1;
        const double n2 = a * n1 + (1 - a) * x2;
        x1 = n1;
        x2 = n2;
    }
    double forecast(unsigned m) const { return (2 * x1 - x2) + m * (a / (1 - a)) * (x1 - x2); }
};

}  // namespace

TEST_CASE("hand-run examples") {
    const auto t = VersionTracker::init(0.5, 10);
    CHECK(t.s1() == 10);
    CHECK(t.s2() == 10);
    CHECK(t.round() == 0);
    const auto u = t.observe(12);
    CHECK(u.s1() == 11);
    CHECK(u.s2() == 10.5);
    CHECK(u.last() == 12);
    CHECK(u.round() == 1);
    CHECK(u.predict(1) == doctest::Approx(11.5 + 0.5));
    // observe is pure
    CHECK(t.s1() == 10);
}

TEST_CASE("matches the reference recurrence") {
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> alpha(0.05, 0.95);
    std::uniform_real_distribution<double> value(0.0, 20.0);
    for (int seq = 0; seq < 200; ++seq) {
        const double a = alpha(rng);
        const double v0 = value(rng);
        auto t = VersionTracker::init(a, v0);
        Brown ref{a, v0, v0};
        for (int j = 0; j < 50; ++j) {
            const double v = value(rng);
            t = t.observe(v);
            ref.push(v);
            CHECK(std::fabs(t.s1() - ref.x1) <= 1e-12 * std::max(1.0, std::fabs(ref.x1)));
            CHECK(std::fabs(t.s2() - ref.x2) <= 1e-12 * std::max(1.0, std::fabs(ref.x2)));
            CHECK(std::fabs(t.predict(1) - ref.forecast(1)) <= 1e-12 * std::max(1.0, std::fabs(ref.forecast(1))));
        }
        CHECK(t.round() == 50);
    }
}

TEST_CASE("constant series is a fixed point") {
    for (double c : {0.0, 1.0, 3.5, 1e6}) {
        auto t = VersionTracker::init(0.3, c);
        for (int j = 0; j < 20; ++j) {
            t = t.observe(c);
            CHECK(t.s1() == c);
            CHECK(t.s2() == c);
            for (unsigned m = 1; m < 5; ++m) CHECK(t.predict(m) == c);
        }
    }
}

TEST_CASE("ramp error decays geometrically") {
    for (double a : {0.2, 0.3, 0.5}) {
        auto t = VersionTracker::init(a, 0.0);
        std::vector<double> err;
        for (int j = 1; j <= 40; ++j) {
            t = t.observe(2.0 * j);
            err.push_back(std::fabs(t.predict(1) - 2.0 * (j + 1)));
        }
        const double ratio = std::pow(err[34] / err[19], 1.0 / 15.0);
        CHECK(ratio == doctest::Approx(1 - a).epsilon(0.05));
        for (std::size_t j = 10; j < err.size(); ++j) CHECK(err[j] < err[j - 1]);
    }
}
