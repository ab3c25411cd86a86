#pragma once

#include <cstdint>

namespace hadfl {

// Brown double exponential smoothing over a device's observed parameter versions.
//
//   s1_j = a * v_j + (1 - a) * s1_{j-1}
//   s2_j = a * s1_j + (1 - a) * s2_{j-1}
//   predict(m) = (2 s1 - s2) + a / (1 - a) * (s1 - s2) * m
//
// Seeded with s1 = s2 = v0, so the first forecast carries no trend.
class VersionTracker {
public:
    // Throws InvalidArgument unless 0 < alpha < 1.
    static VersionTracker init(double alpha, double v0);

    [[nodiscard]] VersionTracker observe(double version) const;
    double predict(unsigned m) const;

    double level() const noexcept { return 2.0 * s1_ - s2_; }
    double trend() const noexcept { return alpha_ / (1.0 - alpha_) * (s1_ - s2_); }

    double alpha() const noexcept { return alpha_; }
    double last() const noexcept { return v_last_; }
    double s1() const noexcept { return s1_; }
    double s2() const noexcept { return s2_; }
    std::uint64_t round() const noexcept { return round_; }

private:
    VersionTracker(double alpha, double v0) : alpha_(alpha), v_last_(v0), s1_(v0), s2_(v0) {}

    double alpha_;
    double v_last_;
    double s1_;
    double s2_;
    std::uint64_t round_ = 0;
};

}  // namespace hadfl
