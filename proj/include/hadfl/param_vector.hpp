#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <string_view>
#include <vector>

namespace hadfl {

// Flat model parameter or gradient vector. The dimension is fixed at construction.
class ParamVector {
public:
    ParamVector() = default;
    explicit ParamVector(std::size_t dim, double fill = 0.0) : values_(dim, fill) {}
    explicit ParamVector(std::vector<double> values) : values_(std::move(values)) {}
    ParamVector(std::initializer_list<double> values) : values_(values) {}

    std::size_t dim() const noexcept { return values_.size(); }
    bool empty() const noexcept { return values_.empty(); }

    std::span<const double> values() const noexcept { return values_; }
    std::span<double> values() noexcept { return values_; }
    const std::vector<double>& vector() const noexcept { return values_; }

    double operator[](std::size_t i) const noexcept { return values_[i]; }
    double& operator[](std::size_t i) noexcept { return values_[i]; }

    bool all_finite() const noexcept;

    friend bool operator==(const ParamVector&, const ParamVector&) = default;

private:
    std::vector<double> values_;
};

// Throws InvalidArgument naming `what` when the dimensions differ.
void require_same_dim(const ParamVector& a, const ParamVector& b, std::string_view what);

// Throws NumericError when any entry is NaN or infinite.
void require_finite(const ParamVector& v, std::string_view what);

// FNV-1a over the little-endian IEEE-754 bytes of every entry.
std::uint64_t digest(const ParamVector& v);

// Largest |a_i - b_i| / max(|b_i|, floor).
double max_relative_error(const ParamVector& a, const ParamVector& b, double floor = 1e-12);

}  // namespace hadfl
