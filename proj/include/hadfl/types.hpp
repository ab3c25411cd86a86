#pragma once

#include <boost/rational.hpp>

#include <cstdint>
#include <ostream>
#include <string>
#include <string_view>

namespace hadfl {

enum class DeviceId : std::uint32_t {};

constexpr std::uint32_t raw(DeviceId id) noexcept { return static_cast<std::uint32_t>(id); }
constexpr DeviceId device(std::uint32_t index) noexcept { return static_cast<DeviceId>(index); }

inline std::ostream& operator<<(std::ostream& os, DeviceId id) { return os << raw(id); }

// Exact rational used for virtual time, compute power and epoch durations.
using Rational = boost::rational<std::int64_t>;
// Virtual seconds.
using Time = Rational;

double to_double(const Rational& r);

// Nearest multiple of `quantum` (ties round up), never below one quantum.
Rational quantize(const Rational& value, const Rational& quantum);
Rational quantize(double value, const Rational& quantum);

// Exact conversion of a double to a rational with the given denominator (rounded to nearest).
Rational round_to_denominator(double value, std::int64_t denominator);

// Accepts "3", "-2", "0.125", "1/3", "1e-3". Decimal inputs convert exactly.
Rational parse_rational(std::string_view text);

// Decimal when the denominator divides a power of ten, "p/q" otherwise.
std::string format_rational(const Rational& r);

// splitmix64-based seed derivation; stable across platforms.
std::uint64_t mix_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0, std::uint64_t c = 0);

// FNV-1a over arbitrary bytes.
std::uint64_t fnv1a(std::string_view bytes, std::uint64_t h = 0xcbf29ce484222325ULL);

}  // namespace hadfl
