#include "hadfl/types.hpp"

#include "hadfl/errors.hpp"

#include <cctype>
#include <cmath>
#include <limits>
#include <string>

namespace hadfl {

double to_double(const Rational& r) {
    return static_cast<double>(r.numerator()) / static_cast<double>(r.denominator());
}

Rational quantize(const Rational& value, const Rational& quantum) {
    if (quantum <= 0) throw InvalidArgument("quantize: quantum must be positive");
    const Rational steps = value / quantum;
    // floor(steps + 1/2)
    const Rational shifted = steps + Rational(1, 2);
    std::int64_t n = shifted.numerator() / shifted.denominator();
    if (shifted.numerator() < 0 && shifted.numerator() % shifted.denominator() != 0) --n;
    if (n < 1) n = 1;
    return quantum * n;
}

Rational round_to_denominator(double value, std::int64_t denominator) {
    if (!std::isfinite(value)) throw InvalidArgument("round_to_denominator: non-finite value");
    const long double scaled = static_cast<long double>(value) * static_cast<long double>(denominator);
    if (std::fabs(scaled) > static_cast<long double>(std::numeric_limits<std::int64_t>::max() / 4))
        throw InvalidArgument("round_to_denominator: value out of range");
    return Rational(static_cast<std::int64_t>(std::llround(scaled)), denominator);
}

Rational quantize(double value, const Rational& quantum) {
    if (quantum <= 0) throw InvalidArgument("quantize: quantum must be positive");
    const double steps = std::floor(value / to_double(quantum) + 0.5);
    const auto n = static_cast<std::int64_t>(steps < 1.0 ? 1.0 : steps);
    return quantum * n;
}

namespace {

std::int64_t pow10(int e) {
    std::int64_t p = 1;
    for (int i = 0; i < e; ++i) {
        if (p > std::numeric_limits<std::int64_t>::max() / 10)
            throw InvalidArgument("parse_rational: too many digits");
        p *= 10;
    }
    return p;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

Rational parse_decimal(std::string_view s, std::string_view whole) {
    bool negative = false;
    if (!s.empty() && (s.front() == '-' || s.front() == '+')) {
        negative = s.front() == '-';
        s.remove_prefix(1);
    }
    std::int64_t mantissa = 0;
    int frac_digits = 0;
    bool seen_dot = false;
    bool any_digit = false;
    std::size_t i = 0;
    for (; i < s.size(); ++i) {
        const char c = s[i];
        if (c == '.') {
            if (seen_dot) break;
            seen_dot = true;
            continue;
        }
        if (!std::isdigit(static_cast<unsigned char>(c))) break;
        any_digit = true;
        if (mantissa > (std::numeric_limits<std::int64_t>::max() - 9) / 10)
            throw InvalidArgument("parse_rational: too many digits in '" + std::string(whole) + "'");
        mantissa = mantissa * 10 + (c - '0');
        if (seen_dot) ++frac_digits;
    }
    if (!any_digit) throw InvalidArgument("parse_rational: not a number: '" + std::string(whole) + "'");
    int exponent = 0;
    if (i < s.size()) {
        if (s[i] != 'e' && s[i] != 'E')
            throw InvalidArgument("parse_rational: not a number: '" + std::string(whole) + "'");
        const std::string exp_text(s.substr(i + 1));
        std::size_t used = 0;
        try {
            exponent = std::stoi(exp_text, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used == 0 || used != exp_text.size())
            throw InvalidArgument("parse_rational: bad exponent in '" + std::string(whole) + "'");
    }
    const int shift = exponent - frac_digits;
    Rational r = shift >= 0 ? Rational(mantissa * pow10(shift)) : Rational(mantissa, pow10(-shift));
    return negative ? -r : r;
}

}  // namespace

Rational parse_rational(std::string_view text) {
    const std::string_view s = trim(text);
    if (s.empty()) throw InvalidArgument("parse_rational: empty value");
    const auto slash = s.find('/');
    if (slash == std::string_view::npos) return parse_decimal(s, text);
    const Rational num = parse_decimal(trim(s.substr(0, slash)), text);
    const Rational den = parse_decimal(trim(s.substr(slash + 1)), text);
    if (den.numerator() == 0) throw InvalidArgument("parse_rational: zero denominator in '" + std::string(text) + "'");
    return num / den;
}

std::string format_rational(const Rational& r) {
    std::int64_t den = r.denominator();
    int twos = 0;
    int fives = 0;
    while (den % 2 == 0) {
        den /= 2;
        ++twos;
    }
    while (den % 5 == 0) {
        den /= 5;
        ++fives;
    }
    if (den != 1) return std::to_string(r.numerator()) + "/" + std::to_string(r.denominator());
    const int digits = std::max(twos, fives);
    if (digits == 0) return std::to_string(r.numerator());
    const std::int64_t scale = pow10(digits);
    const std::int64_t scaled = r.numerator() * (scale / r.denominator());
    const bool negative = scaled < 0;
    const std::uint64_t mag = negative ? static_cast<std::uint64_t>(-scaled) : static_cast<std::uint64_t>(scaled);
    std::string frac = std::to_string(mag % static_cast<std::uint64_t>(scale));
    frac.insert(0, static_cast<std::size_t>(digits) - frac.size(), '0');
    return (negative ? "-" : "") + std::to_string(mag / static_cast<std::uint64_t>(scale)) + "." + frac;
}

namespace {
std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}
}  // namespace

std::uint64_t mix_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b, std::uint64_t c) {
    std::uint64_t h = splitmix64(base);
    h = splitmix64(h ^ a);
    h = splitmix64(h ^ b);
    h = splitmix64(h ^ c);
    return h;
}

std::uint64_t fnv1a(std::string_view bytes, std::uint64_t h) {
    for (const char c : bytes) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace hadfl
