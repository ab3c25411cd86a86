#include "hadfl/param_vector.hpp"

#include "hadfl/errors.hpp"
#include "hadfl/types.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <string>

namespace hadfl {

bool ParamVector::all_finite() const noexcept {
    return std::all_of(values_.begin(), values_.end(), [](double x) { return std::isfinite(x); });
}

void require_same_dim(const ParamVector& a, const ParamVector& b, std::string_view what) {
    if (a.dim() != b.dim())
        throw InvalidArgument(std::string(what) + ": dimension mismatch (" + std::to_string(a.dim()) +
                              " vs " + std::to_string(b.dim()) + ")");
}

void require_finite(const ParamVector& v, std::string_view what) {
    if (!v.all_finite()) throw NumericError(std::string(what) + ": non-finite parameter value");
}

std::uint64_t digest(const ParamVector& v) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const double x : v.values()) {
        const auto bits = std::bit_cast<std::uint64_t>(x);
        char bytes[8];
        for (int i = 0; i < 8; ++i) bytes[i] = static_cast<char>((bits >> (8 * i)) & 0xff);
        h = fnv1a(std::string_view(bytes, 8), h);
    }
    return h;
}

double max_relative_error(const ParamVector& a, const ParamVector& b, double floor) {
    require_same_dim(a, b, "max_relative_error");
    double worst = 0.0;
    for (std::size_t i = 0; i < a.dim(); ++i) {
        const double scale = std::max(std::fabs(b[i]), floor);
        worst = std::max(worst, std::fabs(a[i] - b[i]) / scale);
    }
    return worst;
}

}  // namespace hadfl
