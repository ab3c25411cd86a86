#include "hadfl/version_predictor.hpp"

#include "hadfl/errors.hpp"

#include <cmath>

namespace hadfl {

VersionTracker VersionTracker::init(double alpha, double v0) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidArgument("VersionTracker: alpha must lie in (0, 1)");
    if (!std::isfinite(v0)) throw InvalidArgument("VersionTracker: initial version must be finite");
    return VersionTracker(alpha, v0);
}

VersionTracker VersionTracker::observe(double version) const {
    VersionTracker next = *this;
    next.s1_ = alpha_ * version + (1.0 - alpha_) * s1_;
    next.s2_ = alpha_ * next.s1_ + (1.0 - alpha_) * s2_;
    next.v_last_ = version;
    ++next.round_;
    return next;
}

double VersionTracker::predict(unsigned m) const {
    if (m < 1) throw InvalidArgument("VersionTracker::predict: horizon must be >= 1");
    return level() + trend() * static_cast<double>(m);
}

}  // namespace hadfl
