#include "hadfl/aggregate.hpp"

#include "hadfl/errors.hpp"

#include <string>

namespace hadfl {

ParamVector partial_aggregate(const std::map<DeviceId, WeightedModel>& models) {
    const ParamVector* first = nullptr;
    double total = 0.0;
    for (const auto& [id, m] : models) {
        if (m.weight < 0.0) throw InvalidArgument("partial_aggregate: negative weight");
        if (m.weight == 0.0) continue;
        if (first == nullptr) first = &m.params;
        require_same_dim(*first, m.params, "partial_aggregate");
        total += m.weight;
    }
    if (first == nullptr) throw InvalidArgument("partial_aggregate: no contributing model");
    ParamVector sum(first->dim());
    for (const auto& [id, m] : models) {
        if (m.weight == 0.0) continue;
        for (std::size_t i = 0; i < sum.dim(); ++i) sum[i] += m.weight * m.params[i];
    }
    for (std::size_t i = 0; i < sum.dim(); ++i) sum[i] /= total;
    return sum;
}

ParamVector integrate_received(const ParamVector& local, const ParamVector& global, double beta) {
    require_same_dim(local, global, "integrate_received");
    if (!(beta >= 0.0 && beta <= 1.0)) throw InvalidArgument("integrate_received: beta must lie in [0, 1]");
    if (beta == 1.0) return global;
    if (beta == 0.0) return local;
    ParamVector out(local.dim());
    for (std::size_t i = 0; i < out.dim(); ++i) out[i] = (1.0 - beta) * local[i] + beta * global[i];
    return out;
}

std::vector<SegmentRange> segment_layout(std::size_t dim, std::size_t segments) {
    if (segments < 1) throw InvalidArgument("segment_layout: need at least one segment");
    std::vector<SegmentRange> out(segments);
    const std::size_t base = dim / segments;
    const std::size_t extra = dim % segments;
    std::size_t offset = 0;
    for (std::size_t s = 0; s < segments; ++s) {
        out[s].offset = offset;
        out[s].count = base + (s < extra ? 1 : 0);
        offset += out[s].count;
    }
    return out;
}

}  // namespace hadfl
