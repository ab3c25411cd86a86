#pragma once

#include "hadfl/param_vector.hpp"
#include "hadfl/types.hpp"

#include <cstddef>
#include <map>
#include <vector>

namespace hadfl {

struct WeightedModel {
    ParamVector params;
    // Flag^k, or an explicit weight. Zero means "not contributing".
    double weight = 1.0;
};

// sum_k weight_k w_k / sum_k weight_k over contributing models.
// Throws InvalidArgument on dim mismatch, negative weights, or no contributor.
ParamVector partial_aggregate(const std::map<DeviceId, WeightedModel>& models);

// (1 - beta) * local + beta * global.
ParamVector integrate_received(const ParamVector& local, const ParamVector& global, double beta);

struct SegmentRange {
    std::size_t offset = 0;
    std::size_t count = 0;
};

// S near-equal contiguous slices; the first dim % S slices carry one extra element.
std::vector<SegmentRange> segment_layout(std::size_t dim, std::size_t segments);

}  // namespace hadfl
