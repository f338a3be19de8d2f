#pragma once

#include <string>
#include <vector>

#include "adlab/types.hpp"

namespace adlab {

struct ValidationReport {
    std::vector<std::string> violations;

    bool ok() const { return violations.empty(); }
};

// Reports every invariant violation in the dataset under the given metric:
// row ranges, role/target consistency, per-concept m < n, non-finite
// components, and metric preconditions (equal dims and nonzero norms under
// cosine). An empty report means every downstream operation will accept the
// dataset.
ValidationReport validate_dataset(const Dataset& dataset, const MetricConfig& config);

// Throws InvalidInput carrying the first violation, if any.
void require_valid(const Dataset& dataset, const MetricConfig& config);

}  // namespace adlab
