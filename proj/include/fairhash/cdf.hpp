#pragma once

#include <vector>

#include "fairhash/types.hpp"

namespace fairhash {

// Equi-depth split positions over an ordering: bucket j starts at
// splits[j-1]. An edge that would separate equal scores moves right to the
// next strict increase (left if no room remains on the right).
std::vector<Index> equi_depth_splits(const Ordering& ordering, int m);

// Fairness-agnostic CDF hashmap: m equal-count contiguous buckets along w.
HashmapModel build_cdf(const Dataset& dataset, const ProjectionVector& vector, int m);

}  // namespace fairhash
