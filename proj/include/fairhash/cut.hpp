#pragma once

#include <span>
#include <vector>

#include "fairhash/types.hpp"

namespace fairhash {

// Position -> bucket assignment over an ordering, before bins are merged.
struct CutPlan {
  Ordering ordering;
  std::vector<BucketId> bucket_of_position;
  std::vector<Index> cut_positions;  // p such that bucket(p) != bucket(p + 1)
};

std::vector<Index> cut_positions_of(std::span<const BucketId> bucket_of_position);

// Bucket per position such that each bucket receives floor or ceil of
// |g_i| / m members of every group i, in order of appearance.
std::vector<BucketId> sweep_and_cut_assignment(std::span<const GroupId> labels, std::span<const Index> group_sizes,
                                               int m);

// Bucket per position from repeated extraction of balanced circular windows.
// Requires two groups, m | n and m | |g_1|.
std::vector<BucketId> necklace_2g_assignment(std::span<const GroupId> labels, std::span<const Index> group_sizes,
                                             int m);

CutPlan plan_sweep_and_cut(const Dataset& dataset, const ProjectionVector& vector, int m);
CutPlan plan_necklace_2g(const Dataset& dataset, const ProjectionVector& vector, int m);

// Zero-unfair for any k when m divides every group size; up to n-1 cuts.
HashmapModel sweep_and_cut(const Dataset& dataset, const ProjectionVector& vector, int m);

// Zero-unfair (0, 2)-hashmap for two groups: at most 2(m-1) boundaries.
HashmapModel necklace_2g(const Dataset& dataset, const ProjectionVector& vector, int m);

// Upper bound on the expected number of Sweep&Cut bins for a random
// binary-group ordering with r members in the first group.
double expected_bins_bound(Index n, Index r, int m);

}  // namespace fairhash
