#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "fairhash/types.hpp"

namespace fairhash {

// Contiguous m-bucket partition of an ordering. Bucket j (j >= 1) starts at
// split_positions[j-1]; `discrepancy` is the largest relative deviation
// |alpha_ij * m / |g_i| - 1| over groups and buckets.
struct DiscrepancyPartition {
  Ordering ordering;
  std::vector<Index> split_positions;
  double discrepancy = 0.0;
  BucketHistogram per_bucket_counts;
};

struct LocalSearchConfig {
  Index max_iterations = 100;
  double single_fairness_min = 0.0;
  double single_fairness_max = 1.0;
  double collision_max = 1.0;

  // Throws InvalidArgument unless 0 <= f- <= f+ <= 1 and 1/m <= c+ <= 1.
  void validate(int m) const;
};

// max over groups of |count_i * m / |g_i| - 1|, skipping empty groups.
double bucket_discrepancy(std::span<const Index> counts, std::span<const Index> group_totals, int m);

// Discrepancy of a histogram: max over buckets.
double histogram_discrepancy(const BucketHistogram& hist);

// Minimum-discrepancy contiguous partition of `ordering` into m non-empty
// buckets. `labels` gives the group at each position. When `ordering.scores`
// is non-empty, splits between equal scores are not allowed. Among optimal
// partitions the one with bucket sizes closest to n/m wins.
DiscrepancyPartition dp_min_discrepancy(const Ordering& ordering, std::span<const GroupId> labels,
                                        std::span<const Index> group_totals, int m);

struct ExactArrangement {};
struct SampledVectors {
  Index num_vectors = 1000;
  std::uint64_t seed = 0;
};
using DiscrepancySearchMode = std::variant<ExactArrangement, SampledVectors>;

struct DiscrepancySearchResult {
  ProjectionVector vector;
  DiscrepancyPartition partition;
  HashmapModel model;
  Index vectors_examined = 0;
};

// Minimizes dp_min_discrepancy over every planar arrangement cell, or over
// sampled directions.
DiscrepancySearchResult exact_discrepancy_search(const Dataset& dataset, int m, DiscrepancySearchMode mode,
                                                 int jobs = 1);

struct RandomizedOptions {
  double gamma = 0.5;
  double delta = 1.0;
  std::uint64_t seed = 0;
  // Per-group sample size is ceil(sample_constant * (m / gamma)^2 * ln n).
  double sample_constant = 4.0;
  // Directions tried per feasibility probe when d > 2.
  Index fallback_vectors = 1000;
};

struct RandomizedResult {
  ProjectionVector vector;
  DiscrepancyPartition partition;  // over the full dataset
  HashmapModel model;
  double grid_value = 0.0;         // smallest feasible discrepancy level found
  std::vector<Index> sample_sizes;  // per group
  bool clamped = false;             // some group was used in full instead of sampled
  std::vector<std::string> notes;
};

RandomizedResult randomized_discrepancy(const Dataset& dataset, int m, const RandomizedOptions& options);

// The discretized discrepancy levels {0, 1/n, (1+delta)/n, ..., 1}, extended
// geometrically up to m - 1 so the largest level is always feasible.
std::vector<double> discrepancy_grid(Index n, double delta, int m);

struct LocalSearchResult {
  HashmapModel model;
  std::vector<double> epsilon_trace;  // epsilon before any move, then after each applied move
  Index iterations = 0;
};

LocalSearchResult local_search(const Dataset& dataset, const HashmapModel& model, const LocalSearchConfig& config);

HashmapModel local_search_refine(const Dataset& dataset, const HashmapModel& model, const LocalSearchConfig& config);

}  // namespace fairhash
